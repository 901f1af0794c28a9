//! Subcommand implementations. Each reads only its configured inputs and
//! writes only its configured outputs.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use polarlens_core::corpus::{
    corpus_stats, load_corpus, stratified_split, AnnotationStore, CorpusFormat, CorpusStats, TranslationErrorAnnotation,
};
use polarlens_core::embed::{
    encode_knowledge, headline_key, knowledge_items, EmbeddingProvider, EmbeddingStore, KnowledgeEmbedding,
    ProviderSpec, StoreProvider,
};
use polarlens_core::eval::{language_breakdown, write_predictions, Breakdown, ExperimentReport, Prediction, RunReport};
use polarlens_core::harvest::{harvest, load_ratings, FixtureNewsClient, HarvestPlan, HttpNewsClient, NewsProviderClient};
use polarlens_core::jsonl::read_jsonl;
use polarlens_core::knowledge::{
    batch_acquire, load_knowledge_store, AcquireOptions, CacheKey, CometClient, FixtureComet, FixtureTranslator,
    HttpComet, HttpTranslator, IdentityTranslator, JsonlKnowledgeStore, KnowledgeEntry, TranslationClient,
    TEMPLATE_VERSION,
};
use polarlens_core::model::{
    load_checkpoint, save_checkpoint, train, CheckpointMeta, Example, Mode, Model, TrainConfig,
};
use polarlens_core::{Corpus, HeadlineRecord, Split};
use serde::Serialize;

use crate::config::{PipelineConfig, Source};
use crate::{CliError, RunOptions};

/// Items that failed without aborting the stage; non-empty means exit code 2.
#[derive(Debug, Default)]
pub struct Outcome {
    pub failures: Vec<String>,
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} does not exist", path.display())))
    }
}

fn require_dir(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} {} is not a directory", path.display())))
    }
}

fn distinct(input: &Path, output: &Path) -> Result<(), CliError> {
    if input == output {
        return Err(CliError::Config(format!("{} would be both read and overwritten", input.display())));
    }
    Ok(())
}

fn ensure_parent(path: &Path, stage: &str) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p).map_err(|e| CliError::runtime(stage, e)),
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str, stage: &str) -> Result<(), CliError> {
    ensure_parent(path, stage)?;
    fs::write(path, text).map_err(|e| CliError::runtime(stage, format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize, stage: &str) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::runtime(stage, e))?;
    s.push('\n');
    write_text(path, &s, stage)
}

fn read_corpus(path: &Path, stage: &str) -> Result<Corpus, CliError> {
    require_file(path, "corpus")?;
    load_corpus(path, CorpusFormat::from_path(path)).map_err(|e| CliError::runtime(stage, format!("{}: {e}", path.display())))
}

pub fn cmd_harvest(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    const STAGE: &str = "harvest";
    let section = cfg.harvest_section()?;
    let ratings_path = cfg.ratings_path()?;
    require_file(&ratings_path, "ratings file")?;
    let ratings = load_ratings(&ratings_path).map_err(|e| CliError::Config(e.to_string()))?;
    let timeout = Duration::from_millis(section.timeout_ms);
    let client: Box<dyn NewsProviderClient> = match cfg.news_source()? {
        Source::Fixture(dir) => {
            require_dir(&dir, "news fixture directory")?;
            Box::new(FixtureNewsClient::new(dir))
        }
        Source::Service(url) => Box::new(HttpNewsClient::new(url, timeout)),
    };
    let out = cfg.raw_corpus_path();
    distinct(&ratings_path, &out)?;
    if opts.dry_run {
        log::info!("dry run: {} outlet ratings, output {}", ratings.len(), out.display());
        return Ok(Outcome::default());
    }
    let plan = HarvestPlan {
        start: section.start,
        end: section.end,
        categories: section.categories.clone(),
        retry: section.retry,
        parallelism: section.parallelism,
    };
    let outcome = harvest(&ratings, client.as_ref(), &plan).map_err(|e| CliError::runtime(STAGE, e))?;
    ensure_parent(&out, STAGE)?;
    outcome.corpus.write_jsonl(&out).map_err(|e| CliError::runtime(STAGE, e))?;
    log::info!("harvested {} headlines into {}", outcome.corpus.len(), out.display());
    Ok(Outcome { failures: outcome.failures.iter().map(ToString::to_string).collect() })
}

pub fn cmd_split(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    const STAGE: &str = "split";
    let input = cfg.raw_corpus_path();
    let output = cfg.corpus_path();
    distinct(&input, &output)?;
    let ratios = cfg.split_ratios()?;
    let corpus = read_corpus(&input, STAGE)?;
    if opts.dry_run {
        return Ok(Outcome::default());
    }
    let split = stratified_split(&corpus, ratios, opts.seed(cfg), cfg.split.stratify).map_err(|e| CliError::runtime(STAGE, e))?;
    ensure_parent(&output, STAGE)?;
    split.corpus.write_jsonl(&output).map_err(|e| CliError::runtime(STAGE, e))?;
    log::info!("split {} headlines into {}", split.corpus.len(), output.display());
    Ok(Outcome::default())
}

/// Writes `stats.json` and `stats.txt` to the reports directory.
pub fn cmd_stats(cfg: &PipelineConfig, opts: &RunOptions) -> Result<CorpusStats, CliError> {
    const STAGE: &str = "stats";
    let corpus = read_corpus(&cfg.corpus_path(), STAGE)?;
    let stats = corpus_stats(&corpus);
    if opts.dry_run {
        return Ok(stats);
    }
    let dir = cfg.reports_dir();
    write_json(&dir.join("stats.json"), &stats, STAGE)?;
    let table = stats.to_table();
    write_text(&dir.join("stats.txt"), &table, STAGE)?;
    print!("{table}");
    Ok(stats)
}

fn translator(cfg: &PipelineConfig, timeout: Duration) -> Result<Box<dyn TranslationClient>, CliError> {
    Ok(match cfg.translator_source()? {
        None => Box::new(IdentityTranslator),
        Some(Source::Fixture(p)) => {
            require_file(&p, "translation fixture")?;
            Box::new(FixtureTranslator::from_tsv(&p).map_err(|e| CliError::Config(e.to_string()))?)
        }
        Some(Source::Service(url)) => Box::new(HttpTranslator::new(url, timeout)),
    })
}

fn comet(cfg: &PipelineConfig, timeout: Duration) -> Result<Box<dyn CometClient>, CliError> {
    let model_id = cfg.knowledge_section()?.model_id.clone();
    Ok(match cfg.comet_source()? {
        Source::Fixture(p) => {
            require_file(&p, "commonsense fixture")?;
            Box::new(FixtureComet::from_json_file(&p, model_id).map_err(|e| CliError::Config(e.to_string()))?)
        }
        Source::Service(url) => Box::new(HttpComet::new(url, model_id, timeout)),
    })
}

/// Acquires knowledge for every headline and leaves the store holding
/// exactly the corpus's entries, in corpus order.
pub fn cmd_knowledge(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    const STAGE: &str = "knowledge";
    let section = cfg.knowledge_section()?;
    let timeout = Duration::from_millis(section.timeout_ms);
    let tr = translator(cfg, timeout)?;
    let kg = comet(cfg, timeout)?;
    let corpus_path = cfg.corpus_path();
    let store_path = cfg.knowledge_path();
    distinct(&corpus_path, &store_path)?;
    let corpus = read_corpus(&corpus_path, STAGE)?;
    if opts.dry_run {
        return Ok(Outcome::default());
    }
    ensure_parent(&store_path, STAGE)?;
    let store = JsonlKnowledgeStore::open(&store_path).map_err(|e| CliError::runtime(STAGE, e))?;
    let acquire = AcquireOptions { k: section.k, translate_relations: section.translate_relations, retry: section.retry };
    let batch = batch_acquire(&corpus.records, tr.as_ref(), kg.as_ref(), &store, &acquire, section.parallelism);
    let keys: Vec<CacheKey> =
        corpus.records.iter().map(|r| CacheKey::new(r, kg.model_id(), TEMPLATE_VERSION)).collect();
    store.compact(&keys).map_err(|e| CliError::runtime(STAGE, e))?;
    log::info!("knowledge for {} of {} headlines in {}", batch.entries.len(), corpus.len(), store_path.display());
    Ok(Outcome { failures: batch.failures.into_iter().map(|(id, msg)| format!("{id}: {msg}")).collect() })
}

fn read_knowledge(path: &Path, stage: &str) -> Result<HashMap<String, KnowledgeEntry>, CliError> {
    if !path.is_file() {
        log::warn!("no knowledge store at {}; knowledge rows will be zero", path.display());
        return Ok(HashMap::new());
    }
    load_knowledge_store(path).map_err(|e| CliError::runtime(stage, format!("{}: {e}", path.display())))
}

/// Vectors to request for one headline: the headline itself and every
/// non-empty knowledge item.
fn encode_items(rec: &HeadlineRecord, entry: Option<&KnowledgeEntry>, cfg: &PipelineConfig) -> Vec<(String, String)> {
    let mut items = vec![(headline_key(&rec.id), rec.text.clone())];
    if let Some(entry) = entry {
        let pk = entry.knowledge();
        items.extend(knowledge_items(&pk, cfg.embedding.knowledge_mode).into_iter().filter(|(_, t)| !t.trim().is_empty()));
    }
    items
}

/// Builds the canonical embedding store: computed by the mock encoder or a
/// service, or imported (and checked for coverage) from an existing store.
pub fn cmd_encode(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    const STAGE: &str = "encode";
    let spec = cfg.provider();
    let output = cfg.embeddings_path();
    if let ProviderSpec::Store(src) = &spec {
        require_file(src, "embedding store")?;
        distinct(src, &output)?;
    }
    let corpus = read_corpus(&cfg.corpus_path(), STAGE)?;
    let knowledge = read_knowledge(&cfg.knowledge_path(), STAGE)?;
    let provider = spec
        .build(cfg.embedding.dim, opts.seed(cfg), cfg.embedding_timeout())
        .map_err(|e| CliError::runtime(STAGE, e))?;
    if provider.dim() != cfg.embedding.dim {
        return Err(CliError::Config(format!(
            "embedding.dim is {} but the provider produces {}",
            cfg.embedding.dim,
            provider.dim()
        )));
    }
    if opts.dry_run {
        return Ok(Outcome::default());
    }
    let mut store = EmbeddingStore::new(provider.dim()).map_err(|e| CliError::runtime(STAGE, e))?;
    let mut failures = Vec::new();
    for rec in &corpus.records {
        let entry = knowledge.get(&rec.id);
        if entry.is_none() {
            log::warn!("headline {:?} has no knowledge entry", rec.id);
        }
        let items = encode_items(rec, entry, cfg);
        let refs: Vec<(&str, &str)> = items.iter().map(|(k, t)| (k.as_str(), t.as_str())).collect();
        match provider.encode_batch(&refs) {
            Ok(vectors) => {
                for ((key, _), v) in items.into_iter().zip(vectors) {
                    store.insert(key, v).map_err(|e| CliError::runtime(STAGE, e))?;
                }
            }
            Err(e) => {
                log::error!("headline {:?}: {e}", rec.id);
                failures.push(format!("{}: {e}", rec.id));
            }
        }
    }
    ensure_parent(&output, STAGE)?;
    store.write(&output).map_err(|e| CliError::runtime(STAGE, e))?;
    log::info!("wrote {} vectors (dim {}) to {}", store.len(), store.dim(), output.display());
    Ok(Outcome { failures })
}

/// Inputs shared by training and evaluation.
struct Prepared {
    corpus: Corpus,
    knowledge: HashMap<String, KnowledgeEntry>,
    provider: StoreProvider,
}

fn prepare(cfg: &PipelineConfig, stage: &str) -> Result<Prepared, CliError> {
    let corpus = read_corpus(&cfg.corpus_path(), stage)?;
    let knowledge = read_knowledge(&cfg.knowledge_path(), stage)?;
    let emb_path = cfg.embeddings_path();
    require_file(&emb_path, "embedding store")?;
    let store = EmbeddingStore::read(&emb_path).map_err(|e| CliError::runtime(stage, format!("{}: {e}", emb_path.display())))?;
    Ok(Prepared { corpus, knowledge, provider: StoreProvider::new(store) })
}

impl Prepared {
    fn examples(&self, split: Split, cfg: &PipelineConfig, stage: &str) -> Result<(Vec<&HeadlineRecord>, Vec<Example>), CliError> {
        let records: Vec<&HeadlineRecord> = self.corpus.split(split).collect();
        let dim = self.provider.dim();
        let examples = records
            .iter()
            .map(|rec| {
                let headline = self.provider.encode_keyed(&headline_key(&rec.id), &rec.text)?;
                let knowledge = match self.knowledge.get(&rec.id) {
                    Some(entry) => encode_knowledge(&self.provider, &entry.knowledge(), cfg.embedding.knowledge_mode)?,
                    None => KnowledgeEmbedding::zeros(dim),
                };
                Ok(Example { headline, knowledge, label: rec.label })
            })
            .collect::<Result<Vec<_>, polarlens_core::embed::EmbedError>>()
            .map_err(|e| CliError::runtime(stage, e))?;
        Ok((records, examples))
    }
}

fn checkpoint_path(cfg: &PipelineConfig, mode: Mode) -> PathBuf {
    cfg.checkpoints_dir().join(format!("{mode}.plm1"))
}

fn train_config(cfg: &PipelineConfig, opts: &RunOptions, mode: Mode) -> TrainConfig {
    TrainConfig { mode, seed: opts.seed(cfg), ..cfg.train.clone() }
}

fn train_one(cfg: &PipelineConfig, opts: &RunOptions, data: &Prepared, mode: Mode) -> Result<CheckpointMeta, CliError> {
    let stage = format!("train {mode}");
    let (_, train_set) = data.examples(Split::Train, cfg, &stage)?;
    let (_, valid_set) = data.examples(Split::Valid, cfg, &stage)?;
    let tc = train_config(cfg, opts, mode);
    let valid = (!valid_set.is_empty()).then_some(valid_set.as_slice());
    let trained = train(&train_set, valid, &tc).map_err(|e| CliError::runtime(&stage, e))?;
    let path = checkpoint_path(cfg, mode);
    ensure_parent(&path, &stage)?;
    let meta = save_checkpoint(&trained, &path).map_err(|e| CliError::runtime(&stage, e))?;
    log::info!("{mode}: {} epochs, best epoch {:?}, checkpoint {}", meta.epochs, meta.best_epoch, path.display());
    Ok(meta)
}

pub fn cmd_train(cfg: &PipelineConfig, opts: &RunOptions) -> Result<CheckpointMeta, CliError> {
    let mode = opts.mode(cfg);
    train_config(cfg, opts, mode).validate().map_err(|e| CliError::Config(e.to_string()))?;
    let data = prepare(cfg, "train")?;
    if opts.dry_run {
        return Ok(CheckpointMeta {
            format_version: 1,
            mode,
            dim: data.provider.dim(),
            seed: opts.seed(cfg),
            epochs: 0,
            best_epoch: None,
            final_train_loss: None,
            final_valid_loss: None,
            param_count: 0,
        });
    }
    train_one(cfg, opts, &data, mode)
}

fn evaluate(model: &Model, data: &Prepared, cfg: &PipelineConfig, stage: &str) -> Result<(Vec<Prediction>, Breakdown), CliError> {
    if model.arch.dim != data.provider.dim() {
        return Err(CliError::runtime(
            stage,
            format!("checkpoint expects dim {} but the embedding store has {}", model.arch.dim, data.provider.dim()),
        ));
    }
    let (records, test) = data.examples(Split::Test, cfg, stage)?;
    let probs = model.predict_batch(&test).map_err(|e| CliError::runtime(stage, e))?;
    let predictions: Vec<Prediction> = records
        .iter()
        .zip(probs)
        .map(|(rec, p)| Prediction {
            id: rec.id.clone(),
            predicted_label: polarlens_core::model::argmax_label(&p),
            probabilities: p,
        })
        .collect();
    let breakdown = language_breakdown(&data.corpus, &predictions).map_err(|e| CliError::runtime(stage, e))?;
    Ok((predictions, breakdown))
}

fn write_eval(cfg: &PipelineConfig, mode: Mode, preds: &[Prediction], breakdown: &Breakdown, stage: &str) -> Result<(), CliError> {
    let dir = cfg.reports_dir();
    let pred_path = dir.join(format!("predictions-{mode}.jsonl"));
    ensure_parent(&pred_path, stage)?;
    write_predictions(&pred_path, preds).map_err(|e| CliError::runtime(stage, e))?;
    write_json(&dir.join(format!("eval-{mode}.json")), breakdown, stage)
}

/// Evaluates the checkpoint of the selected mode on the test split.
pub fn cmd_eval(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Breakdown, CliError> {
    let mode = opts.mode(cfg);
    let stage = format!("eval {mode}");
    let path = checkpoint_path(cfg, mode);
    require_file(&path, "checkpoint")?;
    let data = prepare(cfg, &stage)?;
    let (model, _) = load_checkpoint(&path).map_err(|e| CliError::runtime(&stage, e))?;
    let (preds, breakdown) = evaluate(&model, &data, cfg, &stage)?;
    if !opts.dry_run {
        write_eval(cfg, mode, &preds, &breakdown, &stage)?;
    }
    Ok(breakdown)
}

/// Trains and evaluates all four modes with the shared seed, then writes
/// `overall.{json,txt}` and `languages.{json,txt}`.
pub fn cmd_experiment(cfg: &PipelineConfig, opts: &RunOptions) -> Result<ExperimentReport, CliError> {
    if opts.mode.is_some() {
        log::warn!("--mode is ignored by experiment; every mode is trained");
    }
    for mode in Mode::ALL {
        train_config(cfg, opts, mode).validate().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let data = prepare(cfg, "experiment")?;
    let mut report = ExperimentReport { baseline: Mode::HeadlineOnly.label().to_string(), runs: Vec::new() };
    if opts.dry_run {
        return Ok(report);
    }
    for mode in Mode::ALL {
        train_one(cfg, opts, &data, mode)?;
        let stage = format!("eval {mode}");
        let (model, _) = load_checkpoint(&checkpoint_path(cfg, mode)).map_err(|e| CliError::runtime(&stage, e))?;
        let (preds, breakdown) = evaluate(&model, &data, cfg, &stage)?;
        write_eval(cfg, mode, &preds, &breakdown, &stage)?;
        report.runs.push(RunReport { name: mode.label().to_string(), breakdown });
    }
    let dir = cfg.reports_dir();
    write_json(&dir.join("overall.json"), &report.overall_json(), "report")?;
    write_json(&dir.join("languages.json"), &report.language_json(), "report")?;
    let overall = report.overall_table();
    let languages = report.language_table();
    write_text(&dir.join("overall.txt"), &overall, "report")?;
    write_text(&dir.join("languages.txt"), &languages, "report")?;
    print!("{overall}\n{languages}");
    Ok(report)
}

/// Validates translation-error annotations against the corpus and stores the
/// valid ones; invalid ones are partial failures.
pub fn cmd_annotate(cfg: &PipelineConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    const STAGE: &str = "annotate";
    let input = cfg
        .paths
        .annotations_input
        .as_deref()
        .map(|p| cfg.resolve(p))
        .ok_or_else(|| CliError::Config("paths.annotations_input is not set".into()))?;
    require_file(&input, "annotation input")?;
    let output = cfg.annotations_path();
    distinct(&input, &output)?;
    let corpus = read_corpus(&cfg.corpus_path(), STAGE)?;
    let pending: Vec<TranslationErrorAnnotation> =
        read_jsonl(&input).map_err(|e| CliError::runtime(STAGE, format!("{}: {e}", input.display())))?;
    let mut store = AnnotationStore::default();
    let mut failures = Vec::new();
    for ann in pending {
        if let Err(e) = store.annotate(&corpus, ann) {
            log::error!("{e}");
            failures.push(e.to_string());
        }
    }
    if opts.dry_run {
        return Ok(Outcome { failures });
    }
    ensure_parent(&output, STAGE)?;
    store.save(&output).map_err(|e| CliError::runtime(STAGE, e))?;
    let histogram: std::collections::BTreeMap<String, usize> =
        store.histogram().into_iter().map(|(c, n)| (c.to_string(), n)).collect();
    write_json(&cfg.reports_dir().join("annotations.json"), &histogram, STAGE)?;
    log::info!("{} annotations stored in {}", store.list().len(), output.display());
    Ok(Outcome { failures })
}
