//! The trainable classifier.
//!
//! Knowledge rows pass through an elementwise sigmoid gate
//! `sigmoid(K) ⊙ K`, a mixing MLP flattens the nine gated rows back to one
//! `d`-vector, the result is concatenated after the headline vector and a
//! ReLU MLP with a softmax output predicts the bias class. Gradients are
//! derived by hand and parameters are optimised with AdaMax.
//!
//! Parameters live in `f64` during training and are rounded to `f32` once
//! training ends, so checkpoints (stored as `f32`) reload exactly.

mod checkpoint;
mod layer;
mod optim;
mod train;

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::BiasLabel;
use crate::embed::{EmbeddingVector, KnowledgeEmbedding};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta, PLM1_MAGIC};
pub use layer::{sigmoid, softmax, Activation, Mlp, MlpLayer};
pub use optim::{adamax_step, AdaMaxConfig, AdaMaxState};
pub use train::{train, EpochLoss, TrainConfig, TrainedModel};

use layer::MlpTrace;

const ROWS: usize = KnowledgeEmbedding::ROWS;
const CLASSES: usize = BiasLabel::COUNT;
/// Samples per gradient chunk. Chunks are summed in a fixed order, which
/// keeps parallel gradients bitwise reproducible.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dim { what: &'static str, expected: usize, got: usize },
    #[error("non-finite values after layer {0}")]
    NonFinite(String),
    #[error("empty training set")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}, batch {batch}: loss {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which inputs feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    HeadlineOnly,
    KnowledgeOnly,
    HeadlinePlusKnowledge,
    HeadlinePlusAttendedKnowledge,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::HeadlineOnly,
        Mode::KnowledgeOnly,
        Mode::HeadlinePlusKnowledge,
        Mode::HeadlinePlusAttendedKnowledge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::HeadlineOnly => "headline-only",
            Mode::KnowledgeOnly => "knowledge-only",
            Mode::HeadlinePlusKnowledge => "headline-plus-knowledge",
            Mode::HeadlinePlusAttendedKnowledge => "headline-plus-attended-knowledge",
        }
    }

    /// Column heading for reports.
    pub fn label(self) -> &'static str {
        match self {
            Mode::HeadlineOnly => "Headline",
            Mode::KnowledgeOnly => "Knowledge",
            Mode::HeadlinePlusKnowledge => "Headline+Knowledge",
            Mode::HeadlinePlusAttendedKnowledge => "Headline+Attn(Knowledge)",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected one of headline-only, knowledge-only, headline-plus-knowledge, headline-plus-attended-knowledge)"))
    }
}

/// How knowledge-only mode reduces the 9 × d matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KnowledgePooling {
    /// Mixer over the flattened rows, no gate.
    #[default]
    Plain,
    /// Sigmoid gate then mixer.
    Attended,
    /// Row mean, no parameters.
    Mean,
}

/// Shapes of every component; enough to rebuild a model from its tensors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub mode: Mode,
    #[serde(default)]
    pub pooling: KnowledgePooling,
    pub dim: usize,
    #[serde(default)]
    pub mixer_hidden: Vec<usize>,
    pub trunk_hidden: Vec<usize>,
}

impl Architecture {
    pub fn new(mode: Mode, dim: usize) -> Self {
        Self {
            mode,
            pooling: KnowledgePooling::default(),
            dim,
            mixer_hidden: Vec::new(),
            trunk_hidden: vec![256, 64],
        }
    }

    pub fn uses_knowledge(&self) -> bool {
        self.mode != Mode::HeadlineOnly
    }

    pub fn uses_mixer(&self) -> bool {
        match self.mode {
            Mode::HeadlineOnly => false,
            Mode::KnowledgeOnly => self.pooling != KnowledgePooling::Mean,
            _ => true,
        }
    }

    pub fn gated(&self) -> bool {
        match self.mode {
            Mode::HeadlinePlusAttendedKnowledge => true,
            Mode::KnowledgeOnly => self.pooling == KnowledgePooling::Attended,
            _ => false,
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self.mode {
            Mode::HeadlineOnly | Mode::KnowledgeOnly => self.dim,
            _ => 2 * self.dim,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.dim == 0 {
            return Err(ModelError::Config("embedding dimension must be positive".into()));
        }
        if self.mixer_hidden.iter().chain(&self.trunk_hidden).any(|&h| h == 0) {
            return Err(ModelError::Config("hidden sizes must be positive".into()));
        }
        Ok(())
    }
}

/// The mixer MLP mapping the flattened (optionally gated) 9 × d knowledge to d.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionHead {
    pub mixer: Mlp,
}

/// Elementwise `sigmoid(x) · x`.
pub fn gate(k: &[f64]) -> Vec<f64> {
    k.iter().map(|&x| sigmoid(x) * x).collect()
}

/// Gated knowledge attention: `mixer(flatten(sigmoid(K) ⊙ K))`.
pub fn attend_knowledge(k: &KnowledgeEmbedding, head: &AttentionHead) -> Result<Vec<f64>, ModelError> {
    let flat: Vec<f64> = k.as_flat().iter().map(|&v| f64::from(v)).collect();
    if head.mixer.in_dim() != flat.len() {
        return Err(ModelError::Dim { what: "mixer input", expected: head.mixer.in_dim(), got: flat.len() });
    }
    let out = head.mixer.trace(gate(&flat), "mixer")?.output;
    if out.len() != k.dim() {
        return Err(ModelError::Dim { what: "mixer output", expected: k.dim(), got: out.len() });
    }
    Ok(out)
}

/// Concatenation, headline first.
pub fn fuse(h: &[f64], k: &[f64]) -> Result<Vec<f64>, ModelError> {
    if h.len() != k.len() {
        return Err(ModelError::Dim { what: "fusion", expected: h.len(), got: k.len() });
    }
    Ok([h, k].concat())
}

/// ReLU trunk followed by a softmax output layer over the three classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    /// Trunk layers then the softmax output layer.
    pub mlp: Mlp,
}

impl ClassifierHead {
    pub fn trunk(&self) -> &[MlpLayer] {
        let n = self.mlp.layers.len();
        &self.mlp.layers[..n - 1]
    }

    pub fn output(&self) -> &MlpLayer {
        self.mlp.layers.last().expect("classifier has an output layer")
    }
}

/// Class probabilities for a fused feature vector.
pub fn predict(f: &[f64], clf: &ClassifierHead) -> Result<[f64; CLASSES], ModelError> {
    if f.len() != clf.mlp.in_dim() {
        return Err(ModelError::Dim { what: "classifier input", expected: clf.mlp.in_dim(), got: f.len() });
    }
    let out = clf.mlp.trace(f.to_vec(), "classifier")?.output;
    Ok(out.try_into().expect("three classes"))
}

/// Most probable label; ties go to the lowest class index.
pub fn argmax_label(probs: &[f64; CLASSES]) -> BiasLabel {
    let mut best = 0;
    for i in 1..CLASSES {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    BiasLabel::from_index(best).expect("class index")
}

/// `−ln(max(pred[true], 1e-12))`.
pub fn cross_entropy(pred: &[f64], label: BiasLabel) -> f64 {
    -pred[label.index()].max(1e-12).ln()
}

/// One training or evaluation item.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub headline: EmbeddingVector,
    pub knowledge: KnowledgeEmbedding,
    pub label: BiasLabel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub arch: Architecture,
    pub attention: Option<AttentionHead>,
    pub classifier: ClassifierHead,
}

struct Trace {
    k: Vec<f64>,
    mixer: Option<MlpTrace>,
    classifier: MlpTrace,
}

impl Model {
    /// Glorot-initialised model; the same seed always yields the same weights.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self, ModelError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = arch.dim;
        let attention = arch.uses_mixer().then(|| AttentionHead {
            mixer: Mlp::glorot(ROWS * d, &arch.mixer_hidden, d, Activation::Identity, &mut rng),
        });
        let classifier = ClassifierHead {
            mlp: Mlp::glorot(arch.feature_dim(), &arch.trunk_hidden, CLASSES, Activation::Softmax, &mut rng),
        };
        Ok(Self { arch, attention, classifier })
    }

    fn layers(&self) -> impl Iterator<Item = (&'static str, usize, &MlpLayer)> {
        let mixer = self.attention.iter().flat_map(|a| a.mixer.layers.iter().enumerate().map(|(i, l)| ("mixer", i, l)));
        let clf = self.classifier.mlp.layers.iter().enumerate().map(|(i, l)| ("classifier", i, l));
        mixer.chain(clf)
    }

    fn mixer_tensors(&self) -> usize {
        self.attention.as_ref().map_or(0, |a| 2 * a.mixer.layers.len())
    }

    /// Parameter tensors in declaration order: for each mixer layer then each
    /// classifier layer, its weights followed by its bias.
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        self.layers().flat_map(|(_, _, l)| [&l.weights, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mixer = self.attention.iter_mut().flat_map(|a| a.mixer.layers.iter_mut());
        mixer
            .chain(self.classifier.mlp.layers.iter_mut())
            .flat_map(|l| [&mut l.weights, &mut l.bias])
            .collect()
    }

    pub fn tensor_names(&self) -> Vec<String> {
        self.layers()
            .flat_map(|(part, i, _)| [format!("{part}[{i}].weights"), format!("{part}[{i}].bias")])
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|(_, _, l)| l.param_count()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(|(_, _, l)| l.is_finite())
    }

    /// Rounds every parameter to the nearest `f32`.
    pub fn snap_to_f32(&mut self) {
        for t in self.tensors_mut() {
            for v in t.iter_mut() {
                *v = f64::from(*v as f32);
            }
        }
    }

    pub(crate) fn zero_grads(&self) -> Vec<Vec<f64>> {
        self.tensors().into_iter().map(|t| vec![0.0; t.len()]).collect()
    }

    fn check_dims(&self, h: &EmbeddingVector, k: &KnowledgeEmbedding) -> Result<(), ModelError> {
        let d = self.arch.dim;
        if h.dim() != d {
            return Err(ModelError::Dim { what: "headline embedding", expected: d, got: h.dim() });
        }
        if k.dim() != d {
            return Err(ModelError::Dim { what: "knowledge embedding", expected: d, got: k.dim() });
        }
        Ok(())
    }

    fn trace(&self, h: &[f64], k: Vec<f64>) -> Result<Trace, ModelError> {
        let d = self.arch.dim;
        let mixer = match &self.attention {
            Some(a) => {
                let input = if self.arch.gated() { gate(&k) } else { k.clone() };
                Some(a.mixer.trace(input, "mixer")?)
            }
            None => None,
        };
        let knowledge_feature = || -> Vec<f64> {
            match &mixer {
                Some(t) => t.output.clone(),
                None => (0..d).map(|j| (0..ROWS).map(|r| k[r * d + j]).sum::<f64>() / ROWS as f64).collect(),
            }
        };
        let features = match self.arch.mode {
            Mode::HeadlineOnly => h.to_vec(),
            Mode::KnowledgeOnly => knowledge_feature(),
            _ => [h, &knowledge_feature()].concat(),
        };
        let classifier = self.classifier.mlp.trace(features, "classifier")?;
        Ok(Trace { k, mixer, classifier })
    }

    /// Accumulates `scale · ∂loss/∂θ` into `grads` and returns the gradients
    /// with respect to the headline vector and the flattened knowledge.
    fn backprop(&self, tr: &Trace, label: BiasLabel, scale: f64, grads: &mut [Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let d = self.arch.dim;
        let mut dz = tr.classifier.output.clone();
        dz[label.index()] -= 1.0;
        let split = self.mixer_tensors();
        let (mixer_grads, clf_grads) = grads.split_at_mut(split);
        let d_feat = self.classifier.mlp.backward(&tr.classifier, dz, scale, clf_grads);

        let (dh, d_know) = match self.arch.mode {
            Mode::HeadlineOnly => (d_feat, None),
            Mode::KnowledgeOnly => (vec![0.0; d], Some(d_feat)),
            _ => (d_feat[..d].to_vec(), Some(d_feat[d..].to_vec())),
        };
        let dk = match (d_know, &self.attention, &tr.mixer) {
            (None, _, _) => vec![0.0; ROWS * d],
            (Some(g), Some(a), Some(mt)) => {
                let d_in = a.mixer.backward(mt, g, scale, mixer_grads);
                if self.arch.gated() {
                    d_in.iter()
                        .zip(&tr.k)
                        .map(|(&g, &x)| {
                            let s = sigmoid(x);
                            g * (s + x * s * (1.0 - s))
                        })
                        .collect()
                } else {
                    d_in
                }
            }
            (Some(g), _, _) => (0..ROWS * d).map(|i| g[i % d] / ROWS as f64).collect(),
        };
        (dh, dk)
    }

    fn widen(v: &[f32]) -> Vec<f64> {
        v.iter().map(|&x| f64::from(x)).collect()
    }

    pub fn predict_proba(&self, h: &EmbeddingVector, k: &KnowledgeEmbedding) -> Result<[f64; CLASSES], ModelError> {
        self.check_dims(h, k)?;
        let tr = self.trace(&Self::widen(h.values()), Self::widen(k.as_flat()))?;
        Ok(tr.classifier.output.try_into().expect("three classes"))
    }

    pub fn predict(&self, h: &EmbeddingVector, k: &KnowledgeEmbedding) -> Result<(BiasLabel, [f64; CLASSES]), ModelError> {
        let p = self.predict_proba(h, k)?;
        Ok((argmax_label(&p), p))
    }

    /// Probabilities for many examples, computed in parallel.
    pub fn predict_batch(&self, examples: &[Example]) -> Result<Vec<[f64; CLASSES]>, ModelError> {
        examples.par_iter().map(|e| self.predict_proba(&e.headline, &e.knowledge)).collect()
    }

    /// Mean cross-entropy.
    pub fn loss(&self, examples: &[Example]) -> Result<f64, ModelError> {
        if examples.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let probs = self.predict_batch(examples)?;
        let total: f64 = probs.iter().zip(examples).map(|(p, e)| cross_entropy(p, e.label)).sum();
        Ok(total / examples.len() as f64)
    }

    /// Mean loss and its gradient with respect to every parameter tensor.
    pub fn gradients(&self, examples: &[Example]) -> Result<(f64, Vec<Vec<f64>>), ModelError> {
        let refs: Vec<&Example> = examples.iter().collect();
        self.gradients_of(&refs)
    }

    pub(crate) fn gradients_of(&self, examples: &[&Example]) -> Result<(f64, Vec<Vec<f64>>), ModelError> {
        if examples.is_empty() {
            return Err(ModelError::EmptyDataset);
        }
        let scale = 1.0 / examples.len() as f64;
        let partial: Vec<(f64, Vec<Vec<f64>>)> = examples
            .par_chunks(GRAD_CHUNK)
            .map(|chunk| {
                let mut grads = self.zero_grads();
                let mut loss = 0.0;
                for e in chunk {
                    self.check_dims(&e.headline, &e.knowledge)?;
                    let tr = self.trace(&Self::widen(e.headline.values()), Self::widen(e.knowledge.as_flat()))?;
                    loss += cross_entropy(&tr.classifier.output, e.label);
                    self.backprop(&tr, e.label, scale, &mut grads);
                }
                Ok((loss, grads))
            })
            .collect::<Result<_, ModelError>>()?;
        let mut total = 0.0;
        let mut grads = self.zero_grads();
        for (loss, g) in partial {
            total += loss;
            for (acc, t) in grads.iter_mut().zip(g) {
                acc.iter_mut().zip(t).for_each(|(a, b)| *a += b);
            }
        }
        Ok((total * scale, grads))
    }

    /// Loss gradient for one example with respect to its inputs:
    /// `(∂/∂h, ∂/∂K flattened row-major)`.
    pub fn input_gradients(&self, e: &Example) -> Result<(Vec<f64>, Vec<f64>), ModelError> {
        self.check_dims(&e.headline, &e.knowledge)?;
        let tr = self.trace(&Self::widen(e.headline.values()), Self::widen(e.knowledge.as_flat()))?;
        let mut scratch = self.zero_grads();
        Ok(self.backprop(&tr, e.label, 1.0, &mut scratch))
    }

    /// Loss of one example with inputs given directly in `f64`.
    pub fn loss_at(&self, h: &[f64], k: &[f64], label: BiasLabel) -> Result<f64, ModelError> {
        let tr = self.trace(h, k.to_vec())?;
        Ok(cross_entropy(&tr.classifier.output, label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_head(d: usize, row: usize) -> AttentionHead {
        let mut l = MlpLayer::zeros(ROWS * d, d, Activation::Identity);
        for j in 0..d {
            l.weights[j * ROWS * d + row * d + j] = 1.0;
        }
        AttentionHead { mixer: Mlp { layers: vec![l] } }
    }

    #[test]
    fn gate_hand_computation() {
        let mut flat = vec![0.0f32; ROWS * 2];
        flat[6] = 1.0;
        flat[7] = -1.0;
        let k = KnowledgeEmbedding::from_flat(2, flat).unwrap();
        let out = attend_knowledge(&k, &identity_head(2, 3)).unwrap();
        assert!((out[0] - 0.7311).abs() < 1e-4, "{out:?}");
        assert!((out[1] + 0.2689).abs() < 1e-4, "{out:?}");
    }

    #[test]
    fn zero_knowledge_gives_mixer_bias() {
        let mut head = identity_head(3, 0);
        head.mixer.layers[0].bias = vec![0.1, -0.2, 0.3];
        let out = attend_knowledge(&KnowledgeEmbedding::zeros(3), &head).unwrap();
        assert_eq!(out, vec![0.1, -0.2, 0.3]);
    }

    #[test]
    fn gate_saturates() {
        let g = gate(&[1e6, 3e6, -1e6]);
        assert!((g[0] / 1e6 - 1.0).abs() < 1e-6);
        assert!((g[1] / 3e6 - 1.0).abs() < 1e-6);
        assert_eq!(g[2], 0.0);
    }

    #[test]
    fn fuse_concatenates_headline_first() {
        assert_eq!(fuse(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(fuse(&[5.0, 6.0], &[0.0, 0.0]).unwrap(), vec![5.0, 6.0, 0.0, 0.0]);
        assert!(fuse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn zero_network_is_uniform_and_crafted_logits_match() {
        let mut clf = ClassifierHead { mlp: Mlp { layers: vec![MlpLayer::zeros(4, CLASSES, Activation::Softmax)] } };
        let p = predict(&[1.0, -2.0, 3.0, 0.5], &clf).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(argmax_label(&p), BiasLabel::LeftCenter);

        clf.mlp.layers[0].bias = vec![2f64.ln(), 0.0, 0.0];
        let p = predict(&[0.0; 4], &clf).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.25).abs() < 1e-12 && (p[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn non_finite_names_the_layer() {
        let mut l = MlpLayer::zeros(2, CLASSES, Activation::Softmax);
        l.weights[0] = f64::INFINITY;
        let clf = ClassifierHead { mlp: Mlp { layers: vec![MlpLayer::zeros(2, 2, Activation::ReLU), l] } };
        match predict(&[1.0, 1.0], &clf) {
            Err(ModelError::NonFinite(name)) => assert_eq!(name, "classifier[1]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cross_entropy_values() {
        assert_eq!(cross_entropy(&[1.0, 0.0, 0.0], BiasLabel::LeftCenter), 0.0);
        let u = [1.0 / 3.0; 3];
        assert!((cross_entropy(&u, BiasLabel::RightCenter) - 3f64.ln()).abs() < 1e-12);
        assert!((cross_entropy(&[0.7, 0.2, 0.1], BiasLabel::LeftCenter) - 0.35667).abs() < 1e-5);
        assert!((cross_entropy(&[1.0, 0.0, 0.0], BiasLabel::LeastBiased) - 27.631021).abs() < 1e-5);
    }

    #[test]
    fn architecture_shapes() {
        let d = 4;
        for mode in Mode::ALL {
            let m = Model::init(Architecture { trunk_hidden: vec![5], ..Architecture::new(mode, d) }, 1).unwrap();
            let feat = if matches!(mode, Mode::HeadlineOnly | Mode::KnowledgeOnly) { d } else { 2 * d };
            assert_eq!(m.classifier.mlp.in_dim(), feat);
            assert_eq!(m.classifier.output().out_dim, 3);
            assert_eq!(m.attention.is_some(), mode != Mode::HeadlineOnly);
            assert_eq!(m.tensors().len(), m.tensor_names().len());
        }
        let mean = Architecture { pooling: KnowledgePooling::Mean, ..Architecture::new(Mode::KnowledgeOnly, d) };
        assert!(Model::init(mean, 1).unwrap().attention.is_none());
        assert!(Model::init(Architecture::new(Mode::HeadlineOnly, 0), 1).is_err());
        assert!("headline-plus-attended-knowledge".parse::<Mode>().is_ok());
        assert!("attended".parse::<Mode>().is_err());
    }

    #[test]
    fn knowledge_columns_at_zero_reduce_to_headline_only() {
        let d = 3;
        let ho = Model::init(Architecture { trunk_hidden: vec![4], ..Architecture::new(Mode::HeadlineOnly, d) }, 5).unwrap();
        let mut hk = Model::init(
            Architecture { trunk_hidden: vec![4], ..Architecture::new(Mode::HeadlinePlusKnowledge, d) },
            9,
        )
        .unwrap();
        let first = &mut hk.classifier.mlp.layers[0];
        let src = &ho.classifier.mlp.layers[0];
        for o in 0..first.out_dim {
            for i in 0..2 * d {
                first.weights[o * 2 * d + i] = if i < d { src.weights[o * d + i] } else { 0.0 };
            }
        }
        first.bias = src.bias.clone();
        hk.classifier.mlp.layers[1] = ho.classifier.mlp.layers[1].clone();

        let h = EmbeddingVector::new(vec![0.3, -0.7, 1.1]).unwrap();
        let zero = KnowledgeEmbedding::zeros(d);
        let noise = KnowledgeEmbedding::from_flat(d, (0..27).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap();
        let base = ho.predict_proba(&h, &zero).unwrap();
        assert_eq!(hk.predict_proba(&h, &zero).unwrap(), base);
        assert_eq!(hk.predict_proba(&h, &noise).unwrap(), base);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = Model::init(Architecture::new(Mode::HeadlineOnly, 4), 0).unwrap();
        let r = m.predict(&EmbeddingVector::zeros(3), &KnowledgeEmbedding::zeros(4));
        assert!(matches!(r, Err(ModelError::Dim { what: "headline embedding", .. })));
    }
}
