use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{adamax_step, AdaMaxConfig, AdaMaxState, Architecture, Example, KnowledgePooling, Mode, Model, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mode: Mode,
    pub pooling: KnowledgePooling,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub adamax: AdaMaxConfig,
    pub trunk_hidden: Vec<usize>,
    pub mixer_hidden: Vec<usize>,
    /// With a validation set, return the parameters of the epoch with the
    /// lowest validation loss instead of the last epoch.
    pub keep_best_valid: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: Mode::HeadlinePlusAttendedKnowledge,
            pooling: KnowledgePooling::default(),
            epochs: 50,
            batch_size: 64,
            seed: 0,
            adamax: AdaMaxConfig::default(),
            trunk_hidden: vec![256, 64],
            mixer_hidden: Vec::new(),
            keep_best_valid: true,
        }
    }
}

impl TrainConfig {
    pub fn architecture(&self, dim: usize) -> Architecture {
        Architecture {
            mode: self.mode,
            pooling: self.pooling,
            dim,
            mixer_hidden: self.mixer_hidden.clone(),
            trunk_hidden: self.trunk_hidden.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.batch_size == 0 {
            return Err(ModelError::Config("batch size must be positive".into()));
        }
        self.adamax.validate().map_err(ModelError::Config)?;
        if self.mixer_hidden.iter().chain(&self.trunk_hidden).any(|&h| h == 0) {
            return Err(ModelError::Config("hidden sizes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based.
    pub epoch: usize,
    /// Mean loss over the whole training set after the epoch's updates.
    pub train: f64,
    pub valid: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub model: Model,
    pub config: TrainConfig,
    pub history: Vec<EpochLoss>,
    /// Epoch whose parameters were kept, when selected on validation loss.
    pub best_epoch: Option<usize>,
}

fn diverged(epoch: usize, batch: usize) -> impl Fn(ModelError) -> ModelError {
    move |e| match e {
        ModelError::NonFinite(_) => ModelError::Divergence { epoch, batch, loss: f64::NAN },
        other => other,
    }
}

/// Mini-batch AdaMax on mean cross-entropy. Batch order is reshuffled every
/// epoch from `cfg.seed`; the same data and config give bitwise-identical
/// parameters.
pub fn train(train: &[Example], valid: Option<&[Example]>, cfg: &TrainConfig) -> Result<TrainedModel, ModelError> {
    cfg.validate()?;
    let first = train.first().ok_or(ModelError::EmptyDataset)?;
    let valid = valid.filter(|v| !v.is_empty());
    let mut model = Model::init(cfg.architecture(first.headline.dim()), cfg.seed)?;
    let mut state = AdaMaxState::new(model.tensors());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Model)> = None;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut batches = 0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&Example> = idx.iter().map(|&i| &train[i]).collect();
            let (loss, grads) = model.gradients_of(&batch).map_err(diverged(epoch, b))?;
            if !loss.is_finite() {
                return Err(ModelError::Divergence { epoch, batch: b, loss });
            }
            adamax_step(&mut model.tensors_mut(), &grads, &mut state, &cfg.adamax);
            if !model.is_finite() {
                return Err(ModelError::Divergence { epoch, batch: b, loss: f64::NAN });
            }
            batches = b + 1;
        }
        let train_loss = model.loss(train).map_err(diverged(epoch, batches))?;
        let valid_loss = valid.map(|v| model.loss(v)).transpose().map_err(diverged(epoch, batches))?;
        log::debug!("epoch {epoch}: train loss {train_loss:.6}, valid loss {valid_loss:?}");
        history.push(EpochLoss { epoch, train: train_loss, valid: valid_loss });
        if let (true, Some(v)) = (cfg.keep_best_valid, valid_loss) {
            if best.as_ref().is_none_or(|(b, _, _)| v < *b) {
                best = Some((v, epoch, model.clone()));
            }
        }
    }

    let (mut model, best_epoch) = match best {
        Some((_, epoch, m)) => (m, Some(epoch)),
        None => (model, None),
    };
    model.snap_to_f32();
    Ok(TrainedModel {
        model,
        config: cfg.clone(),
        history,
        best_epoch,
    })
}
