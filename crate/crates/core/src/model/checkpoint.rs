use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Architecture, Mlp, Model, ModelError, Mode, TrainConfig, TrainedModel};

pub const PLM1_MAGIC: &[u8; 4] = b"PLM1";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    architecture: Architecture,
    train_config: TrainConfig,
}

/// The JSON sidecar written next to each checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub format_version: u32,
    pub mode: Mode,
    pub dim: usize,
    pub seed: u64,
    pub epochs: usize,
    pub best_epoch: Option<usize>,
    pub final_train_loss: Option<f64>,
    pub final_valid_loss: Option<f64>,
    pub param_count: usize,
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `path` (binary: `PLM1`, `u32` header length, JSON header with the
/// architecture and training config, `u64` value count, then every tensor as
/// little-endian `f32` in declaration order) and `path.json` (metadata).
pub fn save_checkpoint(trained: &TrainedModel, path: &Path) -> Result<CheckpointMeta, ModelError> {
    let model = &trained.model;
    let header = serde_json::to_vec(&Header {
        format_version: FORMAT_VERSION,
        architecture: model.arch.clone(),
        train_config: trained.config.clone(),
    })
    .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(PLM1_MAGIC)?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(model.param_count() as u64).to_le_bytes())?;
    for t in model.tensors() {
        for &v in t {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    w.flush()?;

    let last = trained.history.last();
    let kept = trained.best_epoch.and_then(|e| trained.history.get(e - 1)).or(last);
    let meta = CheckpointMeta {
        format_version: FORMAT_VERSION,
        mode: model.arch.mode,
        dim: model.arch.dim,
        seed: trained.config.seed,
        epochs: trained.history.len(),
        best_epoch: trained.best_epoch,
        final_train_loss: kept.map(|e| e.train),
        final_valid_loss: kept.and_then(|e| e.valid),
        param_count: model.param_count(),
    };
    let mut side = serde_json::to_string_pretty(&meta).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    side.push('\n');
    std::fs::write(sidecar_path(path), side)?;
    Ok(meta)
}

fn take<'a>(buf: &'a [u8], pos: &mut usize, n: usize) -> Result<&'a [u8], ModelError> {
    let end = pos.checked_add(n).filter(|&e| e <= buf.len()).ok_or_else(|| ModelError::Checkpoint("truncated file".into()))?;
    let out = &buf[*pos..end];
    *pos = end;
    Ok(out)
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: &Path) -> Result<(Model, TrainConfig), ModelError> {
    let buf = std::fs::read(path)?;
    let mut pos = 0;
    if take(&buf, &mut pos, 4)? != PLM1_MAGIC {
        return Err(ModelError::Checkpoint(format!("{} is not a PLM1 checkpoint", path.display())));
    }
    let hlen = u32::from_le_bytes(take(&buf, &mut pos, 4)?.try_into().expect("4 bytes")) as usize;
    let header: Header =
        serde_json::from_slice(take(&buf, &mut pos, hlen)?).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    if header.format_version != FORMAT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported format version {}", header.format_version)));
    }
    let count = u64::from_le_bytes(take(&buf, &mut pos, 8)?.try_into().expect("8 bytes")) as usize;
    let mut model = Model::init(header.architecture, 0)?;
    if count != model.param_count() {
        return Err(ModelError::Checkpoint(format!(
            "architecture needs {} values, file has {count}",
            model.param_count()
        )));
    }
    let raw = take(&buf, &mut pos, count * 4)?;
    if pos != buf.len() {
        return Err(ModelError::Checkpoint(format!("{} trailing bytes", buf.len() - pos)));
    }
    let mut values = raw.chunks_exact(4).map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))));
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = values.next().expect("count checked");
        }
    }
    if !model.is_finite() {
        return Err(ModelError::Checkpoint("non-finite parameters".into()));
    }
    Ok((model, header.train_config))
}

impl Model {
    /// Rebuilds a model from an architecture and its stacks (used by tests and tools).
    pub fn from_parts(arch: Architecture, mixer: Option<Mlp>, classifier: Mlp) -> Result<Self, ModelError> {
        let template = Model::init(arch.clone(), 0)?;
        let shapes = |m: &Model| m.tensors().iter().map(|t| t.len()).collect::<Vec<_>>();
        let model = Model {
            arch,
            attention: mixer.map(|mixer| super::AttentionHead { mixer }),
            classifier: super::ClassifierHead { mlp: classifier },
        };
        if shapes(&model) != shapes(&template) {
            return Err(ModelError::Checkpoint("tensor shapes do not match the architecture".into()));
        }
        Ok(model)
    }
}
