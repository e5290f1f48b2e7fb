//! Single-file JSON checkpoints with every parameter stored as a hex float.

use std::path::Path;

use raman_cnn::model::{ArchConfig, ModelParams};
use raman_cnn::optim::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{fsio, hexfloat};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    created_by: String,
    arch: ArchConfig,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    train: Option<TrainConfig>,
    tensors: Vec<TensorRecord>,
}

/// A trained model with the settings that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub seed: u64,
    pub train: Option<TrainConfig>,
    pub created_by: String,
}

impl Checkpoint {
    pub fn new(params: ModelParams, seed: u64, train: Option<TrainConfig>) -> Self {
        Self {
            params,
            seed,
            train,
            created_by: format!("raman-cnn {}", env!("CARGO_PKG_VERSION")),
        }
    }

    pub fn to_json(&self) -> String {
        let file = CheckpointFile {
            format_version: FORMAT_VERSION,
            created_by: self.created_by.clone(),
            arch: self.params.arch.clone(),
            seed: self.seed,
            train: self.train.clone(),
            tensors: self
                .params
                .named_tensors()
                .into_iter()
                .map(|t| TensorRecord {
                    name: t.name,
                    shape: t.shape,
                    data: t.data.iter().map(|&v| hexfloat::format(v)).collect(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
        text.push('\n');
        text
    }

    /// Parses checkpoint text; `path` only labels errors.
    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let corrupt = |message: String| Error::Corrupt {
            path: path.to_path_buf(),
            message,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
        match value.get("format_version") {
            Some(v) if v.as_u64() == Some(FORMAT_VERSION as u64) => {}
            found => {
                return Err(Error::Version {
                    path: path.to_path_buf(),
                    found: found.map_or_else(|| "none".into(), ToString::to_string),
                    expected: FORMAT_VERSION,
                })
            }
        }
        let file: CheckpointFile = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
        let mut tensors = Vec::with_capacity(file.tensors.len());
        for t in file.tensors {
            let declared: usize = t.shape.iter().product();
            if declared != t.data.len() {
                return Err(corrupt(format!(
                    "tensor {} declares shape {:?} but holds {} values",
                    t.name,
                    t.shape,
                    t.data.len()
                )));
            }
            let data = t
                .data
                .iter()
                .map(|s| hexfloat::parse(s).filter(|v| v.is_finite()))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| corrupt(format!("tensor {} holds an invalid number", t.name)))?;
            tensors.push((t.name, t.shape, data));
        }
        let params = ModelParams::from_tensors(&file.arch, tensors).map_err(|e| corrupt(e.to_string()))?;
        Ok(Self {
            params,
            seed: file.seed,
            train: file.train,
            created_by: file.created_by,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, self.to_json().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fsio::read_to_string(path)?, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use raman_cnn::model::{init_model, predict, ConvBlock};

    fn arch() -> ArchConfig {
        ArchConfig {
            input_length: 24,
            conv_blocks: vec![ConvBlock { filters: 2, size: 3 }; 2],
            fc1_width: 3,
            dropout_keep: 0.5,
            n_classes: 2,
            leaky_alpha: 0.2,
        }
    }

    fn checkpoint() -> Checkpoint {
        Checkpoint::new(init_model(&arch(), 4).unwrap(), 4, Some(TrainConfig::new(1e-4, 3, 4)))
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        let ck = checkpoint();
        ck.save(&a).unwrap();
        let loaded = Checkpoint::load(&a).unwrap();
        assert_eq!(loaded, ck);
        loaded.save(&b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }

    #[test]
    fn loaded_model_predicts_identically() {
        let ck = checkpoint();
        let back = Checkpoint::from_json(&ck.to_json(), Path::new("mem")).unwrap();
        let x: Vec<f64> = (0..24).map(|i| (i as f64 * 0.3).cos()).collect();
        let (p, q) = (predict(&ck.params, &x).unwrap(), predict(&back.params, &x).unwrap());
        assert_eq!(p.probs.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), q.probs.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = checkpoint().to_json();
        let err = Checkpoint::from_json(&text[..text.len() / 2], Path::new("t")).unwrap_err();
        assert!(matches!(err, Error::Corrupt { .. }), "{err}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let text = checkpoint().to_json().replace("\"format_version\": 1", "\"format_version\": 7");
        let err = Checkpoint::from_json(&text, Path::new("v")).unwrap_err();
        assert!(matches!(err, Error::Version { ref found, .. } if found == "7"), "{err}");
    }

    #[test]
    fn shape_mismatch_and_bad_numbers_are_corrupt() {
        let text = checkpoint().to_json();
        let bad_shape = text.replacen("\"shape\": [\n        2,", "\"shape\": [\n        5,", 1);
        assert_ne!(bad_shape, text);
        assert!(matches!(Checkpoint::from_json(&bad_shape, Path::new("s")), Err(Error::Corrupt { .. })));
        let bad_num = text.replacen("\"0x", "\"zz", 1);
        assert!(matches!(Checkpoint::from_json(&bad_num, Path::new("n")), Err(Error::Corrupt { .. })));
    }
}
