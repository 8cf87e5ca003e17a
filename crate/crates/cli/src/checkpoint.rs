use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use mprim::training::{DataSplit, Model, NetConfig, TrainConfig};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "mprim-checkpoint";
pub const VERSION: u32 = 1;

/// Settings of a training run after merging flags, config file and
/// defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSettings {
    pub method: String,
    pub task: String,
    pub split: Option<String>,
    /// ProMP basis size; also the evaluation basis for d-DMP models.
    pub n_basis: usize,
    pub dmp_basis: usize,
    pub tau: f64,
    pub lambda: f64,
    pub net: NetConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub settings: TrainSettings,
    pub dataset_sha256: String,
    pub split: DataSplit,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(settings: TrainSettings, dataset_sha256: String, split: DataSplit, model: Model) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            settings,
            dataset_sha256,
            split,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)? + "\n";
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let ck: Checkpoint =
            serde_json::from_str(&text).with_context(|| format!("parsing checkpoint {}", path.display()))?;
        if ck.format != FORMAT || ck.version != VERSION {
            bail!(
                "{} is {} v{}, expected {FORMAT} v{VERSION}",
                path.display(),
                ck.format,
                ck.version
            );
        }
        Ok(ck)
    }
}
