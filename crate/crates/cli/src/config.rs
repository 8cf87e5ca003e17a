//! Optional TOML file supplying defaults for any command flag.
//!
//! ```toml
//! seed = 3
//!
//! [generate]
//! kind = "wpp"
//! trials = 31
//!
//! [train]
//! method = "residual"
//! epochs = 150
//! hidden = [64, 64]
//!
//! [eval]
//! chain = "configs/stand_in_arm.toml"
//! ```
//!
//! Precedence: command-line flag, then this file, then `MPRIM_SEED` (seed
//! only), then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip)]
    pub source: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    pub kind: Option<String>,
    pub noise: Option<f64>,
    pub trials: Option<usize>,
    pub counts: Option<[usize; 4]>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub method: Option<String>,
    pub task: Option<String>,
    pub split: Option<String>,
    pub n_basis: Option<usize>,
    pub dmp_basis: Option<usize>,
    pub tau: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub hidden: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    pub patience: Option<usize>,
    pub residual_scope: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub chain: Option<PathBuf>,
    pub split: Option<String>,
    pub plot_samples: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.source = Some(path.to_path_buf());
        Ok(cfg)
    }

    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var("MPRIM_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("MPRIM_SEED={v:?} is not an unsigned integer")),
            Err(_) => Ok(0),
        }
    }
}
