use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regressor::{DEFAULT_HIDDEN, DEFAULT_LEARNING_RATE};

pub const RTP_EPOCHS: usize = 150;
pub const WPP_EPOCHS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub val_fraction_of_train: f64,
    pub seed: u64,
    pub early_stop_patience: usize,
    pub residual_mean_scope: MeanScope,
}

/// Grouping of the mean weights subtracted by the residual variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanScope {
    /// One mean per region tag, global for untagged samples.
    #[default]
    PerRegion,
    Global,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: RTP_EPOCHS,
            batch_size: 32,
            learning_rate: DEFAULT_LEARNING_RATE,
            train_fraction: 0.85,
            val_fraction_of_train: 0.25,
            seed: 0,
            early_stop_patience: 20,
            residual_mean_scope: MeanScope::PerRegion,
        }
    }
}

impl TrainConfig {
    pub fn rtp(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn wpp(seed: u64) -> Self {
        Self {
            seed,
            epochs: WPP_EPOCHS,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if self.batch_size == 0 || self.early_stop_patience == 0 {
            return Err(Error::InvalidConfig(
                "batch_size and early_stop_patience must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !in_unit(self.train_fraction) || !in_unit(self.val_fraction_of_train) {
            return Err(Error::InvalidConfig(format!(
                "fractions must lie in (0,1): train {}, val {}",
                self.train_fraction, self.val_fraction_of_train
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: DEFAULT_HIDDEN.to_vec(),
        }
    }
}

/// Sample indices for fitting, model selection and held-out evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl DataSplit {
    /// Seeded shuffle into test (`1 - train_fraction`), then validation
    /// (`val_fraction_of_train` of the rest), then train.
    pub fn random(n: usize, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        idx.shuffle(&mut rng);
        let n_test = ((1.0 - cfg.train_fraction) * n as f64).round() as usize;
        let test = idx.split_off(n - n_test);
        Self::from_train_test(idx, test, cfg.val_fraction_of_train, cfg.seed)
    }

    /// Carves a validation subset out of an externally chosen training set.
    /// At least two training samples are kept whenever two are available.
    pub fn from_train_test(train_all: Vec<usize>, test: Vec<usize>, val_fraction: f64, seed: u64) -> Result<Self> {
        if train_all.is_empty() {
            return Err(Error::Empty("training split"));
        }
        let mut train = train_all;
        train.sort_unstable();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_5a11);
        train.shuffle(&mut rng);
        let n_val = ((val_fraction * train.len() as f64).round() as usize).min(train.len().saturating_sub(2));
        let mut val = train.split_off(train.len() - n_val);
        train.sort_unstable();
        val.sort_unstable();
        let mut test = test;
        test.sort_unstable();
        Ok(Self { train, val, test })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.batch_size, c.learning_rate), (150, 32, 1e-3));
        assert_eq!(TrainConfig::wpp(1).epochs, 200);
        assert!(c.validate().is_ok());
        assert!(TrainConfig { train_fraction: 1.0, ..c.clone() }.validate().is_err());
        assert!(TrainConfig { batch_size: 0, ..c }.validate().is_err());
    }

    #[test]
    fn random_split_sizes_and_disjointness() {
        let s = DataSplit::random(545, &TrainConfig::rtp(3)).unwrap();
        assert_eq!(s.test.len(), 82);
        assert_eq!(s.val.len(), 116);
        assert_eq!(s.train.len(), 347);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..545).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_seed_deterministic() {
        let a = DataSplit::random(100, &TrainConfig::rtp(7)).unwrap();
        let b = DataSplit::random(100, &TrainConfig::rtp(7)).unwrap();
        let c = DataSplit::random(100, &TrainConfig::rtp(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn single_training_sample_keeps_it_for_training() {
        let s = DataSplit::from_train_test(vec![4], vec![], 0.25, 0).unwrap();
        assert_eq!(s.train, vec![4]);
        assert!(s.val.is_empty());
        assert!(DataSplit::from_train_test(vec![], vec![1], 0.25, 0).is_err());
    }

    #[test]
    fn two_training_samples_are_not_split_further() {
        let s = DataSplit::from_train_test(vec![3, 1], vec![], 0.5, 0).unwrap();
        assert_eq!(s.train, vec![1, 3]);
        assert!(s.val.is_empty());
        let s = DataSplit::from_train_test(vec![0, 1, 2], vec![], 0.5, 0).unwrap();
        assert_eq!((s.train.len(), s.val.len()), (2, 1));
    }
}
