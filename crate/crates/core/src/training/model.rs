use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{build_phi, BasisConfig, PhaseConfig, PhiMatrix};
use crate::dataset::{DatasetKind, DemoDataset, DemoSample, Tags};
use crate::dmp::{param_len, reproduce, DmpGains, DmpModel};
use crate::error::{Error, Result};
use crate::linalg::pairwise_mean;
use crate::promp::{reconstruct, PrompWeights, Trajectory};
use crate::regressor::{MlpParams, RidgeRegressor};

use super::config::MeanScope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DeepMp,
    Residual,
    Ddmp,
    Ridge,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DeepMp => "deep-mp",
            Method::Residual => "residual",
            Method::Ddmp => "ddmp",
            Method::Ridge => "ridge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "deep-mp" => Ok(Method::DeepMp),
            "residual" => Ok(Method::Residual),
            "ddmp" => Ok(Method::Ddmp),
            "ridge" => Ok(Method::Ridge),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

/// Per-feature affine map fitted on training contexts. Constant features
/// keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = rows.into_iter().collect();
        let dim = rows.first().ok_or(Error::Empty("standardizer"))?.len();
        let mut mean = Vec::with_capacity(dim);
        let mut scale = Vec::with_capacity(dim);
        for k in 0..dim {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            let m = pairwise_mean(&col);
            let var = pairwise_mean(&col.iter().map(|v| (v - m).powi(2)).collect::<Vec<_>>());
            let s = var.sqrt();
            mean.push(m);
            scale.push(if s > 1e-12 { s } else { 1.0 });
        }
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                context: "context features",
                expected: self.mean.len(),
                actual: x.len(),
            });
        }
        Ok(x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect())
    }
}

/// Mean target vectors over the training demos, globally and per region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMeans {
    pub global: Vec<f64>,
    pub per_region: BTreeMap<String, Vec<f64>>,
    /// Dataset indices the means were computed from.
    pub source_indices: Vec<usize>,
}

impl GroupMeans {
    /// `targets[i]` belongs to `dataset.samples[i]`; only `indices` are used.
    pub fn compute(dataset: &DemoDataset, targets: &[Vec<f64>], indices: &[usize], scope: MeanScope) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::NotEnoughSamples {
                context: "residual mean",
                required: 2,
                actual: indices.len(),
            });
        }
        let mean_of = |idx: &[usize]| -> Vec<f64> {
            let dim = targets[idx[0]].len();
            (0..dim)
                .map(|k| pairwise_mean(&idx.iter().map(|&i| targets[i][k]).collect::<Vec<_>>()))
                .collect()
        };
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for &i in indices.iter().filter(|_| scope == MeanScope::PerRegion) {
            if let Some(region) = dataset.samples[i].tags.region() {
                groups.entry(region.to_string()).or_default().push(i);
            }
        }
        let mut source_indices = indices.to_vec();
        source_indices.sort_unstable();
        Ok(Self {
            global: mean_of(indices),
            per_region: groups.iter().map(|(k, idx)| (k.clone(), mean_of(idx))).collect(),
            source_indices,
        })
    }

    /// Region mean when the sample has a region seen in training, otherwise
    /// the global mean.
    pub fn offset_for(&self, tags: &Tags) -> &[f64] {
        tags.region()
            .and_then(|r| self.per_region.get(&r.to_string()))
            .unwrap_or(&self.global)
    }
}

/// Maps raw regressor output `y` to `offset + scale * y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHead {
    pub scale: Vec<f64>,
    pub offsets: Option<GroupMeans>,
}

impl OutputHead {
    pub fn identity(len: usize) -> Self {
        Self {
            scale: vec![1.0; len],
            offsets: None,
        }
    }

    pub fn apply(&self, raw: &[f64], tags: &Tags) -> Vec<f64> {
        let offset = self.offsets.as_ref().map(|o| o.offset_for(tags));
        raw.iter()
            .zip(&self.scale)
            .enumerate()
            .map(|(k, (y, s))| offset.map_or(0.0, |o| o[k]) + s * y)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpace {
    Promp { basis: BasisConfig },
    Dmp { n_basis: usize, tau: f64, gains: DmpGains, include_start: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Regressor {
    Mlp(MlpParams),
    Ridge(RidgeRegressor),
}

/// A trained context-to-trajectory model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub method: Method,
    pub task: DatasetKind,
    pub phase_cfg: PhaseConfig,
    pub n_joints: usize,
    pub target: TargetSpace,
    pub input: Standardizer,
    pub head: OutputHead,
    pub regressor: Regressor,
    pub seed: u64,
}

impl Model {
    pub fn output_len(&self) -> usize {
        match &self.target {
            TargetSpace::Promp { basis } => basis.n_basis() * self.n_joints,
            TargetSpace::Dmp {
                n_basis, include_start, ..
            } => param_len(self.n_joints, *n_basis, *include_start),
        }
    }

    pub fn mlp(&self) -> Option<&MlpParams> {
        match &self.regressor {
            Regressor::Mlp(m) => Some(m),
            Regressor::Ridge(_) => None,
        }
    }

    /// Target-space prediction (flattened weights or DMP parameters).
    pub fn predict_vector(&self, context: &[f64], tags: &Tags) -> Result<Vec<f64>> {
        let x = self.input.apply(context)?;
        let raw = match &self.regressor {
            Regressor::Mlp(m) => m.forward(&x)?,
            Regressor::Ridge(r) => r.predict(&x)?,
        };
        Ok(self.head.apply(&raw, tags))
    }

    pub fn build_phi(&self) -> Result<Option<PhiMatrix>> {
        match &self.target {
            TargetSpace::Promp { basis } => Ok(Some(build_phi(&self.phase_cfg, basis)?)),
            TargetSpace::Dmp { .. } => Ok(None),
        }
    }

    pub fn predict_weights(&self, sample: &DemoSample) -> Result<PrompWeights> {
        match &self.target {
            TargetSpace::Promp { .. } => {
                PrompWeights::from_flat(&self.predict_vector(&sample.context, &sample.tags)?, self.n_joints)
            }
            TargetSpace::Dmp { .. } => Err(Error::InvalidConfig(
                "DMP models do not predict ProMP weights".into(),
            )),
        }
    }

    /// DMP built from the prediction. Without a predicted start, the
    /// demo's first posture is used as the known start.
    pub fn predict_dmp(&self, sample: &DemoSample) -> Result<DmpModel> {
        match &self.target {
            TargetSpace::Dmp {
                n_basis,
                tau,
                gains,
                include_start,
            } => {
                let params = self.predict_vector(&sample.context, &sample.tags)?;
                let start: DVector<f64> = sample.trajectory.first();
                let known = if *include_start { None } else { Some(&start) };
                DmpModel::from_param_vector(&params, self.n_joints, *n_basis, known, *tau, *gains)
            }
            TargetSpace::Promp { .. } => Err(Error::InvalidConfig("ProMP models do not predict DMPs".into())),
        }
    }

    /// Predicted joint trajectory. `phi` must match the model basis for
    /// ProMP targets and is ignored for DMP targets.
    pub fn predict_trajectory(&self, sample: &DemoSample, phi: Option<&PhiMatrix>) -> Result<Trajectory> {
        match &self.target {
            TargetSpace::Promp { .. } => {
                let owned;
                let phi = match phi {
                    Some(p) => p,
                    None => {
                        owned = self.build_phi()?.expect("ProMP target");
                        &owned
                    }
                };
                reconstruct(&self.predict_weights(sample)?, phi, &self.phase_cfg)
            }
            TargetSpace::Dmp { .. } => reproduce(&self.predict_dmp(sample)?, &self.phase_cfg),
        }
    }
}
