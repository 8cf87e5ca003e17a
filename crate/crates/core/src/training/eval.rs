use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::PhiMatrix;
use crate::dataset::DemoDataset;
use crate::error::{Error, Result};
use crate::kinematics::{final_distance_mm, KinematicChain};
use crate::linalg::pairwise_mean;
use crate::metrics::{sample_squared_loss, trajectory_squared_loss, EvalRecord};
use crate::promp::{fit_trajectory, reconstruct, Trajectory, DEFAULT_LAMBDA};

use super::model::{Model, TargetSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub index: usize,
    pub group: String,
    /// Squared trajectory loss summed over joints.
    pub squared_loss: f64,
    pub ed_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// One record per group key, in sorted key order.
    pub groups: Vec<EvalRecord>,
    pub overall: EvalRecord,
    pub samples: Vec<SampleEval>,
}

impl Evaluation {
    /// Group rows followed by an `all` row.
    pub fn rows(&self) -> Vec<EvalRecord> {
        let mut rows = self.groups.clone();
        rows.push(self.overall.clone());
        rows
    }
}

/// Predicted and ground-truth trajectories of one sample. The ground truth
/// is the reconstruction of the demo's fitted ProMP weights under `phi`.
pub fn sample_trajectories(model: &Model, dataset: &DemoDataset, index: usize, phi: &PhiMatrix) -> Result<(Trajectory, Trajectory)> {
    let sample = dataset.samples.get(index).ok_or(Error::IndexOutOfRange {
        index,
        len: dataset.len(),
    })?;
    let gt_w = fit_trajectory(&sample.trajectory, phi, DEFAULT_LAMBDA)?;
    let gt = reconstruct(&gt_w, phi, &dataset.phase_cfg)?;
    let pred = model.predict_trajectory(sample, Some(phi))?;
    Ok((pred, gt))
}

fn record(group: String, samples: &[&SampleEval]) -> EvalRecord {
    let sq: Vec<f64> = samples.iter().map(|s| s.squared_loss).collect();
    let ed: Vec<f64> = samples.iter().map(|s| s.ed_mm).collect();
    EvalRecord {
        group,
        ave_mse: pairwise_mean(&sq),
        ave_ed: pairwise_mean(&ed),
        count: samples.len(),
    }
}

/// Grouped AveMSE and AveED over `indices`. ProMP models are scored in
/// weight space under `phi`; DMP models by comparing their rollout to the
/// ground-truth reconstruction.
pub fn evaluate(model: &Model, dataset: &DemoDataset, indices: &[usize], phi: &PhiMatrix, chain: &KinematicChain) -> Result<Evaluation> {
    if indices.is_empty() {
        return Err(Error::Empty("evaluation split"));
    }
    if let TargetSpace::Promp { basis } = &model.target {
        if basis.n_basis() != phi.n_basis() {
            return Err(Error::DimensionMismatch {
                context: "evaluation basis",
                expected: basis.n_basis(),
                actual: phi.n_basis(),
            });
        }
    }
    let mut samples = Vec::with_capacity(indices.len());
    for &index in indices {
        let sample = dataset.samples.get(index).ok_or(Error::IndexOutOfRange {
            index,
            len: dataset.len(),
        })?;
        let gt_w = fit_trajectory(&sample.trajectory, phi, DEFAULT_LAMBDA)?;
        let gt = reconstruct(&gt_w, phi, &dataset.phase_cfg)?;
        let (squared_loss, pred) = match &model.target {
            TargetSpace::Promp { .. } => {
                let w = model.predict_weights(sample)?;
                (sample_squared_loss(&w, &gt_w, phi)?, reconstruct(&w, phi, &dataset.phase_cfg)?)
            }
            TargetSpace::Dmp { .. } => {
                let pred = model.predict_trajectory(sample, None)?;
                (trajectory_squared_loss(&pred, &gt)?, pred)
            }
        };
        samples.push(SampleEval {
            index,
            group: sample.tags.group(),
            squared_loss,
            ed_mm: final_distance_mm(&pred, &gt, chain)?,
        });
    }
    let mut by_group: BTreeMap<&str, Vec<&SampleEval>> = BTreeMap::new();
    for s in &samples {
        by_group.entry(s.group.as_str()).or_default().push(s);
    }
    let groups = by_group.iter().map(|(g, v)| record(g.to_string(), v)).collect();
    let overall = record("all".into(), &samples.iter().collect::<Vec<_>>());
    Ok(Evaluation {
        groups,
        overall,
        samples,
    })
}
