//! Evaluation metrics in joint space and their tabular export.

use std::io::Write;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::PhiMatrix;
use crate::error::{Error, Result};
use crate::linalg::{pairwise_mean, pairwise_sum};
use crate::promp::{PrompWeights, Trajectory};
use crate::regressor::loss_trajectory;

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub group: String,
    /// rad^2
    pub ave_mse: f64,
    /// mm
    pub ave_ed: f64,
    pub count: usize,
}

fn check_pairs(pred: usize, gt: usize) -> Result<()> {
    if pred == 0 {
        return Err(Error::Empty("evaluation samples"));
    }
    if pred != gt {
        return Err(Error::DimensionMismatch {
            context: "evaluation samples",
            expected: gt,
            actual: pred,
        });
    }
    Ok(())
}

/// Sum over joints of the squared trajectory loss for one sample.
pub fn sample_squared_loss(pred: &PrompWeights, gt: &PrompWeights, phi: &PhiMatrix) -> Result<f64> {
    if pred.n_joints() != gt.n_joints() {
        return Err(Error::DimensionMismatch {
            context: "joint count",
            expected: gt.n_joints(),
            actual: pred.n_joints(),
        });
    }
    let per_joint = pred
        .per_joint
        .iter()
        .zip(&gt.per_joint)
        .map(|(p, g)| loss_trajectory(&p.theta, &g.theta, phi).map(|l| l * l))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&per_joint))
}

/// Mean over samples of the per-sample squared loss summed over joints.
pub fn ave_mse(pred: &[PrompWeights], gt: &[PrompWeights], phi: &PhiMatrix) -> Result<f64> {
    check_pairs(pred.len(), gt.len())?;
    let per_sample = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| sample_squared_loss(p, g, phi))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&per_sample))
}

/// Trajectory-space counterpart of [`sample_squared_loss`] for predictions
/// that are not weight vectors (for example DMP rollouts).
pub fn trajectory_squared_loss(pred: &Trajectory, gt: &Trajectory) -> Result<f64> {
    if pred.values().shape() != gt.values().shape() {
        return Err(Error::DimensionMismatch {
            context: "trajectory samples",
            expected: gt.values().len(),
            actual: pred.values().len(),
        });
    }
    let per_joint: Vec<f64> = (0..gt.n_joints())
        .map(|j| {
            let gap: DVector<f64> = gt.joint(j) - pred.joint(j);
            let sq: Vec<f64> = gap.iter().map(|v| v * v).collect();
            pairwise_mean(&sq)
        })
        .collect();
    Ok(pairwise_sum(&per_joint))
}

pub fn ave_mse_trajectories(pred: &[Trajectory], gt: &[Trajectory]) -> Result<f64> {
    check_pairs(pred.len(), gt.len())?;
    let per_sample = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| trajectory_squared_loss(p, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&per_sample))
}

/// Writes records as CSV with columns `group,ave_mse,ave_ed_mm,count`.
pub fn write_records_csv<W: Write>(records: &[EvalRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["group", "ave_mse", "ave_ed_mm", "count"])?;
    for r in records {
        w.write_record([
            r.group.clone(),
            r.ave_mse.to_string(),
            r.ave_ed.to_string(),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
