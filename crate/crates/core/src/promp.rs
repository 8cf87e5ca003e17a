//! Probabilistic movement primitives: ridge weight fitting, reconstruction,
//! the Gaussian weight distribution with its per-time-step marginal, sampling,
//! and the mean/residual decomposition of weights.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::{PhaseConfig, PhiMatrix};
use crate::error::{Error, Result};
use crate::linalg::RidgeSolver;

/// Default ridge term for weight fitting.
pub const DEFAULT_LAMBDA: f64 = 1e-6;
/// Default observation noise variance used when sampling (rad^2).
pub const DEFAULT_OBS_NOISE_VAR: f64 = 1e-4;

/// Joint positions sampled on a uniform grid, one column per joint.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    values: DMatrix<f64>,
    phase_cfg: PhaseConfig,
}

impl Trajectory {
    pub fn new(values: DMatrix<f64>, phase_cfg: PhaseConfig) -> Result<Self> {
        if values.nrows() != phase_cfg.duration_samples() {
            return Err(Error::DimensionMismatch {
                context: "trajectory length",
                expected: phase_cfg.duration_samples(),
                actual: values.nrows(),
            });
        }
        if values.ncols() == 0 {
            return Err(Error::Empty("trajectory joints"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("trajectory contains non-finite values".into()));
        }
        Ok(Self { values, phase_cfg })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn phase_cfg(&self) -> &PhaseConfig {
        &self.phase_cfg
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_joints(&self) -> usize {
        self.values.ncols()
    }

    pub fn joint(&self, j: usize) -> DVector<f64> {
        self.values.column(j).into_owned()
    }

    pub fn first(&self) -> DVector<f64> {
        self.values.row(0).transpose()
    }

    pub fn last(&self) -> DVector<f64> {
        self.values.row(self.n_samples() - 1).transpose()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }
}

/// Basis weights of a single joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointWeights {
    pub theta: DVector<f64>,
}

impl JointWeights {
    pub fn new(theta: DVector<f64>) -> Self {
        Self { theta }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Weights of every joint (stacked, these form `Omega`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrompWeights {
    pub per_joint: Vec<JointWeights>,
}

impl PrompWeights {
    pub fn n_joints(&self) -> usize {
        self.per_joint.len()
    }

    /// Joint-major flattening `[theta_1; ...; theta_J]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.per_joint
            .iter()
            .flat_map(|w| w.theta.iter().copied())
            .collect()
    }

    pub fn from_flat(flat: &[f64], n_joints: usize) -> Result<Self> {
        if n_joints == 0 || !flat.len().is_multiple_of(n_joints) {
            return Err(Error::DimensionMismatch {
                context: "flattened weights",
                expected: n_joints,
                actual: flat.len(),
            });
        }
        let n_basis = flat.len() / n_joints;
        Ok(Self {
            per_joint: flat
                .chunks(n_basis)
                .map(|c| JointWeights::new(DVector::from_column_slice(c)))
                .collect(),
        })
    }
}

/// Gaussian distribution over one joint's weights plus observation noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrompDistribution {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub obs_noise_var: f64,
}

/// `Theta = Theta_bar + Theta_res`.
///
/// `rounding` carries the low-order part lost when `theta - mean` was rounded,
/// so that [`residual_combine`] restores the original bits exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualWeights {
    pub mean_weights: DVector<f64>,
    pub residual: DVector<f64>,
    pub rounding: DVector<f64>,
}

fn check_phi_rows(phi: &PhiMatrix, len: usize) -> Result<()> {
    if phi.n_samples() != len {
        return Err(Error::DimensionMismatch {
            context: "basis matrix rows",
            expected: len,
            actual: phi.n_samples(),
        });
    }
    Ok(())
}

/// Ridge fit `(lambda I + Phi^T Phi)^{-1} Phi^T q` for one joint.
pub fn fit_weights(traj_joint: &DVector<f64>, phi: &PhiMatrix, lambda: f64) -> Result<JointWeights> {
    check_phi_rows(phi, traj_joint.len())?;
    let solver = RidgeSolver::new(phi.values(), lambda, "ProMP weight fit")?;
    Ok(JointWeights::new(solver.solve_vector(traj_joint)?))
}

/// Fits every joint of `traj` with one factorization of `Phi`.
pub fn fit_trajectory(traj: &Trajectory, phi: &PhiMatrix, lambda: f64) -> Result<PrompWeights> {
    check_phi_rows(phi, traj.n_samples())?;
    let solver = RidgeSolver::new(phi.values(), lambda, "ProMP weight fit")?;
    let theta = solver.solve(traj.values())?;
    Ok(PrompWeights {
        per_joint: theta
            .column_iter()
            .map(|c| JointWeights::new(c.into_owned()))
            .collect(),
    })
}

/// Batch variant of [`fit_trajectory`] sharing the factorization across demos.
pub fn fit_many<'a>(
    trajs: impl IntoIterator<Item = &'a Trajectory>,
    phi: &PhiMatrix,
    lambda: f64,
) -> Result<Vec<PrompWeights>> {
    let solver = RidgeSolver::new(phi.values(), lambda, "ProMP weight fit")?;
    trajs
        .into_iter()
        .map(|traj| {
            check_phi_rows(phi, traj.n_samples())?;
            let theta = solver.solve(traj.values())?;
            Ok(PrompWeights {
                per_joint: theta
                    .column_iter()
                    .map(|c| JointWeights::new(c.into_owned()))
                    .collect(),
            })
        })
        .collect()
}

/// Noise-free reconstruction `Phi * theta_j` for each joint.
pub fn reconstruct(weights: &PrompWeights, phi: &PhiMatrix, phase_cfg: &PhaseConfig) -> Result<Trajectory> {
    if weights.per_joint.is_empty() {
        return Err(Error::Empty("reconstruct"));
    }
    check_phi_rows(phi, phase_cfg.duration_samples())?;
    let mut values = DMatrix::zeros(phi.n_samples(), weights.n_joints());
    for (j, w) in weights.per_joint.iter().enumerate() {
        values.set_column(j, &phi.apply(&w.theta)?);
    }
    Trajectory::new(values, *phase_cfg)
}

pub fn mean_weights(all: &[JointWeights]) -> Result<DVector<f64>> {
    let first = all.first().ok_or(Error::Empty("mean_weights"))?;
    let mut acc = DVector::zeros(first.len());
    for w in all {
        if w.len() != first.len() {
            return Err(Error::DimensionMismatch {
                context: "mean_weights",
                expected: first.len(),
                actual: w.len(),
            });
        }
        acc += &w.theta;
    }
    Ok(acc / all.len() as f64)
}

/// Sample mean and unbiased (N-1) covariance of fitted weights.
pub fn fit_distribution(all: &[JointWeights], obs_noise_var: f64) -> Result<PrompDistribution> {
    if all.len() < 2 {
        return Err(Error::NotEnoughSamples {
            context: "fit_distribution",
            required: 2,
            actual: all.len(),
        });
    }
    if obs_noise_var.is_nan() || obs_noise_var < 0.0 {
        return Err(Error::InvalidConfig("observation noise variance must be >= 0".into()));
    }
    let mean = mean_weights(all)?;
    let n = mean.len();
    let mut cov = DMatrix::zeros(n, n);
    for w in all {
        let d = &w.theta - &mean;
        cov += &d * d.transpose();
    }
    cov /= (all.len() - 1) as f64;
    let covariance = (&cov + cov.transpose()) * 0.5;
    Ok(PrompDistribution {
        mean,
        covariance,
        obs_noise_var,
    })
}

/// Marginal mean and variance of `q_t` with the weights integrated out.
pub fn marginal_at(t: usize, dist: &PrompDistribution, phi: &PhiMatrix) -> Result<(f64, f64)> {
    let psi = phi.row(t)?;
    if psi.len() != dist.mean.len() {
        return Err(Error::DimensionMismatch {
            context: "marginal_at",
            expected: phi.n_basis(),
            actual: dist.mean.len(),
        });
    }
    let mean = phi.eval_at(t, &dist.mean)?;
    let variance = dist.obs_noise_var + (psi.transpose() * &dist.covariance * &psi)[(0, 0)];
    Ok((mean, variance.max(0.0)))
}

const PSD_TOLERANCE: f64 = 1e-10;

/// Symmetric square-root factor `V sqrt(max(L, 0))` of a covariance.
fn covariance_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(cov.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOLERANCE {
        return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: min });
    }
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&sqrt))
}

/// Draws `Theta ~ N(mu, Sigma)` once, then adds i.i.d. observation noise
/// to each sample of `Phi * Theta`.
pub fn sample_trajectory(dist: &PrompDistribution, phi: &PhiMatrix, seed: u64) -> Result<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(dist, &covariance_factor(&dist.covariance)?, phi, &mut rng)
}

/// Draws `count` trajectories from one seeded stream, factoring the
/// covariance once.
pub fn sample_trajectories(
    dist: &PrompDistribution,
    phi: &PhiMatrix,
    seed: u64,
    count: usize,
) -> Result<Vec<DVector<f64>>> {
    let factor = covariance_factor(&dist.covariance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_with(dist, &factor, phi, &mut rng))
        .collect()
}

fn sample_with(
    dist: &PrompDistribution,
    factor: &DMatrix<f64>,
    phi: &PhiMatrix,
    rng: &mut ChaCha8Rng,
) -> Result<DVector<f64>> {
    let n = dist.mean.len();
    let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    let theta = &dist.mean + factor * z;
    let mut q = phi.apply(&theta)?;
    if dist.obs_noise_var > 0.0 {
        let sd = dist.obs_noise_var.sqrt();
        for v in q.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v += sd * e;
        }
    }
    Ok(q)
}

fn check_same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            context: "residual weights",
            expected: a,
            actual: b,
        });
    }
    Ok(())
}

pub fn residual_split(theta: &JointWeights, mean: &DVector<f64>) -> Result<ResidualWeights> {
    check_same_len(mean.len(), theta.len())?;
    let residual = &theta.theta - mean;
    // theta - fl(residual + mean) is exact: the two operands agree to within a
    // few ulps of the rounding error of `residual`.
    let rounding = DVector::from_iterator(
        residual.len(),
        theta
            .theta
            .iter()
            .zip(residual.iter().zip(mean.iter()))
            .map(|(t, (r, m))| t - (r + m)),
    );
    Ok(ResidualWeights {
        mean_weights: mean.clone(),
        residual,
        rounding,
    })
}

pub fn residual_combine(r: &ResidualWeights) -> Result<JointWeights> {
    check_same_len(r.mean_weights.len(), r.residual.len())?;
    check_same_len(r.residual.len(), r.rounding.len())?;
    Ok(JointWeights::new(DVector::from_iterator(
        r.residual.len(),
        r.residual
            .iter()
            .zip(r.mean_weights.iter().zip(r.rounding.iter()))
            .map(|(res, (m, c))| (res + m) + c),
    )))
}
