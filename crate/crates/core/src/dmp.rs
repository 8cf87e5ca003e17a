//! Discrete dynamic movement primitives (the d-DMP baseline representation).
//!
//! Transformation system, per joint:
//!
//! ```text
//! tau * dq/dt = v
//! tau * dv/dt = alpha_z * (beta_z * (g - q) - v) + f(x)
//! tau * dx/dt = -alpha_x * x
//! ```
//!
//! with forcing term `f(x) = x (g - q0) sum_i psi_i(x) w_i / sum_i psi_i(x)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::PhaseConfig;
use crate::error::{Error, Result};
use crate::promp::Trajectory;

pub const DEFAULT_ALPHA_Z: f64 = 25.0;
pub const DEFAULT_TAU: f64 = 7.6;
pub const DEFAULT_N_BASIS: usize = 25;
/// Euler sub-steps per demonstration sample when reproducing a demo.
pub const ROLLOUT_SUBSTEPS: usize = 10;

const DEGENERATE_SPAN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DmpGains {
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_x: f64,
}

impl Default for DmpGains {
    fn default() -> Self {
        Self {
            alpha_z: DEFAULT_ALPHA_Z,
            beta_z: DEFAULT_ALPHA_Z / 4.0,
            alpha_x: DEFAULT_ALPHA_Z / 3.0,
        }
    }
}

impl DmpGains {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha_z", self.alpha_z),
            ("beta_z", self.beta_z),
            ("alpha_x", self.alpha_x),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpModel {
    pub forcing_weights: Vec<DVector<f64>>,
    pub goal: DVector<f64>,
    pub start: DVector<f64>,
    pub tau: f64,
    pub gains: DmpGains,
    /// Joints whose demo had `g == q0`; their forcing weights were zeroed.
    #[serde(default)]
    pub degenerate_joints: Vec<usize>,
}

impl DmpModel {
    pub fn new(
        forcing_weights: Vec<DVector<f64>>,
        goal: DVector<f64>,
        start: DVector<f64>,
        tau: f64,
        gains: DmpGains,
    ) -> Result<Self> {
        let m = Self {
            forcing_weights,
            goal,
            start,
            tau,
            gains,
            degenerate_joints: Vec::new(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau <= 0.0 {
            return Err(Error::InvalidConfig(format!("tau must be positive, got {}", self.tau)));
        }
        self.gains.validate()?;
        let n_joints = self.goal.len();
        if n_joints == 0 {
            return Err(Error::Empty("DMP joints"));
        }
        for (context, len) in [
            ("DMP start", self.start.len()),
            ("DMP forcing weights", self.forcing_weights.len()),
        ] {
            if len != n_joints {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: n_joints,
                    actual: len,
                });
            }
        }
        let n_basis = self.n_basis();
        if n_basis == 0 {
            return Err(Error::InvalidConfig("DMP needs at least one kernel".into()));
        }
        if let Some(w) = self.forcing_weights.iter().find(|w| w.len() != n_basis) {
            return Err(Error::DimensionMismatch {
                context: "DMP kernels per joint",
                expected: n_basis,
                actual: w.len(),
            });
        }
        Ok(())
    }

    pub fn n_joints(&self) -> usize {
        self.goal.len()
    }

    pub fn n_basis(&self) -> usize {
        self.forcing_weights.first().map_or(0, |w| w.len())
    }

    pub fn canonical(&self, t: f64) -> f64 {
        canonical(t, self)
    }

    /// Forcing term of joint `j` at phase `x`.
    pub fn forcing(&self, j: usize, x: f64) -> f64 {
        let kernels = ForcingKernels::new(self.n_basis(), self.gains.alpha_x);
        kernels.forcing(&self.forcing_weights[j], x) * x * (self.goal[j] - self.start[j])
    }

    /// Parameter vector `[Omega (joint-major), g]`, plus `q0` when
    /// `include_start` is set.
    pub fn param_vector(&self, include_start: bool) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .forcing_weights
            .iter()
            .flat_map(|w| w.iter().copied())
            .collect();
        out.extend(self.goal.iter());
        if include_start {
            out.extend(self.start.iter());
        }
        out
    }

    /// Inverse of [`DmpModel::param_vector`]. When the vector excludes `q0`,
    /// `known_start` supplies it.
    pub fn from_param_vector(
        params: &[f64],
        n_joints: usize,
        n_basis: usize,
        known_start: Option<&DVector<f64>>,
        tau: f64,
        gains: DmpGains,
    ) -> Result<Self> {
        let base = n_joints * (n_basis + 1);
        let expected = if known_start.is_some() { base } else { base + n_joints };
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "DMP parameter vector",
                expected,
                actual: params.len(),
            });
        }
        let forcing_weights = params[..n_joints * n_basis]
            .chunks(n_basis)
            .map(DVector::from_column_slice)
            .collect();
        let goal = DVector::from_column_slice(&params[n_joints * n_basis..base]);
        let start = match known_start {
            Some(s) => s.clone(),
            None => DVector::from_column_slice(&params[base..]),
        };
        Self::new(forcing_weights, goal, start, tau, gains)
    }
}

/// Length of the d-DMP parameter vector: `N_joint * (N_bas + 1)` without
/// the start, `N_joint * (N_bas + 2)` with it.
pub fn param_len(n_joints: usize, n_basis: usize, include_start: bool) -> usize {
    n_joints * (n_basis + if include_start { 2 } else { 1 })
}

/// Canonical phase `x(t) = exp(-alpha_x t / tau)`.
pub fn canonical(t: f64, model: &DmpModel) -> f64 {
    (-model.gains.alpha_x * t / model.tau).exp()
}

/// Gaussian kernels in `x`, centered so they are evenly spaced in time over
/// `[0, tau]`. Neighbouring kernels cross at `exp(-1)` of their peak.
#[derive(Debug, Clone)]
struct ForcingKernels {
    centers: Vec<f64>,
    widths: Vec<f64>,
}

impl ForcingKernels {
    fn new(n_basis: usize, alpha_x: f64) -> Self {
        let centers: Vec<f64> = if n_basis == 1 {
            vec![(-alpha_x * 0.5).exp()]
        } else {
            (0..n_basis)
                .map(|i| (-alpha_x * i as f64 / (n_basis - 1) as f64).exp())
                .collect()
        };
        let mut widths: Vec<f64> = centers
            .windows(2)
            .map(|w| 1.0 / (0.5 * (w[1] - w[0])).powi(2))
            .collect();
        widths.push(widths.last().copied().unwrap_or(1.0));
        Self { centers, widths }
    }

    fn activations(&self, x: f64) -> impl Iterator<Item = f64> + '_ {
        self.centers
            .iter()
            .zip(&self.widths)
            .map(move |(c, h)| (-h * (x - c).powi(2)).exp())
    }

    /// Normalized kernel mixture `sum psi_i w_i / sum psi_i` (no `x (g - q0)`).
    fn forcing(&self, weights: &DVector<f64>, x: f64) -> f64 {
        let (num, den) = self
            .activations(x)
            .zip(weights.iter())
            .fold((0.0, 0.0), |(n, d), (psi, w)| (n + psi * w, d + psi));
        if den > 1e-300 {
            num / den
        } else {
            0.0
        }
    }
}

/// Central differences in the interior, one-sided at the ends.
fn finite_difference(values: &DVector<f64>, dt: f64) -> DVector<f64> {
    let n = values.len();
    DVector::from_fn(n, |k, _| {
        if k == 0 {
            (values[1] - values[0]) / dt
        } else if k == n - 1 {
            (values[n - 1] - values[n - 2]) / dt
        } else {
            (values[k + 1] - values[k - 1]) / (2.0 * dt)
        }
    })
}

pub fn fit_dmp(traj: &Trajectory, n_basis: usize, tau: f64) -> Result<DmpModel> {
    fit_dmp_with_gains(traj, n_basis, tau, DmpGains::default())
}

/// Fits goal, start and forcing weights (locally weighted regression per
/// kernel) to a demonstration.
pub fn fit_dmp_with_gains(traj: &Trajectory, n_basis: usize, tau: f64, gains: DmpGains) -> Result<DmpModel> {
    let t_len = traj.n_samples();
    if t_len < 3 {
        return Err(Error::NotEnoughSamples {
            context: "fit_dmp",
            required: 3,
            actual: t_len,
        });
    }
    if n_basis == 0 {
        return Err(Error::InvalidConfig("DMP needs at least one kernel".into()));
    }
    let dt = traj.phase_cfg().sample_period();
    let goal = traj.last();
    let start = traj.first();
    let probe = DmpModel::new(
        vec![DVector::zeros(n_basis); traj.n_joints()],
        goal.clone(),
        start.clone(),
        tau,
        gains,
    )?;
    let kernels = ForcingKernels::new(n_basis, gains.alpha_x);
    let xs: Vec<f64> = (0..t_len).map(|k| probe.canonical(k as f64 * dt)).collect();
    let psi: Vec<Vec<f64>> = xs.iter().map(|&x| kernels.activations(x).collect()).collect();

    let mut forcing_weights = Vec::with_capacity(traj.n_joints());
    let mut degenerate_joints = Vec::new();
    for j in 0..traj.n_joints() {
        let span = goal[j] - start[j];
        if span.abs() < DEGENERATE_SPAN {
            degenerate_joints.push(j);
            forcing_weights.push(DVector::zeros(n_basis));
            continue;
        }
        let q = traj.joint(j);
        let qd = finite_difference(&q, dt);
        let qdd = finite_difference(&qd, dt);
        let f_target: Vec<f64> = (0..t_len)
            .map(|k| {
                tau * tau * qdd[k]
                    - gains.alpha_z * (gains.beta_z * (goal[j] - q[k]) - tau * qd[k])
            })
            .collect();
        let w = DVector::from_fn(n_basis, |i, _| {
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..t_len {
                let s = xs[k] * span;
                num += s * psi[k][i] * f_target[k];
                den += s * s * psi[k][i];
            }
            if den > 1e-300 {
                num / den
            } else {
                0.0
            }
        });
        forcing_weights.push(w);
    }
    Ok(DmpModel {
        forcing_weights,
        degenerate_joints,
        ..probe
    })
}

/// Explicit Euler integration from rest at `start`; returns `steps + 1`
/// samples (the initial state included) spaced by `dt`.
pub fn rollout(model: &DmpModel, dt: f64, steps: usize) -> Result<Trajectory> {
    model.validate()?;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let kernels = ForcingKernels::new(model.n_basis(), model.gains.alpha_x);
    let n = model.n_joints();
    let DmpGains { alpha_z, beta_z, .. } = model.gains;
    let mut q = model.start.clone();
    let mut v: DVector<f64> = DVector::zeros(n);
    let mut out = DMatrix::zeros(steps + 1, n);
    out.set_row(0, &q.transpose());
    for step in 1..=steps {
        let x = model.canonical((step - 1) as f64 * dt);
        for j in 0..n {
            let f = kernels.forcing(&model.forcing_weights[j], x)
                * x
                * (model.goal[j] - model.start[j]);
            let dv = (alpha_z * (beta_z * (model.goal[j] - q[j]) - v[j]) + f) / model.tau;
            let dq = v[j] / model.tau;
            q[j] += dq * dt;
            v[j] += dv * dt;
            if !q[j].is_finite() || !v[j].is_finite() {
                return Err(Error::Integration { step });
            }
        }
        out.set_row(step, &q.transpose());
    }
    Trajectory::new(out, PhaseConfig::new(1.0 / dt, steps + 1)?)
}

/// Rolls the model out on the sampling grid of `phase_cfg`, integrating with
/// [`ROLLOUT_SUBSTEPS`] Euler steps per sample.
pub fn reproduce(model: &DmpModel, phase_cfg: &PhaseConfig) -> Result<Trajectory> {
    let dt = phase_cfg.sample_period() / ROLLOUT_SUBSTEPS as f64;
    let steps = (phase_cfg.duration_samples() - 1) * ROLLOUT_SUBSTEPS;
    let fine = rollout(model, dt, steps)?;
    let rows: Vec<usize> = (0..phase_cfg.duration_samples())
        .map(|k| k * ROLLOUT_SUBSTEPS)
        .collect();
    Trajectory::new(fine.values().select_rows(rows.iter()), *phase_cfg)
}
