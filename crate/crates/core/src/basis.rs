//! Phase variable and normalized Gaussian basis functions.
//!
//! Every trajectory representation in the crate is expressed in terms of the
//! basis matrix `Phi` (T x N_bas) whose row `t` holds the normalized kernel
//! activations at phase `z(t) = t / f`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling grid of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhaseConfigRepr")]
pub struct PhaseConfig {
    sampling_frequency: f64,
    duration_samples: usize,
}

#[derive(Deserialize)]
struct PhaseConfigRepr {
    sampling_frequency: f64,
    duration_samples: usize,
}

impl TryFrom<PhaseConfigRepr> for PhaseConfig {
    type Error = Error;
    fn try_from(r: PhaseConfigRepr) -> Result<Self> {
        PhaseConfig::new(r.sampling_frequency, r.duration_samples)
    }
}

impl PhaseConfig {
    pub fn new(sampling_frequency: f64, duration_samples: usize) -> Result<Self> {
        if !sampling_frequency.is_finite() || sampling_frequency <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "sampling frequency must be positive, got {sampling_frequency}"
            )));
        }
        if duration_samples < 2 {
            return Err(Error::InvalidConfig(format!(
                "a trajectory needs at least 2 samples, got {duration_samples}"
            )));
        }
        Ok(Self {
            sampling_frequency,
            duration_samples,
        })
    }

    pub fn sampling_frequency(&self) -> f64 {
        self.sampling_frequency
    }

    pub fn duration_samples(&self) -> usize {
        self.duration_samples
    }

    /// Phase of sample `t` (unmodulated: `t / f`).
    pub fn phase(&self, t: usize) -> Result<f64> {
        if t >= self.duration_samples {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.duration_samples,
            });
        }
        Ok(t as f64 / self.sampling_frequency)
    }

    /// Phase of the last sample, i.e. the realized span `[0, z(T-1)]`.
    pub fn span(&self) -> f64 {
        (self.duration_samples - 1) as f64 / self.sampling_frequency
    }

    pub fn sample_period(&self) -> f64 {
        1.0 / self.sampling_frequency
    }
}

/// Free-function form of [`PhaseConfig::phase`].
pub fn phase(t: usize, cfg: &PhaseConfig) -> Result<f64> {
    cfg.phase(t)
}

/// Centers and shared width of the Gaussian kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisConfigRepr")]
pub struct BasisConfig {
    n_basis: usize,
    centers: Vec<f64>,
    width: f64,
}

#[derive(Deserialize)]
struct BasisConfigRepr {
    n_basis: usize,
    centers: Vec<f64>,
    width: f64,
}

impl TryFrom<BasisConfigRepr> for BasisConfig {
    type Error = Error;
    fn try_from(r: BasisConfigRepr) -> Result<Self> {
        if r.centers.len() != r.n_basis {
            return Err(Error::DimensionMismatch {
                context: "basis centers",
                expected: r.n_basis,
                actual: r.centers.len(),
            });
        }
        BasisConfig::new(r.centers, r.width)
    }
}

impl BasisConfig {
    pub fn new(centers: Vec<f64>, width: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::InvalidConfig("at least one basis center is required".into()));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("basis centers must be finite".into()));
        }
        if centers.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "basis centers must be strictly increasing".into(),
            ));
        }
        if !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "basis width must be positive, got {width}"
            )));
        }
        Ok(Self {
            n_basis: centers.len(),
            centers,
            width,
        })
    }

    /// Default placement: `n_basis` centers evenly spaced over the realized
    /// phase span, width equal to the squared center spacing.
    pub fn evenly_spaced(n_basis: usize, phase_cfg: &PhaseConfig) -> Result<Self> {
        if n_basis == 0 {
            return Err(Error::InvalidConfig("n_basis must be positive".into()));
        }
        let span = phase_cfg.span();
        if n_basis == 1 {
            let width = if span > 0.0 { span * span } else { 1.0 };
            return Self::new(vec![0.0], width);
        }
        let spacing = span / (n_basis - 1) as f64;
        let centers = (0..n_basis).map(|i| i as f64 * spacing).collect();
        Self::new(centers, spacing * spacing)
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Same kernels shifted by `offset` in phase.
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        Self::new(self.centers.iter().map(|c| c + offset).collect(), self.width)
    }
}

/// Normalized kernel activations `psi_i(z)`.
pub fn basis_row(z: f64, cfg: &BasisConfig) -> Result<DVector<f64>> {
    let mut row = DVector::from_iterator(
        cfg.n_basis,
        cfg.centers
            .iter()
            .map(|c| (-(z - c).powi(2) / (2.0 * cfg.width)).exp()),
    );
    let total: f64 = row.iter().sum();
    if !total.is_finite() || total <= 0.0 {
        return Err(Error::Normalization { z });
    }
    row /= total;
    Ok(row)
}

/// Basis matrix `Phi`; row `t` is the basis row at `z(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMatrix {
    values: DMatrix<f64>,
}

impl PhiMatrix {
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_basis(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, t: usize) -> Result<DVector<f64>> {
        if t >= self.n_samples() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.n_samples(),
            });
        }
        Ok(self.values.row(t).transpose())
    }

    /// `Phi * theta`.
    pub fn apply(&self, theta: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_weights(theta)?;
        Ok(DVector::from_fn(self.n_samples(), |t, _| self.dot_row(t, theta)))
    }

    /// `Psi_t^T theta`, summed in the same order as [`PhiMatrix::apply`].
    pub fn eval_at(&self, t: usize, theta: &DVector<f64>) -> Result<f64> {
        self.check_weights(theta)?;
        if t >= self.n_samples() {
            return Err(Error::IndexOutOfRange {
                index: t,
                len: self.n_samples(),
            });
        }
        Ok(self.dot_row(t, theta))
    }

    fn dot_row(&self, t: usize, theta: &DVector<f64>) -> f64 {
        (0..self.n_basis()).fold(0.0, |acc, i| acc + self.values[(t, i)] * theta[i])
    }

    fn check_weights(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.n_basis() {
            return Err(Error::DimensionMismatch {
                context: "basis weights",
                expected: self.n_basis(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    /// `Phi^T Phi / T`, the metric of the trajectory-space loss.
    pub fn scaled_gram(&self) -> DMatrix<f64> {
        self.values.transpose() * &self.values / self.n_samples() as f64
    }
}

pub fn build_phi(phase_cfg: &PhaseConfig, basis_cfg: &BasisConfig) -> Result<PhiMatrix> {
    let t_len = phase_cfg.duration_samples();
    let mut values = DMatrix::zeros(t_len, basis_cfg.n_basis());
    for t in 0..t_len {
        let row = basis_row(phase_cfg.phase(t)?, basis_cfg)?;
        values.set_row(t, &row.transpose());
    }
    Ok(PhiMatrix { values })
}
