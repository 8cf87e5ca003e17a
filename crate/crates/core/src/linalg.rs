//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Factored ridge least-squares problem `min ||X b - y||^2 + lambda ||b||^2`.
///
/// The augmented system `[X; sqrt(lambda) I]` is factored once by QR, so
/// many right-hand sides sharing the same design can be solved cheaply. This
/// yields the same minimizer as `(lambda I + X^T X)^{-1} X^T y` without
/// squaring the condition number.
#[derive(Debug, Clone)]
pub struct RidgeSolver {
    q_t: DMatrix<f64>,
    r: DMatrix<f64>,
    rows: usize,
}

impl RidgeSolver {
    pub fn new(design: &DMatrix<f64>, lambda: f64, context: &'static str) -> Result<Self> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ridge term must be finite and non-negative, got {lambda}"
            )));
        }
        let (rows, cols) = design.shape();
        let aug_rows = if lambda > 0.0 { rows + cols } else { rows };
        if aug_rows < cols {
            return Err(Error::SingularSystem {
                context,
                rank: aug_rows,
                cols,
            });
        }
        let mut aug = DMatrix::zeros(aug_rows, cols);
        aug.view_mut((0, 0), (rows, cols)).copy_from(design);
        if lambda > 0.0 {
            let s = lambda.sqrt();
            for i in 0..cols {
                aug[(rows + i, i)] = s;
            }
        }
        let qr = aug.qr();
        let r = qr.r();
        let q_t = qr.q().transpose();

        let max_diag = (0..cols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let tol = max_diag * (aug_rows.max(cols) as f64) * f64::EPSILON;
        let rank = (0..cols).filter(|&i| r[(i, i)].abs() > tol).count();
        if rank < cols || max_diag == 0.0 {
            return Err(Error::SingularSystem { context, rank, cols });
        }
        Ok(Self { q_t, r, rows })
    }

    /// Solves for every column of `targets` (rows must match the design).
    pub fn solve(&self, targets: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if targets.nrows() != self.rows {
            return Err(Error::DimensionMismatch {
                context: "ridge solve",
                expected: self.rows,
                actual: targets.nrows(),
            });
        }
        let aug_rows = self.q_t.ncols();
        let mut rhs = DMatrix::zeros(aug_rows, targets.ncols());
        rhs.view_mut((0, 0), (self.rows, targets.ncols()))
            .copy_from(targets);
        let qty = &self.q_t * rhs;
        self.r
            .solve_upper_triangular(&qty)
            .ok_or(Error::SingularSystem {
                context: "ridge solve",
                rank: 0,
                cols: self.r.ncols(),
            })
    }

    pub fn solve_vector(&self, target: &DVector<f64>) -> Result<DVector<f64>> {
        let m = DMatrix::from_column_slice(target.len(), 1, target.as_slice());
        Ok(self.solve(&m)?.column(0).into_owned())
    }
}

/// Pairwise (cascade) summation with a fixed reduction order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn pairwise_mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Root mean square of a slice; zero for an empty slice.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_solver_matches_normal_equations() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let lambda = 0.5;
        let b = RidgeSolver::new(&x, lambda, "test")
            .unwrap()
            .solve_vector(&y)
            .unwrap();
        let normal = x.transpose() * &x + DMatrix::identity(2, 2) * lambda;
        let expected = normal.try_inverse().unwrap() * x.transpose() * y;
        assert!((b - expected).norm() < 1e-12);
    }

    #[test]
    fn rank_deficient_without_ridge_is_an_error() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let err = RidgeSolver::new(&x, 0.0, "test").unwrap_err();
        assert!(matches!(err, Error::SingularSystem { rank: 1, .. }));
        assert!(RidgeSolver::new(&x, 1e-3, "test").is_ok());
    }

    #[test]
    fn pairwise_sum_is_exact_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
        assert_eq!(rms(&[3.0, -3.0]), 3.0);
    }
}
