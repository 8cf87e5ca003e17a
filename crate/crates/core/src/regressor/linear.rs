use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RidgeSolver;

/// Affine map `y = A x + b` fitted in closed form with an unpenalized
/// intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeRegressor {
    pub coef: DMatrix<f64>,
    pub intercept: DVector<f64>,
}

fn stack(rows: &[Vec<f64>], what: &'static str) -> Result<DMatrix<f64>> {
    let first = rows.first().ok_or(Error::Empty(what))?;
    if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            context: what,
            expected: first.len(),
            actual: bad.len(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), first.len(), |i, j| rows[i][j]))
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(m.ncols(), |j, _| m.column(j).mean())
}

/// Minimizes `sum ||A x + b - y||^2 + lambda ||A||_F^2`.
pub fn ridge_fit(contexts: &[Vec<f64>], targets: &[Vec<f64>], lambda: f64) -> Result<RidgeRegressor> {
    let x = stack(contexts, "ridge contexts")?;
    let y = stack(targets, "ridge targets")?;
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "ridge sample count",
            expected: x.nrows(),
            actual: y.nrows(),
        });
    }
    let x_mean = column_means(&x);
    let y_mean = column_means(&y);
    let mut xc = x;
    let mut yc = y;
    for mut row in xc.row_iter_mut() {
        row -= x_mean.transpose();
    }
    for mut row in yc.row_iter_mut() {
        row -= y_mean.transpose();
    }
    let solver = RidgeSolver::new(&xc, lambda, "ridge regression")?;
    let coef = solver.solve(&yc)?.transpose();
    let intercept = &y_mean - &coef * &x_mean;
    Ok(RidgeRegressor { coef, intercept })
}

impl RidgeRegressor {
    pub fn input_dim(&self) -> usize {
        self.coef.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.coef.nrows()
    }

    pub fn predict(&self, context: &[f64]) -> Result<Vec<f64>> {
        if context.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "ridge input",
                expected: self.input_dim(),
                actual: context.len(),
            });
        }
        let x = DVector::from_column_slice(context);
        Ok((&self.coef * x + &self.intercept).iter().copied().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_affine_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DMatrix::from_fn(4, 3, |_, _| rng.random_range(-1.0..1.0));
        let b = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
        let xs: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let ys: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| (&a * DVector::from_column_slice(x) + &b).iter().copied().collect())
            .collect();
        let fit = ridge_fit(&xs, &ys, 0.0).unwrap();
        assert!((&fit.coef - &a).amax() < 1e-8);
        assert!((&fit.intercept - &b).amax() < 1e-8);
    }

    #[test]
    fn single_sample_is_memorized() {
        let xs = vec![vec![0.3, -0.2]];
        let ys = vec![vec![1.0, 2.0, -3.0]];
        let fit = ridge_fit(&xs, &ys, 1e-3).unwrap();
        assert_eq!(fit.predict(&xs[0]).unwrap(), ys[0]);
        assert!(matches!(
            ridge_fit(&xs, &ys, 0.0),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn huge_ridge_predicts_the_mean() {
        let xs = vec![vec![0.0], vec![1.0], vec![2.0]];
        let ys = vec![vec![1.0], vec![3.0], vec![8.0]];
        let fit = ridge_fit(&xs, &ys, 1e15).unwrap();
        assert!(fit.coef.amax() < 1e-12);
        assert!((fit.intercept[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert!(ridge_fit(&[], &[], 1.0).is_err());
        assert!(ridge_fit(&[vec![1.0], vec![1.0, 2.0]], &[vec![0.0], vec![0.0]], 1.0).is_err());
        assert!(ridge_fit(&[vec![1.0]], &[vec![0.0], vec![0.0]], 1.0).is_err());
        let fit = ridge_fit(&[vec![1.0], vec![2.0]], &[vec![0.0], vec![1.0]], 0.0).unwrap();
        assert!(fit.predict(&[1.0, 2.0]).is_err());
    }
}
