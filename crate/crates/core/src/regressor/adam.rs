use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64]) -> Result<()> {
    for (what, len) in [("adam gradients", grads.len()), ("adam moments", state.m.len())] {
        if len != params.len() {
            return Err(Error::DimensionMismatch {
                context: what,
                expected: params.len(),
                actual: len,
            });
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= state.lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = vec![1.0, -2.0, 3.5];
        let mut s = AdamState::new(3, 0.1);
        for _ in 0..10 {
            adam_step(&mut s, &mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.5]);
        assert_eq!(s.step, 10);
    }

    #[test]
    fn constant_gradient_steps_approach_lr() {
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2, 1e-3);
        let mut last = p.clone();
        for _ in 0..2000 {
            last.clone_from(&p);
            adam_step(&mut s, &mut p, &[2.5, -0.01]).unwrap();
        }
        let d0 = p[0] - last[0];
        let d1 = p[1] - last[1];
        assert!((d0 + 1e-3).abs() < 1e-6, "{d0}");
        assert!((d1 - 1e-3).abs() < 1e-6, "{d1}");
    }

    #[test]
    fn quadratic_bowl_converges() {
        let curv = [1.0, 4.0, 0.25, 10.0];
        let mut p = vec![1.0, -2.0, 0.5, 3.0];
        let mut s = AdamState::new(4, 0.05);
        let grad = |p: &[f64]| -> Vec<f64> { p.iter().zip(&curv).map(|(x, a)| a * x).collect() };
        let mut reached = None;
        for k in 0..5000 {
            let g = grad(&p);
            if g.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-6 {
                reached = Some(k);
                break;
            }
            adam_step(&mut s, &mut p, &g).unwrap();
        }
        assert!(reached.is_some(), "final params {p:?}");
    }

    #[test]
    fn shape_mismatch() {
        let mut s = AdamState::new(2, 0.1);
        assert!(adam_step(&mut s, &mut [0.0; 3], &[0.0; 3]).is_err());
        assert!(adam_step(&mut s, &mut [0.0; 2], &[0.0; 3]).is_err());
    }
}
