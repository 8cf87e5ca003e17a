//! Context to weight regressors: closed-form ridge, a small dense network
//! with hand-written backprop, the training losses and Adam.

mod adam;
mod linear;
mod loss;
mod mlp;

pub use adam::{adam_step, AdamState, DEFAULT_LEARNING_RATE};
pub use linear::{ridge_fit, RidgeRegressor};
pub use loss::{loss_ddmp_rtp, loss_ddmp_wpp, loss_trajectory, LossKind, DEFAULT_DDMP_ALPHA};
pub use mlp::{mlp_forward, param_count, Activation, ForwardTrace, MlpParams};

use crate::error::Result;

/// Default hidden layer widths.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Loss at `ctx` and its gradient with respect to every network parameter.
pub fn mlp_backward(params: &MlpParams, ctx: &[f64], loss: &LossKind, target: &[f64]) -> Result<(f64, Vec<f64>)> {
    let trace = params.forward_trace(ctx)?;
    let (value, out_grad) = loss.value_and_grad(trace.output(), target)?;
    let mut grads = vec![0.0; params.n_params()];
    params.backward_into(&trace, &out_grad, &mut grads)?;
    Ok((value, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_phi, BasisConfig, PhaseConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_check(kind: &LossKind, sizes: Vec<usize>, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = MlpParams::init(sizes.clone(), seed).unwrap();
        for p in net.params_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let ctx: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-1.0..1.0)).collect();
        let target: Vec<f64> = (0..*sizes.last().unwrap()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grads) = mlp_backward(&net, &ctx, kind, &target).unwrap();
        let h = 1e-5;
        for (i, &g) in grads.iter().enumerate() {
            let orig = net.params()[i];
            net.params_mut()[i] = orig + h;
            let up = kind.value(&net.forward(&ctx).unwrap(), &target).unwrap();
            net.params_mut()[i] = orig - h;
            let dn = kind.value(&net.forward(&ctx).unwrap(), &target).unwrap();
            net.params_mut()[i] = orig;
            let fd = (up - dn) / (2.0 * h);
            let rel = (fd - g).abs() / fd.abs().max(g.abs()).max(1e-6);
            assert!(rel < 1e-4, "{} param {i}: fd {fd} analytic {g}", kind.name());
        }
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let phase = PhaseConfig::new(20.0, 150).unwrap();
        let phi = build_phi(&phase, &BasisConfig::evenly_spaced(4, &phase).unwrap()).unwrap();
        for seed in 0..5 {
            fd_check(&LossKind::trajectory(&phi, 2), vec![3, 6, 5, 8], seed);
            fd_check(&LossKind::DdmpRtp { alpha: 100.0, n_joints: 2 }, vec![3, 6, 10], seed);
            fd_check(&LossKind::DdmpWpp, vec![2, 7, 4, 12], seed);
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_prediction() {
        let net = MlpParams::init(vec![3, 8, 6], 1).unwrap();
        let ctx = [0.2, -0.1, 0.7];
        let target = net.forward(&ctx).unwrap();
        let (l, g) = mlp_backward(&net, &ctx, &LossKind::DdmpWpp, &target).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }
}
