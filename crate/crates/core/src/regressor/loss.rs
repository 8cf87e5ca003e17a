//! Training losses and their gradients with respect to the network output.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::PhiMatrix;
use crate::error::{Error, Result};
use crate::linalg::rms;

/// Goal-residual weight used for reaching tasks.
pub const DEFAULT_DDMP_ALPHA: f64 = 100.0;

fn check_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context,
            expected,
            actual,
        })
    }
}

/// Trajectory-space RMSE between the curves generated by two weight vectors
/// of one joint, computed by explicit reconstruction.
pub fn loss_trajectory(theta_ps: &DVector<f64>, theta_gt: &DVector<f64>, phi: &PhiMatrix) -> Result<f64> {
    check_len("predicted weights", phi.n_basis(), theta_ps.len())?;
    check_len("ground-truth weights", phi.n_basis(), theta_gt.len())?;
    let gap = phi.apply(theta_gt)? - phi.apply(theta_ps)?;
    Ok(rms(gap.as_slice()))
}

/// `RMS(omega_gt - omega_ps) + alpha * RMS(g_gt - g_ps)` over flat vectors
/// laid out as `[omega (n_joints * n_basis), goal (n_joints)]`.
pub fn loss_ddmp_rtp(pred: &[f64], gt: &[f64], n_joints: usize, alpha: f64) -> Result<f64> {
    check_len("d-DMP target", pred.len(), gt.len())?;
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    if n_joints == 0 || pred.len() <= n_joints {
        return Err(Error::InvalidConfig(format!(
            "parameter vector of length {} cannot hold forcing weights and {n_joints} goals",
            pred.len()
        )));
    }
    let split = pred.len() - n_joints;
    let diff: Vec<f64> = gt.iter().zip(pred).map(|(g, p)| g - p).collect();
    Ok(rms(&diff[..split]) + alpha * rms(&diff[split..]))
}

/// Half the RMS of the concatenated parameter difference.
pub fn loss_ddmp_wpp(pred: &[f64], gt: &[f64]) -> Result<f64> {
    check_len("d-DMP target", pred.len(), gt.len())?;
    if pred.is_empty() {
        return Err(Error::Empty("d-DMP parameters"));
    }
    let diff: Vec<f64> = gt.iter().zip(pred).map(|(g, p)| g - p).collect();
    Ok(0.5 * rms(&diff))
}

/// Loss applied to a flat network output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// Per-joint trajectory RMSE summed over joints. `gram` is `Phi^T Phi / T`.
    Trajectory { gram: DMatrix<f64>, n_joints: usize },
    DdmpRtp { alpha: f64, n_joints: usize },
    DdmpWpp,
}

impl LossKind {
    pub fn trajectory(phi: &PhiMatrix, n_joints: usize) -> Self {
        LossKind::Trajectory {
            gram: phi.scaled_gram(),
            n_joints,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Trajectory { .. } => "trajectory",
            LossKind::DdmpRtp { .. } => "ddmp_rtp",
            LossKind::DdmpWpp => "ddmp_wpp",
        }
    }

    pub fn value(&self, pred: &[f64], target: &[f64]) -> Result<f64> {
        Ok(self.eval(pred, target, false)?.0)
    }

    /// Loss and `d loss / d pred`. Where an RMS term is exactly zero its
    /// gradient is taken as zero.
    pub fn value_and_grad(&self, pred: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.eval(pred, target, true)
    }

    fn eval(&self, pred: &[f64], target: &[f64], with_grad: bool) -> Result<(f64, Vec<f64>)> {
        check_len("loss target", pred.len(), target.len())?;
        let diff: Vec<f64> = target.iter().zip(pred).map(|(g, p)| g - p).collect();
        let mut grad = if with_grad { vec![0.0; pred.len()] } else { Vec::new() };
        match self {
            LossKind::Trajectory { gram, n_joints } => {
                let n = gram.nrows();
                check_len("trajectory loss output", n * n_joints, pred.len())?;
                let mut total = 0.0;
                for j in 0..*n_joints {
                    let d = DVector::from_column_slice(&diff[j * n..(j + 1) * n]);
                    let gd = gram * &d;
                    let loss = d.dot(&gd).max(0.0).sqrt();
                    total += loss;
                    if with_grad && loss > 0.0 {
                        for (g, v) in grad[j * n..(j + 1) * n].iter_mut().zip(gd.iter()) {
                            *g = -v / loss;
                        }
                    }
                }
                Ok((total, grad))
            }
            LossKind::DdmpRtp { alpha, n_joints } => {
                let loss = loss_ddmp_rtp(pred, target, *n_joints, *alpha)?;
                if with_grad {
                    let split = pred.len() - n_joints;
                    rms_grad(&diff[..split], 1.0, &mut grad[..split]);
                    rms_grad(&diff[split..], *alpha, &mut grad[split..]);
                }
                Ok((loss, grad))
            }
            LossKind::DdmpWpp => {
                let loss = loss_ddmp_wpp(pred, target)?;
                if with_grad {
                    rms_grad(&diff, 0.5, &mut grad);
                }
                Ok((loss, grad))
            }
        }
    }
}

/// Gradient of `scale * RMS(target - pred)` with respect to `pred`.
fn rms_grad(diff: &[f64], scale: f64, out: &mut [f64]) {
    let r = rms(diff);
    if r == 0.0 {
        return;
    }
    let k = scale / (diff.len() as f64 * r);
    for (o, d) in out.iter_mut().zip(diff) {
        *o = -k * d;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_phi, BasisConfig, PhaseConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phi(n: usize) -> PhiMatrix {
        let phase = PhaseConfig::new(20.0, 150).unwrap();
        build_phi(&phase, &BasisConfig::evenly_spaced(n, &phase).unwrap()).unwrap()
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn single_basis_unit_gap() {
        let p = phi(1);
        let l = loss_trajectory(&DVector::from_element(1, 0.0), &DVector::from_element(1, 1.0), &p).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_inputs_give_zero_loss_and_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = phi(8);
        let v = random_vec(&mut rng, 8 * 3);
        for kind in [
            LossKind::trajectory(&p, 3),
            LossKind::DdmpRtp { alpha: DEFAULT_DDMP_ALPHA, n_joints: 3 },
            LossKind::DdmpWpp,
        ] {
            let (l, g) = kind.value_and_grad(&v, &v).unwrap();
            assert_eq!(l, 0.0);
            assert!(g.iter().all(|&x| x == 0.0));
        }
        let t = DVector::from_column_slice(&v[..8]);
        assert_eq!(loss_trajectory(&t, &t, &p).unwrap(), 0.0);
    }

    #[test]
    fn gram_form_matches_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = phi(10);
        let kind = LossKind::trajectory(&p, 2);
        for _ in 0..20 {
            let a = random_vec(&mut rng, 20);
            let b = random_vec(&mut rng, 20);
            let expected: f64 = (0..2)
                .map(|j| {
                    let ta = DVector::from_column_slice(&a[j * 10..(j + 1) * 10]);
                    let tb = DVector::from_column_slice(&b[j * 10..(j + 1) * 10]);
                    let qa = p.values() * ta;
                    let qb = p.values() * tb;
                    ((qb - qa).norm_squared() / 150.0).sqrt()
                })
                .sum();
            let got = kind.value(&a, &b).unwrap();
            assert!((got - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn two_basis_symbolic_gradient() {
        let p = phi(2);
        let ps = [0.2, -0.4];
        let gt = [1.0, 0.5];
        let (l, g) = LossKind::trajectory(&p, 1).value_and_grad(&ps, &gt).unwrap();
        let mut sq = 0.0;
        let mut num = [0.0; 2];
        for t in 0..150 {
            let (a, b) = (p.values()[(t, 0)], p.values()[(t, 1)]);
            let gap = a * (gt[0] - ps[0]) + b * (gt[1] - ps[1]);
            sq += gap * gap;
            num[0] += a * gap;
            num[1] += b * gap;
        }
        let loss = (sq / 150.0).sqrt();
        assert!((l - loss).abs() < 1e-14);
        for i in 0..2 {
            let expected = -num[i] / (150.0 * loss);
            assert!((g[i] - expected).abs() < 1e-13, "{} vs {}", g[i], expected);
        }
    }

    #[test]
    fn ddmp_goal_offset_scales_by_alpha() {
        let gt = vec![0.3; 3 * 5 + 3];
        let mut pred = gt.clone();
        for v in &mut pred[15..] {
            *v -= 0.02;
        }
        let l = loss_ddmp_rtp(&pred, &gt, 3, 100.0).unwrap();
        assert!((l - 2.0).abs() < 1e-12);
        assert!(loss_ddmp_rtp(&pred, &gt, 3, 0.0).is_err());
    }

    #[test]
    fn ddmp_wpp_single_slot() {
        let gt = vec![0.0; 27];
        let mut pred = gt.clone();
        pred[26] = 0.9;
        let l = loss_ddmp_wpp(&pred, &gt).unwrap();
        assert!((l - 0.5 * 0.9 / 27f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ddmp_losses_match_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let a = random_vec(&mut rng, 14);
            let b = random_vec(&mut rng, 14);
            let rms_of = |r: std::ops::Range<usize>| {
                let n = r.len() as f64;
                (r.map(|i| (b[i] - a[i]).powi(2)).sum::<f64>() / n).sqrt()
            };
            let rtp = rms_of(0..12) + 7.0 * rms_of(12..14);
            assert!((loss_ddmp_rtp(&a, &b, 2, 7.0).unwrap() - rtp).abs() < 1e-13);
            assert!((loss_ddmp_wpp(&a, &b).unwrap() - 0.5 * rms_of(0..14)).abs() < 1e-14);
        }
    }

    #[test]
    fn output_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = phi(6);
        let kinds = [
            LossKind::trajectory(&p, 2),
            LossKind::DdmpRtp { alpha: 100.0, n_joints: 2 },
            LossKind::DdmpWpp,
        ];
        for kind in &kinds {
            for _ in 0..10 {
                let pred = random_vec(&mut rng, 12);
                let gt = random_vec(&mut rng, 12);
                let (_, g) = kind.value_and_grad(&pred, &gt).unwrap();
                for i in 0..12 {
                    let h = 1e-5;
                    let mut up = pred.clone();
                    up[i] += h;
                    let mut dn = pred.clone();
                    dn[i] -= h;
                    let fd = (kind.value(&up, &gt).unwrap() - kind.value(&dn, &gt).unwrap()) / (2.0 * h);
                    let rel = (fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-6);
                    assert!(rel < 1e-4, "{} {i}: {fd} vs {}", kind.name(), g[i]);
                }
            }
        }
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let p = phi(3);
        assert!(LossKind::trajectory(&p, 2).value(&[0.0; 5], &[0.0; 5]).is_err());
        assert!(LossKind::DdmpWpp.value(&[0.0; 5], &[0.0; 4]).is_err());
        assert!(loss_trajectory(&DVector::zeros(2), &DVector::zeros(3), &p).is_err());
    }

    proptest! {
        #[test]
        fn trajectory_loss_bounded_by_max_weight_gap(
            a in prop::collection::vec(-5.0f64..5.0, 8),
            b in prop::collection::vec(-5.0f64..5.0, 8),
        ) {
            let p = phi(8);
            let ta = DVector::from_vec(a);
            let tb = DVector::from_vec(b);
            let l = loss_trajectory(&ta, &tb, &p).unwrap();
            prop_assert!(l >= 0.0);
            prop_assert!(l <= (&ta - &tb).amax() * (1.0 + 1e-12));
            prop_assert_eq!(loss_trajectory(&ta, &ta, &p).unwrap(), 0.0);
        }

        #[test]
        fn ddmp_losses_nonnegative_and_symmetric(
            a in prop::collection::vec(-5.0f64..5.0, 9),
            b in prop::collection::vec(-5.0f64..5.0, 9),
        ) {
            let r = loss_ddmp_rtp(&a, &b, 3, 100.0).unwrap();
            let w = loss_ddmp_wpp(&a, &b).unwrap();
            prop_assert!(r >= 0.0 && w >= 0.0);
            prop_assert_eq!(r, loss_ddmp_rtp(&b, &a, 3, 100.0).unwrap());
            prop_assert_eq!(w, loss_ddmp_wpp(&b, &a).unwrap());
            if a != b {
                prop_assert!(r > 0.0 && w > 0.0);
            }
        }
    }
}
