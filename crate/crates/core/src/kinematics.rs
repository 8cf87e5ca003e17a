//! Serial-chain forward kinematics from Denavit-Hartenberg tables.

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::pairwise_mean;
use crate::promp::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DhConvention {
    /// `Rz(theta) Tz(d) Tx(a) Rx(alpha)`
    #[default]
    Standard,
    /// `Rx(alpha) Tx(a) Rz(theta) Tz(d)`
    Modified,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DhLink {
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

impl DhLink {
    fn transform(&self, q: f64, convention: DhConvention) -> Isometry3<f64> {
        let rz = Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q + self.theta_offset),
        );
        let tz = Isometry3::translation(0.0, 0.0, self.d);
        let tx = Isometry3::translation(self.a, 0.0, 0.0);
        let rx = Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha),
        );
        match convention {
            DhConvention::Standard => rz * tz * tx * rx,
            DhConvention::Modified => rx * tx * rz * tz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChainRepr")]
pub struct KinematicChain {
    #[serde(default)]
    pub convention: DhConvention,
    pub links: Vec<DhLink>,
    /// Fixed offset of the reported point, expressed in the last link frame.
    #[serde(default)]
    pub tool: [f64; 3],
}

#[derive(Deserialize)]
struct ChainRepr {
    #[serde(default)]
    convention: DhConvention,
    links: Vec<DhLink>,
    #[serde(default)]
    tool: [f64; 3],
}

impl TryFrom<ChainRepr> for KinematicChain {
    type Error = Error;
    fn try_from(r: ChainRepr) -> Result<Self> {
        KinematicChain::new(r.convention, r.links, r.tool)
    }
}

impl KinematicChain {
    pub fn new(convention: DhConvention, links: Vec<DhLink>, tool: [f64; 3]) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::Empty("kinematic chain"));
        }
        let finite = links
            .iter()
            .all(|l| [l.a, l.d, l.alpha, l.theta_offset].iter().all(|v| v.is_finite()))
            && tool.iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidConfig("kinematic parameters must be finite".into()));
        }
        Ok(Self {
            convention,
            links,
            tool,
        })
    }

    /// A 7-joint arm with the proportions of a common collaborative
    /// manipulator. Stand-in values only: AveED comparisons stay consistent
    /// for any fixed chain.
    pub fn default_seven_dof() -> Self {
        use std::f64::consts::FRAC_PI_2;
        let table = [
            (0.0, 0.333, 0.0),
            (0.0, 0.0, -FRAC_PI_2),
            (0.0, 0.316, FRAC_PI_2),
            (0.0825, 0.0, FRAC_PI_2),
            (-0.0825, 0.384, -FRAC_PI_2),
            (0.0, 0.0, FRAC_PI_2),
            (0.088, 0.0, FRAC_PI_2),
        ];
        let links = table
            .iter()
            .map(|&(a, d, alpha)| DhLink {
                a,
                d,
                alpha,
                theta_offset: 0.0,
            })
            .collect();
        Self::new(DhConvention::Modified, links, [0.0, 0.0, 0.107]).expect("static table is valid")
    }

    pub fn n_joints(&self) -> usize {
        self.links.len()
    }

    pub fn pose(&self, q: &[f64]) -> Result<Isometry3<f64>> {
        if q.len() != self.n_joints() {
            return Err(Error::DimensionMismatch {
                context: "joint configuration",
                expected: self.n_joints(),
                actual: q.len(),
            });
        }
        Ok(self
            .links
            .iter()
            .zip(q)
            .fold(Isometry3::identity(), |acc, (link, &qi)| acc * link.transform(qi, self.convention)))
    }
}

/// End-effector position in meters.
pub fn fk_position(chain: &KinematicChain, q: &[f64]) -> Result<Vector3<f64>> {
    let pose = chain.pose(q)?;
    let tool = Point3::new(chain.tool[0], chain.tool[1], chain.tool[2]);
    Ok((pose * tool).coords)
}

/// Mean distance in millimeters between end-effector positions at the final
/// sample of paired trajectories.
pub fn ave_ed(pred: &[Trajectory], gt: &[Trajectory], chain: &KinematicChain) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::Empty("trajectory list"));
    }
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            context: "trajectory list",
            expected: gt.len(),
            actual: pred.len(),
        });
    }
    let distances = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| final_distance_mm(p, g, chain))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&distances))
}

pub fn final_distance_mm(pred: &Trajectory, gt: &Trajectory, chain: &KinematicChain) -> Result<f64> {
    let a = fk_position(chain, pred.last().as_slice())?;
    let b = fk_position(chain, gt.last().as_slice())?;
    Ok((a - b).norm() * 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::PhaseConfig;
    use nalgebra::{DMatrix, Matrix4};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn one_link() -> KinematicChain {
        KinematicChain::new(
            DhConvention::Standard,
            vec![DhLink {
                a: 1.0,
                ..DhLink::default()
            }],
            [0.0; 3],
        )
        .unwrap()
    }

    fn rot_z(t: f64) -> Matrix4<f64> {
        let (s, c) = t.sin_cos();
        Matrix4::new(c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    }

    fn rot_x(t: f64) -> Matrix4<f64> {
        let (s, c) = t.sin_cos();
        Matrix4::new(1.0, 0.0, 0.0, 0.0, 0.0, c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0)
    }

    fn trans(x: f64, y: f64, z: f64) -> Matrix4<f64> {
        Matrix4::new(1.0, 0.0, 0.0, x, 0.0, 1.0, 0.0, y, 0.0, 0.0, 1.0, z, 0.0, 0.0, 0.0, 1.0)
    }

    fn oracle(chain: &KinematicChain, q: &[f64]) -> [f64; 3] {
        let mut m = Matrix4::identity();
        for (l, &qi) in chain.links.iter().zip(q) {
            let th = qi + l.theta_offset;
            m *= match chain.convention {
                DhConvention::Standard => rot_z(th) * trans(0.0, 0.0, l.d) * trans(l.a, 0.0, 0.0) * rot_x(l.alpha),
                DhConvention::Modified => rot_x(l.alpha) * trans(l.a, 0.0, 0.0) * rot_z(th) * trans(0.0, 0.0, l.d),
            };
        }
        let p = m * nalgebra::Vector4::new(chain.tool[0], chain.tool[1], chain.tool[2], 1.0);
        [p[0], p[1], p[2]]
    }

    #[test]
    fn single_link_examples() {
        let chain = one_link();
        let p0 = fk_position(&chain, &[0.0]).unwrap();
        let p1 = fk_position(&chain, &[FRAC_PI_2]).unwrap();
        assert!((p0 - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-15);
        assert!((p1 - Vector3::new(0.0, 1.0, 0.0)).norm() < 1e-15);
        assert!(((p0 - p1).norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn random_chains_match_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for convention in [DhConvention::Standard, DhConvention::Modified] {
            for _ in 0..50 {
                let links = (0..3)
                    .map(|_| DhLink {
                        a: rng.random_range(-1.0..1.0),
                        d: rng.random_range(-1.0..1.0),
                        alpha: rng.random_range(-3.0..3.0),
                        theta_offset: rng.random_range(-1.0..1.0),
                    })
                    .collect();
                let tool = [rng.random_range(-0.2..0.2), 0.0, rng.random_range(-0.2..0.2)];
                let chain = KinematicChain::new(convention, links, tool).unwrap();
                let q: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
                let got = fk_position(&chain, &q).unwrap();
                let want = oracle(&chain, &q);
                for k in 0..3 {
                    assert!((got[k] - want[k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn default_chain_home_reach() {
        let chain = KinematicChain::default_seven_dof();
        assert_eq!(chain.n_joints(), 7);
        let p = fk_position(&chain, &[0.0; 7]).unwrap();
        // Fully stretched upward configuration.
        assert!((p[0] - 0.088).abs() < 1e-12);
        assert!(p[1].abs() < 1e-12);
        assert!((p[2] - (0.333 + 0.316 + 0.384 - 0.107)).abs() < 1e-12);
    }

    fn traj_ending_at(q: f64) -> Trajectory {
        let phase = PhaseConfig::new(10.0, 3).unwrap();
        Trajectory::new(DMatrix::from_row_slice(3, 1, &[0.3, -0.2, q]), phase).unwrap()
    }

    #[test]
    fn ave_ed_examples() {
        let chain = one_link();
        let a = vec![traj_ending_at(0.0)];
        let b = vec![traj_ending_at(FRAC_PI_2)];
        assert_eq!(ave_ed(&a, &a, &chain).unwrap(), 0.0);
        assert!((ave_ed(&a, &b, &chain).unwrap() - 2f64.sqrt() * 1000.0).abs() < 1e-9);
        assert!(ave_ed(&[], &[], &chain).is_err());
        assert!(ave_ed(&a, &[], &chain).is_err());
        assert!(fk_position(&chain, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn config_round_trip_and_validation() {
        let chain = KinematicChain::default_seven_dof();
        let json = serde_json::to_string(&chain).unwrap();
        let back: KinematicChain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, chain);
        assert!(serde_json::from_str::<KinematicChain>(r#"{"links": []}"#).is_err());
        let minimal: KinematicChain = serde_json::from_str(r#"{"links": [{"a": 1.0}]}"#).unwrap();
        assert_eq!(minimal, one_link());
    }

    proptest! {
        #[test]
        fn fk_is_continuous(q in prop::collection::vec(-3.0f64..3.0, 7), j in 0usize..7) {
            let chain = KinematicChain::default_seven_dof();
            let mut q2 = q.clone();
            q2[j] += 1e-9;
            let d = (fk_position(&chain, &q).unwrap() - fk_position(&chain, &q2).unwrap()).norm();
            prop_assert!(d < 1e-6);
        }

        #[test]
        fn ave_ed_symmetric_nonnegative(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let chain = one_link();
            let x = vec![traj_ending_at(a)];
            let y = vec![traj_ending_at(b)];
            let ab = ave_ed(&x, &y, &chain).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, ave_ed(&y, &x, &chain).unwrap());
        }
    }
}
