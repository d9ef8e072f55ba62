//! Fixed 7-joint serial chain used for joint-space control.
//!
//! Standard DH convention, `A_i = Rz(θ_i + offset_i) · Tz(d_i) · Tx(a_i) · Rx(α_i)`.
//! The base transform is chosen so that the zero configuration places the
//! tip at the table centre, pointing down.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Pose, Vec3, TABLE_CENTRE};

pub const NUM_JOINTS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DhLink {
    pub a: f64,
    pub alpha: f64,
    pub d: f64,
    pub theta_offset: f64,
}

const fn link(a: f64, alpha: f64, d: f64, theta_offset: f64) -> DhLink {
    DhLink {
        a,
        alpha,
        d,
        theta_offset,
    }
}

/// IIWA-like layout, link lengths summing to 1.2 m, bent at the elbow in the
/// home configuration.
pub const DH_TABLE: [DhLink; NUM_JOINTS] = [
    link(0.0, -FRAC_PI_2, 0.34, 0.0),
    link(0.0, FRAC_PI_2, 0.0, 0.6),
    link(0.0, FRAC_PI_2, 0.40, 0.0),
    link(0.0, -FRAC_PI_2, 0.0, -1.4),
    link(0.0, -FRAC_PI_2, 0.38, 0.0),
    link(0.0, FRAC_PI_2, 0.0, 0.8),
    link(0.0, 0.0, 0.08, 0.0),
];

/// Symmetric joint limits (radians).
pub const JOINT_LIMITS: [f64; NUM_JOINTS] = [2.9, 2.0, 2.9, 2.0, 2.9, 2.0, 2.9];

/// Sum of the chain's link lengths; bounds how far the tip moves per radian.
pub fn total_link_length() -> f64 {
    DH_TABLE.iter().map(|l| l.a.abs() + l.d.abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointConfig {
    pub q: [f64; NUM_JOINTS],
    pub qd: [f64; NUM_JOINTS],
}

impl JointConfig {
    pub fn at(q: [f64; NUM_JOINTS]) -> Self {
        JointConfig {
            q,
            qd: [0.0; NUM_JOINTS],
        }
    }

    pub fn within_limits(&self) -> bool {
        within_limits(&self.q)
    }
}

pub fn within_limits(q: &[f64; NUM_JOINTS]) -> bool {
    q.iter()
        .zip(JOINT_LIMITS)
        .all(|(&a, lim)| a.is_finite() && a.abs() <= lim + 1e-12)
}

pub fn clamp_to_limits(q: &[f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
    let mut out = *q;
    for (a, lim) in out.iter_mut().zip(JOINT_LIMITS) {
        *a = a.clamp(-lim, lim);
    }
    out
}

fn dh_transform(l: &DhLink, q: f64) -> Isometry3<f64> {
    let rz = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q + l.theta_offset);
    let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), l.alpha);
    Isometry3::from_parts(Translation3::identity(), rz)
        * Isometry3::translation(0.0, 0.0, l.d)
        * Isometry3::translation(l.a, 0.0, 0.0)
        * Isometry3::from_parts(Translation3::identity(), rx)
}

fn chain_product(q: &[f64; NUM_JOINTS]) -> Isometry3<f64> {
    DH_TABLE
        .iter()
        .zip(q)
        .fold(Isometry3::identity(), |acc, (l, &qi)| {
            acc * dh_transform(l, qi)
        })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KukaChain {
    base: Isometry3<f64>,
}

impl Default for KukaChain {
    fn default() -> Self {
        KukaChain::with_home(TABLE_CENTRE)
    }
}

impl KukaChain {
    /// Chain whose zero configuration puts the tip at `home`, pointing down.
    pub fn with_home(home: Vec3) -> Self {
        let down = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI);
        let target = Isometry3::from_parts(Translation3::new(home.x, home.y, home.z), down);
        let base = target * chain_product(&[0.0; NUM_JOINTS]).inverse();
        KukaChain { base }
    }

    pub fn base(&self) -> Isometry3<f64> {
        self.base
    }

    /// Tip transform without limit checks; periodic in every joint angle.
    pub fn transform(&self, q: &[f64; NUM_JOINTS]) -> Isometry3<f64> {
        self.base * chain_product(q)
    }

    pub fn fk_unchecked(&self, q: &[f64; NUM_JOINTS]) -> Pose {
        iso_to_pose(&self.transform(q))
    }

    pub fn tip_position(&self, q: &[f64; NUM_JOINTS]) -> Vec3 {
        let t = self.transform(q).translation.vector;
        Vec3::new(t.x, t.y, t.z)
    }

    /// Tip pose for `q`; rejects configurations outside the joint limits.
    pub fn fk(&self, q: &JointConfig) -> Result<Pose> {
        for (j, (&a, lim)) in q.q.iter().zip(JOINT_LIMITS).enumerate() {
            if !a.is_finite() || a.abs() > lim + 1e-12 {
                return Err(Error::JointLimit {
                    joint: j,
                    angle: a,
                    limit: lim,
                });
            }
        }
        Ok(self.fk_unchecked(&q.q))
    }

    /// Damped least-squares position solve, used once to find start
    /// configurations for tasks whose tip does not begin at the home pose.
    pub fn solve_position(&self, target: Vec3, seed: [f64; NUM_JOINTS]) -> [f64; NUM_JOINTS] {
        let mut q = seed;
        let lambda2 = 1e-4;
        for _ in 0..200 {
            let p = self.tip_position(&q);
            let err = target - p;
            if err.norm() < 1e-12 {
                break;
            }
            let mut jac = [[0.0; NUM_JOINTS]; 3];
            let h = 1e-7;
            for j in 0..NUM_JOINTS {
                let mut qp = q;
                let mut qm = q;
                qp[j] += h;
                qm[j] -= h;
                let dp = (self.tip_position(&qp) - self.tip_position(&qm)) / (2.0 * h);
                jac[0][j] = dp.x;
                jac[1][j] = dp.y;
                jac[2][j] = dp.z;
            }
            // dq = Jᵀ (J Jᵀ + λ² I)⁻¹ e
            let jjt = nalgebra::Matrix3::from_fn(|r, c| {
                (0..NUM_JOINTS).map(|k| jac[r][k] * jac[c][k]).sum::<f64>()
                    + if r == c { lambda2 } else { 0.0 }
            });
            let Some(inv) = jjt.try_inverse() else { break };
            let y = inv * Vector3::new(err.x, err.y, err.z);
            for (j, qj) in q.iter_mut().enumerate() {
                *qj += jac[0][j] * y.x + jac[1][j] * y.y + jac[2][j] * y.z;
            }
            q = clamp_to_limits(&q);
        }
        q
    }
}

fn iso_to_pose(iso: &Isometry3<f64>) -> Pose {
    let t = iso.translation.vector;
    let (roll, pitch, yaw) = iso.rotation.euler_angles();
    Pose::new(Vec3::new(t.x, t.y, t.z), roll, pitch, yaw)
}
