//! Small vector, pose and box primitives shared by the simulator and renderer.
//!
//! World frame: +z up, table surface at [`TABLE_CENTRE`].z, the robot base on
//! the +x side of the table. Lengths in metres, angles in radians.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Div, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Centre of the table surface in the world frame.
pub const TABLE_CENTRE: Vec3 = Vec3::new(-0.6, 0.0, 0.2);

/// Contacts shallower than this are treated as touching, not overlapping.
pub const CONTACT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Vec3::new(s[0], s[1], s[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn norm_inf(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn normalized(self) -> Vec3 {
        self / self.norm()
    }

    /// Horizontal (x-y) part with z zeroed.
    pub fn horizontal(self) -> Vec3 {
        Vec3::new(self.x, self.y, 0.0)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn component_min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn component_max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    // rem_euclid maps −π to π already; guard the symmetric rounding case
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Position plus roll/pitch/yaw orientation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec3,
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn new(position: Vec3, roll: f64, pitch: f64, yaw: f64) -> Self {
        Pose {
            position,
            roll: wrap_angle(roll),
            pitch: wrap_angle(pitch),
            yaw: wrap_angle(yaw),
        }
    }

    pub fn from_position(position: Vec3) -> Self {
        Pose::new(position, 0.0, 0.0, 0.0)
    }

    /// Tip orientation used in gripper-frame control: z axis pointing down.
    pub fn pointing_down(position: Vec3) -> Self {
        Pose::new(position, PI, 0.0, 0.0)
    }

    pub fn euler(&self) -> Vec3 {
        Vec3::new(self.roll, self.pitch, self.yaw)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Aabb { min, max }
    }

    pub fn from_center(center: Vec3, half: Vec3) -> Self {
        Aabb::new(center - half, center + half)
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn half_extents(&self) -> Vec3 {
        (self.max - self.min) * 0.5
    }

    pub fn translated(&self, d: Vec3) -> Aabb {
        Aabb::new(self.min + d, self.max + d)
    }

    /// Per-axis interval overlap; positive on every axis iff the boxes interpenetrate.
    pub fn overlap_depths(&self, o: &Aabb) -> Vec3 {
        Vec3::new(
            self.max.x.min(o.max.x) - self.min.x.max(o.min.x),
            self.max.y.min(o.max.y) - self.min.y.max(o.min.y),
            self.max.z.min(o.max.z) - self.min.z.max(o.min.z),
        )
    }

    pub fn overlaps(&self, o: &Aabb) -> bool {
        let d = self.overlap_depths(o);
        d.x > CONTACT_EPS && d.y > CONTACT_EPS && d.z > CONTACT_EPS
    }

    /// Penetration depth (smallest axis overlap), zero when separated or touching.
    pub fn penetration(&self, o: &Aabb) -> f64 {
        let d = self.overlap_depths(o);
        d.x.min(d.y).min(d.z).max(0.0)
    }

    /// Whether the x-y footprints interpenetrate.
    pub fn footprint_overlaps(&self, o: &Aabb) -> bool {
        let d = self.overlap_depths(o);
        d.x > CONTACT_EPS && d.y > CONTACT_EPS
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

/// Box the gripper tip is confined to under gripper-frame control.
///
/// Length runs along x, width along y; the box sits on the table surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Workspace {
    pub center: Vec3,
}

impl Workspace {
    pub const LENGTH: f64 = 0.4;
    pub const WIDTH: f64 = 0.3;
    pub const HEIGHT: f64 = 0.375;

    pub fn new(center: Vec3) -> Self {
        Workspace { center }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::new(
            Vec3::new(
                self.center.x - Self::LENGTH / 2.0,
                self.center.y - Self::WIDTH / 2.0,
                self.center.z,
            ),
            Vec3::new(
                self.center.x + Self::LENGTH / 2.0,
                self.center.y + Self::WIDTH / 2.0,
                self.center.z + Self::HEIGHT,
            ),
        )
    }

    pub fn clamp(&self, p: Vec3) -> Vec3 {
        let b = self.bounds();
        Vec3::new(
            p.x.clamp(b.min.x, b.max.x),
            p.y.clamp(b.min.y, b.max.y),
            p.z.clamp(b.min.z, b.max.z),
        )
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.bounds().contains(p)
    }
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace::new(TABLE_CENTRE)
    }
}

/// Component-wise clamp of `p` into the default workspace box.
pub fn clamp_workspace(p: Vec3) -> Vec3 {
    Workspace::default().clamp(p)
}
