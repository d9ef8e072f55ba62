use serde::{Deserialize, Serialize};

use crate::geom::{Aabb, Vec3};

/// Outer footprint edge of the chest body.
pub const CHEST_SIZE: f64 = 0.16;
pub const CHEST_HEIGHT: f64 = 0.1;
pub const WALL: f64 = 0.01;
/// Maximum door travel along +y.
pub const DOOR_MAX: f64 = 0.12;
/// How far the handle keypoint sits in front of the door.
pub const HANDLE_OFFSET: f64 = 0.03;
/// Tip-to-handle distance within which the door follows the tip.
pub const HANDLE_REACH: f64 = 0.03;

/// A chest whose sliding door faces −x and opens along +y.
///
/// `center` is the centre of the chest footprint at table height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chest {
    pub center: Vec3,
    pub door: f64,
    pub max_door: f64,
}

impl Chest {
    pub fn new(center: Vec3) -> Self {
        Chest {
            center,
            door: 0.0,
            max_door: 0.0,
        }
    }

    pub fn body(&self) -> Aabb {
        let h = CHEST_SIZE / 2.0;
        Aabb::new(
            self.center + Vec3::new(-h, -h, 0.0),
            self.center + Vec3::new(h, h, CHEST_HEIGHT),
        )
    }

    fn front_x(&self) -> f64 {
        self.center.x - CHEST_SIZE / 2.0
    }

    /// Door slab at displacement `d`.
    pub fn door_box_at(&self, d: f64) -> Aabb {
        let h = CHEST_SIZE / 2.0;
        let c = self.center;
        Aabb::new(
            Vec3::new(self.front_x(), c.y - h + d, c.z),
            Vec3::new(self.front_x() + WALL, c.y + h + d, c.z + CHEST_HEIGHT),
        )
    }

    pub fn door_box(&self) -> Aabb {
        self.door_box_at(self.door)
    }

    /// Fixed walls: back, two sides, lid.
    pub fn walls(&self) -> [Aabb; 4] {
        let h = CHEST_SIZE / 2.0;
        let c = self.center;
        let x0 = self.front_x() + WALL;
        let x1 = c.x + h;
        let top = c.z + CHEST_HEIGHT;
        [
            Aabb::new(
                Vec3::new(x1 - WALL, c.y - h, c.z),
                Vec3::new(x1, c.y + h, top - WALL),
            ),
            Aabb::new(
                Vec3::new(x0, c.y - h, c.z),
                Vec3::new(x1 - WALL, c.y - h + WALL, top - WALL),
            ),
            Aabb::new(
                Vec3::new(x0, c.y + h - WALL, c.z),
                Vec3::new(x1 - WALL, c.y + h, top - WALL),
            ),
            Aabb::new(
                Vec3::new(x0, c.y - h, top - WALL),
                Vec3::new(x1, c.y + h, top),
            ),
        ]
    }

    /// Every solid part of the chest at door displacement `d`.
    pub fn solids_at(&self, d: f64) -> Vec<Aabb> {
        let mut v = self.walls().to_vec();
        v.push(self.door_box_at(d));
        v
    }

    pub fn solids(&self) -> Vec<Aabb> {
        self.solids_at(self.door)
    }

    pub fn handle(&self) -> Vec3 {
        Vec3::new(
            self.front_x() - HANDLE_OFFSET,
            self.center.y + self.door,
            self.center.z + CHEST_HEIGHT / 2.0,
        )
    }

    /// The two vertical door edges, at mid height.
    pub fn edges(&self) -> [Vec3; 2] {
        let h = CHEST_SIZE / 2.0;
        let z = self.center.z + CHEST_HEIGHT / 2.0;
        [
            Vec3::new(self.front_x(), self.center.y - h + self.door, z),
            Vec3::new(self.front_x(), self.center.y + h + self.door, z),
        ]
    }

    /// Placement target for a block inside the chest.
    pub fn target(&self, block_half_height: f64) -> Vec3 {
        Vec3::new(
            self.center.x,
            self.center.y,
            self.center.z + block_half_height,
        )
    }

    /// Ten-value state: handle and edge keypoints followed by displacement.
    pub fn state(&self) -> [f64; 10] {
        let h = self.handle();
        let [a, b] = self.edges();
        [h.x, h.y, h.z, a.x, a.y, a.z, b.x, b.y, b.z, self.door]
    }

    /// Door displacement after the tip at `tip` moves by `delta`.
    ///
    /// The door follows the y motion of a tip within reach of the handle and
    /// is clamped to its travel; otherwise it does not move.
    pub fn dragged(&self, tip: Vec3, delta: Vec3) -> f64 {
        if tip.distance(self.handle()) <= HANDLE_REACH {
            (self.door + delta.y).clamp(0.0, DOOR_MAX)
        } else {
            self.door
        }
    }

    pub fn set_door(&mut self, d: f64) {
        self.door = d.clamp(0.0, DOOR_MAX);
        self.max_door = self.max_door.max(self.door);
    }
}

/// Door displacement after a tip move, as a free function over a chest.
pub fn update_chest(chest: &Chest, tip: Vec3, delta: Vec3) -> f64 {
    chest.dragged(tip, delta)
}
