//! Quasi-static block world: a gripper, cubes, a sliding puck and a chest.
//!
//! One call to [`step_world`] advances one control step. The gripper moves in
//! a few substeps; blocks it runs into are shoved along the horizontal motion
//! direction until they just touch. Nothing rotates. Only pucks keep momentum,
//! decelerating under Coulomb friction once released.

pub mod chest;
pub mod contact;
pub mod grasp;
pub mod settle;
pub mod sliding;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Aabb, Pose, Vec3, Workspace, TABLE_CENTRE};
use crate::kinematics::{clamp_to_limits, JointConfig, KukaChain, NUM_JOINTS};

pub use chest::{update_chest, Chest, DOOR_MAX};
pub use contact::resolve_push;
pub use grasp::{finger_target, update_grasp, Grasp, BLOCKED_WIDTH, FINGER_MAX};
pub use settle::settle_block;
pub use sliding::integrate_sliding;

pub const BLOCK_EDGE: f64 = 0.05;
pub const PUCK_RADIUS: f64 = 0.025;
pub const PUCK_HEIGHT: f64 = 0.03;
/// Largest per-step displacement (tip metres or joint radians).
pub const MAX_DELTA: f64 = 0.05;

const FINGER_HALF_DEPTH: f64 = 0.01;
const FINGER_THICKNESS: f64 = 0.01;
const FINGER_LENGTH: f64 = 0.05;
const PALM_HEIGHT: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Cube,
    Puck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub pose: Pose,
    pub velocity: Vec3,
    pub angular_velocity: Vec3,
    pub shape: Shape,
}

impl Block {
    pub fn cube(position: Vec3) -> Self {
        Block {
            pose: Pose::from_position(position),
            velocity: Vec3::ZERO,
            angular_velocity: Vec3::ZERO,
            shape: Shape::Cube,
        }
    }

    pub fn puck(position: Vec3) -> Self {
        Block {
            shape: Shape::Puck,
            ..Block::cube(position)
        }
    }

    pub fn position(&self) -> Vec3 {
        self.pose.position
    }

    pub fn half_extents(&self) -> Vec3 {
        match self.shape {
            Shape::Cube => Vec3::new(BLOCK_EDGE / 2.0, BLOCK_EDGE / 2.0, BLOCK_EDGE / 2.0),
            Shape::Puck => Vec3::new(PUCK_RADIUS, PUCK_RADIUS, PUCK_HEIGHT / 2.0),
        }
    }

    pub fn aabb_at(&self, center: Vec3) -> Aabb {
        Aabb::from_center(center, self.half_extents())
    }

    pub fn aabb(&self) -> Aabb {
        self.aabb_at(self.position())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gripper {
    pub tip: Pose,
    pub velocity: Vec3,
    pub finger_width: f64,
    pub finger_velocity: f64,
    /// Present iff the world is driven in joint space.
    pub joints: Option<JointConfig>,
}

/// Collision boxes of the two fingers and the palm for a tip at `tip`.
///
/// The tip is the fingertip point; fingers extend upward from it and sit
/// `width / 2` either side of it along y.
pub fn gripper_boxes(tip: Vec3, width: f64) -> [Aabb; 3] {
    let hw = width / 2.0;
    let top = tip.z + FINGER_LENGTH;
    let x0 = tip.x - FINGER_HALF_DEPTH;
    let x1 = tip.x + FINGER_HALF_DEPTH;
    [
        Aabb::new(
            Vec3::new(x0, tip.y + hw, tip.z),
            Vec3::new(x1, tip.y + hw + FINGER_THICKNESS, top),
        ),
        Aabb::new(
            Vec3::new(x0, tip.y - hw - FINGER_THICKNESS, tip.z),
            Vec3::new(x1, tip.y - hw, top),
        ),
        Aabb::new(
            Vec3::new(x0, tip.y - hw - FINGER_THICKNESS, top),
            Vec3::new(x1, tip.y + hw + FINGER_THICKNESS, top + PALM_HEIGHT),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub gripper: Gripper,
    pub blocks: Vec<Block>,
    pub grasp: Option<Grasp>,
    pub chest: Option<Chest>,
    pub time: u64,
}

impl WorldState {
    pub fn new(tip: Vec3, finger_width: f64) -> Self {
        WorldState {
            gripper: Gripper {
                tip: Pose::pointing_down(tip),
                velocity: Vec3::ZERO,
                finger_width,
                finger_velocity: 0.0,
                joints: None,
            },
            blocks: Vec::new(),
            grasp: None,
            chest: None,
            time: 0,
        }
    }

    pub fn tip(&self) -> Vec3 {
        self.gripper.tip.position
    }

    pub fn grasped_index(&self) -> Option<usize> {
        self.grasp.map(|g| g.block)
    }

    pub fn statics(&self) -> Vec<Aabb> {
        self.chest.map(|c| c.solids()).unwrap_or_default()
    }

    pub fn gripper_boxes(&self) -> [Aabb; 3] {
        gripper_boxes(self.tip(), self.gripper.finger_width)
    }

    /// Deepest block-block or block-chest interpenetration.
    pub fn max_penetration(&self) -> f64 {
        let statics = self.statics();
        let mut worst: f64 = 0.0;
        for (i, a) in self.blocks.iter().enumerate() {
            let ab = a.aabb();
            for b in &self.blocks[i + 1..] {
                worst = worst.max(ab.penetration(&b.aabb()));
            }
            for s in &statics {
                worst = worst.max(ab.penetration(s));
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    /// Tip displacement in metres.
    Cartesian(Vec3),
    /// Joint increments in radians.
    Joint([f64; NUM_JOINTS]),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GripperCommand {
    pub motion: Motion,
    /// Commanded finger width; `None` leaves the fingers where they are.
    pub finger_target: Option<f64>,
}

impl GripperCommand {
    pub fn cartesian(delta: Vec3) -> Self {
        GripperCommand {
            motion: Motion::Cartesian(delta),
            finger_target: None,
        }
    }

    pub fn with_fingers(mut self, width: f64) -> Self {
        self.finger_target = Some(width);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub workspace: Workspace,
    pub table_z: f64,
    pub dt: f64,
    pub friction: f64,
    pub gravity: f64,
    pub substeps: usize,
    pub chain: KukaChain,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            workspace: Workspace::default(),
            table_z: TABLE_CENTRE.z,
            dt: 0.05,
            friction: 0.2,
            gravity: 9.81,
            substeps: 10,
            chain: KukaChain::default(),
        }
    }
}

fn validate(cmd: &GripperCommand) -> Result<()> {
    let vals: Vec<f64> = match cmd.motion {
        Motion::Cartesian(d) => d.to_array().to_vec(),
        Motion::Joint(q) => q.to_vec(),
    };
    if vals.iter().any(|v| !v.is_finite()) || cmd.finger_target.is_some_and(|f| !f.is_finite()) {
        return Err(Error::InvalidAction("non-finite command".into()));
    }
    if vals.iter().any(|v| v.abs() > MAX_DELTA + 1e-12) {
        return Err(Error::InvalidAction(format!(
            "command component exceeds {MAX_DELTA}"
        )));
    }
    Ok(())
}

/// Advances the world by one control step.
pub fn step_world(w: &WorldState, cmd: &GripperCommand, p: &SimParams) -> Result<WorldState> {
    validate(cmd)?;
    let mut s = w.clone();
    let n = s.blocks.len();
    let start: Vec<Vec3> = s.blocks.iter().map(|b| b.position()).collect();
    let tip_start = s.tip();
    let width_start = s.gripper.finger_width;
    let q_start = s.gripper.joints.map(|j| j.q);
    let mut pushed = vec![false; n];
    let steps = p.substeps.max(1);

    match cmd.motion {
        Motion::Cartesian(d) => {
            let target = p.workspace.clamp(tip_start + d);
            let total = target - tip_start;
            if total != Vec3::ZERO {
                for k in 1..=steps {
                    let waypoint = if k == steps {
                        target
                    } else {
                        tip_start + total * (k as f64 / steps as f64)
                    };
                    let delta = waypoint - s.tip();
                    if !try_move(&mut s, delta, p, &mut pushed) {
                        for axis in 0..3 {
                            let mut part = Vec3::ZERO;
                            match axis {
                                0 => part.x = delta.x,
                                1 => part.y = delta.y,
                                _ => part.z = delta.z,
                            }
                            if part != Vec3::ZERO {
                                try_move(&mut s, part, p, &mut pushed);
                            }
                        }
                    }
                }
            }
        }
        Motion::Joint(dq) => {
            let Some(q0) = q_start else {
                return Err(Error::InvalidAction(
                    "joint command on a gripper-frame world".into(),
                ));
            };
            let mut raw = q0;
            for (a, d) in raw.iter_mut().zip(dq) {
                *a += d;
            }
            let q_target = clamp_to_limits(&raw);
            if q_target != q0 {
                for k in 1..=steps {
                    let qk: [f64; NUM_JOINTS] = if k == steps {
                        q_target
                    } else {
                        let f = k as f64 / steps as f64;
                        std::array::from_fn(|j| q0[j] + (q_target[j] - q0[j]) * f)
                    };
                    let tk = p.chain.tip_position(&qk);
                    if tk.z < p.table_z - 1e-12 {
                        break;
                    }
                    let delta = tk - s.tip();
                    if !try_move(&mut s, delta, p, &mut pushed) {
                        break;
                    }
                    s.gripper.tip = p.chain.fk_unchecked(&qk);
                    if let Some(j) = s.gripper.joints.as_mut() {
                        j.q = qk;
                    }
                }
            }
        }
    }

    if let Some(t) = cmd.finger_target {
        let (width, grasp) = update_grasp(s.tip(), width_start, t, &s.blocks, s.grasp);
        s.gripper.finger_width = width;
        s.grasp = grasp;
    }
    let grasped = s.grasped_index();

    let statics = s.statics();
    let gboxes = s.gripper_boxes();
    for i in 0..n {
        if s.blocks[i].shape != Shape::Puck || pushed[i] || grasped == Some(i) {
            continue;
        }
        let v = s.blocks[i].velocity.horizontal();
        let speed = v.norm();
        if speed == 0.0 {
            continue;
        }
        let dir = v / speed;
        let (v_next, travel) = integrate_sliding(speed, p.friction, p.gravity, p.dt);
        let moved = s.blocks[i].aabb().translated(dir * travel);
        let hit = s
            .blocks
            .iter()
            .enumerate()
            .any(|(j, b)| j != i && b.aabb().overlaps(&moved))
            || statics
                .iter()
                .chain(gboxes.iter())
                .any(|o| o.overlaps(&moved));
        if hit {
            s.blocks[i].velocity = Vec3::ZERO;
        } else {
            s.blocks[i].pose.position += dir * travel;
            s.blocks[i].velocity = dir * v_next;
        }
    }

    let mut order: Vec<usize> = (0..n).filter(|&i| grasped != Some(i)).collect();
    order.sort_by(|&a, &b| {
        let za = s.blocks[a].aabb().min.z;
        let zb = s.blocks[b].aabb().min.z;
        za.total_cmp(&zb).then(a.cmp(&b))
    });
    for i in order {
        let rest = settle_block(&s.blocks, &statics, p.table_z, i);
        s.blocks[i].pose.position = rest;
    }

    for i in 0..n {
        let b = &mut s.blocks[i];
        let moved = b.position() - start[i];
        b.angular_velocity = Vec3::ZERO;
        if b.shape == Shape::Puck && grasped != Some(i) {
            if pushed[i] {
                b.velocity = moved.horizontal() / p.dt;
            }
        } else {
            b.velocity = moved / p.dt;
        }
    }
    s.gripper.velocity = (s.tip() - tip_start) / p.dt;
    s.gripper.finger_velocity = (s.gripper.finger_width - width_start) / p.dt;
    if let (Some(q0), Some(j)) = (q_start, s.gripper.joints.as_mut()) {
        for k in 0..NUM_JOINTS {
            j.qd[k] = (j.q[k] - q0[k]) / p.dt;
        }
    }
    s.time += 1;
    Ok(s)
}

/// Moves the tip by `delta`, shoving blocks out of the way.
///
/// Either the whole move succeeds and is committed, or nothing changes and
/// `false` is returned. Gripper-object pairs that already interpenetrate at
/// the start of the move do not constrain it.
fn try_move(s: &mut WorldState, delta: Vec3, p: &SimParams, pushed: &mut [bool]) -> bool {
    use contact::{is_vertical_contact, separation_along};

    if delta == Vec3::ZERO {
        return true;
    }
    let n = s.blocks.len();
    let tip0 = s.tip();
    let tip1 = tip0 + delta;
    let width = s.gripper.finger_width;
    let grasp = s.grasp;
    let held = grasp.map(|g| g.block);
    let base: Vec<Aabb> = s.blocks.iter().map(|b| b.aabb()).collect();

    let door_new = s.chest.map(|c| {
        let d = c.dragged(tip0, delta);
        let door = c.door_box_at(d);
        let clash = (0..n).any(|i| held != Some(i) && door.overlaps(&base[i]));
        if d != c.door && clash {
            c.door
        } else {
            d
        }
    });
    let statics_old = s.statics();
    let statics_new = match (s.chest, door_new) {
        (Some(c), Some(d)) => c.solids_at(d),
        _ => Vec::new(),
    };

    let mut pushers_old = gripper_boxes(tip0, width).to_vec();
    let mut pushers_new = gripper_boxes(tip1, width).to_vec();
    if let Some(g) = grasp {
        let b = &s.blocks[g.block];
        let carried = b.aabb_at(tip1 + g.offset);
        if carried.min.z < p.table_z - 1e-12 {
            return false;
        }
        pushers_old.push(base[g.block]);
        pushers_new.push(carried);
    }
    for (po, pn) in pushers_old.iter().zip(&pushers_new) {
        for (so, sn) in statics_old.iter().zip(&statics_new) {
            if pn.overlaps(sn) && !po.overlaps(so) {
                return false;
            }
        }
    }

    let h = delta.horizontal();
    let hn = h.norm();
    let u = if hn > 0.0 { h / hn } else { Vec3::ZERO };
    let free: Vec<bool> = (0..n).map(|i| held != Some(i)).collect();
    let supports: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            if !free[i] {
                return Vec::new();
            }
            (0..n)
                .filter(|&j| {
                    j != i
                        && free[j]
                        && (base[i].min.z - base[j].max.z).abs() <= 1e-9
                        && base[i].footprint_overlaps(&base[j])
                })
                .collect()
        })
        .collect();
    let ignore: Vec<Vec<bool>> = pushers_old
        .iter()
        .map(|po| base.iter().map(|b| po.overlaps(b)).collect())
        .collect();

    let mut disp = vec![0.0f64; n];
    let mut settled = false;
    for _ in 0..64 {
        let mut changed = false;
        for i in 0..n {
            if !free[i] {
                continue;
            }
            let bi = base[i].translated(u * disp[i]);
            let mut need = disp[i];
            for (k, pn) in pushers_new.iter().enumerate() {
                if ignore[k][i] || !pn.overlaps(&bi) {
                    continue;
                }
                if hn == 0.0 || is_vertical_contact(pn, &bi) {
                    return false;
                }
                need = need.max(disp[i] + separation_along(pn, &bi, u));
            }
            for j in 0..n {
                if j == i || !free[j] {
                    continue;
                }
                let bj = base[j].translated(u * disp[j]);
                if !bj.overlaps(&bi) {
                    continue;
                }
                if hn == 0.0 || is_vertical_contact(&bj, &bi) {
                    return false;
                }
                let (ci, cj) = (bi.center().dot(u), bj.center().dot(u));
                if ci > cj || (ci == cj && i > j) {
                    need = need.max(disp[i] + separation_along(&bj, &bi, u));
                }
            }
            for &j in &supports[i] {
                need = need.max(disp[j]);
            }
            if need > disp[i] {
                disp[i] = need;
                changed = true;
            }
        }
        if !changed {
            settled = true;
            break;
        }
    }
    if !settled {
        return false;
    }

    let finals: Vec<Aabb> = (0..n)
        .map(|i| match grasp {
            Some(g) if g.block == i => pushers_new[pushers_new.len() - 1],
            _ => base[i].translated(u * disp[i]),
        })
        .collect();
    for i in 0..n {
        for j in i + 1..n {
            if finals[i].overlaps(&finals[j]) {
                return false;
            }
        }
        if free[i] {
            if statics_new.iter().any(|st| st.overlaps(&finals[i])) {
                return false;
            }
            for (k, pn) in pushers_new.iter().enumerate() {
                if !ignore[k][i] && pn.overlaps(&finals[i]) {
                    return false;
                }
            }
        }
    }

    s.gripper.tip.position = tip1;
    if let (Some(c), Some(d)) = (s.chest.as_mut(), door_new) {
        c.set_door(d);
    }
    for i in 0..n {
        if free[i] && disp[i] > 0.0 {
            s.blocks[i].pose.position += u * disp[i];
            pushed[i] = true;
        }
    }
    if let Some(g) = grasp {
        s.blocks[g.block].pose.position = tip1 + g.offset;
    }
    true
}
