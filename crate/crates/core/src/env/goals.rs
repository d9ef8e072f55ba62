use rand::seq::SliceRandom;
use rand::Rng;

use super::Task;
use crate::error::{Error, Result};
use crate::geom::{Vec3, TABLE_CENTRE};
use crate::kinematics::JointConfig;
use crate::sim::{
    Block, Chest, SimParams, WorldState, BLOCKED_WIDTH, BLOCK_EDGE, DOOR_MAX, FINGER_MAX,
    PUCK_HEIGHT,
};

/// Minimum distance between a freshly sampled target and any other target
/// or current block centre.
pub const MIN_SEPARATION: f64 = 0.06;
pub const SAMPLING_TRIES: usize = 10_000;
const PLACEMENT_TRIES: usize = 200;
/// Door openness asked for by chest-task goals.
pub const DESIRED_OPENNESS: f64 = DOOR_MAX;
/// Half width of the square holding blocks and targets of the chest-free
/// multi-step tasks, centred on the initial tip.
pub const SQUARE_HALF: f64 = 0.15;
/// Raised start height of the tip for picking tasks.
pub const RAISED_TIP: f64 = 0.075;
/// Offset of the chest centre from the table centre along x.
pub const CHEST_OFFSET_X: f64 = 0.18;
pub const CHEST_LINE_HALF: f64 = 0.015;
/// Chest tasks: block rectangle centred 0.05 toward the base, 0.04 long
/// (x) and 0.3 wide (y).
pub const CHEST_BLOCK_OFFSET: f64 = 0.05;
pub const CHEST_BLOCK_HALF_X: f64 = 0.02;
pub const CHEST_BLOCK_HALF_Y: f64 = 0.15;

const HALF_EDGE: f64 = BLOCK_EDGE / 2.0;

fn check_dims(a: &[f64], d: &[f64]) -> Result<()> {
    if a.len() != d.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: a.len(),
        });
    }
    Ok(())
}

/// Euclidean distance between two goal vectors.
pub fn goal_distance(achieved: &[f64], desired: &[f64]) -> Result<f64> {
    check_dims(achieved, desired)?;
    Ok(achieved
        .iter()
        .zip(desired)
        .map(|(a, d)| (a - d) * (a - d))
        .sum::<f64>()
        .sqrt())
}

/// Sparse reward (0 within `delta`, −1 otherwise) or dense reward (negative
/// distance).
pub fn compute_reward(achieved: &[f64], desired: &[f64], delta: f64, binary: bool) -> Result<f64> {
    let dist = goal_distance(achieved, desired)?;
    Ok(if binary {
        if dist <= delta {
            0.0
        } else {
            -1.0
        }
    } else {
        -dist
    })
}

/// Whether `achieved` is within `delta` of `desired`, either as a whole
/// vector or, with `per_block`, chunk by chunk (three coordinates per block,
/// a trailing odd scalar on its own).
pub fn goal_achieved(
    achieved: &[f64],
    desired: &[f64],
    delta: f64,
    per_block: bool,
) -> Result<bool> {
    if !per_block {
        return Ok(goal_distance(achieved, desired)? <= delta);
    }
    check_dims(achieved, desired)?;
    let mut ok = true;
    for (a, d) in achieved.chunks(3).zip(desired.chunks(3)) {
        ok &= goal_distance(a, d)? <= delta;
    }
    Ok(ok)
}

/// Current achieved goal: tip position for reaching, otherwise block centres
/// followed by the largest door openness when a chest is present.
pub fn achieved_goal(task: Task, world: &WorldState) -> Vec<f64> {
    if task == Task::Reach {
        return world.tip().to_array().to_vec();
    }
    let mut g: Vec<f64> = world
        .blocks
        .iter()
        .flat_map(|b| b.position().to_array())
        .collect();
    if let Some(c) = world.chest {
        g.push(c.max_door);
    }
    g
}

pub fn goal_dim(task: Task, num_block: usize) -> usize {
    if task == Task::Reach {
        3
    } else {
        3 * num_block + usize::from(task.has_chest())
    }
}

fn start_tip(task: Task) -> Vec3 {
    if task.starts_raised() {
        TABLE_CENTRE + Vec3::new(0.0, 0.0, RAISED_TIP)
    } else {
        TABLE_CENTRE
    }
}

/// Samples the initial world of an episode.
pub fn initial_world<R: Rng + ?Sized>(
    task: Task,
    num_block: usize,
    joint_control: bool,
    params: &SimParams,
    rng: &mut R,
) -> Result<WorldState> {
    let tip = start_tip(task);
    let width = if task.fingers_enabled() {
        FINGER_MAX
    } else {
        BLOCKED_WIDTH
    };
    let mut w = WorldState::new(tip, width);
    if joint_control {
        let q = if task.starts_raised() {
            params.chain.solve_position(tip, [0.0; 7])
        } else {
            [0.0; 7]
        };
        w.gripper.joints = Some(JointConfig::at(q));
        w.gripper.tip = params.chain.fk_unchecked(&q);
    }
    if task.has_chest() {
        let y = rng.random_range(-CHEST_LINE_HALF..=CHEST_LINE_HALF);
        w.chest = Some(Chest::new(TABLE_CENTRE + Vec3::new(CHEST_OFFSET_X, y, 0.0)));
    }
    let statics = w.statics();
    let gripper = w.gripper_boxes();
    let base = w.tip();
    let draw = |rng: &mut R| match task {
        Task::Slide => Block::puck(Vec3::new(
            TABLE_CENTRE.x - rng.random_range(0.05..=0.1),
            TABLE_CENTRE.y + rng.random_range(-0.05..=0.05),
            TABLE_CENTRE.z + PUCK_HEIGHT / 2.0,
        )),
        Task::Push | Task::PickAndPlace => Block::cube(Vec3::new(
            base.x + rng.random_range(-0.15..=0.15),
            base.y + rng.random_range(-0.12..=0.12),
            TABLE_CENTRE.z + HALF_EDGE,
        )),
        Task::ChestPush | Task::ChestPickAndPlace => Block::cube(Vec3::new(
            base.x
                + CHEST_BLOCK_OFFSET
                + rng.random_range(-CHEST_BLOCK_HALF_X..=CHEST_BLOCK_HALF_X),
            base.y + rng.random_range(-CHEST_BLOCK_HALF_Y..=CHEST_BLOCK_HALF_Y),
            TABLE_CENTRE.z + HALF_EDGE,
        )),
        _ => Block::cube(Vec3::new(
            base.x + rng.random_range(-SQUARE_HALF..=SQUARE_HALF),
            base.y + rng.random_range(-SQUARE_HALF..=SQUARE_HALF),
            TABLE_CENTRE.z + HALF_EDGE,
        )),
    };
    // Sequential placement can jam in tight regions, so a stuck layout is
    // discarded and redrawn from scratch.
    for _ in 0..SAMPLING_TRIES {
        w.blocks.clear();
        for _ in 0..num_block {
            for _ in 0..PLACEMENT_TRIES {
                let b = draw(rng);
                let bb = b.aabb();
                let clash = w.blocks.iter().any(|o| o.aabb().overlaps(&bb))
                    || statics
                        .iter()
                        .chain(gripper.iter())
                        .any(|s| s.overlaps(&bb));
                if !clash {
                    w.blocks.push(b);
                    break;
                }
            }
        }
        if w.blocks.len() == num_block {
            return Ok(w);
        }
    }
    Err(Error::GoalSampling(SAMPLING_TRIES))
}

/// Samples `count` table-height targets with `(x, y)` drawn by `draw`, each at
/// least [`MIN_SEPARATION`] from the others and from every block centre.
fn free_targets<R: Rng + ?Sized>(
    world: &WorldState,
    count: usize,
    rng: &mut R,
    mut draw: impl FnMut(&mut R) -> Vec3,
) -> Result<Vec<Vec3>> {
    let mut out: Vec<Vec3> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut ok = None;
        for _ in 0..SAMPLING_TRIES {
            let p = draw(rng);
            let clear = out
                .iter()
                .copied()
                .chain(world.blocks.iter().map(|b| b.position()))
                .all(|q| q.distance(p) >= MIN_SEPARATION);
            if clear {
                ok = Some(p);
                break;
            }
        }
        out.push(ok.ok_or(Error::GoalSampling(SAMPLING_TRIES))?);
    }
    Ok(out)
}

fn in_square<R: Rng + ?Sized>(centre: Vec3) -> impl FnMut(&mut R) -> Vec3 {
    move |rng: &mut R| {
        Vec3::new(
            centre.x + rng.random_range(-SQUARE_HALF..=SQUARE_HALF),
            centre.y + rng.random_range(-SQUARE_HALF..=SQUARE_HALF),
            TABLE_CENTRE.z + HALF_EDGE,
        )
    }
}

fn flatten(targets: &[Vec3], openness: Option<f64>) -> Vec<f64> {
    let mut g: Vec<f64> = targets.iter().flat_map(|t| t.to_array()).collect();
    g.extend(openness);
    g
}

fn random_subset<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.truncate(k);
    idx
}

/// Number of the hardest curriculum level, which is also the full task.
pub fn top_level(task: Task, num_block: usize) -> usize {
    task.curriculum_levels(num_block).map_or(0, |l| l - 1)
}

/// Goal of a multi-step task at a given difficulty level.
///
/// Block rearrangement: `level + 1` randomly chosen blocks get new targets.
/// Chest tasks: level 0 only asks for the door; level k sends k random blocks
/// into the chest. Stacking: the first `level + 1` blocks of a random order
/// form a tower. Blocks not involved keep their current positions as targets.
pub fn level_goal<R: Rng + ?Sized>(
    task: Task,
    world: &WorldState,
    level: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = world.blocks.len();
    let mut targets: Vec<Vec3> = world.blocks.iter().map(|b| b.position()).collect();
    let centre = start_tip(task);
    match task {
        Task::BlockRearrange => {
            let chosen = random_subset(n, (level + 1).min(n), rng);
            let pts = free_targets(world, chosen.len(), rng, in_square(centre))?;
            for (i, p) in chosen.into_iter().zip(pts) {
                targets[i] = p;
            }
            Ok(flatten(&targets, None))
        }
        Task::ChestPush | Task::ChestPickAndPlace => {
            let chest = world
                .chest
                .ok_or_else(|| Error::InvalidConfig("chest task without a chest".into()))?;
            for i in random_subset(n, level.min(n), rng) {
                targets[i] = chest.target(HALF_EDGE);
            }
            Ok(flatten(&targets, Some(DESIRED_OPENNESS)))
        }
        Task::BlockStack => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let base = free_targets(world, 1, rng, in_square(centre))?[0];
            for (k, &i) in order.iter().take((level + 1).min(n)).enumerate() {
                targets[i] = base + Vec3::new(0.0, 0.0, BLOCK_EDGE * k as f64);
            }
            Ok(flatten(&targets, None))
        }
        _ => Err(Error::InvalidConfig(format!("task '{task}' has no levels"))),
    }
}

/// Full-difficulty goal for the current world.
pub fn sample_goal<R: Rng + ?Sized>(
    task: Task,
    world: &WorldState,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let c = TABLE_CENTRE;
    match task {
        Task::Reach => Ok(vec![
            c.x + rng.random_range(-0.15..=0.15),
            c.y + rng.random_range(-0.15..=0.15),
            c.z + rng.random_range(0.0..=0.3),
        ]),
        Task::Push | Task::PickAndPlace => {
            let tip = start_tip(task);
            let mut t = free_targets(world, 1, rng, |r: &mut R| {
                Vec3::new(
                    tip.x + r.random_range(-0.15..=0.15),
                    tip.y + r.random_range(-0.12..=0.12),
                    c.z + HALF_EDGE,
                )
            })?[0];
            if task == Task::PickAndPlace && rng.random_bool(0.5) {
                t.z += rng.random_range(0.01..=0.2);
            }
            Ok(t.to_array().to_vec())
        }
        Task::Slide => {
            let t = free_targets(world, 1, rng, |r: &mut R| {
                Vec3::new(
                    c.x + r.random_range(-0.35..=-0.2),
                    c.y + r.random_range(-0.1..=0.1),
                    c.z + PUCK_HEIGHT / 2.0,
                )
            })?[0];
            Ok(t.to_array().to_vec())
        }
        _ => level_goal(task, world, top_level(task, world.blocks.len()), rng),
    }
}

/// Copy of `world` with everything the goal describes moved to its target.
pub fn goal_world(task: Task, world: &WorldState, desired: &[f64]) -> WorldState {
    let mut g = world.clone();
    g.grasp = None;
    if task == Task::Reach {
        g.gripper.tip.position = Vec3::from_slice(&desired[..3]);
        return g;
    }
    for (b, t) in g.blocks.iter_mut().zip(desired.chunks_exact(3)) {
        b.pose.position = Vec3::from_slice(t);
    }
    if let Some(c) = g.chest.as_mut() {
        let open = desired[desired.len() - 1];
        c.door = open;
        c.max_door = open;
    }
    g
}
