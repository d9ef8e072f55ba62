use super::Block;
use crate::geom::{Aabb, Vec3};

/// Largest horizontal centre offset at which a block stays on the block below.
pub const STACK_TOLERANCE: f64 = 0.02;

/// Footprint-only separation along the horizontal unit direction `u`.
fn footprint_clearance(support: &Aabb, block: &Aabb, u: Vec3) -> f64 {
    let flat = |b: &Aabb| {
        Aabb::new(
            Vec3::new(b.min.x, b.min.y, 0.0),
            Vec3::new(b.max.x, b.max.y, 1.0),
        )
    };
    super::contact::separation_along(&flat(support), &flat(block), u)
}

/// Resting centre for block `id` after it drops straight down.
///
/// Supports are the table, any static box and any other block whose top lies
/// at or below the block's bottom with overlapping footprints; the highest one
/// wins, lower ids breaking ties. A block whose centre is more than
/// [`STACK_TOLERANCE`] off its supporting block tips off to the side first.
pub fn settle_block(blocks: &[Block], statics: &[Aabb], table_z: f64, id: usize) -> Vec3 {
    let half = blocks[id].half_extents();
    let mut pos = blocks[id].position();
    for _ in 0..8 {
        let me = Aabb::from_center(pos, half);
        let bottom = me.min.z;
        let mut top = table_z;
        let mut on_block: Option<usize> = None;
        for (j, b) in blocks.iter().enumerate() {
            if j == id {
                continue;
            }
            let o = b.aabb();
            if o.max.z <= bottom + 1e-9 && o.footprint_overlaps(&me) && o.max.z > top + 1e-12 {
                top = o.max.z;
                on_block = Some(j);
            }
        }
        for s in statics {
            if s.max.z <= bottom + 1e-9 && s.footprint_overlaps(&me) && s.max.z > top + 1e-12 {
                top = s.max.z;
                on_block = None;
            }
        }
        let rest = Vec3::new(pos.x, pos.y, top + half.z);
        let Some(j) = on_block else { return rest };
        let below = blocks[j].aabb();
        let off = (pos - below.center()).horizontal();
        if off.norm() <= STACK_TOLERANCE + 1e-12 {
            return rest;
        }
        let u = off.normalized();
        let shifted = pos + u * footprint_clearance(&below, &me, u);
        let moved = Aabb::from_center(shifted, half);
        let blocked = blocks
            .iter()
            .enumerate()
            .any(|(k, b)| k != id && b.aabb().overlaps(&moved))
            || statics.iter().any(|s| s.overlaps(&moved));
        if blocked {
            return rest;
        }
        pos = shifted;
    }
    pos
}
