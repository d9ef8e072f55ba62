use crate::geom::{Aabb, Vec3};

/// Distance a block must travel along the horizontal unit direction `u` so
/// that it no longer overlaps `pusher`. Zero when they do not overlap or when
/// `u` has no horizontal component.
pub fn separation_along(pusher: &Aabb, block: &Aabb, u: Vec3) -> f64 {
    if !pusher.overlaps(block) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for axis in 0..2 {
        let ui = u[axis];
        if ui.abs() < 1e-15 {
            continue;
        }
        let t = if ui > 0.0 {
            (pusher.max[axis] - block.min[axis]) / ui
        } else {
            (pusher.min[axis] - block.max[axis]) / ui
        };
        best = best.min(t.max(0.0));
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// Block displacement produced by a pusher that swept by `sweep` and now
/// occupies `pusher`.
///
/// The block is translated along the horizontal component of the sweep by the
/// smallest distance that separates the two boxes. Blocks are never rotated.
pub fn resolve_push(pusher: &Aabb, sweep: Vec3, block: &Aabb) -> Vec3 {
    let h = sweep.horizontal();
    let n = h.norm();
    if n == 0.0 {
        return Vec3::ZERO;
    }
    let u = h / n;
    u * separation_along(pusher, block, u)
}

/// True when the overlap between two boxes is shallowest along z, i.e. one is
/// pressing on the other from above or below and cannot shove it sideways.
pub fn is_vertical_contact(a: &Aabb, b: &Aabb) -> bool {
    let d = a.overlap_depths(b);
    d.z <= d.x.min(d.y)
}
