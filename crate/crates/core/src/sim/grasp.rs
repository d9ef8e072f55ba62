use serde::{Deserialize, Serialize};

use super::{Block, BLOCK_EDGE};
use crate::geom::Vec3;

/// Fully open finger width.
pub const FINGER_MAX: f64 = 0.1;
/// Largest tip-to-centre distance at which closing fingers catch a block.
pub const GRASP_RADIUS: f64 = 0.025;
/// Fingers commanded wider than this drop a held block.
pub const RELEASE_WIDTH: f64 = 0.055;
/// Width at which fingers are held on tasks without finger control.
pub const BLOCKED_WIDTH: f64 = 0.04;

/// A held block and its fixed offset from the tip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grasp {
    pub block: usize,
    pub offset: Vec3,
}

/// Finger width commanded by a finger action in [−1, 1]; −1 is fully open.
pub fn finger_target(action: f64) -> f64 {
    FINGER_MAX * (1.0 - action.clamp(-1.0, 1.0)) / 2.0
}

/// New `(finger_width, grasp)` after commanding the fingers to `target`.
///
/// A grasp engages when the fingers close through the block edge width with
/// the tip within [`GRASP_RADIUS`] of a block centre (nearest block, lowest id
/// on ties). The fingers then stop at the block. A held block is released
/// once the target exceeds [`RELEASE_WIDTH`].
pub fn update_grasp(
    tip: Vec3,
    width: f64,
    target: f64,
    blocks: &[Block],
    current: Option<Grasp>,
) -> (f64, Option<Grasp>) {
    let target = target.clamp(0.0, FINGER_MAX);
    if let Some(g) = current {
        if target > RELEASE_WIDTH {
            return (target, None);
        }
        return (target.max(BLOCK_EDGE), Some(g));
    }
    if width >= BLOCK_EDGE && target < BLOCK_EDGE {
        let mut best: Option<(usize, f64)> = None;
        for (i, b) in blocks.iter().enumerate() {
            let d = tip.distance(b.position());
            if d <= GRASP_RADIUS && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            let offset = blocks[i].position() - tip;
            return (BLOCK_EDGE, Some(Grasp { block: i, offset }));
        }
    }
    (target, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blocks_at(ps: &[Vec3]) -> Vec<Block> {
        ps.iter().map(|&p| Block::cube(p)).collect()
    }

    /// Plain restatement of the attachment rule.
    fn oracle(tip: Vec3, w0: f64, w1: f64, centres: &[Vec3], held: bool) -> bool {
        if held {
            return w1 <= 0.055;
        }
        let crosses = w0 >= 0.05 && w1 < 0.05;
        crosses && centres.iter().any(|c| (*c - tip).norm() <= 0.025)
    }

    #[test]
    fn closing_on_centre_grasps() {
        let c = Vec3::new(0.0, 0.0, 0.025);
        let (w, g) = update_grasp(c, 0.06, 0.04, &blocks_at(&[c]), None);
        assert_eq!(g.map(|g| g.block), Some(0));
        assert_eq!(w, BLOCK_EDGE);
        assert!(oracle(c, 0.06, 0.04, &[c], false));
    }

    #[test]
    fn closing_far_away_does_not_grasp() {
        let c = Vec3::new(0.0, 0.0, 0.025);
        let tip = c + Vec3::new(0.1, 0.0, 0.0);
        let (w, g) = update_grasp(tip, 0.06, 0.04, &blocks_at(&[c]), None);
        assert!(g.is_none());
        assert_eq!(w, 0.04);
    }

    #[test]
    fn opening_releases() {
        let c = Vec3::new(0.0, 0.0, 0.025);
        let held = Some(Grasp {
            block: 0,
            offset: Vec3::ZERO,
        });
        let (w, g) = update_grasp(c, 0.05, 0.06, &blocks_at(&[c]), held);
        assert!(g.is_none());
        assert_eq!(w, 0.06);
    }

    #[test]
    fn nearest_block_wins() {
        let a = Vec3::new(0.02, 0.0, 0.025);
        let b = Vec3::new(-0.01, 0.0, 0.025);
        let (_, g) = update_grasp(
            Vec3::new(0.0, 0.0, 0.025),
            0.1,
            0.0,
            &blocks_at(&[a, b]),
            None,
        );
        assert_eq!(g.unwrap().block, 1);
        assert!((g.unwrap().offset.x + 0.01).abs() < 1e-15);
    }

    #[test]
    fn matches_rule_oracle_on_grid() {
        let c = Vec3::new(0.0, 0.0, 0.025);
        let bs = blocks_at(&[c]);
        for ix in -8..=8 {
            for iz in -8..=8 {
                let tip = c + Vec3::new(ix as f64 * 0.005, 0.003, iz as f64 * 0.005);
                for (w0, w1) in [
                    (0.06, 0.04),
                    (0.1, 0.0),
                    (0.04, 0.0),
                    (0.06, 0.055),
                    (0.05, 0.049),
                ] {
                    let (_, g) = update_grasp(tip, w0, w1, &bs, None);
                    assert_eq!(
                        g.is_some(),
                        oracle(tip, w0, w1, &[c], false),
                        "{tip:?} {w0} {w1}"
                    );
                }
            }
        }
        let held = Some(Grasp {
            block: 0,
            offset: Vec3::ZERO,
        });
        for w1 in [0.0, 0.05, 0.055, 0.0551, 0.1] {
            let (_, g) = update_grasp(c, 0.05, w1, &bs, held);
            assert_eq!(g.is_some(), oracle(c, 0.05, w1, &[c], true));
        }
    }

    #[test]
    fn finger_channel_maps_linearly() {
        assert_eq!(finger_target(-1.0), FINGER_MAX);
        assert_eq!(finger_target(1.0), 0.0);
        assert_eq!(finger_target(0.0), 0.05);
    }
}
