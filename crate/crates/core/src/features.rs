//! Pairwise deconstruction of frames and the two pair features: Euclidean
//! distance and Effort Angle.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{check_frame, wrap_signed, AgentId, AgentPose, Frame};

/// Features and label for one unordered pair of agents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub id_a: AgentId,
    pub id_b: AgentId,
    pub distance: f64,
    pub effort_angle: f64,
    /// 1 when both agents share a truth group. `None` for unannotated frames.
    pub label: Option<u8>,
}

impl PairSample {
    pub fn features(&self) -> [f64; 2] {
        [self.distance, self.effort_angle]
    }
}

pub fn distance(a: &AgentPose, b: &AgentPose) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

/// Absolute rotation, in `[0, π]`, that `from` needs to face `to` with its body.
fn turn_to_face(from: &AgentPose, to: &AgentPose) -> f64 {
    let bearing = (to.y - from.y).atan2(to.x - from.x);
    wrap_signed(from.body_theta - bearing).abs()
}

/// Total body rotation the two agents need to face each other directly.
///
/// 0 means mutual facing, 2π means back to back. The value is the sum of each
/// agent's absolute heading-to-bearing difference, so it is symmetric in its
/// arguments. Coincident positions have no bearing; they yield 0 and a warning.
pub fn effort_angle(a: &AgentPose, b: &AgentPose) -> f64 {
    if a.x == b.x && a.y == b.y {
        log::warn!(
            "agents {} and {} share a position; effort angle set to 0",
            a.id,
            b.id
        );
        return 0.0;
    }
    turn_to_face(a, b) + turn_to_face(b, a)
}

/// Breaks a frame into its n(n-1)/2 unordered pairs, ordered by ascending
/// agent id. Pairs are labeled from the frame's truth when present.
pub fn pairwise_deconstruct(frame: &Frame) -> Result<Vec<PairSample>> {
    check_frame(frame)?;
    let agents = frame.sorted_agents();
    let n = agents.len();
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for (i, a) in agents.iter().enumerate() {
        for b in &agents[i + 1..] {
            let label = frame.truth.as_ref().map(|truth| {
                let together = truth.group_of(a.id).is_some_and(|g| g.contains(&b.id));
                u8::from(together)
            });
            out.push(PairSample {
                id_a: a.id,
                id_b: b.id,
                distance: distance(a, b),
                effort_angle: effort_angle(a, b),
                label,
            });
        }
    }
    Ok(out)
}

/// Deconstructs every frame and concatenates the samples.
pub fn deconstruct_all<'a, I>(frames: I) -> Result<Vec<PairSample>>
where
    I: IntoIterator<Item = &'a Frame>,
{
    let mut out = Vec::new();
    for frame in frames {
        out.extend(pairwise_deconstruct(frame)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupSet;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn pose(id: AgentId, x: f64, y: f64, theta: f64) -> AgentPose {
        AgentPose::new(id, x, y, theta).unwrap()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&pose(1, 0., 0., 0.), &pose(2, 0., 0., 0.)), 0.0);
        assert_eq!(distance(&pose(1, 0., 0., 0.), &pose(2, 3., 4., 0.)), 5.0);
        // sqrt(3² + 4²)
        assert_eq!(distance(&pose(1, 1., 1., 0.), &pose(2, -2., 5., 0.)), 5.0);
    }

    #[test]
    fn effort_angle_examples() {
        let a = pose(1, 0., 0., 0.);
        let b = pose(2, 2., 0., PI);
        assert_eq!(effort_angle(&a, &b), 0.0);

        let a = pose(1, 0., 0., PI);
        let b = pose(2, 2., 0., 0.);
        assert_eq!(effort_angle(&a, &b), TAU);

        // Both turned a quarter away from the line joining them.
        let a = pose(1, 0., 0., PI / 2.);
        let b = pose(2, 2., 0., PI / 2.);
        assert!((effort_angle(&a, &b) - PI).abs() < 1e-12);
    }

    #[test]
    fn coincident_positions_give_zero() {
        let a = pose(1, 1., 1., 0.3);
        let b = pose(2, 1., 1., 2.0);
        assert_eq!(effort_angle(&a, &b), 0.0);
    }

    fn frame_of(n: usize) -> Frame {
        let agents = (0..n)
            .map(|i| pose(i as AgentId + 1, i as f64, (i * i) as f64 * 0.1, 0.1 * i as f64))
            .collect();
        Frame::new(0, agents)
    }

    /// Enumerates unordered pairs by brute force over ordered pairs.
    fn enumerate_pairs(n: usize) -> usize {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i < j)
            .count()
    }

    #[test]
    fn deconstruct_counts() {
        assert_eq!(pairwise_deconstruct(&frame_of(18)).unwrap().len(), 153);
        assert_eq!(pairwise_deconstruct(&frame_of(2)).unwrap().len(), 1);
        assert_eq!(pairwise_deconstruct(&frame_of(5)).unwrap().len(), enumerate_pairs(5));
        assert_eq!(enumerate_pairs(5), 10);
        assert!(pairwise_deconstruct(&frame_of(1)).unwrap().is_empty());
        assert!(pairwise_deconstruct(&frame_of(0)).unwrap().is_empty());
    }

    #[test]
    fn deconstruct_labels_from_truth() {
        let frame = frame_of(4).with_truth(GroupSet::new([[1, 2, 3]]).unwrap());
        let samples = pairwise_deconstruct(&frame).unwrap();
        for s in samples {
            let expected = u8::from(s.id_a <= 3 && s.id_b <= 3);
            assert_eq!(s.label, Some(expected), "pair {}-{}", s.id_a, s.id_b);
        }
        let unlabeled = pairwise_deconstruct(&frame_of(3)).unwrap();
        assert!(unlabeled.iter().all(|s| s.label.is_none()));
    }

    #[test]
    fn deconstruct_propagates_validation() {
        let frame = Frame::new(0, vec![pose(1, 0., 0., 0.), pose(1, 1., 0., 0.)]);
        assert!(pairwise_deconstruct(&frame).is_err());
    }

    fn arb_pose(id: AgentId) -> impl Strategy<Value = AgentPose> {
        (-20.0f64..20.0, -20.0f64..20.0, 0.0f64..TAU)
            .prop_map(move |(x, y, t)| pose(id, x, y, t))
    }

    proptest! {
        #[test]
        fn count_matches_closed_form(n in 2usize..=30) {
            let samples = pairwise_deconstruct(&frame_of(n)).unwrap();
            prop_assert_eq!(samples.len(), n * (n - 1) / 2);
            prop_assert_eq!(samples.len(), enumerate_pairs(n));
        }

        #[test]
        fn effort_angle_symmetric_and_bounded(a in arb_pose(1), b in arb_pose(2)) {
            let ab = effort_angle(&a, &b);
            prop_assert_eq!(ab, effort_angle(&b, &a));
            prop_assert!((0.0..=TAU).contains(&ab));
        }

        #[test]
        fn triangle_inequality(a in arb_pose(1), b in arb_pose(2), c in arb_pose(3)) {
            prop_assert!(distance(&a, &c) <= distance(&a, &b) + distance(&b, &c) + 1e-12);
            prop_assert_eq!(distance(&a, &b), distance(&b, &a));
        }
    }
}
