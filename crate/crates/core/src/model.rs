//! Domain types shared by the whole pipeline.
//!
//! Angles are radians, counterclockwise-positive, measured from the world +x
//! axis. Positions are meters in a fixed world frame.

use std::collections::{BTreeSet, HashSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type AgentId = u32;
pub type FrameId = u64;

/// Wraps `theta` into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> Result<f64> {
    if !theta.is_finite() {
        return Err(Error::NonFinite {
            what: "angle",
            value: theta,
        });
    }
    let r = theta.rem_euclid(TAU);
    // rem_euclid rounds tiny negative inputs up to exactly 2π.
    Ok(if r >= TAU { 0.0 } else { r })
}

/// Wraps `theta` into `[-π, π]`.
pub(crate) fn wrap_signed(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

/// One person's position and heading in a frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub id: AgentId,
    pub x: f64,
    pub y: f64,
    pub body_theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub head_theta: Option<f64>,
}

impl AgentPose {
    /// Builds a pose, normalizing both headings into `[0, 2π)`.
    pub fn new(id: AgentId, x: f64, y: f64, body_theta: f64) -> Result<Self> {
        for (what, value) in [("x", x), ("y", y)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        Ok(AgentPose {
            id,
            x,
            y,
            body_theta: normalize_angle(body_theta)?,
            head_theta: None,
        })
    }

    pub fn with_head(mut self, head_theta: f64) -> Result<Self> {
        self.head_theta = Some(normalize_angle(head_theta)?);
        Ok(self)
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    fn check(&self) -> Result<()> {
        for (what, value) in [("x", self.x), ("y", self.y), ("body_theta", self.body_theta)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { what, value });
            }
        }
        let in_range = |t: f64| (0.0..TAU).contains(&t);
        if !in_range(self.body_theta) {
            return Err(Error::InvalidParameter(format!(
                "agent {}: body_theta {} outside [0, 2π)",
                self.id, self.body_theta
            )));
        }
        if let Some(h) = self.head_theta {
            if !h.is_finite() || !in_range(h) {
                return Err(Error::InvalidParameter(format!(
                    "agent {}: head_theta {} outside [0, 2π)",
                    self.id, h
                )));
            }
        }
        Ok(())
    }
}

/// Disjoint groups of at least two agents. Agents that belong to no group are
/// singletons and are not represented.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupSet {
    groups: Vec<BTreeSet<AgentId>>,
}

impl GroupSet {
    pub fn new<I, G>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = G>,
        G: IntoIterator<Item = AgentId>,
    {
        let groups: Vec<BTreeSet<AgentId>> = groups
            .into_iter()
            .map(|g| g.into_iter().collect())
            .collect();
        let mut seen = HashSet::new();
        for g in &groups {
            if g.len() < 2 {
                return Err(Error::InvalidGroupSet(format!(
                    "group {:?} has fewer than two members",
                    g
                )));
            }
            for &id in g {
                if !seen.insert(id) {
                    return Err(Error::InvalidGroupSet(format!(
                        "agent {id} appears in more than one group"
                    )));
                }
            }
        }
        Ok(GroupSet { groups })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn groups(&self) -> &[BTreeSet<AgentId>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group containing `id`, if any.
    pub fn group_of(&self, id: AgentId) -> Option<&BTreeSet<AgentId>> {
        self.groups.iter().find(|g| g.contains(&id))
    }

    /// Groups in a canonical order (sorted by smallest member), for
    /// order-insensitive comparison.
    pub fn canonical(&self) -> Vec<BTreeSet<AgentId>> {
        let mut out = self.groups.clone();
        out.sort();
        out
    }
}

/// A scene: the agents present at one instant, optionally with annotated groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub frame_id: FrameId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<f64>,
    pub agents: Vec<AgentPose>,
    #[serde(default, rename = "groups", skip_serializing_if = "Option::is_none")]
    pub truth: Option<GroupSet>,
}

impl Frame {
    pub fn new(frame_id: FrameId, agents: Vec<AgentPose>) -> Self {
        Frame {
            frame_id,
            timestamp: None,
            agents,
            truth: None,
        }
    }

    pub fn with_truth(mut self, truth: GroupSet) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentPose> {
        self.agents.iter().find(|a| a.id == id)
    }

    /// Agents ordered by ascending id.
    pub fn sorted_agents(&self) -> Vec<AgentPose> {
        let mut agents = self.agents.clone();
        agents.sort_by_key(|a| a.id);
        agents
    }
}

/// Checks every frame invariant, returning the frame unchanged when all hold.
pub fn validate_frame(frame: Frame) -> Result<Frame> {
    check_frame(&frame)?;
    Ok(frame)
}

pub(crate) fn check_frame(frame: &Frame) -> Result<()> {
    let frame_id = frame.frame_id;
    let mut ids = HashSet::with_capacity(frame.agents.len());
    for agent in &frame.agents {
        agent.check()?;
        if !ids.insert(agent.id) {
            return Err(Error::DuplicateAgent {
                frame_id,
                agent_id: agent.id,
            });
        }
    }
    if let Some(ts) = frame.timestamp {
        if !ts.is_finite() {
            return Err(Error::NonFinite {
                what: "timestamp",
                value: ts,
            });
        }
    }
    if let Some(truth) = &frame.truth {
        let mut grouped = HashSet::new();
        for group in truth.groups() {
            if group.len() < 2 {
                return Err(Error::SingletonGroup {
                    frame_id,
                    agent_id: group.iter().next().copied().unwrap_or_default(),
                });
            }
            for &agent_id in group {
                if !ids.contains(&agent_id) {
                    return Err(Error::UnknownAgent { frame_id, agent_id });
                }
                if !grouped.insert(agent_id) {
                    return Err(Error::OverlappingGroups { frame_id, agent_id });
                }
            }
        }
    }
    Ok(())
}

/// Symmetric binary matrix of pairwise same-group predictions with a unit
/// diagonal. Rows and columns follow `ids`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationMatrix {
    ids: Vec<AgentId>,
    cells: Vec<bool>,
}

impl RelationMatrix {
    /// Identity matrix: nobody is related to anybody else.
    pub fn identity(ids: Vec<AgentId>) -> Self {
        let n = ids.len();
        let mut cells = vec![false; n * n];
        for i in 0..n {
            cells[i * n + i] = true;
        }
        RelationMatrix { ids, cells }
    }

    /// Builds a matrix by evaluating `related(i, j)` once per unordered pair
    /// `i < j` of row indices.
    pub fn from_pairs<F>(ids: Vec<AgentId>, mut related: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<bool>,
    {
        let mut m = Self::identity(ids);
        let n = m.len();
        for i in 0..n {
            for j in (i + 1)..n {
                if related(i, j)? {
                    m.set(i, j, true);
                }
            }
        }
        Ok(m)
    }

    /// Builds a matrix from full rows, rejecting asymmetric input or a
    /// missing diagonal.
    pub fn from_rows(ids: Vec<AgentId>, rows: &[Vec<bool>]) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMatrix(format!("expected {n}x{n} rows")));
        }
        let distinct: HashSet<_> = ids.iter().collect();
        if distinct.len() != n {
            return Err(Error::InvalidMatrix("duplicate agent ids".into()));
        }
        for i in 0..n {
            if !rows[i][i] {
                return Err(Error::InvalidMatrix(format!("diagonal entry {i} is 0")));
            }
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::InvalidMatrix(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(RelationMatrix {
            ids,
            cells: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn ids(&self) -> &[AgentId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.len() + j]
    }

    /// Sets an off-diagonal pair symmetrically. Diagonal entries stay 1.
    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        if i == j {
            return;
        }
        let n = self.len();
        self.cells[i * n + j] = value;
        self.cells[j * n + i] = value;
    }

    pub fn row(&self, i: usize) -> &[bool] {
        let n = self.len();
        &self.cells[i * n..(i + 1) * n]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_angle(0.0).unwrap(), 0.0);
        assert!((normalize_angle(-PI / 2.0).unwrap() - 3.0 * PI / 2.0).abs() < 1e-12);
        // 5π minus two full turns.
        let expected = 5.0 * PI - 2.0 * TAU;
        assert!((normalize_angle(5.0 * PI).unwrap() - expected).abs() < 1e-12);
        assert!((normalize_angle(5.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert!(normalize_angle(f64::NAN).is_err());
        assert!(normalize_angle(f64::INFINITY).is_err());
        assert_eq!(normalize_angle(-1e-300).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_in_range(t in -1e6f64..1e6) {
            let once = normalize_angle(t).unwrap();
            prop_assert!((0.0..TAU).contains(&once));
            prop_assert_eq!(normalize_angle(once).unwrap(), once);
            let turns = ((t - once) / TAU).round();
            prop_assert!((t - once - turns * TAU).abs() < 1e-6);
        }

        #[test]
        fn group_set_members_never_repeat(
            raw in proptest::collection::vec(proptest::collection::btree_set(0u32..20, 2..5), 0..5)
        ) {
            if let Ok(gs) = GroupSet::new(raw.clone()) {
                let total: usize = gs.groups().iter().map(|g| g.len()).sum();
                let union: BTreeSet<_> = gs.groups().iter().flatten().collect();
                prop_assert_eq!(total, union.len());
            }
        }
    }

    fn pose(id: AgentId) -> AgentPose {
        AgentPose::new(id, id as f64, 0.0, 0.0).unwrap()
    }

    #[test]
    fn validate_accepts_well_formed_frame() {
        let frame = Frame::new(3, vec![pose(1), pose(2)])
            .with_truth(GroupSet::new([[1, 2]]).unwrap());
        assert!(validate_frame(frame).is_ok());
    }

    #[test]
    fn validate_rejects_duplicate_ids() {
        let frame = Frame::new(7, vec![pose(1), pose(1)]);
        match validate_frame(frame) {
            Err(Error::DuplicateAgent { frame_id: 7, agent_id: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_rejects_singleton_and_unknown() {
        // GroupSet::new refuses singletons, so build the frame by hand.
        let mut frame = Frame::new(2, vec![pose(1), pose(2)]);
        frame.truth = Some(GroupSet {
            groups: vec![BTreeSet::from([1])],
        });
        assert!(matches!(
            validate_frame(frame),
            Err(Error::SingletonGroup { frame_id: 2, agent_id: 1 })
        ));

        let frame = Frame::new(4, vec![pose(1), pose(2)])
            .with_truth(GroupSet::new([[1, 9]]).unwrap());
        assert!(matches!(
            validate_frame(frame),
            Err(Error::UnknownAgent { frame_id: 4, agent_id: 9 })
        ));
    }

    #[test]
    fn validate_rejects_unnormalized_heading() {
        let mut p = pose(1);
        p.body_theta = 7.0;
        assert!(validate_frame(Frame::new(0, vec![p])).is_err());
    }

    #[test]
    fn group_set_rejects_overlap_and_singletons() {
        assert!(GroupSet::new([vec![1, 2], vec![2, 3]]).is_err());
        assert!(GroupSet::new([vec![1]]).is_err());
        assert!(GroupSet::new(Vec::<Vec<AgentId>>::new()).unwrap().is_empty());
    }

    #[test]
    fn relation_matrix_structure() {
        let m = RelationMatrix::from_pairs(vec![1, 2, 3], |i, j| Ok(i == 0 && j == 1)).unwrap();
        for i in 0..3 {
            assert!(m.get(i, i));
            for j in 0..3 {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
        assert!(m.get(1, 0));
        assert!(!m.get(2, 0));

        let asym = vec![vec![true, true], vec![false, true]];
        assert!(RelationMatrix::from_rows(vec![1, 2], &asym).is_err());
        let nodiag = vec![vec![false, false], vec![false, true]];
        assert!(RelationMatrix::from_rows(vec![1, 2], &nodiag).is_err());
    }
}
