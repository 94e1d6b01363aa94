//! Greedy reconstruction of groups from pairwise beliefs.
//!
//! Each agent's belief set is its row of the relation matrix: the agents it is
//! predicted to share a group with, itself included. Repeatedly, among the
//! still-unassigned pairs the classifier linked directly, the pair whose belief
//! sets agree on the most unassigned agents is chosen and that agreement
//! becomes a group. An agent that only one of the two believes in is left out,
//! on the basis that one wrong prediction is likelier than two.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::classifiers::{build_relation_matrix, TrainedModel};
use crate::error::{Error, Result};
use crate::model::{AgentId, Frame, GroupSet, RelationMatrix};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum MergeMode {
    /// Emit the agreement B_i ∩ B_j (plus the pair itself).
    #[default]
    Intersection,
    /// Emit B_i ∪ B_j, restricted to unassigned agents.
    Union,
}

impl FromStr for MergeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intersection" => Ok(MergeMode::Intersection),
            "union" => Ok(MergeMode::Union),
            other => Err(Error::InvalidParameter(format!("unknown merge mode {other:?}"))),
        }
    }
}

impl fmt::Display for MergeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MergeMode::Intersection => "intersection",
            MergeMode::Union => "union",
        })
    }
}

/// Ids that row `i` of the matrix believes share a group with agent `i`.
pub fn belief_set(m: &RelationMatrix, i: usize) -> Result<BTreeSet<AgentId>> {
    if i >= m.len() {
        return Err(Error::IndexOutOfRange { index: i, len: m.len() });
    }
    Ok(m.row(i)
        .iter()
        .zip(m.ids())
        .filter(|(&related, _)| related)
        .map(|(_, &id)| id)
        .collect())
}

pub fn greedy_reconstruct(m: &RelationMatrix) -> GroupSet {
    greedy_reconstruct_with(m, MergeMode::Intersection)
}

pub fn greedy_reconstruct_with(m: &RelationMatrix, mode: MergeMode) -> GroupSet {
    let rows: Vec<Vec<bool>> = (0..m.len()).map(|i| m.row(i).to_vec()).collect();
    let groups = reconstruct_rows(&rows, mode);
    to_group_set(m.ids(), groups)
}

/// Reconstruction from arbitrary belief sets, which need not be mutually
/// consistent. A pair is a candidate when either agent believes in the other.
/// Groups are returned in the order they are emitted.
pub fn greedy_reconstruct_beliefs(ids: &[AgentId], beliefs: &[BTreeSet<AgentId>], mode: MergeMode) -> Result<GroupSet> {
    if ids.len() != beliefs.len() {
        return Err(Error::InvalidMatrix(format!(
            "{} ids but {} belief sets",
            ids.len(),
            beliefs.len()
        )));
    }
    let position = |id: &AgentId| {
        ids.iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::InvalidMatrix(format!("belief references unknown agent {id}")))
    };
    let n = ids.len();
    let mut rows = vec![vec![false; n]; n];
    for (i, b) in beliefs.iter().enumerate() {
        for id in b {
            rows[i][position(id)?] = true;
        }
    }
    Ok(to_group_set(ids, reconstruct_rows(&rows, mode)))
}

fn to_group_set(ids: &[AgentId], groups: Vec<Vec<usize>>) -> GroupSet {
    GroupSet::new(groups.into_iter().map(|g| g.into_iter().map(|i| ids[i])))
        .expect("reconstruction emits disjoint groups of at least two")
}

fn reconstruct_rows(rows: &[Vec<bool>], mode: MergeMode) -> Vec<Vec<usize>> {
    let n = rows.len();
    let mut remaining = vec![true; n];
    let mut left = n;
    let mut groups = Vec::new();
    while left >= 2 {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..n {
            if !remaining[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !remaining[j] || !(rows[i][j] || rows[j][i]) {
                    continue;
                }
                let agreement = (0..n).filter(|&k| remaining[k] && rows[i][k] && rows[j][k]).count();
                // Strict comparison keeps the lexicographically first pair on ties.
                if best.is_none_or(|(a, _, _)| agreement > a) {
                    best = Some((agreement, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let group: Vec<usize> = (0..n)
            .filter(|&k| {
                remaining[k]
                    && (k == i
                        || k == j
                        || match mode {
                            MergeMode::Intersection => rows[i][k] && rows[j][k],
                            MergeMode::Union => rows[i][k] || rows[j][k],
                        })
            })
            .collect();
        for &k in &group {
            remaining[k] = false;
        }
        left -= group.len();
        groups.push(group);
    }
    groups
}

/// Full pipeline on one frame: relation matrix, then greedy reconstruction.
pub fn detect(model: &TrainedModel, frame: &Frame) -> Result<GroupSet> {
    detect_with(model, frame, MergeMode::Intersection)
}

pub fn detect_with(model: &TrainedModel, frame: &Frame, mode: MergeMode) -> Result<GroupSet> {
    let m = build_relation_matrix(model, frame)?;
    Ok(greedy_reconstruct_with(&m, mode))
}
