//! Shape descriptors for groups: Symmetry and Tightness.
//!
//! Symmetry sorts members by polar angle about the group centroid and sums,
//! over the N angular gaps between neighbours (last-to-first included), the
//! absolute deviation from the ideal gap 360/N. It is reported in degrees and
//! is 0 for pairs. Tightness is the mean member distance from the centroid,
//! in meters.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AgentId, AgentPose, Frame, GroupSet};

/// Distance below which a member counts as sitting on the centroid.
const CENTROID_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupShape {
    pub group: BTreeSet<AgentId>,
    pub center: (f64, f64),
    /// Degrees.
    pub symmetry: f64,
    /// Meters.
    pub tightness: f64,
}

fn need_two(poses: &[AgentPose]) -> Result<()> {
    if poses.len() < 2 {
        return Err(Error::Geometry(format!("group needs at least two members, got {}", poses.len())));
    }
    Ok(())
}

pub fn group_center(poses: &[AgentPose]) -> Result<(f64, f64)> {
    need_two(poses)?;
    let n = poses.len() as f64;
    let x = poses.iter().map(|p| p.x).sum::<f64>() / n;
    let y = poses.iter().map(|p| p.y).sum::<f64>() / n;
    Ok((x, y))
}

/// Polar angles of the members about the centroid, in `[0, 2π)`.
fn polar_angles(poses: &[AgentPose]) -> Result<Vec<f64>> {
    let (cx, cy) = group_center(poses)?;
    poses
        .iter()
        .map(|p| {
            let (dx, dy) = (p.x - cx, p.y - cy);
            if dx.hypot(dy) <= CENTROID_EPS {
                return Err(Error::Geometry(format!("agent {} sits on the group center", p.id)));
            }
            Ok(dy.atan2(dx).rem_euclid(TAU))
        })
        .collect()
}

/// Gaps, in radians, between consecutive angles once sorted, with the
/// wrap-around gap last.
fn gaps_between(mut angles: Vec<f64>) -> Vec<f64> {
    angles.sort_by(f64::total_cmp);
    let n = angles.len();
    let mut gaps: Vec<f64> = angles.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(angles[0] + TAU - angles[n - 1]);
    gaps
}

/// Angular gaps, in radians, between adjacent members around the centroid.
pub fn adjacent_gaps(poses: &[AgentPose]) -> Result<Vec<f64>> {
    Ok(gaps_between(polar_angles(poses)?))
}

/// Symmetry, in degrees, of members seen at the given polar angles (radians)
/// from the group center.
pub fn symmetry_from_angles(angles: &[f64]) -> f64 {
    if angles.len() <= 2 {
        return 0.0;
    }
    let perfect = 360.0 / angles.len() as f64;
    gaps_between(angles.to_vec())
        .iter()
        .map(|g| (perfect - g.to_degrees()).abs())
        .sum()
}

pub fn symmetry(poses: &[AgentPose]) -> Result<f64> {
    need_two(poses)?;
    if poses.len() == 2 {
        return Ok(0.0);
    }
    Ok(symmetry_from_angles(&polar_angles(poses)?))
}

pub fn tightness(poses: &[AgentPose]) -> Result<f64> {
    let (cx, cy) = group_center(poses)?;
    Ok(poses.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / poses.len() as f64)
}

pub fn group_shape(poses: &[AgentPose]) -> Result<GroupShape> {
    Ok(GroupShape {
        group: poses.iter().map(|p| p.id).collect(),
        center: group_center(poses)?,
        symmetry: symmetry(poses)?,
        tightness: tightness(poses)?,
    })
}

/// Per-size summary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeStats {
    pub size: usize,
    pub count: usize,
    pub mean_symmetry: f64,
    pub mean_tightness: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeTable {
    pub rows: Vec<SizeStats>,
    /// Groups whose symmetry was undefined (a member on the centroid).
    pub skipped: usize,
}

impl SizeTable {
    pub fn row(&self, size: usize) -> Option<&SizeStats> {
        self.rows.iter().find(|r| r.size == size)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("size\tcount\tmean_symmetry_deg\tmean_tightness_m\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{:.3}\t{:.4}\n", r.size, r.count, r.mean_symmetry, r.mean_tightness));
        }
        if self.skipped > 0 {
            out.push_str(&format!("# skipped {} groups with a member on the center\n", self.skipped));
        }
        out
    }
}

/// Buckets every group by size and averages its descriptors. Each entry pairs
/// a frame (for member poses) with the groups to describe, which may be the
/// frame's truth or a detection result.
pub fn characterize_corpus<'a, I>(corpus: I) -> Result<SizeTable>
where
    I: IntoIterator<Item = (&'a Frame, &'a GroupSet)>,
{
    let mut sums: BTreeMap<usize, (usize, f64, f64)> = BTreeMap::new();
    let mut skipped = 0;
    for (frame, groups) in corpus {
        for group in groups.groups() {
            let poses = group
                .iter()
                .map(|id| {
                    frame.agent(*id).copied().ok_or(Error::UnknownAgent {
                        frame_id: frame.frame_id,
                        agent_id: *id,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let shape = match group_shape(&poses) {
                Ok(s) => s,
                Err(Error::Geometry(msg)) => {
                    log::warn!("frame {}: {msg}; group skipped", frame.frame_id);
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let entry = sums.entry(group.len()).or_default();
            entry.0 += 1;
            entry.1 += shape.symmetry;
            entry.2 += shape.tightness;
        }
    }
    let rows = sums
        .into_iter()
        .map(|(size, (count, s, t))| SizeStats {
            size,
            count,
            mean_symmetry: s / count as f64,
            mean_tightness: t / count as f64,
        })
        .collect();
    Ok(SizeTable { rows, skipped })
}
