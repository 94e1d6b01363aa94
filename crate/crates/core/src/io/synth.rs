//! Seeded generator of labeled scenes: circular groups plus unattached
//! distractors.
//!
//! Group radii default to measured mean tightness per group size. Members sit
//! on a jittered regular polygon around the group center and face it, up to
//! heading noise. Distractors stand at random spots at least
//! `distractor_clearance` meters from every group center with uniformly
//! random headings.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::canonical::CanonicalDataset;
use crate::model::{AgentId, AgentPose, Frame, GroupSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_frames: usize,
    /// Inclusive range for the number of groups per frame.
    pub groups_per_frame: [usize; 2],
    /// Relative weight of each group size.
    pub group_size_distribution: BTreeMap<usize, f64>,
    /// Group radius, in meters, for each size.
    pub tightness_mean_per_size: BTreeMap<usize, f64>,
    /// Standard deviation of each member's radius, meters.
    pub radial_jitter: f64,
    /// Standard deviation of each member's polar angle, degrees.
    pub angular_jitter: f64,
    /// Standard deviation of each member's heading, degrees.
    pub heading_noise: f64,
    pub n_distractors: usize,
    /// Width and height of the scene, meters.
    pub area: [f64; 2],
    /// Minimum gap between the circles of two groups, meters.
    pub group_gap: f64,
    pub distractor_clearance: f64,
    /// Minimum distance between two distractors, meters.
    pub distractor_spacing: f64,
    /// Placement attempts per group or distractor before giving up.
    pub max_retries: usize,
    /// Seconds between consecutive frames.
    pub frame_interval: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let tightness = [(2, 0.78), (3, 0.80), (4, 0.83), (5, 0.87), (6, 0.90), (7, 0.95)];
        let weights = [(2, 4.0), (3, 3.0), (4, 2.0), (5, 1.0), (6, 1.0), (7, 0.5)];
        SynthConfig {
            n_frames: 100,
            groups_per_frame: [1, 3],
            group_size_distribution: weights.into_iter().collect(),
            tightness_mean_per_size: tightness.into_iter().collect(),
            radial_jitter: 0.05,
            angular_jitter: 8.0,
            heading_noise: 10.0,
            n_distractors: 2,
            area: [10.0, 10.0],
            group_gap: 1.0,
            distractor_clearance: 2.0,
            distractor_spacing: 1.5,
            max_retries: 100,
            frame_interval: 0.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        for (name, v) in [
            ("radial_jitter", self.radial_jitter),
            ("angular_jitter", self.angular_jitter),
            ("heading_noise", self.heading_noise),
            ("group_gap", self.group_gap),
            ("distractor_clearance", self.distractor_clearance),
            ("distractor_spacing", self.distractor_spacing),
            ("frame_interval", self.frame_interval),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if !self.area.iter().all(|a| *a > 0.0 && a.is_finite()) {
            return bad(format!("area must be positive, got {:?}", self.area));
        }
        if self.groups_per_frame[0] > self.groups_per_frame[1] {
            return bad(format!("groups_per_frame range {:?} is reversed", self.groups_per_frame));
        }
        if self.groups_per_frame[1] > 0 {
            if self.group_size_distribution.is_empty() {
                return bad("group_size_distribution is empty".into());
            }
            for (&size, &w) in &self.group_size_distribution {
                if size < 2 {
                    return bad(format!("group size {size} is below 2"));
                }
                if !(w >= 0.0 && w.is_finite()) {
                    return bad(format!("weight for size {size} must be non-negative"));
                }
                match self.tightness_mean_per_size.get(&size) {
                    Some(r) if *r > 0.0 && r.is_finite() => {}
                    _ => return bad(format!("no positive radius for group size {size}")),
                }
            }
            if self.group_size_distribution.values().sum::<f64>() <= 0.0 {
                return bad("group size weights sum to zero".into());
            }
        }
        if self.max_retries == 0 {
            return bad("max_retries must be at least 1".into());
        }
        Ok(())
    }
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated non-negative standard deviation")
}

struct Placed {
    center: (f64, f64),
    radius: f64,
}

pub fn generate_synthetic(config: &SynthConfig) -> Result<CanonicalDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sizes: Vec<usize> = config.group_size_distribution.keys().copied().collect();
    let size_dist = if config.groups_per_frame[1] > 0 {
        Some(
            WeightedIndex::new(config.group_size_distribution.values().copied())
                .map_err(|e| Error::InvalidParameter(format!("group_size_distribution: {e}")))?,
        )
    } else {
        None
    };
    let radial = normal(config.radial_jitter);
    let angular = normal(config.angular_jitter.to_radians());
    let heading = normal(config.heading_noise.to_radians());

    let mut frames = Vec::with_capacity(config.n_frames);
    for frame_index in 0..config.n_frames {
        let n_groups = rng.random_range(config.groups_per_frame[0]..=config.groups_per_frame[1]);
        let mut placed: Vec<Placed> = Vec::with_capacity(n_groups);
        let mut members: Vec<Vec<(f64, f64, f64)>> = Vec::with_capacity(n_groups);
        for _ in 0..n_groups {
            let size = sizes[size_dist.as_ref().expect("groups requested").sample(&mut rng)];
            let radius = config.tightness_mean_per_size[&size];
            let center = place(&mut rng, config, frame_index, radius, |c| {
                placed.iter().all(|p| dist(c, p.center) >= p.radius + radius + config.group_gap)
            })?;
            let phase = rng.random_range(0.0..TAU);
            let group = (0..size)
                .map(|k| {
                    let a = phase + TAU * k as f64 / size as f64 + angular.sample(&mut rng);
                    let r = (radius + radial.sample(&mut rng)).max(0.05);
                    let (x, y) = (center.0 + r * a.cos(), center.1 + r * a.sin());
                    let facing = (center.1 - y).atan2(center.0 - x) + heading.sample(&mut rng);
                    (x, y, facing)
                })
                .collect();
            members.push(group);
            placed.push(Placed { center, radius });
        }
        let mut loners: Vec<(f64, f64)> = Vec::with_capacity(config.n_distractors);
        for _ in 0..config.n_distractors {
            let spot = place(&mut rng, config, frame_index, 0.0, |c| {
                placed.iter().all(|p| dist(c, p.center) >= config.distractor_clearance)
                    && loners.iter().all(|&o| dist(c, o) >= config.distractor_spacing)
            })?;
            loners.push(spot);
        }

        let total = members.iter().map(Vec::len).sum::<usize>() + loners.len();
        let mut ids: Vec<AgentId> = (1..=total as AgentId).collect();
        ids.shuffle(&mut rng);
        let mut next = ids.into_iter();
        let mut agents = Vec::with_capacity(total);
        let mut groups = Vec::with_capacity(members.len());
        for group in members {
            let mut g = Vec::with_capacity(group.len());
            for (x, y, theta) in group {
                let id = next.next().expect("one id per agent");
                agents.push(AgentPose::new(id, x, y, theta)?);
                g.push(id);
            }
            groups.push(g);
        }
        for (x, y) in loners {
            let theta = rng.random_range(0.0..TAU);
            agents.push(AgentPose::new(next.next().expect("one id per agent"), x, y, theta)?);
        }
        let mut frame = Frame::new(frame_index as u64, agents).with_truth(GroupSet::new(groups)?);
        frame.timestamp = Some(frame_index as f64 * config.frame_interval);
        frames.push(frame);
    }
    CanonicalDataset::new(frames)
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Rejection-samples a point at least `margin` inside the area that satisfies
/// `accept`.
fn place<F>(rng: &mut ChaCha8Rng, config: &SynthConfig, frame: usize, margin: f64, accept: F) -> Result<(f64, f64)>
where
    F: Fn((f64, f64)) -> bool,
{
    let [w, h] = config.area;
    if 2.0 * margin >= w || 2.0 * margin >= h {
        return Err(Error::Infeasible(format!(
            "frame {frame}: a group of radius {margin} m does not fit in a {w} x {h} m area"
        )));
    }
    for _ in 0..config.max_retries {
        let c = (rng.random_range(margin..w - margin), rng.random_range(margin..h - margin));
        if accept(c) {
            return Ok(c);
        }
    }
    Err(Error::Infeasible(format!(
        "frame {frame}: no free spot after {} attempts; enlarge the area or reduce crowding",
        config.max_retries
    )))
}
