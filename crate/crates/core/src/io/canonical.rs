//! Canonical dataset document.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "source": "truth",
//!   "frames": [
//!     {
//!       "frame_id": 0,
//!       "timestamp": 12.5,
//!       "agents": [{"id": 1, "x": 0.5, "y": 1.25, "body_theta": 3.14159265, "head_theta": 3.0}],
//!       "groups": [[1, 2]]
//!     }
//!   ]
//! }
//! ```
//!
//! `timestamp`, `head_theta` and `groups` are optional; a frame without
//! `groups` has no annotation, while `"groups": []` means nobody is grouped.
//! Floats are written in shortest round-trip form.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_frame, normalize_angle, Frame, FrameId, GroupSet};

pub const SCHEMA_VERSION: u32 = 1;

/// Where a dataset's groups came from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSource {
    #[default]
    Truth,
    Detections,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalDataset {
    pub schema_version: u32,
    #[serde(default)]
    pub source: GroupSource,
    pub frames: Vec<Frame>,
}

impl CanonicalDataset {
    /// Validates every frame and sorts frames by id.
    pub fn new(mut frames: Vec<Frame>) -> Result<Self> {
        for frame in &frames {
            check_frame(frame)?;
        }
        frames.sort_by_key(|f| f.frame_id);
        if let Some(w) = frames.windows(2).find(|w| w[0].frame_id == w[1].frame_id) {
            return Err(Error::Format(format!("frame id {} appears more than once", w[0].frame_id)));
        }
        Ok(CanonicalDataset {
            schema_version: SCHEMA_VERSION,
            source: GroupSource::Truth,
            frames,
        })
    }

    pub fn with_source(mut self, source: GroupSource) -> Self {
        self.source = source;
        self
    }

    pub fn frame(&self, frame_id: FrameId) -> Option<&Frame> {
        self.frames.iter().find(|f| f.frame_id == frame_id)
    }

    /// `(frame_id, groups)` for every frame; unannotated frames count as having
    /// no groups.
    pub fn group_sets(&self) -> Vec<(FrameId, GroupSet)> {
        self.frames
            .iter()
            .map(|f| (f.frame_id, f.truth.clone().unwrap_or_default()))
            .collect()
    }

    /// Seeded random split into `(train, test)` by frame. `fraction` of the
    /// frames (rounded) go to the training side; both sides keep frame order.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(CanonicalDataset, CanonicalDataset)> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::InvalidParameter(format!("split fraction {fraction} must lie in (0, 1)")));
        }
        let mut order: Vec<usize> = (0..self.frames.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = (fraction * self.frames.len() as f64).round() as usize;
        let mut in_train = vec![false; self.frames.len()];
        for &i in &order[..n_train] {
            in_train[i] = true;
        }
        let (train, test): (Vec<_>, Vec<_>) = self
            .frames
            .iter()
            .cloned()
            .zip(in_train)
            .partition(|(_, t)| *t);
        let side = |frames: Vec<(Frame, bool)>| CanonicalDataset {
            schema_version: self.schema_version,
            source: self.source,
            frames: frames.into_iter().map(|(f, _)| f).collect(),
        };
        Ok((side(train), side(test)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let version = probe
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Format("missing integer field schema_version".into()))?;
        if version != u64::from(SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: version as u32,
                expected: SCHEMA_VERSION,
            });
        }
        let mut doc: CanonicalDataset = serde_json::from_str(text)?;
        for frame in &mut doc.frames {
            for agent in &mut frame.agents {
                agent.body_theta = normalize_angle(agent.body_theta)?;
                if let Some(h) = agent.head_theta {
                    agent.head_theta = Some(normalize_angle(h)?);
                }
            }
        }
        let source = doc.source;
        Ok(CanonicalDataset::new(doc.frames)?.with_source(source))
    }
}

pub fn load_canonical(path: &Path) -> Result<CanonicalDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CanonicalDataset::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::parse(path, format!("line {} column {}: {j}", j.line(), j.column())),
        other => other,
    })
}

pub fn write_canonical(path: &Path, dataset: &CanonicalDataset) -> Result<()> {
    let text = dataset.to_json()?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}
