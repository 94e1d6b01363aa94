//! Loader for Babble-style releases.
//!
//! Expected layout (header rows required, comma separated):
//!
//! ```text
//! <dir>/poses.csv        frame,timestamp,agent,x,y,body_theta,head_theta
//! <dir>/annotations.csv  frame,groups
//! ```
//!
//! `groups` lists memberships such as `"{2,3,5},{1,4}"`; an empty field means
//! nobody is in an F-formation. One frame is produced per annotation row and
//! every annotated frame must have pose rows. Positions are meters, angles
//! radians (normalized on load); `head_theta` may be empty.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::canonical::CanonicalDataset;
use crate::model::{AgentId, AgentPose, Frame, FrameId, GroupSet};

const POSE_HEADER: [&str; 7] = ["frame", "timestamp", "agent", "x", "y", "body_theta", "head_theta"];
const ANNOTATION_HEADER: [&str; 2] = ["frame", "groups"];

fn open(path: &Path, header: &[&str]) -> Result<csv::Reader<std::fs::File>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        })?;
    let found = rdr
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            path,
            format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

/// Parses `{2,3,5},{1,4}` into member lists. Empty input yields no groups.
pub fn parse_membership(text: &str) -> Result<Vec<Vec<AgentId>>> {
    let text = text.trim();
    let mut groups = Vec::new();
    let mut rest = text;
    while !rest.is_empty() {
        let open = rest
            .strip_prefix('{')
            .ok_or_else(|| Error::Format(format!("membership {text:?}: expected '{{'")))?;
        let close = open
            .find('}')
            .ok_or_else(|| Error::Format(format!("membership {text:?}: unclosed group")))?;
        let members = open[..close]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<AgentId>()
                    .map_err(|_| Error::Format(format!("membership {text:?}: bad agent id {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        groups.push(members);
        rest = open[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(groups)
}

pub fn load_babble(dir: &Path) -> Result<CanonicalDataset> {
    let poses_path = dir.join("poses.csv");
    let mut poses: BTreeMap<FrameId, (f64, Vec<AgentPose>)> = BTreeMap::new();
    for (i, record) in open(&poses_path, &POSE_HEADER)?.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| Error::parse(&poses_path, format!("line {line}: {msg}"));
        let record = record.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            record[k]
                .parse::<f64>()
                .map_err(|_| bad(format!("field {}: cannot parse {:?}", POSE_HEADER[k], &record[k])))
        };
        let frame: FrameId = record[0].parse().map_err(|_| bad(format!("bad frame {:?}", &record[0])))?;
        let agent: AgentId = record[2].parse().map_err(|_| bad(format!("bad agent {:?}", &record[2])))?;
        let mut pose = AgentPose::new(agent, num(3)?, num(4)?, num(5)?).map_err(|e| bad(e.to_string()))?;
        if !record[6].is_empty() {
            pose = pose.with_head(num(6)?).map_err(|e| bad(e.to_string()))?;
        }
        let entry = poses.entry(frame).or_insert_with(|| (f64::NAN, Vec::new()));
        entry.0 = num(1)?;
        entry.1.push(pose);
    }

    let ann_path = dir.join("annotations.csv");
    let mut frames = Vec::new();
    for (i, record) in open(&ann_path, &ANNOTATION_HEADER)?.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(&ann_path, format!("line {line}: {e}")))?;
        let frame_id: FrameId = record[0]
            .parse()
            .map_err(|_| Error::parse(&ann_path, format!("line {line}: bad frame {:?}", &record[0])))?;
        let (timestamp, agents) = poses.remove(&frame_id).ok_or_else(|| {
            Error::Format(format!("row count mismatch: frame {frame_id} is annotated but has no pose rows"))
        })?;
        let groups = parse_membership(&record[1]).map_err(|e| Error::parse(&ann_path, format!("line {line}: {e}")))?;
        let truth = GroupSet::new(groups.into_iter().filter(|g| g.len() >= 2))
            .map_err(|e| Error::Format(format!("frame {frame_id}: {e}")))?;
        let mut frame = Frame::new(frame_id, agents).with_truth(truth);
        frame.timestamp = Some(timestamp);
        frames.push(frame);
    }
    if !poses.is_empty() {
        log::info!("{} pose frames have no annotation and were skipped", poses.len());
    }
    CanonicalDataset::new(frames)
}
