//! Loader for SALSA-style annotation directories.
//!
//! Expected layout (no header rows, comma separated):
//!
//! ```text
//! <dir>/geometryGT/<agent_id>.csv   timestamp,x,y,head_theta,body_theta
//! <dir>/fformationGT.csv            timestamp,member_id,member_id[,...]
//! ```
//!
//! Every geometry file has one row per annotated timestamp, in the same
//! order. Each F-formation row lists one group present at that timestamp;
//! single-member rows are dropped. Angles are radians and are normalized on
//! load. Frame ids are the 0-based row index.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io::canonical::CanonicalDataset;
use crate::model::{AgentId, AgentPose, Frame, GroupSet};

/// Timestamps from different files are considered equal within this slack.
const TIMESTAMP_SLACK: f64 = 1e-6;

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(path, format!("{other:?}")),
        })
}

fn field<T: std::str::FromStr>(path: &Path, line: u64, record: &csv::StringRecord, index: usize, name: &str) -> Result<T> {
    let raw = record
        .get(index)
        .ok_or_else(|| Error::parse(path, format!("line {line}: missing field {name}")))?;
    raw.parse()
        .map_err(|_| Error::parse(path, format!("line {line}: field {name}: cannot parse {raw:?}")))
}

struct GeometryRow {
    timestamp: f64,
    pose: AgentPose,
}

fn read_geometry(path: &Path, id: AgentId) -> Result<Vec<GeometryRow>> {
    let mut rows = Vec::new();
    for (i, record) in reader(path)?.records().enumerate() {
        let line = i as u64 + 1;
        let record = record.map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        if record.len() != 5 {
            return Err(Error::parse(
                path,
                format!("line {line}: expected 5 fields (timestamp,x,y,head_theta,body_theta), found {}", record.len()),
            ));
        }
        let timestamp: f64 = field(path, line, &record, 0, "timestamp")?;
        let x = field(path, line, &record, 1, "x")?;
        let y = field(path, line, &record, 2, "y")?;
        let head: f64 = field(path, line, &record, 3, "head_theta")?;
        let body: f64 = field(path, line, &record, 4, "body_theta")?;
        let pose = AgentPose::new(id, x, y, body)
            .and_then(|p| p.with_head(head))
            .map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        rows.push(GeometryRow { timestamp, pose });
    }
    Ok(rows)
}

pub fn load_salsa(dir: &Path) -> Result<CanonicalDataset> {
    let geometry_dir = dir.join("geometryGT");
    let entries = std::fs::read_dir(&geometry_dir).map_err(|e| Error::io(&geometry_dir, e))?;
    let mut per_agent: BTreeMap<AgentId, Vec<GeometryRow>> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(&geometry_dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
        let id: AgentId = stem
            .parse()
            .map_err(|_| Error::parse(&path, "geometry file name must be the numeric agent id"))?;
        per_agent.insert(id, read_geometry(&path, id)?);
    }
    let Some((&first_id, first_rows)) = per_agent.iter().next() else {
        return Err(Error::parse(&geometry_dir, "no geometry files found"));
    };
    let timestamps: Vec<f64> = first_rows.iter().map(|r| r.timestamp).collect();
    for (id, rows) in &per_agent {
        if rows.len() != timestamps.len() {
            return Err(Error::Format(format!(
                "row count mismatch: agent {id} has {} geometry rows, agent {first_id} has {}",
                rows.len(),
                timestamps.len()
            )));
        }
        if let Some((row, _)) = rows
            .iter()
            .zip(&timestamps)
            .enumerate()
            .find(|(_, (r, t))| (r.timestamp - **t).abs() > TIMESTAMP_SLACK)
        {
            return Err(Error::Format(format!(
                "agent {id}: geometry row {} has timestamp {} but agent {first_id} has {}",
                row + 1,
                rows[row].timestamp,
                timestamps[row]
            )));
        }
    }

    let groups_path = dir.join("fformationGT.csv");
    let mut groups: Vec<Vec<Vec<AgentId>>> = vec![Vec::new(); timestamps.len()];
    for (i, record) in reader(&groups_path)?.records().enumerate() {
        let line = i as u64 + 1;
        let record = record.map_err(|e| Error::parse(&groups_path, format!("line {line}: {e}")))?;
        let timestamp: f64 = field(&groups_path, line, &record, 0, "timestamp")?;
        let frame = timestamps
            .iter()
            .position(|t| (t - timestamp).abs() <= TIMESTAMP_SLACK)
            .ok_or_else(|| {
                Error::Format(format!(
                    "row count mismatch: {}: line {line} has timestamp {timestamp} with no geometry rows",
                    groups_path.display()
                ))
            })?;
        let members = (1..record.len())
            .filter(|&k| !record[k].is_empty())
            .map(|k| field(&groups_path, line, &record, k, "member_id"))
            .collect::<Result<Vec<AgentId>>>()?;
        if members.len() >= 2 {
            groups[frame].push(members);
        } else {
            log::debug!("{}: line {line}: single-member group dropped", groups_path.display());
        }
    }

    let mut frames = Vec::with_capacity(timestamps.len());
    for (row, (timestamp, frame_groups)) in timestamps.iter().zip(groups).enumerate() {
        let agents = per_agent.values().map(|rows| rows[row].pose).collect();
        let truth = GroupSet::new(frame_groups).map_err(|e| Error::Format(format!("frame {row}: {e}")))?;
        let mut frame = Frame::new(row as u64, agents).with_truth(truth);
        frame.timestamp = Some(*timestamp);
        frames.push(frame);
    }
    CanonicalDataset::new(frames)
}
