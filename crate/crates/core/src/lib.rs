//! Detection of conversational groups (F-formations) from per-person 2-D
//! positions and body orientations.
//!
//! The pipeline has three stages:
//!
//! 1. **Deconstruction** ([`features`]) – every frame is split into its
//!    unordered person pairs, each described by distance and effort angle.
//! 2. **Pairwise classification** ([`classifiers`]) – a trained binary
//!    classifier fills a symmetric relation matrix for the frame.
//! 3. **Reconstruction** ([`reconstruction`]) – a greedy vote over belief
//!    sets turns the matrix into disjoint groups.
//!
//! [`evaluation`] scores detections with tolerant group matching,
//! [`characterization`] describes group shape (symmetry, tightness), and
//! [`io`] reads datasets and writes models.

pub mod characterization;
pub mod classifiers;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod io;
pub mod model;
pub mod reconstruction;

pub use error::{Error, Result};
pub use model::{normalize_angle, validate_frame, AgentId, AgentPose, Frame, FrameId, GroupSet, RelationMatrix};
