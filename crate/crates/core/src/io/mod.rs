//! Dataset loaders, the canonical interchange document, synthetic scene
//! generation, and model/report persistence.

mod babble;
mod canonical;
mod salsa;
mod synth;

use std::path::Path;

pub use babble::{load_babble, parse_membership};
pub use canonical::{load_canonical, write_canonical, CanonicalDataset, GroupSource, SCHEMA_VERSION};
pub use salsa::load_salsa;
pub use synth::{generate_synthetic, SynthConfig};

use crate::classifiers::TrainedModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Canonical,
    Salsa,
    Babble,
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(DataFormat::Canonical),
            "salsa" => Ok(DataFormat::Salsa),
            "babble" => Ok(DataFormat::Babble),
            other => Err(Error::InvalidParameter(format!("unknown data format {other:?}"))),
        }
    }
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<CanonicalDataset> {
    match format {
        DataFormat::Canonical => load_canonical(path),
        DataFormat::Salsa => load_salsa(path),
        DataFormat::Babble => load_babble(path),
    }
}

pub fn save_model(path: &Path, model: &TrainedModel) -> Result<()> {
    std::fs::write(path, model.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::parse(path, format!("line {} column {}: {j}", j.line(), j.column())),
        other => other,
    })
}

pub fn load_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: SynthConfig = serde_json::from_str(&text)
        .map_err(|j| Error::parse(path, format!("line {} column {}: {j}", j.line(), j.column())))?;
    config.validate()?;
    Ok(config)
}
