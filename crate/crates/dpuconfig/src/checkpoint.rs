//! Versioned JSON training checkpoint.

use std::path::Path;

use dpuconfig_core::agent::PolicyParameters;
use dpuconfig_core::reward::ContextBaselineStore;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{io_err, Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: RunConfig,
    pub train_models: Vec<String>,
    pub episodes: u64,
    pub params: PolicyParameters,
    pub store: ContextBaselineStore,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes to JSON")
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |e: serde_json::Error| Error::Parse {
            path: path.into(),
            message: e.to_string(),
        };
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(parse_err)?;
        if header.version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                path: path.into(),
                found: header.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let ckpt: Checkpoint = serde_json::from_str(text).map_err(parse_err)?;
        ckpt.params.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(io_err(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_json(&text, path)
    }
}
