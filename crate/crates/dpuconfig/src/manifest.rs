//! Model manifest: one TOML file listing every model profile.

use std::path::Path;

use dpuconfig_core::model::ModelProfile;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(rename = "model")]
    pub models: Vec<ModelProfile>,
}

pub fn to_toml(models: &[ModelProfile]) -> String {
    toml::to_string(&Manifest {
        models: models.to_vec(),
    })
    .expect("model profiles serialize to TOML")
}

pub fn from_toml(text: &str, path: &Path) -> Result<Vec<ModelProfile>> {
    let manifest: Manifest = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.into(),
        message: e.to_string(),
    })?;
    for m in &manifest.models {
        m.validate()?;
    }
    Ok(manifest.models)
}

pub fn write_file(path: &Path, models: &[ModelProfile]) -> Result<()> {
    std::fs::write(path, to_toml(models)).map_err(io_err(path))
}

pub fn read_file(path: &Path) -> Result<Vec<ModelProfile>> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    from_toml(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use dpuconfig_core::model::reference_variants;

    #[test]
    fn round_trip() {
        let models = reference_variants();
        let text = to_toml(&models);
        assert_eq!(from_toml(&text, Path::new("m.toml")).unwrap(), models);
    }

    #[test]
    fn invalid_profile_rejected() {
        let mut models = reference_variants();
        models[0].gmac = -1.0;
        let text = to_toml(&models);
        assert!(from_toml(&text, Path::new("m.toml")).is_err());
    }
}
