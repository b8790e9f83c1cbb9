use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{JointModel, WrfModel};
use super::ForestError;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Everything `locate` needs, persisted as one JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema_version: u32,
    pub wrf: Option<WrfModel>,
    pub joint: Option<JointModel>,
}

impl ModelBundle {
    pub fn new(wrf: Option<WrfModel>, joint: Option<JointModel>) -> Self {
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            wrf,
            joint,
        }
    }

    pub fn to_json(&self) -> Result<String, ForestError> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, ForestError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| ForestError::Schema("missing schema_version".into()))?;
        if found != u64::from(MODEL_SCHEMA_VERSION) {
            return Err(ForestError::Version {
                found,
                supported: MODEL_SCHEMA_VERSION,
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ForestError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ForestError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
