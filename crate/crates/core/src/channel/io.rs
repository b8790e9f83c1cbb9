use serde::{Deserialize, Serialize};

use super::csi::{CsiSnapshot, LinkId};
use super::trace::PathComponent;

pub const CHANNEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkPaths {
    pub link: LinkId,
    pub paths: Vec<PathComponent>,
}

/// Versioned JSON document holding traced path lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDocument {
    pub schema_version: u32,
    pub links: Vec<LinkPaths>,
}

impl PathDocument {
    pub fn new(links: Vec<LinkPaths>) -> Self {
        Self {
            schema_version: CHANNEL_SCHEMA_VERSION,
            links,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub schema_version: u32,
    pub snapshots: Vec<CsiSnapshot>,
}

impl SnapshotDocument {
    pub fn new(snapshots: Vec<CsiSnapshot>) -> Self {
        Self {
            schema_version: CHANNEL_SCHEMA_VERSION,
            snapshots,
        }
    }
}
