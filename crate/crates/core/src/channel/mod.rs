//! Deterministic multipath channel simulation for shoebox rooms.
//!
//! The tracer produces per-link [`PathComponent`] lists (LoS, specular
//! reflections, diffuse scattering and knife-edge diffraction), which can be
//! turned into a delay-tagged impulse response or sampled over OFDM
//! subcarriers and a rectangular receive array to give CSI snapshots.

mod cir;
mod csi;
mod io;
mod scene;
mod trace;

use thiserror::Error;

pub use cir::{assemble_cir, Cir, Impulse, KindCounts};
pub use csi::{
    channel_matrix, synthesize_csi, synthesize_csi_noiseless, CsiConfig, CsiSnapshot, LinkId,
    UraGeometry,
};
pub use io::{LinkPaths, PathDocument, SnapshotDocument, CHANNEL_SCHEMA_VERSION};
pub use scene::{Partition, PartitionPlane, Point3, Scene, Wall};
pub use trace::{
    fresnel_te, knife_edge_loss_db, trace_paths, wrap_degrees, PathComponent, PathKind,
};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid CSI configuration: {0}")]
    InvalidConfig(String),
    #[error("empty channel: link is in outage")]
    EmptyChannel,
}
