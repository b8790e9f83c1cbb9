//! CSI fingerprint indoor positioning.
//!
//! The pipeline runs in five stages: a shoebox multipath simulator
//! ([`channel`]) produces per-link rays and CSI; [`features`] reduces each link
//! to the (RSS, azimuth, elevation, ToA) of its strongest path; the
//! [`fingerprint`] database stores those rows per reference point; [`forest`]
//! trains per-axis random forests and decodes positions by score-weighted
//! averaging of the top candidates; [`baselines`] provides WKNN and plain
//! random forest for comparison, and [`eval`] ties everything together.

pub mod baselines;
pub mod channel;
pub mod eval;
pub mod features;
pub mod fingerprint;
pub mod forest;
