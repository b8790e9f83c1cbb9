//! The fingerprint database: AP serial numbers, reference point coordinates
//! and one row of maximum-power-path features per reference point.
//!
//! Rows are stored per RP as `[RSS, AAoA, EAoA, ToA]` blocks, one block per AP
//! in `sn` order. Reference points sit on a rectangular grid anchored at the
//! area's minimum corner.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::MpFeature;

pub const DB_SCHEMA_VERSION: u32 = 1;
pub const FEATURES_PER_AP: usize = 4;
const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DbError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid database: {0}")]
    Invalid(String),
    #[error("unsupported schema version {found} (this build reads version {supported})")]
    Version { found: u64, supported: u32 },
    #[error("malformed database file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Axis-aligned positioning area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub origin: [f64; 2],
    pub width: f64,
    pub depth: f64,
}

impl Area {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.origin[0]
            && p[0] <= self.origin[0] + self.width
            && p[1] >= self.origin[1]
            && p[1] <= self.origin[1] + self.depth
    }
}

/// Number of grid lines along a side of length `len`.
pub fn grid_count(len: f64, interval: f64) -> usize {
    (len / interval + GRID_TOL).floor() as usize + 1
}

/// Grid points `origin + (i, j) * interval` inside the area, boundary
/// included, with x varying fastest.
pub fn build_grid(area: &Area, interval: f64) -> Vec<[f64; 2]> {
    assert!(interval > 0.0, "grid interval must be positive");
    let nx = grid_count(area.width, interval);
    let ny = grid_count(area.depth, interval);
    let mut pts = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            pts.push([
                area.origin[0] + i as f64 * interval,
                area.origin[1] + j as f64 * interval,
            ]);
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub interval: f64,
}

impl GridSpec {
    pub fn on_grid(&self, p: [f64; 2]) -> bool {
        (0..2).all(|a| {
            let steps = (p[a] - self.origin[a]) / self.interval;
            ((steps - steps.round()) * self.interval).abs() <= GRID_TOL
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintBase {
    pub sn: Vec<u32>,
    pub coordinate: Vec<[f64; 2]>,
    pub fingerprint: Vec<Vec<f64>>,
    pub grid_interval: f64,
    pub grid_origin: [f64; 2],
    pub scenario_id: String,
}

/// Output of [`assemble`]: the database plus the RPs dropped for outage.
#[derive(Debug, Clone)]
pub struct Assembled {
    pub db: FingerprintBase,
    pub dropped: Vec<[f64; 2]>,
}

/// Lays out per-(RP, AP) features as a fingerprint matrix. `None` marks an
/// outage; any RP in outage to at least one AP is dropped.
pub fn assemble(
    rps: &[[f64; 2]],
    sn: &[u32],
    features: &[Vec<Option<MpFeature>>],
    grid: GridSpec,
    scenario_id: &str,
) -> Result<Assembled, DbError> {
    if features.len() != rps.len() {
        return Err(DbError::Schema(format!(
            "{} feature rows for {} reference points",
            features.len(),
            rps.len()
        )));
    }
    if let Some((i, row)) = features
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != sn.len())
    {
        return Err(DbError::Schema(format!(
            "RP {i} has features for {} APs, expected {}",
            row.len(),
            sn.len()
        )));
    }
    let mut coordinate = Vec::with_capacity(rps.len());
    let mut fingerprint = Vec::with_capacity(rps.len());
    let mut dropped = Vec::new();
    for (rp, row) in rps.iter().zip(features) {
        if row.iter().any(Option::is_none) {
            log::warn!(
                "dropping RP ({}, {}): outage to at least one AP",
                rp[0],
                rp[1]
            );
            dropped.push(*rp);
            continue;
        }
        coordinate.push(*rp);
        fingerprint.push(row.iter().flat_map(|f| f.unwrap().to_array()).collect());
    }
    let db = FingerprintBase {
        sn: sn.to_vec(),
        coordinate,
        fingerprint,
        grid_interval: grid.interval,
        grid_origin: grid.origin,
        scenario_id: scenario_id.to_string(),
    };
    db.validate()?;
    Ok(Assembled { db, dropped })
}

impl FingerprintBase {
    pub fn n_rps(&self) -> usize {
        self.coordinate.len()
    }

    pub fn n_aps(&self) -> usize {
        self.sn.len()
    }

    pub fn n_features(&self) -> usize {
        FEATURES_PER_AP * self.sn.len()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            origin: self.grid_origin,
            interval: self.grid_interval,
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        column_names(&self.sn)
    }

    pub fn validate(&self) -> Result<(), DbError> {
        if self.coordinate.len() != self.fingerprint.len() {
            return Err(DbError::Invalid(format!(
                "{} coordinates but {} fingerprint rows",
                self.coordinate.len(),
                self.fingerprint.len()
            )));
        }
        let mut ids = HashSet::new();
        if !self.sn.iter().all(|id| ids.insert(*id)) {
            return Err(DbError::Schema("duplicate AP serial numbers".into()));
        }
        if !(self.grid_interval > 0.0) {
            return Err(DbError::Invalid("grid interval must be positive".into()));
        }
        let width = self.n_features();
        let grid = self.grid();
        let mut seen = HashSet::new();
        for (i, (c, row)) in self.coordinate.iter().zip(&self.fingerprint).enumerate() {
            if row.len() != width {
                return Err(DbError::Schema(format!(
                    "row {i} has {} columns, expected {width}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(DbError::Invalid(format!("row {i} has non-finite features")));
            }
            if !grid.on_grid(*c) {
                return Err(DbError::Invalid(format!(
                    "RP ({}, {}) is off the grid",
                    c[0], c[1]
                )));
            }
            let key = (
                ((c[0] - grid.origin[0]) / grid.interval).round() as i64,
                ((c[1] - grid.origin[1]) / grid.interval).round() as i64,
            );
            if !seen.insert(key) {
                return Err(DbError::Invalid(format!(
                    "duplicate RP ({}, {})",
                    c[0], c[1]
                )));
            }
        }
        Ok(())
    }

    /// Inverse of [`assemble`] for a database without outages.
    pub fn split(&self) -> (Vec<[f64; 2]>, Vec<u32>, Vec<Vec<Option<MpFeature>>>) {
        let features = self
            .fingerprint
            .iter()
            .map(|row| {
                row.chunks(FEATURES_PER_AP)
                    .map(|c| Some(MpFeature::from_array([c[0], c[1], c[2], c[3]])))
                    .collect()
            })
            .collect();
        (self.coordinate.clone(), self.sn.clone(), features)
    }

    /// Columns belonging to one AP.
    pub fn ap_block(&self, row: usize, ap: u32) -> Option<&[f64]> {
        let pos = self.sn.iter().position(|&s| s == ap)?;
        let start = pos * FEATURES_PER_AP;
        Some(&self.fingerprint[row][start..start + FEATURES_PER_AP])
    }

    /// Reorders the AP blocks so that `sn[i]` becomes the old `sn[order[i]]`.
    pub fn reorder_aps(&self, order: &[usize]) -> Result<Self, DbError> {
        let mut check: Vec<usize> = order.to_vec();
        check.sort_unstable();
        if check != (0..self.n_aps()).collect::<Vec<_>>() {
            return Err(DbError::Schema("AP order is not a permutation".into()));
        }
        let fingerprint = self
            .fingerprint
            .iter()
            .map(|row| {
                order
                    .iter()
                    .flat_map(|&o| {
                        row[o * FEATURES_PER_AP..(o + 1) * FEATURES_PER_AP]
                            .iter()
                            .copied()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            sn: order.iter().map(|&o| self.sn[o]).collect(),
            fingerprint,
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> Result<String, DbError> {
        let file = DbFile {
            schema_version: DB_SCHEMA_VERSION,
            columns: self.column_names(),
            db: self.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self, DbError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| DbError::Schema("missing schema_version".into()))?;
        if found != u64::from(DB_SCHEMA_VERSION) {
            return Err(DbError::Version {
                found,
                supported: DB_SCHEMA_VERSION,
            });
        }
        let file: DbFile = serde_json::from_value(value)?;
        if file.columns != file.db.column_names() {
            return Err(DbError::Schema("column manifest does not match sn".into()));
        }
        file.db.validate()?;
        Ok(file.db)
    }

    pub fn save(&self, path: &Path) -> Result<(), DbError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DbError> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// One row per RP: `x, y`, then the feature columns.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DbError> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string(), "y".to_string()];
        header.extend(self.column_names());
        w.write_record(&header)?;
        for (c, row) in self.coordinate.iter().zip(&self.fingerprint) {
            let rec: Vec<String> = c.iter().chain(row).map(|v| v.to_string()).collect();
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn column_names(sn: &[u32]) -> Vec<String> {
    sn.iter()
        .flat_map(|id| {
            ["rss_dbm", "aaoa_deg", "eaoa_deg", "toa_ns"]
                .into_iter()
                .map(move |n| format!("{n}_{id}"))
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct DbFile {
    schema_version: u32,
    columns: Vec<String>,
    #[serde(flatten)]
    db: FingerprintBase,
}

/// A query fingerprint with its known location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub true_position: [f64; 2],
    pub features: Vec<f64>,
}

impl TestRecord {
    pub fn check(&self, db: &FingerprintBase) -> Result<(), DbError> {
        if self.features.len() != db.n_features() {
            return Err(DbError::Schema(format!(
                "test record has {} features, database has {}",
                self.features.len(),
                db.n_features()
            )));
        }
        Ok(())
    }
}
