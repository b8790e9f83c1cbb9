use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::baselines::WknnConfig;
use crate::channel::{CsiConfig, Partition, PartitionPlane, Point3, Scene};
use crate::features::EstimatorConfig;
use crate::fingerprint::Area;
use crate::forest::FeatureSampling;

/// Gap kept between the positioning area and the room walls, so boundary
/// reference points stay strictly inside the room.
pub const WALL_MARGIN: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub sn: u32,
    pub position: [f64; 3],
    /// Azimuth the receive array faces, degrees.
    pub boresight_deg: f64,
}

impl AccessPoint {
    pub fn point(&self) -> Point3 {
        Point3::from(self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub scene: Scene,
    pub area: Area,
    pub aps: Vec<AccessPoint>,
    /// Height of reference and test points, meters.
    #[serde(default = "default_rp_height")]
    pub rp_height: f64,
}

fn default_rp_height() -> f64 {
    1.5
}

const AP_HEIGHT: f64 = 2.8;
const ROOM_HEIGHT: f64 = 3.0;

fn room_around(area: &Area) -> Scene {
    Scene::new(
        [area.origin[0] - WALL_MARGIN, area.origin[1] - WALL_MARGIN],
        area.width + 2.0 * WALL_MARGIN,
        area.depth + 2.0 * WALL_MARGIN,
        ROOM_HEIGHT,
    )
}

impl ScenarioSpec {
    /// 16 m x 15 m hall centred on the origin with two floor-to-ceiling
    /// partitions that shadow parts of the floor from the APs.
    pub fn scenario1() -> Self {
        let area = Area {
            origin: [-8.0, -7.5],
            width: 16.0,
            depth: 15.0,
        };
        let scene = room_around(&area)
            .with_partition(Partition::new(
                PartitionPlane::X,
                -2.1,
                [-7.75, -1.1],
                [0.0, ROOM_HEIGHT],
            ))
            .with_partition(Partition::new(
                PartitionPlane::Y,
                3.1,
                [2.1, 8.25],
                [0.0, ROOM_HEIGHT],
            ));
        Self {
            id: "scenario1".into(),
            scene,
            area,
            aps: vec![
                AccessPoint {
                    sn: 1,
                    position: [-7.64, -6.72, AP_HEIGHT],
                    boresight_deg: 45.0,
                },
                AccessPoint {
                    sn: 2,
                    position: [7.72, -7.54, AP_HEIGHT],
                    boresight_deg: 135.0,
                },
            ],
            rp_height: default_rp_height(),
        }
    }

    /// Empty 8 m x 6 m room with APs in opposite corners.
    pub fn scenario2() -> Self {
        let area = Area {
            origin: [0.0, 0.0],
            width: 8.0,
            depth: 6.0,
        };
        Self {
            id: "scenario2".into(),
            scene: room_around(&area),
            area,
            aps: vec![
                AccessPoint {
                    sn: 1,
                    position: [0.18, 0.20, AP_HEIGHT],
                    boresight_deg: 45.0,
                },
                AccessPoint {
                    sn: 2,
                    position: [7.70, 5.78, AP_HEIGHT],
                    boresight_deg: -135.0,
                },
            ],
            rp_height: default_rp_height(),
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "scenario1" => Some(Self::scenario1()),
            "scenario2" => Some(Self::scenario2()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        self.scene.validate()?;
        if self.aps.is_empty() {
            return Err(EvalError::Config("scenario has no access points".into()));
        }
        let a = &self.area;
        let lo = [a.origin[0], a.origin[1], self.rp_height];
        let hi = [a.origin[0] + a.width, a.origin[1] + a.depth, self.rp_height];
        if !(self.scene.contains(&Point3::from(lo)) && self.scene.contains(&Point3::from(hi))) {
            return Err(EvalError::Config(
                "positioning area must lie strictly inside the room".into(),
            ));
        }
        for ap in &self.aps {
            if !self.scene.contains(&ap.point()) {
                return Err(EvalError::Config(format!(
                    "AP {} lies outside the room",
                    ap.sn
                )));
            }
        }
        Ok(())
    }
}

/// Either a built-in scenario name or a full description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioChoice {
    Builtin(String),
    Custom(Box<ScenarioSpec>),
}

impl ScenarioChoice {
    pub fn resolve(&self) -> Result<ScenarioSpec, EvalError> {
        match self {
            Self::Builtin(name) => ScenarioSpec::builtin(name)
                .ok_or_else(|| EvalError::Config(format!("unknown scenario '{name}'"))),
            Self::Custom(spec) => Ok((**spec).clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TpPlacement {
    UniformRandom,
    /// Exactly on reference points.
    OnGrid,
    /// Reference points shifted by half a grid interval on both axes.
    OnGridOffset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Maximum-power path taken straight from the simulator.
    Oracle,
    /// Maximum-power path estimated from noisy CSI.
    Estimated,
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Self::Oracle),
            "estimated" => Ok(Self::Estimated),
            other => Err(format!("unknown feature mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Wrf,
    Rf,
    Wknn,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Self::Wrf => "WRF",
            Self::Rf => "RF",
            Self::Wknn => "WKNN",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "wrf" => Ok(Self::Wrf),
            "rf" => Ok(Self::Rf),
            "wknn" => Ok(Self::Wknn),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

/// Forest settings shared by WRF and the joint RF baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestOptions {
    pub feature_subset_size: Option<usize>,
    pub feature_sampling: FeatureSampling,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
}

impl Default for ForestOptions {
    fn default() -> Self {
        Self {
            feature_subset_size: None,
            feature_sampling: FeatureSampling::PerNode,
            bootstrap: true,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub scenario: ScenarioChoice,
    /// Reference point spacing, meters.
    pub grid_interval: f64,
    pub tp_count: usize,
    pub tp_placement: TpPlacement,
    pub feature_mode: FeatureMode,
    pub algorithms: Vec<Algorithm>,
    /// Candidates averaged by WRF.
    pub k: usize,
    pub n_trees: usize,
    pub seeds: Vec<u64>,
    pub max_reflection_order: usize,
    pub max_diffraction_order: usize,
    /// Repetitions per timed section; the median is reported.
    pub timing_repeats: usize,
    pub forest: ForestOptions,
    pub wknn: WknnConfig,
    pub csi: CsiConfig,
    pub estimator: EstimatorConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioChoice::Builtin("scenario2".into()),
            grid_interval: 0.2,
            tp_count: 100,
            tp_placement: TpPlacement::UniformRandom,
            feature_mode: FeatureMode::Oracle,
            algorithms: vec![Algorithm::Wrf, Algorithm::Rf, Algorithm::Wknn],
            k: 3,
            n_trees: 100,
            seeds: vec![0],
            max_reflection_order: 3,
            max_diffraction_order: 1,
            timing_repeats: 3,
            forest: ForestOptions::default(),
            wknn: WknnConfig::default(),
            csi: CsiConfig {
                n_snapshots: 2,
                ..CsiConfig::default()
            },
            estimator: EstimatorConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String, EvalError> {
        toml::to_string(self).map_err(|e| EvalError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        if !(self.grid_interval > 0.0 && self.grid_interval.is_finite()) {
            return bad(format!(
                "grid interval {} must be positive",
                self.grid_interval
            ));
        }
        if self.tp_count == 0 {
            return bad("tp_count must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return bad("select at least one algorithm".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1".into());
        }
        if self.timing_repeats == 0 {
            return bad("timing_repeats must be at least 1".into());
        }
        self.scenario.resolve()?.validate()?;
        if self.feature_mode == FeatureMode::Estimated {
            self.csi.validate()?;
        }
        Ok(())
    }
}
