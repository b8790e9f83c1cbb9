use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, FeatureMode, ScenarioSpec, TpPlacement};
use super::EvalError;
use crate::channel::{
    synthesize_csi, trace_paths, ChannelError, CsiConfig, LinkId, LinkPaths, PathComponent, Point3,
};
use crate::features::{estimate_paths, extract_mp, oracle_features, FeatureError, MpFeature};
use crate::fingerprint::{assemble, build_grid, Assembled, FingerprintBase, GridSpec, TestRecord};

/// Separate random streams derived from one experiment seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    DbNoise = 1,
    TpPlacement = 2,
    TpNoise = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn derive_seed(seed: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ ((stream as u64) << 56)) ^ index)
}

/// Resolved scenario plus the pieces of the config every stage needs.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub scenario: ScenarioSpec,
    pub cfg: ExperimentConfig,
}

impl Pipeline {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, EvalError> {
        cfg.validate()?;
        Ok(Self {
            scenario: cfg.scenario.resolve()?,
            cfg: cfg.clone(),
        })
    }

    pub fn with_grid(mut self, interval: f64) -> Result<Self, EvalError> {
        self.cfg.grid_interval = interval;
        self.cfg.validate()?;
        Ok(self)
    }

    pub fn sn(&self) -> Vec<u32> {
        self.scenario.aps.iter().map(|a| a.sn).collect()
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            origin: self.scenario.area.origin,
            interval: self.cfg.grid_interval,
        }
    }

    pub fn reference_points(&self) -> Vec<[f64; 2]> {
        build_grid(&self.scenario.area, self.cfg.grid_interval)
    }

    fn lift(&self, p: [f64; 2]) -> Point3 {
        Point3::new(p[0], p[1], self.scenario.rp_height)
    }

    /// Traced paths from a mobile at `p` to AP number `ap` (index into the
    /// scenario's AP list).
    pub fn paths(&self, p: [f64; 2], ap: usize) -> Result<Vec<PathComponent>, ChannelError> {
        trace_paths(
            &self.scenario.scene,
            &self.lift(p),
            &self.scenario.aps[ap].point(),
            self.cfg.max_reflection_order,
            self.cfg.max_diffraction_order,
        )
    }

    /// CSI settings for one AP: its array orientation and the scene's carrier.
    pub fn csi_config(&self, ap: usize) -> CsiConfig {
        let mut csi = self.cfg.csi.clone();
        csi.carrier_freq = self.scenario.scene.carrier_freq;
        csi.tx_power_dbm = self.scenario.scene.tx_power_dbm;
        csi.rx_array.boresight_deg = self.scenario.aps[ap].boresight_deg;
        csi
    }

    /// MP feature of one link, or `None` when the link is in outage.
    pub fn link_feature(
        &self,
        p: [f64; 2],
        ap: usize,
        noise_seed: u64,
    ) -> Result<Option<MpFeature>, EvalError> {
        let paths = self.paths(p, ap)?;
        if paths.is_empty() {
            return Ok(None);
        }
        let feature = match self.cfg.feature_mode {
            FeatureMode::Oracle => oracle_features(&paths),
            FeatureMode::Estimated => {
                let csi = self.csi_config(ap);
                let link = LinkId {
                    tx: self.lift(p).into(),
                    ap: self.scenario.aps[ap].sn,
                };
                let snapshots = synthesize_csi(&paths, &csi, link, noise_seed)?;
                estimate_paths(&snapshots, &csi, &self.cfg.estimator).and_then(|e| extract_mp(&e))
            }
        };
        match feature {
            Ok(f) => Ok(Some(f)),
            Err(FeatureError::Outage) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Features to every AP at `p`; `None` if any link is in outage.
    pub fn point_features(
        &self,
        p: [f64; 2],
        noise_seed: u64,
    ) -> Result<Vec<Option<MpFeature>>, EvalError> {
        (0..self.scenario.aps.len())
            .map(|ap| self.link_feature(p, ap, splitmix64(noise_seed ^ ap as u64)))
            .collect()
    }

    /// Traces every (RP, AP) link of the grid.
    pub fn simulate(&self) -> Result<Vec<LinkPaths>, EvalError> {
        let rps = self.reference_points();
        let per_rp: Result<Vec<Vec<LinkPaths>>, EvalError> = rps
            .par_iter()
            .map(|&p| {
                (0..self.scenario.aps.len())
                    .map(|ap| {
                        Ok(LinkPaths {
                            link: LinkId {
                                tx: self.lift(p).into(),
                                ap: self.scenario.aps[ap].sn,
                            },
                            paths: self.paths(p, ap)?,
                        })
                    })
                    .collect()
            })
            .collect();
        Ok(per_rp?.into_iter().flatten().collect())
    }

    /// Fingerprint database over the RP grid. RPs in outage are dropped.
    pub fn build_database(&self, seed: u64) -> Result<Assembled, EvalError> {
        let rps = self.reference_points();
        let features: Vec<Vec<Option<MpFeature>>> = rps
            .par_iter()
            .enumerate()
            .map(|(i, &p)| self.point_features(p, derive_seed(seed, Stream::DbNoise, i as u64)))
            .collect::<Result<_, _>>()?;
        let assembled = assemble(&rps, &self.sn(), &features, self.grid(), &self.scenario.id)?;
        if !assembled.dropped.is_empty() {
            log::info!(
                "{} of {} RPs dropped for outage",
                assembled.dropped.len(),
                rps.len()
            );
        }
        Ok(assembled)
    }

    fn tp_positions(
        &self,
        db: &FingerprintBase,
        rng: &mut ChaCha8Rng,
        count: usize,
    ) -> Vec<[f64; 2]> {
        let area = &self.scenario.area;
        let pick_rps = |rng: &mut ChaCha8Rng| -> Vec<[f64; 2]> {
            let n = db.n_rps();
            if count <= n {
                index::sample(rng, n, count)
                    .into_iter()
                    .map(|i| db.coordinate[i])
                    .collect()
            } else {
                (0..count)
                    .map(|_| db.coordinate[rng.random_range(0..n)])
                    .collect()
            }
        };
        match self.cfg.tp_placement {
            TpPlacement::UniformRandom => (0..count)
                .map(|_| {
                    [
                        area.origin[0] + rng.random::<f64>() * area.width,
                        area.origin[1] + rng.random::<f64>() * area.depth,
                    ]
                })
                .collect(),
            TpPlacement::OnGrid => pick_rps(rng),
            TpPlacement::OnGridOffset => {
                let h = self.cfg.grid_interval / 2.0;
                pick_rps(rng)
                    .into_iter()
                    .map(|p| {
                        let mut q = [p[0] + h, p[1] + h];
                        for a in 0..2 {
                            if !area.contains(q) {
                                q[a] = p[a] - h;
                            }
                        }
                        q
                    })
                    .collect()
            }
        }
    }

    /// `tp_count` test records. Positions whose links are in outage are
    /// redrawn so every record carries a full fingerprint.
    pub fn test_points(
        &self,
        db: &FingerprintBase,
        seed: u64,
    ) -> Result<Vec<TestRecord>, EvalError> {
        if db.n_rps() == 0 {
            return Err(EvalError::Config("database is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, Stream::TpPlacement, 0));
        let want = self.cfg.tp_count;
        let mut records = Vec::with_capacity(want);
        let mut attempts = 0;
        while records.len() < want {
            attempts += 1;
            if attempts > 100 {
                return Err(EvalError::Config(
                    "could not place enough test points outside outage".into(),
                ));
            }
            let positions = self.tp_positions(db, &mut rng, want - records.len());
            let start = records.len();
            let found: Vec<Option<TestRecord>> = positions
                .par_iter()
                .enumerate()
                .map(|(i, &p)| {
                    let noise = derive_seed(
                        seed,
                        Stream::TpNoise,
                        ((attempts as u64) << 32) | (start + i) as u64,
                    );
                    let f = self.point_features(p, noise)?;
                    Ok(f.into_iter()
                        .collect::<Option<Vec<_>>>()
                        .map(|fs| TestRecord {
                            true_position: p,
                            features: fs.iter().flat_map(MpFeature::to_array).collect(),
                        }))
                })
                .collect::<Result<_, EvalError>>()?;
            records.extend(found.into_iter().flatten());
        }
        Ok(records)
    }
}
