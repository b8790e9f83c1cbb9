use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig};
use super::pipeline::Pipeline;
use super::EvalError;
use crate::baselines::{rf_joint_estimate, Wknn};
use crate::fingerprint::{FingerprintBase, TestRecord};
use crate::forest::{
    estimate_position, train, train_joint, ForestError, JointModel, PositionEstimate, TrainConfig,
    WrfModel,
};

/// Outcome of one algorithm under one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub errors: Vec<f64>,
    pub estimates: Vec<[f64; 2]>,
    pub min_m: f64,
    pub max_m: f64,
    pub mean_m: f64,
    /// Median wall-clock training time, seconds.
    pub train_s: f64,
    /// Median wall-clock time to locate every test point, seconds.
    pub position_s: f64,
    pub per_tp_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub scenario_id: String,
    pub grid_interval: f64,
    pub db_size: usize,
    pub runs: Vec<RunResult>,
}

impl ResultSet {
    pub fn runs_for(&self, algorithm: Algorithm) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.algorithm == algorithm)
    }

    /// Algorithms in first-seen order.
    pub fn algorithms(&self) -> Vec<Algorithm> {
        let mut seen = Vec::new();
        for r in &self.runs {
            if !seen.contains(&r.algorithm) {
                seen.push(r.algorithm);
            }
        }
        seen
    }
}

/// `(error, i / n)` for the i-th smallest error.
pub fn error_cdf(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, e)| (e, (i + 1) as f64 / n))
        .collect()
}

/// Runs `f` `repeats` times on one thread and returns the last output with
/// the median duration.
fn timed<T: Send>(
    repeats: usize,
    mut f: impl FnMut() -> Result<T, EvalError> + Send,
) -> Result<(T, f64), EvalError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| EvalError::Config(e.to_string()))?;
    pool.install(|| {
        let mut times = Vec::with_capacity(repeats);
        let mut out = None;
        for _ in 0..repeats.max(1) {
            let t0 = Instant::now();
            let v = f()?;
            times.push(t0.elapsed().as_secs_f64());
            out = Some(v);
        }
        times.sort_by(f64::total_cmp);
        Ok((
            out.expect("at least one repetition"),
            times[times.len() / 2],
        ))
    })
}

/// Forest training settings for `seed` drawn from an experiment config.
pub fn train_config(cfg: &ExperimentConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        n_trees: cfg.n_trees,
        feature_subset_size: cfg.forest.feature_subset_size,
        feature_sampling: cfg.forest.feature_sampling,
        bootstrap: cfg.forest.bootstrap,
        max_depth: cfg.forest.max_depth,
        seed,
    }
}

enum Trained<'a> {
    Wrf(WrfModel),
    Rf(JointModel),
    Wknn(Wknn<'a>),
}

impl Trained<'_> {
    fn locate(&self, features: &[f64], k: usize) -> Result<PositionEstimate, EvalError> {
        Ok(match self {
            Self::Wrf(m) => estimate_position(m, features, k)?,
            Self::Rf(m) => rf_joint_estimate(m, features)?,
            Self::Wknn(w) => w.estimate(features)?,
        })
    }
}

fn fit<'a>(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    db: &'a FingerprintBase,
    seed: u64,
) -> Result<Trained<'a>, EvalError> {
    let tc = train_config(cfg, seed);
    Ok(match algorithm {
        Algorithm::Wrf => Trained::Wrf(train(db, &tc)?),
        Algorithm::Rf => Trained::Rf(train_joint(db, &tc)?),
        Algorithm::Wknn => Trained::Wknn(Wknn::new(db, cfg.wknn)?),
    })
}

fn effective_k(cfg: &ExperimentConfig, db: &FingerprintBase) -> Result<usize, EvalError> {
    let labels = |axis: usize| {
        let mut v: Vec<f64> = db.coordinate.iter().map(|c| c[axis]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    };
    let limit = labels(0).min(labels(1));
    if cfg.k > limit {
        return Err(ForestError::Invalid(format!(
            "k = {} exceeds the {limit} labels on an axis",
            cfg.k
        ))
        .into());
    }
    Ok(cfg.k)
}

/// Trains and evaluates one algorithm on a prepared database and test set.
pub fn run_algorithm(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    db: &FingerprintBase,
    tps: &[TestRecord],
    seed: u64,
) -> Result<RunResult, EvalError> {
    if tps.is_empty() {
        return Err(EvalError::Config("no test points".into()));
    }
    let k = if algorithm == Algorithm::Wrf {
        effective_k(cfg, db)?
    } else {
        cfg.k
    };
    let (model, train_s) = timed(cfg.timing_repeats, || fit(cfg, algorithm, db, seed))?;
    let (estimates, position_s) = timed(cfg.timing_repeats, || {
        tps.iter()
            .map(|tp| model.locate(&tp.features, k).map(|e| e.position()))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let errors: Vec<f64> = estimates
        .iter()
        .zip(tps)
        .map(|(e, tp)| (e[0] - tp.true_position[0]).hypot(e[1] - tp.true_position[1]))
        .collect();
    let n = errors.len() as f64;
    Ok(RunResult {
        algorithm,
        seed,
        min_m: errors.iter().copied().fold(f64::INFINITY, f64::min),
        max_m: errors.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_m: errors.iter().sum::<f64>() / n,
        errors,
        estimates,
        train_s,
        position_s,
        per_tp_s: position_s / n,
    })
}

fn run_seed(p: &Pipeline, seed: u64) -> Result<(usize, Vec<RunResult>), EvalError> {
    let db = p.build_database(seed)?.db;
    let tps = p.test_points(&db, seed)?;
    let runs = p
        .cfg
        .algorithms
        .iter()
        .map(|&a| run_algorithm(&p.cfg, a, &db, &tps, seed))
        .collect::<Result<_, _>>()?;
    Ok((db.n_rps(), runs))
}

/// Simulate, build the database, train and locate every test point, once
/// per seed. Everything except the timings is determined by the seeds.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet, EvalError> {
    let p = Pipeline::new(cfg)?;
    let mut runs = Vec::new();
    let mut db_size = 0;
    for &seed in &cfg.seeds {
        log::info!("seed {seed}");
        let (size, r) = run_seed(&p, seed)?;
        db_size = size;
        runs.extend(r);
    }
    Ok(ResultSet {
        scenario_id: p.scenario.id.clone(),
        grid_interval: cfg.grid_interval,
        db_size,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub grid_interval: f64,
    pub algorithm: Algorithm,
    pub db_size: usize,
    pub train_s: f64,
    pub position_s: f64,
    pub per_tp_s: f64,
    pub mean_m: f64,
}

/// Training and positioning time per grid interval, using the first seed.
pub fn sweep(cfg: &ExperimentConfig, grid_intervals: &[f64]) -> Result<Vec<TimingRow>, EvalError> {
    if grid_intervals.len() < 2 {
        return Err(EvalError::Config(
            "a sweep needs at least two grid intervals".into(),
        ));
    }
    let seed = cfg.seeds[0];
    let rows: Result<Vec<Vec<TimingRow>>, EvalError> = grid_intervals
        .iter()
        .map(|&g| {
            log::info!("grid interval {g} m");
            let p = Pipeline::new(cfg)?.with_grid(g)?;
            let (db_size, runs) = run_seed(&p, seed)?;
            Ok(runs
                .into_iter()
                .map(|r| TimingRow {
                    grid_interval: g,
                    algorithm: r.algorithm,
                    db_size,
                    train_s: r.train_s,
                    position_s: r.position_s,
                    per_tp_s: r.per_tp_s,
                    mean_m: r.mean_m,
                })
                .collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}
