use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use wrf_core::baselines::{rf_joint_estimate, Wknn};
use wrf_core::channel::PathDocument;
use wrf_core::eval::{
    emit_outputs, emit_timing, run_experiment, sweep, train_config, Algorithm, ExperimentConfig,
    FeatureMode, Pipeline,
};
use wrf_core::fingerprint::{FingerprintBase, TestRecord};
use wrf_core::forest::{estimate_position, train, train_joint, ModelBundle, PositionEstimate};

/// Indoor positioning from CSI fingerprints with a weighted random forest.
#[derive(Parser)]
#[command(name = "wrfpos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace every RP-to-AP link of the grid and write the paths.
    Simulate(Common),
    /// Build the fingerprint database and a matching test set.
    BuildDb(Common),
    /// Train WRF and/or joint RF models from a database file.
    Train {
        #[command(flatten)]
        common: Common,
        /// Database file; defaults to `<out>/db.json`.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Locate test records with a trained model or WKNN.
    Locate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Test records (JSON list); defaults to `<out>/tps.json`.
        #[arg(long)]
        tps: Option<PathBuf>,
    },
    /// Run the full experiment and write errors, CDF, stats and plot.
    Evaluate(Common),
    /// Time every algorithm across grid intervals (repeat `--grid`).
    Sweep(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment config; built-in defaults otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replaces the config's seed list with this single seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    feature_mode: Option<FeatureMode>,
    /// wrf, rf or wknn; repeatable.
    #[arg(long = "algo")]
    algos: Vec<Algorithm>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    trees: Option<usize>,
    /// Grid interval in meters; repeat for `sweep`.
    #[arg(long = "grid")]
    grids: Vec<f64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                ExperimentConfig::load(p).with_context(|| format!("reading {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seeds = vec![s];
        }
        if let Some(m) = self.feature_mode {
            cfg.feature_mode = m;
        }
        if !self.algos.is_empty() {
            cfg.algorithms = self.algos.clone();
        }
        if let Some(k) = self.k {
            cfg.k = k;
            cfg.wknn.k = k;
        }
        if let Some(t) = self.trees {
            cfg.n_trees = t;
        }
        if let [g] = self.grids[..] {
            cfg.grid_interval = g;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn single_grid(&self) -> Result<()> {
        if self.grids.len() > 1 {
            bail!("--grid may be given once here; repeat it only for `sweep`");
        }
        Ok(())
    }

    fn seed(cfg: &ExperimentConfig) -> u64 {
        cfg.seeds[0]
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(self.out.join(name))
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string(value)?)
        .with_context(|| format!("writing {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn simulate(c: &Common) -> Result<()> {
    c.single_grid()?;
    let cfg = c.load()?;
    let links = Pipeline::new(&cfg)?.simulate()?;
    let path = c.out_file("paths.json")?;
    println!("{} links traced", links.len());
    write_json(&path, &PathDocument::new(links))
}

fn build_db(c: &Common) -> Result<()> {
    c.single_grid()?;
    let cfg = c.load()?;
    let seed = Common::seed(&cfg);
    let p = Pipeline::new(&cfg)?;
    let assembled = p.build_database(seed)?;
    let db = assembled.db;
    db.save(&c.out_file("db.json")?)?;
    db.write_csv(fs::File::create(c.out_file("db.csv")?)?)?;
    let tps = p.test_points(&db, seed)?;
    write_json(&c.out_file("tps.json")?, &tps)?;
    println!(
        "{} RPs ({} dropped for outage), {} features each, {} test points",
        db.n_rps(),
        assembled.dropped.len(),
        db.n_features(),
        tps.len()
    );
    Ok(())
}

fn load_db(c: &Common, db: &Option<PathBuf>) -> Result<FingerprintBase> {
    let path = db.clone().unwrap_or_else(|| c.out.join("db.json"));
    FingerprintBase::load(&path).with_context(|| format!("loading database {}", path.display()))
}

fn train_cmd(c: &Common, db: &Option<PathBuf>) -> Result<()> {
    c.single_grid()?;
    let cfg = c.load()?;
    let db = load_db(c, db)?;
    let tc = train_config(&cfg, Common::seed(&cfg));
    let wrf = cfg
        .algorithms
        .contains(&Algorithm::Wrf)
        .then(|| train(&db, &tc))
        .transpose()?;
    let joint = cfg
        .algorithms
        .contains(&Algorithm::Rf)
        .then(|| train_joint(&db, &tc))
        .transpose()?;
    if wrf.is_none() && joint.is_none() {
        bail!("nothing to train: select --algo wrf and/or --algo rf");
    }
    let path = c.out_file("model.json")?;
    ModelBundle::new(wrf, joint).save(&path)?;
    println!("model written to {}", path.display());
    Ok(())
}

fn locate(
    c: &Common,
    db: &Option<PathBuf>,
    model: &Option<PathBuf>,
    tps: &Option<PathBuf>,
) -> Result<()> {
    c.single_grid()?;
    let cfg = c.load()?;
    let tps_path = tps.clone().unwrap_or_else(|| c.out.join("tps.json"));
    let records: Vec<TestRecord> = serde_json::from_str(
        &fs::read_to_string(&tps_path)
            .with_context(|| format!("reading {}", tps_path.display()))?,
    )?;
    let needs_model = cfg.algorithms.iter().any(|a| *a != Algorithm::Wknn);
    let bundle = if needs_model {
        let path = model.clone().unwrap_or_else(|| c.out.join("model.json"));
        Some(
            ModelBundle::load(&path)
                .with_context(|| format!("loading model {}", path.display()))?,
        )
    } else {
        None
    };
    let database = cfg
        .algorithms
        .contains(&Algorithm::Wknn)
        .then(|| load_db(c, db))
        .transpose()?;

    let path = c.out_file("estimates.csv")?;
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "algorithm",
        "tp_index",
        "x",
        "y",
        "true_x",
        "true_y",
        "error_m",
    ])?;
    for &algo in &cfg.algorithms {
        let wknn = match (&database, algo) {
            (Some(db), Algorithm::Wknn) => Some(Wknn::new(db, cfg.wknn)?),
            _ => None,
        };
        let mut total = 0.0;
        for (i, tp) in records.iter().enumerate() {
            let est: PositionEstimate = match algo {
                Algorithm::Wrf => {
                    let m = bundle
                        .as_ref()
                        .and_then(|b| b.wrf.as_ref())
                        .context("model has no WRF part")?;
                    estimate_position(m, &tp.features, cfg.k)?
                }
                Algorithm::Rf => {
                    let m = bundle
                        .as_ref()
                        .and_then(|b| b.joint.as_ref())
                        .context("model has no RF part")?;
                    rf_joint_estimate(m, &tp.features)?
                }
                Algorithm::Wknn => wknn
                    .as_ref()
                    .expect("database loaded for WKNN")
                    .estimate(&tp.features)?,
            };
            let t = tp.true_position;
            let err = (est.x - t[0]).hypot(est.y - t[1]);
            total += err;
            w.write_record([
                algo.name().to_string(),
                i.to_string(),
                est.x.to_string(),
                est.y.to_string(),
                t[0].to_string(),
                t[1].to_string(),
                err.to_string(),
            ])?;
        }
        println!(
            "{algo}: mean error {:.4} m over {} points",
            total / records.len() as f64,
            records.len()
        );
    }
    w.flush()?;
    Ok(())
}

fn evaluate(c: &Common) -> Result<()> {
    c.single_grid()?;
    let cfg = c.load()?;
    let results = run_experiment(&cfg)?;
    for r in &results.runs {
        println!(
            "{:<5} seed {:<4} min {:.4}  max {:.4}  mean {:.4}  train {:.3}s  position {:.4}s",
            r.algorithm.name(),
            r.seed,
            r.min_m,
            r.max_m,
            r.mean_m,
            r.train_s,
            r.position_s
        );
    }
    for p in emit_outputs(&results, &c.out)? {
        log::info!("wrote {}", p.display());
    }
    Ok(())
}

fn sweep_cmd(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let grids = if c.grids.is_empty() {
        vec![1.0, 0.5, 0.2]
    } else {
        c.grids.clone()
    };
    let rows = sweep(&cfg, &grids)?;
    for r in &rows {
        println!(
            "grid {:<5} {:<5} RPs {:<6} train {:.3}s  position {:.4}s",
            r.grid_interval,
            r.algorithm.name(),
            r.db_size,
            r.train_s,
            r.position_s
        );
    }
    let path = emit_timing(&rows, &c.out)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match &Cli::parse().command {
        Command::Simulate(c) => simulate(c),
        Command::BuildDb(c) => build_db(c),
        Command::Train { common, db } => train_cmd(common, db),
        Command::Locate {
            common,
            db,
            model,
            tps,
        } => locate(common, db, model, tps),
        Command::Evaluate(c) => evaluate(c),
        Command::Sweep(c) => sweep_cmd(c),
    }
}
