use std::fs;

use proptest::prelude::*;
use wrf_core::baselines::rf_joint_estimate;
use wrf_core::eval::{
    emit_outputs, emit_timing, error_cdf, run_experiment, sweep, train_config, Algorithm,
    EvalError, ExperimentConfig, FeatureMode, Pipeline, ScenarioChoice, STATS_COLUMNS,
};
use wrf_core::fingerprint::{FingerprintBase, TestRecord};
use wrf_core::forest::{estimate_position, train, train_joint, ModelBundle};

fn small() -> ExperimentConfig {
    ExperimentConfig {
        grid_interval: 1.0,
        tp_count: 20,
        n_trees: 10,
        seeds: vec![0, 1],
        timing_repeats: 1,
        ..ExperimentConfig::default()
    }
}

fn read_csv(path: &std::path::Path) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect()
}

#[test]
fn cdf_examples() {
    assert!(error_cdf(&[]).is_empty());
    assert_eq!(
        error_cdf(&[3.0, 1.0, 2.0, 4.0]),
        vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.75), (4.0, 1.0)]
    );
    assert_eq!(error_cdf(&[0.7]), vec![(0.7, 1.0)]);
    let flat = error_cdf(&[0.5; 4]);
    assert!(flat.iter().all(|&(e, _)| e == 0.5));
    assert_eq!(flat.last().unwrap().1, 1.0);
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_ends_at_one(errors in prop::collection::vec(0.0f64..10.0, 1..200)) {
        let cdf = error_cdf(&errors);
        prop_assert_eq!(cdf.len(), errors.len());
        prop_assert!(cdf.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
        prop_assert_eq!(cdf.last().unwrap().1, 1.0);
    }
}

#[test]
fn config_toml_round_trip() {
    let mut cfg = small();
    cfg.algorithms = vec![Algorithm::Wknn, Algorithm::Wrf];
    cfg.feature_mode = FeatureMode::Estimated;
    let text = cfg.to_toml().unwrap();
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);

    let partial =
        ExperimentConfig::from_toml("grid_interval = 0.5\nalgorithms = [\"wknn\"]\n").unwrap();
    assert_eq!(partial.grid_interval, 0.5);
    assert_eq!(partial.algorithms, vec![Algorithm::Wknn]);
    assert_eq!(partial.n_trees, ExperimentConfig::default().n_trees);
}

#[test]
fn invalid_configs_are_rejected() {
    for text in [
        "grid_interval = 0.0",
        "grid_interval = -1.0",
        "tp_count = 0",
        "algorithms = []",
        "seeds = []",
        "k = 0",
        "n_trees = 0",
        "timing_repeats = 0",
        "scenario = \"scenario9\"",
    ] {
        assert!(
            matches!(ExperimentConfig::from_toml(text), Err(EvalError::Config(_))),
            "{text}"
        );
    }
    assert!(matches!(
        ExperimentConfig::from_toml("grid_interval = \"big\""),
        Err(EvalError::Toml(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_toml("algorithms = [\"svm\"]"),
        Err(EvalError::Toml(_))
    ));
}

#[test]
fn small_experiment_is_consistent_and_reproducible() {
    let cfg = small();
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a.db_size, 63);
    assert_eq!(a.runs.len(), 6);
    for r in &a.runs {
        assert_eq!(r.errors.len(), cfg.tp_count);
        let mean = r.errors.iter().sum::<f64>() / r.errors.len() as f64;
        assert!((mean - r.mean_m).abs() < 1e-12);
        assert!(r.min_m <= r.mean_m && r.mean_m <= r.max_m);
        assert!(r.train_s >= 0.0 && r.position_s >= 0.0);
        assert!((r.per_tp_s * cfg.tp_count as f64 - r.position_s).abs() < 1e-12);
    }
    let b = run_experiment(&cfg).unwrap();
    for (x, y) in a.runs.iter().zip(&b.runs) {
        assert_eq!(x.errors, y.errors);
        assert_eq!(x.estimates, y.estimates);
    }

    let dir = tempfile::tempdir().unwrap();
    let written = emit_outputs(&a, dir.path()).unwrap();
    assert_eq!(written.len(), 5);
    assert!(written.iter().all(|p| p.exists()));

    let stats = read_csv(&dir.path().join("stats.csv"));
    assert_eq!(stats[0], STATS_COLUMNS);
    assert_eq!(stats.len(), 4);
    assert_eq!(
        read_csv(&dir.path().join("cdf.csv")).len(),
        1 + 3 * 2 * cfg.tp_count
    );
    assert_eq!(
        read_csv(&dir.path().join("errors.csv")).len(),
        1 + 6 * cfg.tp_count
    );
    assert!(fs::read_to_string(dir.path().join("cdf.svg"))
        .unwrap()
        .contains("<svg"));

    let again = tempfile::tempdir().unwrap();
    emit_outputs(&b, again.path()).unwrap();
    for name in ["errors.csv", "cdf.csv"] {
        assert_eq!(
            fs::read(dir.path().join(name)).unwrap(),
            fs::read(again.path().join(name)).unwrap()
        );
    }
    let strip = |rows: Vec<Vec<String>>| {
        rows.into_iter()
            .map(|r| r[..4].to_vec())
            .collect::<Vec<_>>()
    };
    assert_eq!(
        strip(stats),
        strip(read_csv(&again.path().join("stats.csv")))
    );
}

#[test]
fn serialized_database_and_model_replay() {
    let cfg = small();
    let p = Pipeline::new(&cfg).unwrap();
    let db = p.build_database(3).unwrap().db;
    let tps = p.test_points(&db, 3).unwrap();
    let db2 = FingerprintBase::from_json(&db.to_json().unwrap()).unwrap();
    let tps2: Vec<TestRecord> =
        serde_json::from_str(&serde_json::to_string(&tps).unwrap()).unwrap();
    assert_eq!(tps, tps2);

    let tc = train_config(&cfg, 3);
    let wrf = train(&db, &tc).unwrap();
    let joint = train_joint(&db, &tc).unwrap();
    let bundle = ModelBundle::from_json(
        &ModelBundle::new(Some(wrf.clone()), Some(joint.clone()))
            .to_json()
            .unwrap(),
    )
    .unwrap();
    let retrained = train(&db2, &tc).unwrap();
    for tp in &tps2 {
        let e = estimate_position(&wrf, &tp.features, cfg.k).unwrap();
        assert_eq!(
            e,
            estimate_position(bundle.wrf.as_ref().unwrap(), &tp.features, cfg.k).unwrap()
        );
        assert_eq!(
            e,
            estimate_position(&retrained, &tp.features, cfg.k).unwrap()
        );
        assert_eq!(
            rf_joint_estimate(&joint, &tp.features).unwrap(),
            rf_joint_estimate(bundle.joint.as_ref().unwrap(), &tp.features).unwrap()
        );
    }
}

#[test]
fn sweep_reports_each_grid() {
    let mut cfg = small();
    cfg.seeds = vec![0];
    cfg.tp_count = 5;
    cfg.algorithms = vec![Algorithm::Wrf, Algorithm::Wknn];
    assert!(matches!(sweep(&cfg, &[1.0]), Err(EvalError::Config(_))));
    let rows = sweep(&cfg, &[2.0, 1.0]).unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(
        rows.iter().map(|r| r.db_size).collect::<Vec<_>>(),
        vec![20, 20, 63, 63]
    );
    let dir = tempfile::tempdir().unwrap();
    let path = emit_timing(&rows, dir.path()).unwrap();
    assert_eq!(read_csv(&path).len(), 5);
}

#[test]
fn partitioned_scenario_builds() {
    let cfg = ExperimentConfig {
        scenario: ScenarioChoice::Builtin("scenario1".into()),
        grid_interval: 1.0,
        ..small()
    };
    let p = Pipeline::new(&cfg).unwrap();
    let a = p.build_database(0).unwrap();
    assert_eq!(a.db.n_rps() + a.dropped.len(), 17 * 16);
    assert_eq!(a.db.n_features(), 8);
    assert_eq!(a.db.scenario_id, "scenario1");
}

#[test]
fn estimated_features_run_end_to_end() {
    let cfg = ExperimentConfig {
        grid_interval: 2.0,
        tp_count: 3,
        n_trees: 5,
        timing_repeats: 1,
        feature_mode: FeatureMode::Estimated,
        ..ExperimentConfig::default()
    };
    let r = run_experiment(&cfg).unwrap();
    assert!(r
        .runs
        .iter()
        .all(|run| run.errors.iter().all(|e| e.is_finite())));
}

#[test]
fn positioning_time_scales_with_database_for_wknn_only() {
    let cfg = ExperimentConfig {
        seeds: vec![0],
        tp_count: 100,
        n_trees: 100,
        timing_repeats: 3,
        algorithms: vec![Algorithm::Wrf, Algorithm::Wknn],
        ..ExperimentConfig::default()
    };
    let rows = sweep(&cfg, &[1.0, 0.2]).unwrap();
    let get = |g: f64, a: Algorithm| {
        rows.iter()
            .find(|r| r.grid_interval == g && r.algorithm == a)
            .unwrap()
    };
    let (coarse, fine) = (get(1.0, Algorithm::Wknn), get(0.2, Algorithm::Wknn));
    assert_eq!((coarse.db_size, fine.db_size), (63, 1271));
    assert!(fine.position_s > coarse.position_s);
    let wknn_ratio = fine.per_tp_s / coarse.per_tp_s;
    let wrf_ratio = get(0.2, Algorithm::Wrf).per_tp_s / get(1.0, Algorithm::Wrf).per_tp_s;
    assert!(
        wrf_ratio / wknn_ratio < 1.0,
        "WRF x{wrf_ratio:.2}, WKNN x{wknn_ratio:.2}"
    );
}
