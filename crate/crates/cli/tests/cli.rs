use std::path::Path;
use std::process::{Command, Output};

fn wrfpos(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wrfpos"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = wrfpos(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn build_train_locate_evaluate_sweep() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "tp_count = 10\ntiming_repeats = 1\nn_trees = 8\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let s = ok(
        dir,
        &["build-db", "--config", cfg, "--grid", "1.0", "--seed", "4"],
    );
    assert!(s.contains("63 RPs"), "{s}");
    for f in ["db.json", "db.csv", "tps.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }

    ok(
        dir,
        &["train", "--config", cfg, "--algo", "wrf", "--algo", "rf"],
    );
    assert!(dir.join("model.json").exists());

    let s = ok(
        dir,
        &[
            "locate", "--config", cfg, "--algo", "wrf", "--algo", "rf", "--algo", "wknn",
        ],
    );
    assert_eq!(s.lines().filter(|l| l.contains("mean error")).count(), 3);
    let est = std::fs::read_to_string(dir.join("estimates.csv")).unwrap();
    assert_eq!(est.lines().count(), 1 + 3 * 10);

    let eval_dir = dir.join("eval");
    ok(
        &eval_dir,
        &["evaluate", "--config", cfg, "--grid", "1.0", "--k", "2"],
    );
    for f in [
        "errors.csv",
        "cdf.csv",
        "stats.csv",
        "stats_by_seed.csv",
        "cdf.svg",
    ] {
        assert!(eval_dir.join(f).exists(), "{f}");
    }

    let sweep_dir = dir.join("sweep");
    ok(
        &sweep_dir,
        &[
            "sweep", "--config", cfg, "--algo", "wknn", "--grid", "2.0", "--grid", "1.0",
        ],
    );
    let timing = std::fs::read_to_string(sweep_dir.join("timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 3);
}

#[test]
fn bad_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "grid_interval = -1.0\n").unwrap();
    let out = wrfpos(dir, &["evaluate", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid interval"));

    let out = wrfpos(dir, &["evaluate", "--grid", "1.0", "--grid", "0.5"]);
    assert!(!out.status.success());

    let out = wrfpos(dir, &["train"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("loading database"));
}
