use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::experiment::{error_cdf, ResultSet, TimingRow};
use super::EvalError;

pub const STATS_COLUMNS: [&str; 6] = [
    "algorithm",
    "min_m",
    "max_m",
    "mean_m",
    "train_s",
    "position_s",
];

fn writer(dir: &Path, name: &str) -> Result<(csv::Writer<fs::File>, PathBuf), EvalError> {
    let path = dir.join(name);
    Ok((csv::Writer::from_path(&path)?, path))
}

/// Writes `errors.csv`, `cdf.csv`, `stats.csv`, `stats_by_seed.csv` and
/// `cdf.svg` into `dir`, returning the paths written.
pub fn emit_outputs(results: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>, EvalError> {
    if results.runs.is_empty() {
        return Err(EvalError::Output("no results to write".into()));
    }
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let (mut w, path) = writer(dir, "errors.csv")?;
    w.write_record(["algorithm", "seed", "tp_index", "error_m"])?;
    for r in &results.runs {
        for (i, e) in r.errors.iter().enumerate() {
            w.write_record([
                r.algorithm.name(),
                &r.seed.to_string(),
                &i.to_string(),
                &e.to_string(),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    let pooled: Vec<(&str, Vec<f64>)> = results
        .algorithms()
        .into_iter()
        .map(|a| {
            (
                a.name(),
                results
                    .runs_for(a)
                    .flat_map(|r| r.errors.iter().copied())
                    .collect(),
            )
        })
        .collect();

    let (mut w, path) = writer(dir, "cdf.csv")?;
    w.write_record(["algorithm", "error_m", "probability"])?;
    for (name, errors) in &pooled {
        for (e, p) in error_cdf(errors) {
            w.write_record([*name, &e.to_string(), &p.to_string()])?;
        }
    }
    w.flush()?;
    written.push(path);

    // pooled over seeds; timings averaged
    let (mut w, path) = writer(dir, "stats.csv")?;
    w.write_record(STATS_COLUMNS)?;
    for a in results.algorithms() {
        let runs: Vec<_> = results.runs_for(a).collect();
        let errors: Vec<f64> = runs.iter().flat_map(|r| r.errors.iter().copied()).collect();
        let n_runs = runs.len() as f64;
        w.write_record([
            a.name().to_string(),
            errors
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min)
                .to_string(),
            errors
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max)
                .to_string(),
            (errors.iter().sum::<f64>() / errors.len() as f64).to_string(),
            (runs.iter().map(|r| r.train_s).sum::<f64>() / n_runs).to_string(),
            (runs.iter().map(|r| r.position_s).sum::<f64>() / n_runs).to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let (mut w, path) = writer(dir, "stats_by_seed.csv")?;
    w.write_record([
        "algorithm",
        "seed",
        "min_m",
        "max_m",
        "mean_m",
        "train_s",
        "position_s",
    ])?;
    for r in &results.runs {
        w.write_record([
            r.algorithm.name().to_string(),
            r.seed.to_string(),
            r.min_m.to_string(),
            r.max_m.to_string(),
            r.mean_m.to_string(),
            r.train_s.to_string(),
            r.position_s.to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let svg = dir.join("cdf.svg");
    plot_cdf(&pooled, &svg)?;
    written.push(svg);
    Ok(written)
}

/// Writes the grid-sweep table to `dir/timing.csv`.
pub fn emit_timing(rows: &[TimingRow], dir: &Path) -> Result<PathBuf, EvalError> {
    fs::create_dir_all(dir)?;
    let (mut w, path) = writer(dir, "timing.csv")?;
    w.write_record([
        "grid_m",
        "algorithm",
        "db_size",
        "train_s",
        "position_s",
        "per_tp_s",
        "mean_m",
    ])?;
    for r in rows {
        w.write_record([
            r.grid_interval.to_string(),
            r.algorithm.name().to_string(),
            r.db_size.to_string(),
            r.train_s.to_string(),
            r.position_s.to_string(),
            r.per_tp_s.to_string(),
            r.mean_m.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn plot_cdf(series: &[(&str, Vec<f64>)], path: &Path) -> Result<(), EvalError> {
    let plot_err = |e: &dyn std::fmt::Display| EvalError::Output(format!("plot: {e}"));
    let x_max = series
        .iter()
        .flat_map(|(_, e)| e.iter().copied())
        .fold(0.0f64, f64::max)
        .max(1e-3)
        * 1.05;
    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption("Positioning error CDF", ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(52)
        .build_cartesian_2d(0.0..x_max, 0.0..1.0)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("error (m)")
        .y_desc("CDF")
        .draw()
        .map_err(|e| plot_err(&e))?;
    for (i, (name, errors)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let mut pts = vec![(0.0, 0.0)];
        let mut prev = 0.0;
        for (e, p) in error_cdf(errors) {
            pts.push((e, prev));
            pts.push((e, p));
            prev = p;
        }
        chart
            .draw_series(LineSeries::new(pts, color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(*name)
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::LowerRight)
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}
