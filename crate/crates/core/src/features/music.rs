use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::smoothing::{fb_smooth, SmoothedCovariance, SubarrayDims};
use super::FeatureError;
use crate::channel::{wrap_degrees, CsiConfig, CsiSnapshot};

/// One path recovered from CSI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatedPath {
    pub aaoa: f64,
    pub eaoa: f64,
    /// Seconds.
    pub toa: f64,
    pub power_dbm: f64,
}

/// MUSIC search grid. The pseudo-spectrum is scanned on a coarse grid
/// (`coarse_factor` times the fine steps), each coarse peak is rescanned at
/// the fine steps within one coarse cell, then refined by a parabolic fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchGrid {
    pub az_step_deg: f64,
    pub el_step_deg: f64,
    /// Seconds; `None` means a quarter of the sample interval.
    pub delay_step: Option<f64>,
    pub coarse_factor: usize,
    /// Azimuth half-width around the array boresight, degrees.
    pub az_half_width_deg: f64,
    pub el_range_deg: [f64; 2],
    /// Seconds; `None` means the unambiguous range `1 / subcarrier spacing`.
    pub max_delay: Option<f64>,
    /// Source-count threshold on `lambda_k / lambda_1` when the count is not given.
    pub eig_ratio: f64,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self {
            az_step_deg: 1.0,
            el_step_deg: 1.0,
            delay_step: None,
            coarse_factor: 4,
            az_half_width_deg: 90.0,
            el_range_deg: [-90.0, 90.0],
            max_delay: None,
            eig_ratio: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EstimatorConfig {
    pub subarray: SubarrayDims,
    pub grid: SearchGrid,
    pub n_sources: Option<usize>,
}

/// Smooths and runs MUSIC in one go.
pub fn estimate_paths(
    snapshots: &[CsiSnapshot],
    cfg: &CsiConfig,
    est: &EstimatorConfig,
) -> Result<Vec<EstimatedPath>, FeatureError> {
    let cov = fb_smooth(snapshots, &cfg.rx_array, est.subarray)?;
    music_estimate(&cov, cfg, est.n_sources, &est.grid)
}

/// Eigenvalues in descending order with matching eigenvector columns.
fn sorted_eigen(r: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let eig = SymmetricEigen::new(r.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(r.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Number of eigenvalues with `lambda_k / lambda_1 >= ratio`.
pub fn count_sources(eigenvalues: &[f64], ratio: f64) -> usize {
    match eigenvalues.first() {
        Some(&top) if top > 0.0 => eigenvalues
            .iter()
            .take_while(|&&l| l / top >= ratio)
            .count(),
        _ => 0,
    }
}

/// MUSIC over azimuth, elevation and delay on a smoothed space-frequency
/// covariance. Path powers come from a least-squares fit of the steering
/// outer products to the noise-corrected covariance.
pub fn music_estimate(
    cov: &SmoothedCovariance,
    cfg: &CsiConfig,
    n_sources: Option<usize>,
    grid: &SearchGrid,
) -> Result<Vec<EstimatedPath>, FeatureError> {
    if !(grid.az_step_deg > 0.0 && grid.el_step_deg > 0.0 && grid.coarse_factor >= 1) {
        return Err(FeatureError::InvalidInput(
            "grid steps must be positive".into(),
        ));
    }
    if grid.delay_step.is_some_and(|d| d <= 0.0) {
        return Err(FeatureError::InvalidInput(
            "delay step must be positive".into(),
        ));
    }
    let n = cov.dim();
    if n != cov.subarray_dims.len() {
        return Err(FeatureError::InvalidDims(
            "covariance size does not match subarray".into(),
        ));
    }
    let (values, vectors) = sorted_eigen(&cov.r);
    let trace: f64 = values.iter().sum();
    let min = values.last().copied().unwrap_or(0.0);
    if !trace.is_finite() || min < -1e-8 * trace.abs().max(f64::MIN_POSITIVE) {
        return Err(FeatureError::NumericDegeneracy(format!(
            "covariance is not positive semidefinite (min eigenvalue {min:e}, trace {trace:e})"
        )));
    }
    let d = match n_sources {
        Some(d) if d >= n => {
            return Err(FeatureError::InvalidInput(format!(
                "{d} sources requested but subspace dimension is {n}"
            )))
        }
        Some(d) => d,
        None => count_sources(&values, grid.eig_ratio).min(n - 1),
    };
    if d == 0 {
        return Ok(Vec::new());
    }
    let noise_floor = values[d..].iter().sum::<f64>() / (n - d) as f64;
    let signal = vectors.columns(0, d).into_owned();
    let spectrum = Spectrum::new(&signal, cov.subarray_dims, cfg);

    let fine = spectrum.fine_steps(grid);
    let peaks = spectrum.coarse_peaks(grid, fine, d);
    let mut found: Vec<(f64, f64, f64)> = peaks
        .into_iter()
        .map(|p| spectrum.refine(p, grid, fine))
        .collect();
    found.dedup_by(|a, b| {
        (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9 && (a.2 - b.2).abs() < 1e-15
    });

    let powers = fit_powers(&cov.r, noise_floor, &found, &spectrum);
    let mut out: Vec<EstimatedPath> = found
        .iter()
        .zip(powers)
        .map(|(&(az, el, tau), p)| EstimatedPath {
            aaoa: wrap_degrees(az),
            eaoa: el.clamp(-90.0, 90.0),
            toa: tau.max(0.0),
            power_dbm: cfg.tx_power_dbm + 10.0 * p.max(1e-300).log10(),
        })
        .collect();
    out.sort_by(|a, b| {
        b.power_dbm
            .total_cmp(&a.power_dbm)
            .then(a.toa.total_cmp(&b.toa))
    });
    Ok(out)
}

struct Spectrum<'a> {
    signal: &'a DMatrix<Complex64>,
    dims: SubarrayDims,
    cfg: &'a CsiConfig,
}

#[derive(Debug, Clone, Copy)]
struct Steps {
    az: f64,
    el: f64,
    delay: f64,
}

impl<'a> Spectrum<'a> {
    fn new(signal: &'a DMatrix<Complex64>, dims: SubarrayDims, cfg: &'a CsiConfig) -> Self {
        Self { signal, dims, cfg }
    }

    fn fine_steps(&self, grid: &SearchGrid) -> Steps {
        Steps {
            az: grid.az_step_deg,
            el: grid.el_step_deg,
            delay: grid.delay_step.unwrap_or(self.cfg.sample_interval() / 4.0),
        }
    }

    fn spatial_steering(&self, az: f64, el: f64) -> Vec<Complex64> {
        let arr = &self.cfg.rx_array;
        let mut a = Vec::with_capacity(self.dims.spatial());
        for r in 0..self.dims.rows {
            for c in 0..self.dims.cols {
                a.push(Complex64::from_polar(1.0, arr.element_phase(r, c, az, el)));
            }
        }
        a
    }

    fn delay_steering(&self, tau: f64) -> Vec<Complex64> {
        let df = self.cfg.subcarrier_spacing();
        (0..self.dims.taps)
            .map(|t| Complex64::from_polar(1.0, -2.0 * PI * t as f64 * df * tau))
            .collect()
    }

    fn steering(&self, az: f64, el: f64, tau: f64) -> Vec<Complex64> {
        let a = self.spatial_steering(az, el);
        let b = self.delay_steering(tau);
        a.iter()
            .flat_map(|ai| b.iter().map(move |bt| ai * bt))
            .collect()
    }

    /// Signal-subspace projection with the delay part folded in:
    /// `B[i][sp] = sum_t conj(E[sp * taps + t, i]) * b_t(tau)`.
    fn delay_projection(&self, tau: f64) -> Vec<Vec<Complex64>> {
        let b = self.delay_steering(tau);
        let taps = self.dims.taps;
        (0..self.signal.ncols())
            .map(|i| {
                let col = self.signal.column(i);
                (0..self.dims.spatial())
                    .map(|sp| (0..taps).map(|t| col[sp * taps + t].conj() * b[t]).sum())
                    .collect()
            })
            .collect()
    }

    /// Normalized null spectrum `1 - |E_s^H s|^2 / |s|^2`; MUSIC peaks are its minima.
    fn null_value(&self, proj: &[Vec<Complex64>], a: &[Complex64]) -> f64 {
        let norm = (self.dims.spatial() * self.dims.taps) as f64;
        let captured: f64 = proj
            .iter()
            .map(|row| {
                row.iter()
                    .zip(a)
                    .map(|(p, x)| p * x)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum();
        (1.0 - captured / norm).max(0.0)
    }

    fn eval(&self, az: f64, el: f64, tau: f64) -> f64 {
        self.null_value(&self.delay_projection(tau), &self.spatial_steering(az, el))
    }

    fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| lo + i as f64 * step).collect()
    }

    fn coarse_peaks(&self, grid: &SearchGrid, fine: Steps, d: usize) -> Vec<(f64, f64, f64)> {
        let f = grid.coarse_factor as f64;
        let b = self.cfg.rx_array.boresight_deg;
        let azs = Self::axis(
            b - grid.az_half_width_deg,
            b + grid.az_half_width_deg,
            fine.az * f,
        );
        let els = Self::axis(grid.el_range_deg[0], grid.el_range_deg[1], fine.el * f);
        let max_delay = grid
            .max_delay
            .unwrap_or(1.0 / self.cfg.subcarrier_spacing());
        let taus = Self::axis(0.0, max_delay - fine.delay, fine.delay * f);
        let steer: Vec<Vec<Complex64>> = azs
            .iter()
            .flat_map(|&a| els.iter().map(move |&e| (a, e)))
            .map(|(a, e)| self.spatial_steering(a, e))
            .collect();
        let (na, ne, nt) = (azs.len(), els.len(), taus.len());
        let mut values = vec![0.0; na * ne * nt];
        for (ti, &tau) in taus.iter().enumerate() {
            let proj = self.delay_projection(tau);
            for (ai, row) in steer.chunks(ne).enumerate() {
                for (ei, a) in row.iter().enumerate() {
                    values[(ai * ne + ei) * nt + ti] = self.null_value(&proj, a);
                }
            }
        }
        let idx = |a: usize, e: usize, t: usize| (a * ne + e) * nt + t;
        let mut minima = Vec::new();
        for ai in 0..na {
            for ei in 0..ne {
                for ti in 0..nt {
                    let v = values[idx(ai, ei, ti)];
                    let mut is_min = true;
                    'scan: for da in -1i64..=1 {
                        for de in -1i64..=1 {
                            for dt in -1i64..=1 {
                                if da == 0 && de == 0 && dt == 0 {
                                    continue;
                                }
                                let (a2, e2, t2) = (ai as i64 + da, ei as i64 + de, ti as i64 + dt);
                                if a2 < 0
                                    || e2 < 0
                                    || t2 < 0
                                    || a2 >= na as i64
                                    || e2 >= ne as i64
                                    || t2 >= nt as i64
                                {
                                    continue;
                                }
                                let w = values[idx(a2 as usize, e2 as usize, t2 as usize)];
                                // strict against earlier neighbours so plateaus yield one minimum
                                let earlier = (da, de, dt) < (0, 0, 0);
                                if w < v || (earlier && w == v) {
                                    is_min = false;
                                    break 'scan;
                                }
                            }
                        }
                    }
                    if is_min {
                        minima.push((v, azs[ai], els[ei], taus[ti]));
                    }
                }
            }
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        minima.truncate(d);
        minima.into_iter().map(|(_, a, e, t)| (a, e, t)).collect()
    }

    fn refine(&self, peak: (f64, f64, f64), grid: &SearchGrid, fine: Steps) -> (f64, f64, f64) {
        let f = grid.coarse_factor as i64;
        let (az0, el0, tau0) = peak;
        let mut best = (f64::INFINITY, az0, el0, tau0);
        for dt in -f..=f {
            let tau = tau0 + dt as f64 * fine.delay;
            if tau < 0.0 {
                continue;
            }
            let proj = self.delay_projection(tau);
            for da in -f..=f {
                for de in -f..=f {
                    let az = az0 + da as f64 * fine.az;
                    let el = (el0 + de as f64 * fine.el).clamp(-90.0, 90.0);
                    let v = self.null_value(&proj, &self.spatial_steering(az, el));
                    if v < best.0 {
                        best = (v, az, el, tau);
                    }
                }
            }
        }
        let (v0, az, el, tau) = best;
        let vertex = |lo: f64, hi: f64| {
            let den = lo - 2.0 * v0 + hi;
            if den > 0.0 {
                (0.5 * (lo - hi) / den).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let az_r = az
            + fine.az
                * vertex(
                    self.eval(az - fine.az, el, tau),
                    self.eval(az + fine.az, el, tau),
                );
        let el_r = if el.abs() >= 90.0 {
            el
        } else {
            el + fine.el
                * vertex(
                    self.eval(az, el - fine.el, tau),
                    self.eval(az, el + fine.el, tau),
                )
        };
        let tau_r = tau
            + fine.delay
                * vertex(
                    self.eval(az, el, tau - fine.delay),
                    self.eval(az, el, tau + fine.delay),
                );
        (az_r, el_r, tau_r)
    }
}

/// Least-squares powers `p` minimizing `|R - noise*I - sum_j p_j s_j s_j^H|_F`.
fn fit_powers(
    r: &DMatrix<Complex64>,
    noise: f64,
    found: &[(f64, f64, f64)],
    spectrum: &Spectrum<'_>,
) -> Vec<f64> {
    let d = found.len();
    if d == 0 {
        return Vec::new();
    }
    let steer: Vec<nalgebra::DVector<Complex64>> = found
        .iter()
        .map(|&(a, e, t)| nalgebra::DVector::from_vec(spectrum.steering(a, e, t)))
        .collect();
    let gram = DMatrix::from_fn(d, d, |i, j| steer[i].dotc(&steer[j]).norm_sqr());
    let rhs = nalgebra::DVector::from_fn(d, |i, _| {
        let s = &steer[i];
        (s.adjoint() * r * s)[(0, 0)].re - noise * s.norm_squared()
    });
    match gram.clone().lu().solve(&rhs) {
        Some(p) => p.iter().map(|&x| x.max(0.0)).collect(),
        None => (0..d).map(|i| (rhs[i] / gram[(i, i)]).max(0.0)).collect(),
    }
}
