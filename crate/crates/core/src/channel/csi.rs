use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::trace::PathComponent;
use super::ChannelError;

/// Uniform rectangular receive array mounted in a vertical plane.
///
/// Columns run horizontally, perpendicular to `boresight_deg`; rows run
/// vertically. Element `(r, c)` is indexed as `r * cols + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UraGeometry {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    /// Azimuth the array faces, degrees.
    pub boresight_deg: f64,
}

impl Default for UraGeometry {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 4,
            spacing: 0.5,
            boresight_deg: 90.0,
        }
    }
}

impl UraGeometry {
    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Per-wavelength phase slopes `(horizontal, vertical)` for a plane wave
    /// arriving from `(aaoa, eaoa)` degrees.
    pub fn direction_cosines(&self, aaoa: f64, eaoa: f64) -> (f64, f64) {
        let (a, e, b) = (
            aaoa.to_radians(),
            eaoa.to_radians(),
            self.boresight_deg.to_radians(),
        );
        // horizontal array axis is (sin b, -cos b, 0)
        (e.cos() * (b - a).sin(), e.sin())
    }

    /// Phase of element `(row, col)` relative to element `(0, 0)`, radians.
    pub fn element_phase(&self, row: usize, col: usize, aaoa: f64, eaoa: f64) -> f64 {
        let (h, v) = self.direction_cosines(aaoa, eaoa);
        2.0 * PI * self.spacing * (col as f64 * h + row as f64 * v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiConfig {
    pub carrier_freq: f64,
    pub bandwidth: f64,
    pub n_subcarriers: usize,
    pub rx_array: UraGeometry,
    pub snr_db: f64,
    pub n_snapshots: usize,
    /// Transmit power the path gains are referenced to.
    pub tx_power_dbm: f64,
}

impl Default for CsiConfig {
    fn default() -> Self {
        Self {
            carrier_freq: 60e9,
            bandwidth: 3e9,
            n_subcarriers: 256,
            rx_array: UraGeometry::default(),
            snr_db: 30.0,
            n_snapshots: 4,
            tx_power_dbm: 0.0,
        }
    }
}

impl CsiConfig {
    /// T_s = 1 / bandwidth.
    pub fn sample_interval(&self) -> f64 {
        1.0 / self.bandwidth
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.n_subcarriers as f64
    }

    /// Baseband offset of subcarrier `k` from the first subcarrier.
    pub fn subcarrier_freq(&self, k: usize) -> f64 {
        k as f64 * self.subcarrier_spacing()
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let bad = |m: &str| Err(ChannelError::InvalidConfig(m.to_string()));
        if self.n_subcarriers < 2 {
            return bad("need at least 2 subcarriers");
        }
        if !(self.bandwidth > 0.0 && self.carrier_freq > 0.0) {
            return bad("bandwidth and carrier frequency must be positive");
        }
        let a = &self.rx_array;
        if a.rows == 0 || a.cols == 0 {
            return bad("receive array needs at least one element");
        }
        if !(a.spacing > 0.0 && a.spacing <= 0.5) {
            return bad("element spacing must lie in (0, 0.5] wavelengths");
        }
        if !self.snr_db.is_finite() {
            return bad("snr_db must be finite");
        }
        if self.n_snapshots == 0 {
            return bad("need at least one snapshot");
        }
        Ok(())
    }
}

/// Identifies the link a snapshot was taken on.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinkId {
    pub tx: [f64; 3],
    pub ap: u32,
}

/// One noisy CSI realization `Y = H + noise` with an all-ones pilot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiSnapshot {
    pub n_subcarriers: usize,
    pub n_elements: usize,
    /// Row-major `[subcarrier][element]`.
    #[serde(with = "complex_vec")]
    pub h: Vec<Complex64>,
    pub noise_var: f64,
    pub link: LinkId,
}

impl CsiSnapshot {
    pub fn at(&self, k: usize, m: usize) -> Complex64 {
        self.h[k * self.n_elements + m]
    }
}

/// Noiseless channel matrix, row-major `[subcarrier][element]`.
pub fn channel_matrix(paths: &[PathComponent], cfg: &CsiConfig) -> Vec<Complex64> {
    let arr = &cfg.rx_array;
    let m_count = arr.n_elements();
    let mut h = vec![Complex64::new(0.0, 0.0); cfg.n_subcarriers * m_count];
    for p in paths {
        let steering: Vec<Complex64> = (0..m_count)
            .map(|m| {
                Complex64::from_polar(
                    1.0,
                    arr.element_phase(m / arr.cols, m % arr.cols, p.aaoa, p.eaoa),
                )
            })
            .collect();
        for k in 0..cfg.n_subcarriers {
            let delay_term =
                p.gain * Complex64::from_polar(1.0, -2.0 * PI * cfg.subcarrier_freq(k) * p.delay);
            let row = &mut h[k * m_count..(k + 1) * m_count];
            for (cell, s) in row.iter_mut().zip(&steering) {
                *cell += delay_term * s;
            }
        }
    }
    h
}

pub fn synthesize_csi_noiseless(
    paths: &[PathComponent],
    cfg: &CsiConfig,
    link: LinkId,
) -> Result<CsiSnapshot, ChannelError> {
    cfg.validate()?;
    if paths.is_empty() {
        return Err(ChannelError::EmptyChannel);
    }
    Ok(CsiSnapshot {
        n_subcarriers: cfg.n_subcarriers,
        n_elements: cfg.rx_array.n_elements(),
        h: channel_matrix(paths, cfg),
        noise_var: 0.0,
        link,
    })
}

/// Draws `cfg.n_snapshots` noisy realizations of the channel. Noise power per
/// entry is the mean `|H|^2` scaled down by `snr_db`.
pub fn synthesize_csi(
    paths: &[PathComponent],
    cfg: &CsiConfig,
    link: LinkId,
    seed: u64,
) -> Result<Vec<CsiSnapshot>, ChannelError> {
    let clean = synthesize_csi_noiseless(paths, cfg, link)?;
    let mean_power = clean.h.iter().map(|c| c.norm_sqr()).sum::<f64>() / clean.h.len() as f64;
    let noise_var = mean_power / 10f64.powf(cfg.snr_db / 10.0);
    let normal = Normal::new(0.0, (noise_var / 2.0).sqrt())
        .map_err(|e| ChannelError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..cfg.n_snapshots)
        .map(|_| {
            let h = clean
                .h
                .iter()
                .map(|c| c + Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng)))
                .collect();
            CsiSnapshot {
                h,
                noise_var,
                ..clean.clone()
            }
        })
        .collect())
}

mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::PathKind;

    fn path(gain: Complex64, delay: f64, aaoa: f64, eaoa: f64) -> PathComponent {
        PathComponent {
            kind: PathKind::Los,
            order: 0,
            gain,
            delay,
            aaoa,
            eaoa,
            power_dbm: 0.0,
            walls: vec![],
            interactions: vec![],
        }
    }

    fn single_element() -> CsiConfig {
        CsiConfig {
            rx_array: UraGeometry {
                rows: 1,
                cols: 1,
                ..Default::default()
            },
            n_subcarriers: 16,
            ..Default::default()
        }
    }

    #[test]
    fn zero_delay_is_flat() {
        let cfg = single_element();
        let s = synthesize_csi_noiseless(
            &[path(Complex64::new(1.0, 0.0), 0.0, 10.0, 0.0)],
            &cfg,
            LinkId::default(),
        )
        .unwrap();
        for k in 0..cfg.n_subcarriers {
            assert_eq!(s.at(k, 0), Complex64::new(1.0, 0.0));
        }
    }

    #[test]
    fn delay_gives_linear_phase() {
        let cfg = single_element();
        let tau = 3.3e-9;
        let s = synthesize_csi_noiseless(
            &[path(Complex64::new(1.0, 0.0), tau, 0.0, 0.0)],
            &cfg,
            LinkId::default(),
        )
        .unwrap();
        let slope = -2.0 * PI * cfg.subcarrier_spacing() * tau;
        for k in 1..cfg.n_subcarriers {
            let step = (s.at(k, 0) / s.at(k - 1, 0)).arg();
            let expected = Complex64::from_polar(1.0, slope).arg();
            assert!((step - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn half_spacing_delay_alternates() {
        let cfg = single_element();
        let tau = 1.0 / (2.0 * cfg.subcarrier_spacing());
        let s = synthesize_csi_noiseless(
            &[
                path(Complex64::new(1.0, 0.0), 0.0, 0.0, 0.0),
                path(Complex64::new(1.0, 0.0), tau, 0.0, 0.0),
            ],
            &cfg,
            LinkId::default(),
        )
        .unwrap();
        for k in 0..cfg.n_subcarriers {
            let expected = if k % 2 == 0 { 2.0 } else { 0.0 };
            assert!((s.at(k, 0).norm() - expected).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn noise_is_seeded() {
        let cfg = CsiConfig {
            n_subcarriers: 8,
            n_snapshots: 3,
            ..Default::default()
        };
        let p = [path(Complex64::new(0.5, 0.1), 4e-9, 30.0, -10.0)];
        let a = synthesize_csi(&p, &cfg, LinkId::default(), 7).unwrap();
        let b = synthesize_csi(&p, &cfg, LinkId::default(), 7).unwrap();
        let c = synthesize_csi(&p, &cfg, LinkId::default(), 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 3);
        assert_ne!(a[0].h, a[1].h);
        let expected = p[0].gain.norm_sqr() / 1e3;
        assert!((a[0].noise_var - expected).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        let mut cfg = CsiConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rx_array.spacing = 0.6;
        assert!(cfg.validate().is_err());
        let cfg = CsiConfig {
            n_subcarriers: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = CsiConfig {
            snr_db: f64::INFINITY,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(synthesize_csi_noiseless(&[], &CsiConfig::default(), LinkId::default()).is_err());
    }
}
