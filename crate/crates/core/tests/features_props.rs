use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use proptest::prelude::*;
use wrf_core::channel::{synthesize_csi, CsiConfig, CsiSnapshot, LinkId, PathComponent, PathKind};
use wrf_core::features::{extract_mp, fb_smooth, EstimatedPath, MpFeature, SubarrayDims};

fn cfg() -> CsiConfig {
    CsiConfig {
        n_subcarriers: 12,
        n_snapshots: 2,
        snr_db: 20.0,
        ..CsiConfig::default()
    }
}

const DIMS: SubarrayDims = SubarrayDims {
    rows: 2,
    cols: 3,
    taps: 5,
};

fn path_set() -> impl Strategy<Value = Vec<PathComponent>> {
    prop::collection::vec(
        (
            1e-3f64..1.0,
            -PI..PI,
            1e-9f64..3e-9,
            0.0f64..180.0,
            -60.0f64..60.0,
        ),
        1..4,
    )
    .prop_map(|v| {
        v.into_iter()
            .map(|(g, ph, d, a, e)| PathComponent {
                kind: PathKind::Reflection,
                order: 1,
                gain: Complex64::from_polar(g, ph),
                delay: d,
                aaoa: a,
                eaoa: e,
                power_dbm: 0.0,
                walls: vec![],
                interactions: vec![],
            })
            .collect()
    })
}

fn rotate(snaps: &[CsiSnapshot], theta: f64) -> Vec<CsiSnapshot> {
    let r = Complex64::from_polar(1.0, theta);
    snaps
        .iter()
        .map(|s| CsiSnapshot {
            h: s.h.iter().map(|c| c * r).collect(),
            ..s.clone()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn smoothed_covariance_structure(paths in path_set(), seed in 0u64..1000) {
        let c = cfg();
        let snaps = synthesize_csi(&paths, &c, LinkId::default(), seed).unwrap();
        let cov = fb_smooth(&snaps, &c.rx_array, DIMS).unwrap();
        let r = &cov.r;
        let n = r.nrows();
        prop_assert_eq!(n, DIMS.len());
        let scale = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for a in 0..n {
            for b in 0..n {
                prop_assert!((r[(a, b)] - r[(b, a)].conj()).norm() <= 1e-12 * scale);
                prop_assert!((r[(a, b)] - r[(n - 1 - a, n - 1 - b)].conj()).norm() <= 1e-12 * scale);
            }
        }
        let eig = SymmetricEigen::new(r.clone());
        let trace: f64 = (0..n).map(|i| r[(i, i)].re).sum();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10 * trace));
    }

    #[test]
    fn common_phase_does_not_change_covariance(paths in path_set(), seed in 0u64..1000, theta in -PI..PI) {
        let c = cfg();
        let snaps = synthesize_csi(&paths, &c, LinkId::default(), seed).unwrap();
        let a = fb_smooth(&snaps, &c.rx_array, DIMS).unwrap().r;
        let b = fb_smooth(&rotate(&snaps, theta), &c.rx_array, DIMS).unwrap().r;
        let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
        prop_assert!((a - b).iter().all(|d| d.norm() <= 1e-12 * scale));
    }

    #[test]
    fn mp_choice_ignores_order(
        raw in prop::collection::vec((-100.0f64..-40.0, -180.0f64..180.0, -90.0f64..90.0, 0.0f64..1e-7), 1..10),
        rot in 0usize..10,
    ) {
        let paths: Vec<EstimatedPath> = raw
            .iter()
            .map(|&(p, a, e, t)| EstimatedPath { power_dbm: p, aaoa: a, eaoa: e, toa: t })
            .collect();
        let mut shuffled = paths.clone();
        shuffled.rotate_left(rot % paths.len());
        shuffled.reverse();
        let a = extract_mp(&paths).unwrap();
        prop_assert_eq!(a, extract_mp(&shuffled).unwrap());
        let best = raw.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(a.rss, best);
    }
}

#[test]
fn mp_ties_go_to_earlier_arrival() {
    let p = |toa: f64| EstimatedPath {
        power_dbm: -50.0,
        aaoa: 10.0,
        eaoa: 0.0,
        toa,
    };
    let mp = extract_mp(&[p(20e-9), p(12e-9)]).unwrap();
    assert_eq!(
        mp,
        MpFeature {
            rss: -50.0,
            aaoa: 10.0,
            eaoa: 0.0,
            toa: 12e-9 * 1e9
        }
    );
    assert!(extract_mp(&[]).is_err());
}
