use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::music::EstimatedPath;
use super::FeatureError;
use crate::channel::PathComponent;

/// Fingerprint feature of one link: the maximum-power path's RSS (dBm),
/// azimuth and elevation of arrival (degrees) and ToA (nanoseconds).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpFeature {
    pub rss: f64,
    pub aaoa: f64,
    pub eaoa: f64,
    pub toa: f64,
}

impl MpFeature {
    pub fn to_array(&self) -> [f64; 4] {
        [self.rss, self.aaoa, self.eaoa, self.toa]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            rss: v[0],
            aaoa: v[1],
            eaoa: v[2],
            toa: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// Higher power first; ties go to the earlier arrival, then to angles so the
/// choice never depends on input order.
fn stronger(a: &MpFeature, b: &MpFeature) -> Ordering {
    b.rss
        .total_cmp(&a.rss)
        .then(a.toa.total_cmp(&b.toa))
        .then(a.aaoa.total_cmp(&b.aaoa))
        .then(a.eaoa.total_cmp(&b.eaoa))
}

fn pick(features: impl Iterator<Item = MpFeature>) -> Result<MpFeature, FeatureError> {
    let best = features.min_by(stronger).ok_or(FeatureError::Outage)?;
    if !best.is_finite() {
        return Err(FeatureError::InvalidInput(format!(
            "non-finite MP feature {best:?}"
        )));
    }
    Ok(best)
}

pub fn extract_mp(paths: &[EstimatedPath]) -> Result<MpFeature, FeatureError> {
    pick(paths.iter().map(|p| MpFeature {
        rss: p.power_dbm,
        aaoa: p.aaoa,
        eaoa: p.eaoa,
        toa: p.toa * 1e9,
    }))
}

/// MP selection straight from simulator truth, bypassing estimation.
pub fn oracle_features(paths: &[PathComponent]) -> Result<MpFeature, FeatureError> {
    pick(paths.iter().map(|p| MpFeature {
        rss: p.power_dbm,
        aaoa: p.aaoa,
        eaoa: p.eaoa,
        toa: p.delay * 1e9,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{trace_paths, Partition, PartitionPlane, PathKind, Point3, Scene};

    fn est(power: f64, toa_ns: f64, az: f64) -> EstimatedPath {
        EstimatedPath {
            aaoa: az,
            eaoa: 0.0,
            toa: toa_ns * 1e-9,
            power_dbm: power,
        }
    }

    #[test]
    fn singleton() {
        let f = extract_mp(&[est(-70.0, 12.0, 5.0)]).unwrap();
        assert_eq!(f.rss, -70.0);
        assert!((f.toa - 12.0).abs() < 1e-12);
    }

    #[test]
    fn max_power_wins() {
        let f = extract_mp(&[est(-70.0, 5.0, 1.0), est(-60.0, 9.0, 2.0)]).unwrap();
        assert_eq!(f.rss, -60.0);
        assert_eq!(f.aaoa, 2.0);
    }

    #[test]
    fn tie_goes_to_earlier_path() {
        let a = [est(-65.0, 9.0, 1.0), est(-65.0, 4.0, 2.0)];
        assert_eq!(extract_mp(&a).unwrap().aaoa, 2.0);
        let b = [a[1], a[0]];
        assert_eq!(extract_mp(&b).unwrap(), extract_mp(&a).unwrap());
    }

    #[test]
    fn empty_is_outage() {
        assert!(matches!(extract_mp(&[]), Err(FeatureError::Outage)));
        assert!(matches!(oracle_features(&[]), Err(FeatureError::Outage)));
    }

    #[test]
    fn oracle_prefers_los() {
        let scene = Scene::new([0.0, 0.0], 6.0, 5.0, 3.0);
        let tx = Point3::new(1.0, 1.0, 1.5);
        let rx = Point3::new(4.0, 4.0, 2.8);
        let paths = trace_paths(&scene, &tx, &rx, 3, 1).unwrap();
        let los = paths.iter().find(|p| p.kind == PathKind::Los).unwrap();
        let f = oracle_features(&paths).unwrap();
        assert_eq!(f.rss, los.power_dbm);
        assert_eq!(f.toa, los.delay * 1e9);
    }

    #[test]
    fn oracle_falls_back_to_reflection() {
        // wall-to-wall partition with reflections limited to order 1
        let scene = Scene::new([0.0, 0.0], 6.0, 5.0, 3.0).with_partition(Partition::new(
            PartitionPlane::X,
            3.0,
            [0.0, 5.0],
            [0.0, 3.0],
        ));
        let tx = Point3::new(1.0, 2.0, 1.5);
        let rx = Point3::new(5.0, 2.0, 2.8);
        let paths = trace_paths(&scene, &tx, &rx, 1, 1).unwrap();
        assert!(paths.iter().all(|p| p.kind != PathKind::Los));
        if let Some(top) = paths.first() {
            let f = oracle_features(&paths).unwrap();
            assert_eq!(f.rss, top.power_dbm);
        }
    }
}
