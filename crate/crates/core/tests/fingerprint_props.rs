use proptest::prelude::*;
use wrf_core::features::MpFeature;
use wrf_core::fingerprint::{assemble, build_grid, grid_count, Area, FingerprintBase, GridSpec};

fn feature() -> impl Strategy<Value = MpFeature> {
    (
        -120.0f64..-30.0,
        -180.0f64..180.0,
        -90.0f64..90.0,
        0.0f64..100.0,
    )
        .prop_map(|(rss, aaoa, eaoa, toa)| MpFeature {
            rss,
            aaoa,
            eaoa,
            toa,
        })
}

proptest! {
    #[test]
    fn grid_size_formula(w_steps in 0usize..30, d_steps in 0usize..30, interval in prop::sample::select(vec![0.1, 0.2, 0.25, 0.5, 1.0])) {
        let area = Area { origin: [-1.5, 2.0], width: w_steps as f64 * interval, depth: d_steps as f64 * interval };
        let g = build_grid(&area, interval);
        prop_assert_eq!(g.len(), (w_steps + 1) * (d_steps + 1));
        prop_assert_eq!(grid_count(area.width, interval), w_steps + 1);
        let spec = GridSpec { origin: area.origin, interval };
        prop_assert!(g.iter().all(|&p| area.contains(p) && spec.on_grid(p)));
    }

    #[test]
    fn assemble_then_split_is_identity(
        nx in 1usize..5,
        ny in 1usize..5,
        n_aps in 1usize..4,
        seed_rows in prop::collection::vec(prop::collection::vec(feature(), 3), 16),
    ) {
        let area = Area { origin: [0.0, 0.0], width: (nx - 1) as f64 * 0.5, depth: (ny - 1) as f64 * 0.5 };
        let rps = build_grid(&area, 0.5);
        let sn: Vec<u32> = (0..n_aps as u32).map(|i| 10 + i).collect();
        let features: Vec<Vec<Option<MpFeature>>> = rps
            .iter()
            .enumerate()
            .map(|(i, _)| seed_rows[i % seed_rows.len()][..n_aps].iter().copied().map(Some).collect())
            .collect();
        let a = assemble(&rps, &sn, &features, GridSpec { origin: [0.0, 0.0], interval: 0.5 }, "p").unwrap();
        prop_assert!(a.dropped.is_empty());
        let (coords, ids, back) = a.db.split();
        prop_assert_eq!(coords, rps);
        prop_assert_eq!(ids, sn);
        prop_assert_eq!(back, features);
        let reread = FingerprintBase::from_json(&a.db.to_json().unwrap()).unwrap();
        prop_assert_eq!(reread, a.db);
    }
}

#[test]
fn reference_grid_sizes_for_the_small_room() {
    let area = Area {
        origin: [0.0, 0.0],
        width: 8.0,
        depth: 6.0,
    };
    assert_eq!(build_grid(&area, 0.2).len(), 1271);
    assert_eq!(build_grid(&area, 0.5).len(), 221);
    assert_eq!(build_grid(&area, 1.0).len(), 63);
}
