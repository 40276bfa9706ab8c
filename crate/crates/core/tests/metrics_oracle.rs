mod common;

use common::*;
use depthcurr::metrics::write_report_csv;
use depthcurr::{evaluate, Crop, DepthMap, Error, MetricAccumulator};
use proptest::prelude::*;
use rand::Rng;

fn fixture(seed: u64) -> (DepthMap, DepthMap) {
    let mut r = rng(seed);
    let gt = dyadic_raster(&mut r, 16, 16, 0.4);
    // Mostly near the truth, with some far-off and out-of-range predictions.
    let pred = gt
        .data()
        .iter()
        .map(|&d| match r.random_range(0..10) {
            0 => r.random_range(0.0..100.0),
            _ if d > 0.0 => d * r.random_range(0.6..1.6),
            _ => r.random_range(1.0..80.0),
        })
        .collect();
    (gt, DepthMap::new(16, 16, pred).unwrap())
}

#[test]
fn evaluate_matches_per_pixel_oracle_on_100_fixtures() {
    for seed in 0..100 {
        let (gt, pred) = fixture(seed);
        let want = oracle_metrics(gt.data(), pred.data()).unwrap();
        let got = evaluate(&gt, &pred, None).unwrap();
        for (k, (g, w)) in got.values().iter().zip(want).enumerate() {
            assert!(rel_close(*g, w, 1e-9), "seed {seed} column {k}: {g} vs {w}");
        }
        assert_eq!(got.n_valid as usize, gt.valid_count());
    }
}

#[test]
fn identity_prediction_is_perfect() {
    for seed in 0..20 {
        let (gt, _) = fixture(seed);
        let r = evaluate(&gt, &gt, None).unwrap();
        assert_eq!(r.values(), [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}

#[test]
fn crop_matches_oracle_on_the_cropped_window() {
    let (gt, pred) = fixture(5);
    let crop = Crop { top: 3, left: 2, bottom: 12, right: 15 };
    let pick = |m: &DepthMap| -> Vec<f64> {
        (crop.top..crop.bottom).flat_map(|i| m.row(i)[crop.left..crop.right].to_vec()).collect()
    };
    let want = oracle_metrics(&pick(&gt), &pick(&pred)).unwrap();
    let got = evaluate(&gt, &pred, Some(crop)).unwrap();
    for (g, w) in got.values().iter().zip(want) {
        assert!(rel_close(*g, w, 1e-9));
    }
}

#[test]
fn accumulated_batches_equal_the_pooled_oracle() {
    let mut acc = MetricAccumulator::new();
    let (mut all_gt, mut all_pred) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let (gt, pred) = fixture(seed);
        let mut part = MetricAccumulator::new();
        part.add(&gt, &pred, None).unwrap();
        acc.merge(&part);
        all_gt.extend_from_slice(gt.data());
        all_pred.extend_from_slice(pred.data());
    }
    let want = oracle_metrics(&all_gt, &all_pred).unwrap();
    for (g, w) in acc.finish().unwrap().values().iter().zip(want) {
        assert!(rel_close(*g, w, 1e-9));
    }
}

#[test]
fn errors() {
    let z = DepthMap::zeros(4, 4).unwrap();
    assert!(matches!(evaluate(&z, &z, None), Err(Error::EmptyEvaluation)));
    let (gt, _) = fixture(1);
    let mut pred = vec![5.0; 256];
    pred[17] = f64::NAN;
    assert!(matches!(MetricAccumulator::new().add_raw(&gt, &pred, None), Err(Error::NonFinitePrediction(17))));
    assert!(evaluate(&gt, &z, None).is_err());
}

#[test]
fn csv_report() {
    let (gt, pred) = fixture(2);
    let r = evaluate(&gt, &pred, None).unwrap();
    let mut out = Vec::new();
    write_report_csv(&[("run".into(), r)], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.lines().next().unwrap().contains("delta1"));
    assert_eq!(text.lines().count(), 2);
}

proptest! {
    // Ratio metrics are unchanged when both maps are scaled together (inside
    // the clamp range); absolute ones scale linearly.
    #[test]
    fn scale_behaviour(seed in any::<u64>(), s in 0.5f64..2.0) {
        let mut r = rng(seed);
        let gt = DepthMap::from_fn(8, 8, |_, _| if r.random_bool(0.5) { r.random_range(1.0..30.0) } else { 0.0 }).unwrap();
        prop_assume!(gt.valid_count() > 0);
        let pred = DepthMap::from_fn(8, 8, |i, j| gt.get(i, j).max(2.0) * r.random_range(0.8..1.2)).unwrap();
        let scaled = |m: &DepthMap| DepthMap::new(8, 8, m.data().iter().map(|v| v * s).collect()).unwrap();
        let a = evaluate(&gt, &pred, None).unwrap();
        let b = evaluate(&scaled(&gt), &scaled(&pred), None).unwrap();
        prop_assert_eq!([a.delta1, a.delta2, a.delta3], [b.delta1, b.delta2, b.delta3]);
        prop_assert!(rel_close(a.abs_rel, b.abs_rel, 1e-9));
        prop_assert!(rel_close(a.rms_log, b.rms_log, 1e-9) || (a.rms_log - b.rms_log).abs() < 1e-12);
        prop_assert!(rel_close(a.rms * s, b.rms, 1e-9));
        prop_assert!(rel_close(a.sq_rel * s, b.sq_rel, 1e-9));
    }
}
