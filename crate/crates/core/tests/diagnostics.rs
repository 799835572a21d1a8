mod common;

use common::*;
use hawkes_lob::diagnostics::{
    compare_kernels_seeded, export_intensity, ks_statistic, residuals, winner, INTENSITY_CSV_HEADER,
};
use hawkes_lob::estimate::{fit, FitConfig};
use hawkes_lob::model::intensity_at;
use hawkes_lob::simulate::{simulate, SimConfig};
use hawkes_lob::{EventStream, HawkesModel, KernelKind, Side};
use rayon::prelude::*;

#[test]
fn poisson_residuals_pass_on_own_data() {
    let m = HawkesModel::poisson([1.0, 1.0]).unwrap();
    let passes = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let s = simulate(&m, &SimConfig::new(1000.0, seed)).unwrap().stream;
            residuals(&m, &s, Side::Buy).unwrap().pass
        })
        .count();
    assert!(passes >= 95, "{passes}/100");
}

#[test]
fn fitted_model_residuals_pass() {
    let truth = sym_exponential(0.5, 0.4, 2.0);
    let passes = (0..50u64)
        .into_par_iter()
        .filter(|&seed| {
            let s = simulate(&truth, &SimConfig::new(500.0, 100 + seed)).unwrap().stream;
            let r = fit(
                &s,
                &FitConfig::new(KernelKind::Exponential).with_restarts(2).with_seed(seed),
            )
            .unwrap();
            residuals(&r.model, &s, Side::Buy).unwrap().pass
        })
        .count();
    assert!(passes >= 45, "{passes}/50");
}

#[test]
fn residual_count_is_events_minus_one() {
    let m = sym_exponential(0.5, 0.4, 2.0);
    let s = simulate(&m, &SimConfig::new(100.0, 1)).unwrap().stream;
    for side in Side::BOTH {
        assert_eq!(residuals(&m, &s, side).unwrap().n_residuals, s.count(side) - 1);
    }
}

#[test]
fn ks_examples() {
    let n = 99;
    let quantiles: Vec<f64> = (1..=n).map(|k| -(1.0 - k as f64 / (n as f64 + 1.0)).ln()).collect();
    assert!(ks_statistic(&quantiles).unwrap() < 0.02);
    assert!((ks_statistic(&[2f64.ln()]).unwrap() - 0.5).abs() < 1e-15);
    assert!(ks_statistic(&[1000.0; 10]).unwrap() >= 0.63);
}

#[test]
fn winner_follows_sign_of_delta_aic() {
    for d in [-3.0, -1e-9, 1e-9, 4.0] {
        let w = winner(100.0, 100.0 + d);
        assert_eq!(w == KernelKind::PowerLaw, d < 0.0);
    }
}

#[test]
fn comparison_is_deterministic_and_consistent() {
    let truth = HawkesModel::power_law(
        [0.5; 2],
        [[0.015, 0.005], [0.005, 0.015]],
        [[1.5; 2]; 2],
        [[0.01; 2]; 2],
    )
    .unwrap();
    let s = simulate(&truth, &SimConfig::new(200.0, 4)).unwrap().stream;
    let a = compare_kernels_seeded(&s, 3).unwrap();
    let b = compare_kernels_seeded(&s, 3).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    assert_eq!(a.delta_aic, a.power_law.aic - a.exponential.aic);
    assert_eq!(a.winner, winner(a.exponential.aic, a.power_law.aic));
    assert_eq!(a.residuals.exponential.len(), 2);
}

#[test]
fn exported_csv_matches_intensity_at() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("i.csv");
    let svg = dir.path().join("i.svg");
    let m = HawkesModel::exponential([0.3, 0.2], [[0.8, 0.1], [0.2, 0.5]], [[2.0, 1.0], [3.0, 1.5]]).unwrap();
    let s = simulate(&m, &SimConfig::new(30.0, 2)).unwrap().stream;
    export_intensity(&m, &s, 0.25, &csv, Some(&svg)).unwrap();
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(INTENSITY_CSV_HEADER));
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let inc = intensity_at(&m, &s, v[0].min(s.horizon()), true).unwrap();
        let exc = intensity_at(&m, &s, v[0].min(s.horizon()), false).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9;
        // rounding the time to 9 decimals can land on either side of an event
        assert!(
            (close(v[1], inc[0]) && close(v[2], inc[1])) || (close(v[1], exc[0]) && close(v[2], exc[1])),
            "{line}"
        );
    }
    let svg = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert!(!svg.contains("href"));
}

#[test]
fn empty_stream_exports_flat_lines() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("i.csv");
    let m = sym_exponential(0.5, 0.3, 1.0);
    let s = EventStream::empty(2.0).unwrap();
    let samples = export_intensity(&m, &s, 0.5, &csv, None).unwrap();
    assert_eq!(samples.len(), 5);
    let text = std::fs::read_to_string(&csv).unwrap();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(",0.500000000,0.500000000"), "{line}");
    }
}
