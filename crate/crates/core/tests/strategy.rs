mod common;

use common::*;
use hawkes_lob::simulate::{simulate, SimConfig};
use hawkes_lob::strategy::{detect_clusters, run_backtest, StrategyConfig};
use hawkes_lob::{Event, EventStream, HawkesModel, Side};
use rand::Rng;

fn clustered_model() -> HawkesModel {
    HawkesModel::exponential([0.3, 0.3], [[0.9, 0.2], [0.2, 0.9]], [[1.5; 2]; 2]).unwrap()
}

fn priced_stream(seed: u64, horizon: f64) -> EventStream {
    let raw = simulate(&clustered_model(), &SimConfig::new(horizon, seed))
        .unwrap()
        .stream;
    with_prices(&raw, seed + 1, 10_000, 0.01)
}

#[test]
fn decisions_before_a_cut_ignore_later_events() {
    let model = clustered_model();
    let s = priced_stream(31, 400.0);
    let cfg = StrategyConfig::default();
    let full_clusters = detect_clusters(&model, &s, &cfg);
    let full = run_backtest(&model, &s, &cfg).unwrap();
    let mut r = rng(5);
    for _ in 0..10 {
        let cut = r.random_range(10.0..390.0);
        let part = s.truncated(cut).unwrap();
        let clusters = detect_clusters(&model, &part, &cfg);
        let early = |c: &&hawkes_lob::strategy::ClusterEvent| c.start <= cut;
        let a: Vec<_> = full_clusters
            .iter()
            .filter(early)
            .map(|c| (c.side, c.start, c.open_intensity))
            .collect();
        let b: Vec<_> = clusters
            .iter()
            .filter(early)
            .map(|c| (c.side, c.start, c.open_intensity))
            .collect();
        assert_eq!(a, b);
        let closed = |c: &&hawkes_lob::strategy::ClusterEvent| c.end < cut;
        let a: Vec<_> = full_clusters.iter().filter(closed).collect();
        let b: Vec<_> = clusters.iter().filter(closed).collect();
        assert_eq!(a, b);
        let trades = run_backtest(&model, &part, &cfg).unwrap().trades;
        let a: Vec<_> = full.trades.iter().filter(|t| t.time < cut).collect();
        let b: Vec<_> = trades.iter().filter(|t| t.time < cut).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn large_fees_lose_money_inside_a_one_offset_band() {
    let model = clustered_model();
    for seed in 0..10u64 {
        let raw = simulate(&model, &SimConfig::new(300.0, 40 + seed)).unwrap().stream;
        let mut r = rng(seed);
        let events = raw
            .events()
            .iter()
            .map(|e| Event::with_price(e.time, e.side, if r.random_bool(0.5) { 100.0 } else { 100.01 }))
            .collect();
        let s = EventStream::new(events, raw.horizon()).unwrap();
        let cfg = StrategyConfig {
            fee_per_trade: 0.0101,
            threshold_multiplier: 2.0,
            ..StrategyConfig::default()
        };
        let rep = run_backtest(&model, &s, &cfg).unwrap();
        assert!(rep.total_pnl <= 0.0, "seed {seed}: {}", rep.total_pnl);
    }
}

#[test]
fn no_clusters_means_no_trades() {
    let model = HawkesModel::poisson([0.5, 0.5]).unwrap();
    let raw = simulate(&model, &SimConfig::new(100.0, 1)).unwrap().stream;
    let s = with_prices(&raw, 2, 10_000, 0.01);
    let rep = run_backtest(&model, &s, &StrategyConfig::default()).unwrap();
    assert_eq!(rep.n_clusters_detected, 0);
    assert!(rep.trades.is_empty());
    assert_eq!(rep.total_pnl, 0.0);
    assert_eq!(rep.max_drawdown, 0.0);
}

#[test]
fn order_sizes_scale_with_intensity_and_respect_cap() {
    let model = clustered_model();
    let s = priced_stream(8, 600.0);
    let cfg = StrategyConfig {
        size_intensity_scaling: true,
        max_inventory: 1.5,
        ..StrategyConfig::default()
    };
    let rep = run_backtest(&model, &s, &cfg).unwrap();
    assert!(rep.trades.iter().any(|t| t.size > 1.0));
    let mut inv = 0.0f64;
    for t in &rep.trades {
        inv += if t.side == Side::Buy { t.size } else { -t.size };
        assert!(inv.abs() <= 1.5 + 1e-12);
    }
    assert_eq!(inv, rep.final_inventory);
}

#[test]
fn clusters_are_well_formed() {
    let model = clustered_model();
    let s = priced_stream(12, 500.0);
    let cfg = StrategyConfig::default();
    let cl = detect_clusters(&model, &s, &cfg);
    assert!(!cl.is_empty());
    for side in Side::BOTH {
        let mine: Vec<_> = cl.iter().filter(|c| c.side == side).collect();
        for c in &mine {
            assert!(c.start < c.end);
            assert!(c.peak_intensity >= c.open_intensity);
            assert!(c.open_intensity >= 3.0 * model.mu()[side.index()]);
        }
        for w in mine.windows(2) {
            assert!(w[0].end <= w[1].start);
        }
    }
}
