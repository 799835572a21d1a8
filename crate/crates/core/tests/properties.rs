//! Property tests over randomly generated streams, kernels and configs.

mod common;

use hawkes_lob::event_data::parse_csv_str;
use hawkes_lob::model::{intensity_at, log_likelihood};
use hawkes_lob::simulate::{simulate, SimConfig};
use hawkes_lob::strategy::{pnl_from_trades, run_backtest, StrategyConfig};
use hawkes_lob::{Event, EventStream, HawkesModel, KernelSpec, Side};
use proptest::prelude::*;

fn side() -> impl Strategy<Value = Side> {
    prop_oneof![Just(Side::Buy), Just(Side::Sell)]
}

/// Streams on the nanosecond grid with optional prices and sizes.
fn stream() -> impl Strategy<Value = EventStream> {
    (
        prop::collection::vec(
            (
                1u64..5_000_000_000u64,
                side(),
                prop::option::of(1u32..200_000u32),
                prop::option::of(1u32..1000u32),
            ),
            0..60,
        ),
        0u64..1_000_000_000u64,
    )
        .prop_map(|(rows, extra)| {
            let mut rows = rows;
            rows.sort_by_key(|r| r.0);
            rows.dedup_by_key(|r| (r.0, r.1));
            let last = rows.last().map_or(1, |r| r.0);
            let events = rows
                .iter()
                .map(|&(ns, s, p, q)| Event {
                    time: ns as f64 / 1e9,
                    side: s,
                    price: p.map(|c| c as f64 / 100.0),
                    size: q.map(f64::from),
                })
                .collect();
            EventStream::new(events, (last + extra) as f64 / 1e9).unwrap()
        })
}

fn exponential_model() -> impl Strategy<Value = HawkesModel> {
    (
        [0.05f64..3.0, 0.05f64..3.0],
        [0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0],
        [0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0],
    )
        .prop_map(|(mu, a, b)| {
            HawkesModel::exponential(mu, [[a[0], a[1]], [a[2], a[3]]], [[b[0], b[1]], [b[2], b[3]]]).unwrap()
        })
}

fn power_law_model() -> impl Strategy<Value = HawkesModel> {
    (
        [0.05f64..3.0, 0.05f64..3.0],
        [0.0f64..0.05, 0.0f64..0.05, 0.0f64..0.05, 0.0f64..0.05],
        [1.01f64..4.0, 1.01f64..4.0, 1.01f64..4.0, 1.01f64..4.0],
        [0.001f64..0.5, 0.001f64..0.5, 0.001f64..0.5, 0.001f64..0.5],
    )
        .prop_map(|(mu, a, b, e)| {
            HawkesModel::power_law(
                mu,
                [[a[0], a[1]], [a[2], a[3]]],
                [[b[0], b[1]], [b[2], b[3]]],
                [[e[0], e[1]], [e[2], e[3]]],
            )
            .unwrap()
        })
}

fn any_model() -> impl Strategy<Value = HawkesModel> {
    prop_oneof![exponential_model(), power_law_model()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(s in stream()) {
        let text = s.to_csv_string(&[]);
        let back = parse_csv_str(&text, &Default::default()).unwrap();
        prop_assert_eq!(back, s);
    }

    #[test]
    fn split_conserves_count(s in stream()) {
        let (b, sell) = s.split_by_side();
        prop_assert_eq!(b.len() + sell.len(), s.len());
    }

    #[test]
    fn kernels_decay_monotonically(
        alpha in 0.0f64..5.0,
        beta in 0.05f64..5.0,
        eps in 1e-4f64..1.0,
        t1 in 0.0f64..50.0,
        dt in 0.0f64..50.0,
    ) {
        for k in [
            KernelSpec::exponential(alpha, beta).unwrap(),
            KernelSpec::power_law(alpha, beta, eps).unwrap(),
        ] {
            let a = k.evaluate(t1).unwrap();
            let b = k.evaluate(t1 + dt).unwrap();
            prop_assert!(a >= b && b >= 0.0);
        }
    }

    #[test]
    fn integral_derivative_is_kernel(
        alpha in 0.01f64..5.0,
        beta in 0.05f64..5.0,
        eps in 0.05f64..1.0,
        tau in 1e-3f64..10.0,
    ) {
        let h = 1e-5;
        for k in [
            KernelSpec::exponential(alpha, beta).unwrap(),
            KernelSpec::power_law(alpha, beta, eps).unwrap(),
        ] {
            let fd = (k.integrate(tau + h).unwrap() - k.integrate((tau - h).max(0.0)).unwrap())
                / (tau + h - (tau - h).max(0.0));
            prop_assert!((fd - k.evaluate(tau).unwrap()).abs() < 1e-6 * (1.0 + alpha / eps.powf(beta)));
        }
    }

    #[test]
    fn exchange_symmetry_is_exact(m in any_model(), s in stream()) {
        let a = log_likelihood(&m, &s).unwrap();
        let b = log_likelihood(&m.swapped(), &s.swap_sides()).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn left_limit_plus_jump(m in any_model(), s in stream()) {
        let ev = s.events();
        for (k, e) in ev.iter().enumerate() {
            let alone = ev.iter().enumerate().all(|(l, o)| l == k || o.time != e.time);
            if !alone {
                continue;
            }
            let before = intensity_at(&m, &s, e.time, false).unwrap();
            let after = intensity_at(&m, &s, e.time, true).unwrap();
            for i in 0..2 {
                let jump = m.kernel(i, e.side.index()).evaluate(0.0).unwrap();
                prop_assert!((before[i] + jump - after[i]).abs() <= 1e-12 * after[i]);
            }
        }
    }

    #[test]
    fn simulated_streams_are_valid(m in exponential_model(), seed in 0u64..1000, horizon in 1.0f64..50.0) {
        let cfg = SimConfig { allow_nonstationary: true, max_events: 5000, ..SimConfig::new(horizon, seed) };
        let sim = simulate(&m, &cfg).unwrap();
        let mut last = [0.0f64; 2];
        for e in sim.stream.events() {
            prop_assert!(e.time > 0.0 && e.time <= horizon);
            prop_assert!(e.time > last[e.side.index()]);
            last[e.side.index()] = e.time;
        }
        prop_assert_eq!(EventStream::new(sim.stream.events().to_vec(), horizon).unwrap(), sim.stream);
    }

    #[test]
    fn backtest_inventory_and_conservation(
        m in exponential_model(),
        seed in 0u64..1000,
        max_inventory in 0.5f64..4.0,
        scaling in any::<bool>(),
        fee in 0.0f64..0.02,
    ) {
        let raw = simulate(&m, &SimConfig { allow_nonstationary: true, max_events: 3000, ..SimConfig::new(100.0, seed) })
            .unwrap()
            .stream;
        let s = common::with_prices(&raw, seed, 10_000, 0.01);
        let cfg = StrategyConfig {
            max_inventory,
            size_intensity_scaling: scaling,
            fee_per_trade: fee,
            threshold_multiplier: 2.0,
            ..StrategyConfig::default()
        };
        let r = run_backtest(&m, &s, &cfg).unwrap();
        let mut inv = 0.0f64;
        for t in &r.trades {
            inv += if t.side == Side::Buy { t.size } else { -t.size };
            prop_assert!(inv.abs() <= max_inventory * (1.0 + 1e-12));
            prop_assert!(t.time >= 0.0 && t.time <= s.horizon());
        }
        let last = s.last_price().unwrap_or(0.0);
        prop_assert!((pnl_from_trades(&r.trades, fee, last) - r.total_pnl).abs() < 1e-9);
        prop_assert!(r.pnl_series.windows(2).all(|w| w[0].time <= w[1].time));
    }
}
