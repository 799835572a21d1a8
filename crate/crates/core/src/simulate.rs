//! Thinning simulation of a bivariate Hawkes model.
//!
//! Both kernel kinds are non-increasing, so between events the total
//! intensity can only fall: the total intensity at the current time bounds
//! it until the next accepted event. After every rejection the bound is
//! re-evaluated at the rejected time.
//!
//! Randomness comes from ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded with
//! `seed_from_u64`, which is portable and reproducible bit-for-bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_data::{Event, EventStream, Side};
use crate::kernels::{branching_matrix, is_stationary};
use crate::model::intensity::Sweep;
use crate::model::HawkesModel;

pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: f64,
    pub seed: u64,
    pub max_events: usize,
    /// Simulate even when the spectral radius is ≥ 1.
    #[serde(default)]
    pub allow_nonstationary: bool,
}

impl SimConfig {
    pub fn new(horizon: f64, seed: u64) -> Self {
        SimConfig {
            horizon,
            seed,
            max_events: DEFAULT_MAX_EVENTS,
            allow_nonstationary: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub stream: EventStream,
    /// The run stopped at `max_events` before reaching the horizon.
    pub truncated: bool,
    pub candidates: usize,
}

pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn simulate(model: &HawkesModel, cfg: &SimConfig) -> Result<Simulation> {
    if !(cfg.horizon.is_finite() && cfg.horizon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be positive, got {}",
            cfg.horizon
        )));
    }
    if cfg.max_events == 0 {
        return Err(Error::InvalidParameter("max_events must be positive".into()));
    }
    let report = is_stationary(model);
    if !report.stationary && !cfg.allow_nonstationary {
        return Err(Error::NonStationary(
            report.reason.unwrap_or_else(|| "spectral radius >= 1".into()),
        ));
    }

    let mut rng = rng_from_seed(cfg.seed);
    let mut sweep = Sweep::new(model);
    let mut raw: Vec<(f64, Side)> = Vec::new();
    let mut t = 0.0f64;
    let mut bound = sweep.total(0.0);
    let mut truncated = false;
    let mut candidates = 0usize;

    loop {
        // (0, 1] so the gap is finite
        let u: f64 = 1.0 - rng.random::<f64>();
        let candidate = t - u.ln() / bound;
        if candidate > cfg.horizon {
            break;
        }
        candidates += 1;
        let lam = sweep.intensity(candidate);
        let total = lam[0] + lam[1];
        let v: f64 = rng.random::<f64>() * bound;
        t = candidate;
        if v < total {
            let side = if v < lam[0] { Side::Buy } else { Side::Sell };
            sweep.push(t, side.index());
            raw.push((t, side));
            if raw.len() >= cfg.max_events {
                truncated = true;
                break;
            }
        }
        bound = sweep.total(t);
    }

    let stream = quantize(&raw, cfg.horizon)?;
    Ok(Simulation {
        stream,
        truncated,
        candidates,
    })
}

/// Rounds times to the nanosecond grid used by the CSV format, keeping
/// them in (0, horizon] and strictly increasing per side.
fn quantize(raw: &[(f64, Side)], horizon: f64) -> Result<EventStream> {
    let mut last = [0.0f64; 2];
    let mut events = Vec::with_capacity(raw.len());
    for &(t, side) in raw {
        let s = side.index();
        let mut ns = (t * 1e9).round().max(1.0);
        let prev_ns = (last[s] * 1e9).round();
        if last[s] > 0.0 && ns <= prev_ns {
            ns = prev_ns + 1.0;
        }
        let q = (ns / 1e9).min(horizon);
        last[s] = q;
        events.push(Event::new(q, side));
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    EventStream::new(events, horizon)
}

/// Stationary event rates r solving (I − K)·r = μ.
pub fn expected_rates(model: &HawkesModel) -> Result<[f64; 2]> {
    let b = branching_matrix(model)?;
    if b.spectral_radius >= 1.0 {
        return Err(Error::NonStationary(format!(
            "spectral radius {} >= 1",
            b.spectral_radius
        )));
    }
    let k = b.entries;
    let a = [[1.0 - k[0][0], -k[0][1]], [-k[1][0], 1.0 - k[1][1]]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-14 {
        return Err(Error::Singular(format!("I − K has determinant {det}")));
    }
    let mu = model.mu();
    Ok([
        (a[1][1] * mu[0] - a[0][1] * mu[1]) / det,
        (a[0][0] * mu[1] - a[1][0] * mu[0]) / det,
    ])
}
