use serde::{Deserialize, Serialize};

use super::HawkesModel;
use crate::error::{Error, Result};
use crate::event_data::{EventStream, Side};
use crate::kernels::KernelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensitySample {
    pub time: f64,
    pub lambda_buy: f64,
    pub lambda_sell: f64,
}

impl IntensitySample {
    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Buy => self.lambda_buy,
            Side::Sell => self.lambda_sell,
        }
    }
}

fn check_time(stream: &EventStream, t: f64) -> Result<()> {
    if !(t >= 0.0 && t <= stream.horizon()) {
        return Err(Error::InvalidParameter(format!(
            "t = {t} outside [0, {}]",
            stream.horizon()
        )));
    }
    Ok(())
}

/// (λ_buy(t), λ_sell(t)). With `inclusive = false` only events strictly
/// before `t` contribute (the left limit); otherwise events at `t` count too.
pub fn intensity_at(model: &HawkesModel, stream: &EventStream, t: f64, inclusive: bool) -> Result<[f64; 2]> {
    check_time(stream, t)?;
    Ok(intensity_unchecked(model, stream, t, inclusive))
}

pub(crate) fn intensity_unchecked(model: &HawkesModel, stream: &EventStream, t: f64, inclusive: bool) -> [f64; 2] {
    // [target][self=0 / cross=1]
    let mut acc = [[0.0; 2]; 2];
    for e in stream.events() {
        if e.time > t || (!inclusive && e.time == t) {
            break;
        }
        let j = e.side.index();
        let tau = t - e.time;
        for (i, a) in acc.iter_mut().enumerate() {
            a[usize::from(i != j)] += model.kernels[i][j].value(tau);
        }
    }
    let mu = model.mu;
    [mu[0] + (acc[0][0] + acc[0][1]), mu[1] + (acc[1][0] + acc[1][1])]
}

/// Λ_side(t) = ∫₀ᵗ λ_side(s) ds.
pub fn compensator_at(model: &HawkesModel, stream: &EventStream, side: Side, t: f64) -> Result<f64> {
    check_time(stream, t)?;
    Ok(compensator_unchecked(model, stream, side.index(), t))
}

pub(crate) fn compensator_unchecked(model: &HawkesModel, stream: &EventStream, i: usize, t: f64) -> f64 {
    let mut own = 0.0;
    let mut cross = 0.0;
    for e in stream.events() {
        if e.time >= t {
            break;
        }
        let j = e.side.index();
        let v = model.kernels[i][j].integral(t - e.time);
        if j == i {
            own += v;
        } else {
            cross += v;
        }
    }
    model.mu[i] * t + (own + cross)
}

/// Λ_side(T) over the full observation window.
pub fn compensator(model: &HawkesModel, stream: &EventStream, side: Side) -> f64 {
    compensator_unchecked(model, stream, side.index(), stream.horizon())
}

/// Samples on the grid {0, Δ, 2Δ, …} ∪ {T}, plus the left limit and the
/// post-jump value at every event time, sorted by time.
pub fn intensity_path(model: &HawkesModel, stream: &EventStream, grid_step: f64) -> Result<Vec<IntensitySample>> {
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must be positive, got {grid_step}"
        )));
    }
    let horizon = stream.horizon();
    let n_grid = (horizon / grid_step + 1e-9).floor();
    if n_grid > 5e7 {
        return Err(Error::InvalidParameter(format!(
            "grid step {grid_step} gives too many samples over {horizon} s"
        )));
    }
    // (time, inclusive)
    let mut queries: Vec<(f64, bool)> = Vec::with_capacity(n_grid as usize + 2 + 2 * stream.len());
    for k in 0..=(n_grid as usize) {
        queries.push(((k as f64 * grid_step).min(horizon), true));
    }
    if queries.last().is_none_or(|q| q.0 < horizon) {
        queries.push((horizon, true));
    }
    for e in stream.events() {
        queries.push((e.time, false));
        queries.push((e.time, true));
    }
    queries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    queries.dedup();

    let mut sweep = Sweep::new(model);
    let events = stream.events();
    let mut next = 0;
    let mut out = Vec::with_capacity(queries.len());
    for (t, inclusive) in queries {
        while next < events.len() && (events[next].time < t || (inclusive && events[next].time == t)) {
            sweep.push(events[next].time, events[next].side.index());
            next += 1;
        }
        let [b, s] = sweep.intensity(t);
        out.push(IntensitySample {
            time: t,
            lambda_buy: b,
            lambda_sell: s,
        });
    }
    Ok(out)
}

/// Forward-in-time intensity evaluator: O(1) per step for exponential
/// kernels, direct summation over past events for power-law kernels.
pub(crate) struct Sweep<'a> {
    model: &'a HawkesModel,
    exponential: bool,
    now: f64,
    // exponential: decayed sums Σ exp(−β_ij (now − t_l)), [i][j]
    state: [[f64; 2]; 2],
    past: [Vec<f64>; 2],
}

impl<'a> Sweep<'a> {
    pub fn new(model: &'a HawkesModel) -> Self {
        Sweep {
            model,
            exponential: matches!(model.kernels[0][0], KernelSpec::Exponential { .. }),
            now: 0.0,
            state: [[0.0; 2]; 2],
            past: [Vec::new(), Vec::new()],
        }
    }

    pub fn advance(&mut self, t: f64) {
        if self.exponential && t > self.now {
            let dt = t - self.now;
            for i in 0..2 {
                for j in 0..2 {
                    self.state[i][j] *= (-self.model.kernels[i][j].beta() * dt).exp();
                }
            }
        }
        self.now = self.now.max(t);
    }

    /// Registers an event of component `j` at time `t` (≥ any earlier call).
    pub fn push(&mut self, t: f64, j: usize) {
        self.advance(t);
        if self.exponential {
            self.state[0][j] += 1.0;
            self.state[1][j] += 1.0;
        } else {
            self.past[j].push(t);
        }
    }

    /// Intensity at `t` given the registered events.
    pub fn intensity(&mut self, t: f64) -> [f64; 2] {
        self.advance(t);
        let mu = self.model.mu;
        let mut lam = [0.0; 2];
        for (i, l) in lam.iter_mut().enumerate() {
            let (own, cross) = if self.exponential {
                (
                    self.model.kernels[i][i].alpha() * self.state[i][i],
                    self.model.kernels[i][1 - i].alpha() * self.state[i][1 - i],
                )
            } else {
                let sum = |j: usize| {
                    let k = &self.model.kernels[i][j];
                    self.past[j].iter().map(|&s| k.value(t - s)).sum::<f64>()
                };
                (sum(i), sum(1 - i))
            };
            *l = mu[i] + (own + cross);
        }
        lam
    }

    pub fn total(&mut self, t: f64) -> f64 {
        let [a, b] = self.intensity(t);
        a + b
    }
}
