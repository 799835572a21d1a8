//! Point-process log-likelihood
//!
//! ```text
//! LL = Σ_i [ Σ_{k: type i} ln λ_i(t_k⁻) − Λ_i(T) ]
//! ```
//!
//! Exponential models use the O(n) recursion on decayed sums; power-law
//! models sum directly over all earlier events (O(n²)). Gradients are
//! analytic for both kinds and follow the layout of
//! [`HawkesModel::to_params`].

use super::{param_count, HawkesModel, SplitEvents};
use crate::error::{Error, Result};
use crate::event_data::EventStream;
use crate::kernels::{KernelKind, KernelSpec};

const MU: usize = 0;
const ALPHA: usize = 2;
const BETA: usize = 6;
const EPS: usize = 10;

/// Pair-log caches above this many entries are not built.
const MAX_CACHED_PAIRS: usize = 12_000_000;

pub fn log_likelihood(model: &HawkesModel, stream: &EventStream) -> Result<f64> {
    LikelihoodWorkspace::new(stream).value(model)
}

/// Log-likelihood and its gradient over every model parameter
/// (10 for exponential, 14 for power-law).
pub fn log_likelihood_gradient(model: &HawkesModel, stream: &EventStream) -> Result<(f64, Vec<f64>)> {
    LikelihoodWorkspace::new(stream).value_and_gradient(model, true)
}

/// Precomputed per-stream data for repeated likelihood evaluations.
///
/// With [`with_fixed_epsilon`](Self::with_fixed_epsilon) the logarithms
/// `ln(t_k − t_l + ε_ij)` of a power-law model are computed once; results
/// are bit-identical to the uncached path.
#[derive(Debug, Clone)]
pub struct LikelihoodWorkspace {
    split: SplitEvents,
    pair_logs: Option<PairLogs>,
}

#[derive(Debug, Clone)]
struct PairLogs {
    epsilon: [[f64; 2]; 2],
    logs: Vec<f64>,
}

impl LikelihoodWorkspace {
    pub fn new(stream: &EventStream) -> Self {
        LikelihoodWorkspace {
            split: SplitEvents::new(stream),
            pair_logs: None,
        }
    }

    pub fn with_fixed_epsilon(stream: &EventStream, epsilon: [[f64; 2]; 2]) -> Self {
        let split = SplitEvents::new(stream);
        let pair_logs = build_pair_logs(&split, epsilon);
        LikelihoodWorkspace { split, pair_logs }
    }

    pub fn value(&self, model: &HawkesModel) -> Result<f64> {
        match model.kind() {
            KernelKind::Exponential => exponential_ll(&self.split, model, None),
            KernelKind::PowerLaw => power_law_ll(&self.split, self.logs_for(model), model, None),
        }
    }

    /// `with_epsilon = false` leaves the ε entries of a power-law gradient
    /// at zero, which saves one exponential per event pair.
    pub fn value_and_gradient(&self, model: &HawkesModel, with_epsilon: bool) -> Result<(f64, Vec<f64>)> {
        let mut g = vec![0.0; param_count(model.kind())];
        let v = match model.kind() {
            KernelKind::Exponential => exponential_ll(&self.split, model, Some(&mut g))?,
            KernelKind::PowerLaw => power_law_ll(
                &self.split,
                self.logs_for(model),
                model,
                Some(GradOut {
                    g: &mut g,
                    with_epsilon,
                }),
            )?,
        };
        Ok((v, g))
    }

    fn logs_for(&self, model: &HawkesModel) -> Option<&[f64]> {
        let cache = self.pair_logs.as_ref()?;
        (model.epsilon() == Some(cache.epsilon)).then_some(cache.logs.as_slice())
    }
}

struct GradOut<'a> {
    g: &'a mut [f64],
    with_epsilon: bool,
}

fn pair_count(split: &SplitEvents) -> usize {
    let n0 = split.times[0].len();
    let n1 = split.times[1].len();
    let mut total = n0 * n0.saturating_sub(1) / 2 + n1 * n1.saturating_sub(1) / 2;
    for i in 0..2 {
        let j = 1 - i;
        let mut p = 0;
        for &t in &split.times[i] {
            while p < split.times[j].len() && split.times[j][p] < t {
                p += 1;
            }
            total += p;
        }
    }
    total
}

fn build_pair_logs(split: &SplitEvents, epsilon: [[f64; 2]; 2]) -> Option<PairLogs> {
    let n = pair_count(split);
    if n > MAX_CACHED_PAIRS {
        return None;
    }
    let mut logs = Vec::with_capacity(n);
    for i in 0..2 {
        let mut cross_ptr = 0;
        for (k, &t) in split.times[i].iter().enumerate() {
            for j in [i, 1 - i] {
                let upto = if j == i {
                    k
                } else {
                    advance(&split.times[j], &mut cross_ptr, t)
                };
                let eps = epsilon[i][j];
                logs.extend(split.times[j][..upto].iter().map(|&tl| ((t - tl) + eps).ln()));
            }
        }
    }
    Some(PairLogs { epsilon, logs })
}

/// Number of entries of `times` strictly before `t`, advancing `ptr`.
#[inline]
fn advance(times: &[f64], ptr: &mut usize, t: f64) -> usize {
    while *ptr < times.len() && times[*ptr] < t {
        *ptr += 1;
    }
    *ptr
}

fn non_finite(split: &SplitEvents, i: usize, k: usize, lambda: f64) -> Error {
    Error::NonFinite {
        index: split.index[i][k],
        detail: format!("intensity {lambda} at t = {}", split.times[i][k]),
    }
}

fn exponential_ll(split: &SplitEvents, model: &HawkesModel, mut grad: Option<&mut [f64]>) -> Result<f64> {
    let alpha = model.alpha();
    let beta = model.beta();
    let mu = model.mu();
    let want_grad = grad.is_some();

    // s[i][j] = Σ_{t_l^j < now} exp(−β_ij (now − t_l)), d[i][j] = Σ (now − t_l)·exp(…)
    let mut s = [[0.0f64; 2]; 2];
    let mut d = [[0.0f64; 2]; 2];
    let mut now = 0.0;
    let mut log_sum = [0.0f64; 2];
    let mut g_mu = [0.0f64; 2];
    let mut g_alpha = [[0.0f64; 2]; 2];
    let mut g_beta = [[0.0f64; 2]; 2];
    let mut ptr = [0usize; 2];

    loop {
        let head = [split.times[0].get(ptr[0]), split.times[1].get(ptr[1])];
        let t = match head {
            [Some(&a), Some(&b)] => a.min(b),
            [Some(&a), None] => a,
            [None, Some(&b)] => b,
            [None, None] => break,
        };
        let dt = t - now;
        if dt > 0.0 {
            for i in 0..2 {
                for j in 0..2 {
                    let e = (-beta[i][j] * dt).exp();
                    if want_grad {
                        d[i][j] = (d[i][j] + dt * s[i][j]) * e;
                    }
                    s[i][j] *= e;
                }
            }
            now = t;
        }
        let here = [head[0] == Some(&t), head[1] == Some(&t)];
        for i in 0..2 {
            if !here[i] {
                continue;
            }
            let c = 1 - i;
            let lambda = mu[i] + (alpha[i][i] * s[i][i] + alpha[i][c] * s[i][c]);
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(non_finite(split, i, ptr[i], lambda));
            }
            log_sum[i] += lambda.ln();
            if want_grad {
                let inv = 1.0 / lambda;
                g_mu[i] += inv;
                for j in 0..2 {
                    g_alpha[i][j] += s[i][j] * inv;
                    g_beta[i][j] -= alpha[i][j] * d[i][j] * inv;
                }
            }
        }
        for j in 0..2 {
            if here[j] {
                s[0][j] += 1.0;
                s[1][j] += 1.0;
                ptr[j] += 1;
            }
        }
    }

    let comp = compensator_terms(split, model, grad.as_deref_mut());
    if let Some(g) = grad {
        for i in 0..2 {
            g[MU + i] += g_mu[i];
            for j in 0..2 {
                g[ALPHA + 2 * i + j] += g_alpha[i][j];
                g[BETA + 2 * i + j] += g_beta[i][j];
            }
        }
    }
    finish(log_sum, comp)
}

fn power_law_ll(
    split: &SplitEvents,
    cached: Option<&[f64]>,
    model: &HawkesModel,
    mut grad: Option<GradOut<'_>>,
) -> Result<f64> {
    let alpha = model.alpha();
    let beta = model.beta();
    let eps = model.epsilon().expect("power-law model");
    let mu = model.mu();
    let want_grad = grad.is_some();
    let want_eps = grad.as_ref().is_some_and(|g| g.with_epsilon);

    let mut log_sum = [0.0f64; 2];
    let mut g_mu = [0.0f64; 2];
    let mut g_alpha = [[0.0f64; 2]; 2];
    let mut g_beta = [[0.0f64; 2]; 2];
    let mut g_eps = [[0.0f64; 2]; 2];
    let mut cursor = 0usize;

    for i in 0..2 {
        let mut cross_ptr = 0;
        for (k, &t) in split.times[i].iter().enumerate() {
            // [self, cross] sums of x, L·x and x/(τ+ε)
            let mut s0 = [0.0f64; 2];
            let mut s1 = [0.0f64; 2];
            let mut s2 = [0.0f64; 2];
            for (slot, j) in [i, 1 - i].into_iter().enumerate() {
                let upto = if j == i {
                    k
                } else {
                    advance(&split.times[j], &mut cross_ptr, t)
                };
                let b = beta[i][j];
                let e = eps[i][j];
                let earlier = &split.times[j][..upto];
                match cached {
                    Some(logs) => {
                        let ls = &logs[cursor..cursor + upto];
                        cursor += upto;
                        for &l in ls {
                            let x = (-b * l).exp();
                            s0[slot] += x;
                            if want_grad {
                                s1[slot] += l * x;
                            }
                        }
                    }
                    None => {
                        for &tl in earlier {
                            let dist = (t - tl) + e;
                            let l = dist.ln();
                            let x = (-b * l).exp();
                            s0[slot] += x;
                            if want_grad {
                                s1[slot] += l * x;
                                if want_eps {
                                    s2[slot] += x / dist;
                                }
                            }
                        }
                    }
                }
            }
            let c = 1 - i;
            let lambda = mu[i] + (alpha[i][i] * s0[0] + alpha[i][c] * s0[1]);
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(non_finite(split, i, k, lambda));
            }
            log_sum[i] += lambda.ln();
            if want_grad {
                let inv = 1.0 / lambda;
                g_mu[i] += inv;
                for (slot, j) in [i, c].into_iter().enumerate() {
                    g_alpha[i][j] += s0[slot] * inv;
                    g_beta[i][j] -= alpha[i][j] * s1[slot] * inv;
                    g_eps[i][j] -= alpha[i][j] * beta[i][j] * s2[slot] * inv;
                }
            }
        }
    }

    let comp = compensator_terms(split, model, grad.as_mut().map(|g| &mut *g.g));
    if let Some(out) = grad {
        let g = out.g;
        for i in 0..2 {
            g[MU + i] += g_mu[i];
            for j in 0..2 {
                g[ALPHA + 2 * i + j] += g_alpha[i][j];
                g[BETA + 2 * i + j] += g_beta[i][j];
                if want_eps {
                    g[EPS + 2 * i + j] += g_eps[i][j];
                } else {
                    g[EPS + 2 * i + j] = 0.0;
                }
            }
        }
    }
    finish(log_sum, comp)
}

/// Λ_i(T) for both components; subtracts ∂Λ/∂θ from `grad` when given.
fn compensator_terms(split: &SplitEvents, model: &HawkesModel, mut grad: Option<&mut [f64]>) -> [f64; 2] {
    let horizon = split.horizon;
    let mu = model.mu();
    let has_eps = model.kind() == KernelKind::PowerLaw;
    let mut out = [0.0; 2];
    for i in 0..2 {
        let mut parts = [0.0f64; 2];
        for (slot, j) in [i, 1 - i].into_iter().enumerate() {
            let k: &KernelSpec = model.kernel(i, j);
            let mut sum = 0.0;
            let mut dg = [0.0f64; 3];
            for &tl in &split.times[j] {
                let tau = horizon - tl;
                sum += k.integral(tau);
                if grad.is_some() {
                    let gi = k.integral_grad(tau);
                    dg[0] += gi[0];
                    dg[1] += gi[1];
                    dg[2] += gi[2];
                }
            }
            parts[slot] = sum;
            if let Some(g) = grad.as_deref_mut() {
                g[ALPHA + 2 * i + j] -= dg[0];
                g[BETA + 2 * i + j] -= dg[1];
                if has_eps {
                    g[EPS + 2 * i + j] -= dg[2];
                }
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            g[MU + i] -= horizon;
        }
        out[i] = mu[i] * horizon + (parts[0] + parts[1]);
    }
    out
}

fn finish(log_sum: [f64; 2], comp: [f64; 2]) -> Result<f64> {
    let ll = (log_sum[0] - comp[0]) + (log_sum[1] - comp[1]);
    if !ll.is_finite() {
        return Err(Error::NonFinite {
            index: 0,
            detail: format!("log-likelihood evaluated to {ll}"),
        });
    }
    Ok(ll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_data::Side;

    #[test]
    fn poisson_reduction() {
        let m = HawkesModel::poisson([0.7, 1.3]).unwrap();
        let s = EventStream::from_times(
            &[(0.1, Side::Buy), (0.2, Side::Sell), (0.2, Side::Buy), (1.5, Side::Sell)],
            2.0,
        )
        .unwrap();
        let want = 2.0 * 0.7f64.ln() + 2.0 * 1.3f64.ln() - 2.0 * 2.0;
        assert!((log_likelihood(&m, &s).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn single_event_hand_value() {
        // ln(0.3) − [0.3·2 + 0.5·(1 − e^−1)] − 0.3·2, evaluated with mpmath.
        let m = HawkesModel::exponential([0.3, 0.3], [[0.5, 0.0], [0.0, 0.0]], [[1.0; 2]; 2]).unwrap();
        let s = EventStream::from_times(&[(1.0, Side::Buy)], 2.0).unwrap();
        let ll = log_likelihood(&m, &s).unwrap();
        assert!((ll - (-2.720_033_083_740_214_8)).abs() < 1e-14, "{ll}");
    }

    #[test]
    fn cached_power_law_is_bit_identical() {
        let eps = [[0.01, 0.02], [0.03, 0.01]];
        let m =
            HawkesModel::power_law([0.4, 0.3], [[0.02, 0.01], [0.015, 0.03]], [[1.5, 1.3], [1.8, 2.2]], eps).unwrap();
        let s = EventStream::from_times(
            &[
                (0.1, Side::Buy),
                (0.2, Side::Sell),
                (0.2, Side::Buy),
                (0.25, Side::Buy),
                (0.9, Side::Sell),
                (1.4, Side::Buy),
            ],
            2.0,
        )
        .unwrap();
        let plain = LikelihoodWorkspace::new(&s);
        let cached = LikelihoodWorkspace::with_fixed_epsilon(&s, eps);
        assert!(cached.pair_logs.is_some());
        assert_eq!(plain.value(&m).unwrap().to_bits(), cached.value(&m).unwrap().to_bits());
        let (v1, g1) = plain.value_and_gradient(&m, false).unwrap();
        let (v2, g2) = cached.value_and_gradient(&m, false).unwrap();
        assert_eq!(v1.to_bits(), v2.to_bits());
        assert_eq!(g1, g2);
    }
}
