//! Maximum-likelihood fitting under box bounds with seeded multi-start.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_data::{EventStream, Side};
use crate::kernels::KernelKind;
use crate::model::{log_likelihood, param_count, HawkesModel, LikelihoodWorkspace};
use crate::optim::{minimize, Bounds, Minimum, OptimConfig, Termination};

pub const DEFAULT_RESTARTS: usize = 5;
pub const DEFAULT_EPSILON: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub kind: KernelKind,
    /// Bounds over the free parameters; `None` uses [`default_bounds`].
    pub bounds: Option<Bounds>,
    /// Explicit start for restart 0, over the free parameters.
    pub initial: Option<Vec<f64>>,
    pub restarts: usize,
    pub f_tol: f64,
    pub g_tol: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Estimate ε_ij instead of holding them at `fixed_epsilon`.
    pub free_epsilon: bool,
    pub fixed_epsilon: f64,
}

impl FitConfig {
    pub fn new(kind: KernelKind) -> Self {
        let opt = OptimConfig::default();
        FitConfig {
            kind,
            bounds: None,
            initial: None,
            restarts: DEFAULT_RESTARTS,
            f_tol: opt.f_tol,
            g_tol: opt.g_tol,
            max_iterations: opt.max_iterations,
            seed: DEFAULT_SEED,
            free_epsilon: false,
            fixed_epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    /// Number of estimated parameters: 10, or 14 for power-law with free ε.
    pub fn free_parameter_count(&self) -> usize {
        if self.kind == KernelKind::PowerLaw && self.free_epsilon {
            14
        } else {
            10
        }
    }

    fn optim(&self) -> OptimConfig {
        OptimConfig {
            max_iterations: self.max_iterations,
            f_tol: self.f_tol,
            g_tol: self.g_tol,
            ..OptimConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub index: usize,
    pub start: Vec<f64>,
    pub neg_log_likelihood: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: HawkesModel,
    pub neg_log_likelihood: f64,
    pub log_likelihood: f64,
    /// 2·p + 2·neg_log_likelihood.
    pub aic: f64,
    pub n_params: usize,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    /// Infinity norm of the projected gradient at the optimum.
    pub gradient_norm: f64,
    pub start_point_used: Vec<f64>,
    pub restart_index: usize,
    pub restarts: Vec<RestartSummary>,
    pub bounds: Bounds,
    /// Value ε_ij was held at, when not estimated.
    pub epsilon_fixed: Option<f64>,
    pub event_counts: [usize; 2],
    pub horizon: f64,
    /// Data problems that affect identifiability.
    pub flags: Vec<String>,
    /// Modelling conventions behind the estimate.
    pub notes: Vec<String>,
}

impl FitResult {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Maps free parameter vectors to models.
#[derive(Debug, Clone, Copy)]
struct Layout {
    kind: KernelKind,
    free_epsilon: bool,
    fixed_epsilon: f64,
}

impl Layout {
    fn from_config(cfg: &FitConfig) -> Self {
        Layout {
            kind: cfg.kind,
            free_epsilon: cfg.free_epsilon,
            fixed_epsilon: cfg.fixed_epsilon,
        }
    }

    fn n_free(&self) -> usize {
        if self.kind == KernelKind::PowerLaw && self.free_epsilon {
            14
        } else {
            10
        }
    }

    fn model(&self, x: &[f64]) -> Result<HawkesModel> {
        match (self.kind, self.free_epsilon) {
            (KernelKind::PowerLaw, false) => {
                let mut full = x.to_vec();
                full.extend([self.fixed_epsilon; 4]);
                HawkesModel::from_params(KernelKind::PowerLaw, &full)
            }
            (kind, _) => HawkesModel::from_params(kind, x),
        }
    }
}

/// μ_i ∈ [1e−6, 10·n_i/T]; α ∈ [0, 1e3]; β ∈ [1e−3, 1e4] (exponential) or
/// [1.001, 10] (power-law); ε ∈ [1e−6, 1] (power-law only).
pub fn default_bounds(kind: KernelKind, stream: &EventStream) -> Bounds {
    let t = stream.horizon();
    let mut lower = Vec::with_capacity(param_count(kind));
    let mut upper = Vec::with_capacity(param_count(kind));
    for side in Side::BOTH {
        lower.push(1e-6);
        // a side without events still needs a non-empty interval
        upper.push((10.0 * stream.count(side) as f64 / t).max(1e-5));
    }
    lower.extend([0.0; 4]);
    upper.extend([1e3; 4]);
    match kind {
        KernelKind::Exponential => {
            lower.extend([1e-3; 4]);
            upper.extend([1e4; 4]);
        }
        KernelKind::PowerLaw => {
            lower.extend([1.001; 4]);
            upper.extend([10.0; 4]);
            lower.extend([1e-6; 4]);
            upper.extend([1.0; 4]);
        }
    }
    Bounds::new(lower, upper)
}

/// Start point for restart `attempt` over the full parameter vector.
///
/// Attempt 0 is μ_i = n_i/(2T), α = 0.1, β = 1 (exponential) or 2
/// (power-law), ε = 0.01. Later attempts scale every coordinate of
/// attempt 0 by a log-uniform factor in [0.1, 10], clamped to the default
/// bounds.
pub fn default_start(kind: KernelKind, stream: &EventStream, attempt: usize, seed: u64) -> Vec<f64> {
    let t = stream.horizon();
    let mut x = Vec::with_capacity(param_count(kind));
    for side in Side::BOTH {
        x.push(0.5 * stream.count(side) as f64 / t);
    }
    x.extend([0.1; 4]);
    match kind {
        KernelKind::Exponential => x.extend([1.0; 4]),
        KernelKind::PowerLaw => {
            x.extend([2.0; 4]);
            x.extend([DEFAULT_EPSILON; 4]);
        }
    }
    let bounds = default_bounds(kind, stream);
    if attempt > 0 {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        for v in x.iter_mut() {
            let e: f64 = rng.random_range(-1.0..1.0);
            *v *= 10f64.powf(e);
        }
    }
    bounds.clamp(&mut x);
    x
}

pub fn fit(stream: &EventStream, cfg: &FitConfig) -> Result<FitResult> {
    if stream.is_empty() {
        return Err(Error::InsufficientData("cannot fit an empty event stream".into()));
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    if cfg.kind == KernelKind::PowerLaw && !cfg.free_epsilon && !(cfg.fixed_epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fixed epsilon must be > 0, got {}",
            cfg.fixed_epsilon
        )));
    }
    let layout = Layout::from_config(cfg);
    let n = layout.n_free();
    let bounds = match &cfg.bounds {
        Some(b) => b.clone(),
        None => {
            let mut b = default_bounds(cfg.kind, stream);
            b.lower.truncate(n);
            b.upper.truncate(n);
            b
        }
    };
    if bounds.len() != n {
        return Err(Error::InvalidParameter(format!(
            "bounds cover {} parameters, model has {n} free",
            bounds.len()
        )));
    }
    for i in 0..n {
        if !(bounds.lower[i] < bounds.upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "bound {i}: lower {} is not below upper {}",
                bounds.lower[i], bounds.upper[i]
            )));
        }
    }
    if let Some(init) = &cfg.initial {
        if init.len() != n {
            return Err(Error::InvalidParameter(format!(
                "initial point has {} entries, model has {n} free",
                init.len()
            )));
        }
    }

    let workspace = match (cfg.kind, cfg.free_epsilon) {
        (KernelKind::PowerLaw, false) => LikelihoodWorkspace::with_fixed_epsilon(stream, [[cfg.fixed_epsilon; 2]; 2]),
        _ => LikelihoodWorkspace::new(stream),
    };
    let objective = |x: &[f64]| -> (f64, Vec<f64>) {
        let Ok(model) = layout.model(x) else {
            return (f64::INFINITY, vec![0.0; n]);
        };
        match workspace.value_and_gradient(&model, layout.free_epsilon) {
            Ok((ll, g)) => (-ll, g[..n].iter().map(|v| -v).collect()),
            Err(_) => (f64::INFINITY, vec![0.0; n]),
        }
    };

    let starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|attempt| {
            let mut x = match (&cfg.initial, attempt) {
                (Some(init), 0) => init.clone(),
                _ => default_start(cfg.kind, stream, attempt, cfg.seed)[..n].to_vec(),
            };
            bounds.clamp(&mut x);
            x
        })
        .collect();
    let optim = cfg.optim();
    let runs: Vec<Option<Minimum>> = starts
        .par_iter()
        .map(|x0| minimize(objective, x0, &bounds, &optim))
        .collect();

    let mut best: Option<(usize, &Minimum)> = None;
    for (i, run) in runs.iter().enumerate() {
        if let Some(m) = run {
            if m.f.is_finite() && best.is_none_or(|(_, b)| m.f < b.f) {
                best = Some((i, m));
            }
        }
    }
    let Some((best_index, best_run)) = best else {
        return Err(Error::Optimization(
            "objective is non-finite at every start point".into(),
        ));
    };

    let model = layout.model(&best_run.x)?;
    let nll = best_run.f;
    let restarts = runs
        .iter()
        .enumerate()
        .map(|(i, r)| RestartSummary {
            index: i,
            start: starts[i].clone(),
            neg_log_likelihood: r.as_ref().map(|m| m.f),
            converged: r.as_ref().is_some_and(Minimum::converged),
            iterations: r.as_ref().map_or(0, |m| m.iterations),
        })
        .collect();

    let counts = [stream.count(Side::Buy), stream.count(Side::Sell)];
    let mut flags = Vec::new();
    for side in Side::BOTH {
        if counts[side.index()] == 0 {
            let j = side.index() + 1;
            flags.push(format!(
                "no {} events: alpha[1][{j}] and alpha[2][{j}] are unidentifiable",
                side.name()
            ));
        }
    }
    let mut notes = vec![
        "cold start: no events before t = 0 influence the window".to_string(),
        "mu is in events per second of the normalized timeline".to_string(),
    ];
    if cfg.bounds.is_none() {
        notes.push("bounds: package defaults".into());
    }
    if cfg.initial.is_none() {
        notes.push("start points: package defaults with seeded log-uniform jitter".into());
    }

    let p = n;
    Ok(FitResult {
        neg_log_likelihood: nll,
        log_likelihood: -nll,
        aic: 2.0 * p as f64 + 2.0 * nll,
        n_params: p,
        converged: best_run.converged(),
        termination: best_run.termination,
        iterations: best_run.iterations,
        gradient_norm: best_run.projected_gradient_norm,
        start_point_used: starts[best_index].clone(),
        restart_index: best_index,
        restarts,
        bounds,
        epsilon_fixed: (cfg.kind == KernelKind::PowerLaw && !cfg.free_epsilon).then_some(cfg.fixed_epsilon),
        event_counts: counts,
        horizon: stream.horizon(),
        flags,
        notes,
        model,
    })
}

/// Recomputes −LL for a fitted model on its stream.
pub fn refit_objective(result: &FitResult, stream: &EventStream) -> Result<f64> {
    log_likelihood(&result.model, stream).map(|ll| -ll)
}
