//! Box-constrained limited-memory quasi-Newton minimizer.
//!
//! Projected L-BFGS: variables sitting on a bound with the gradient pushing
//! outward are frozen for the iteration, the two-loop recursion builds a
//! direction over the free variables, and a backtracking Armijo search runs
//! along the projected path `P(x + t·d)`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Bounds { lower, upper }
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.max(self.lower[i]).min(self.upper[i]);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter()
                .enumerate()
                .all(|(i, &v)| v >= self.lower[i] && v <= self.upper[i])
    }

    /// ‖P(x − g) − x‖∞
    pub fn projected_gradient_norm(&self, x: &[f64], g: &[f64]) -> f64 {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(i, (&xi, &gi))| {
                let p = (xi - gi).max(self.lower[i]).min(self.upper[i]);
                (p - xi).abs()
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iterations: usize,
    /// Relative objective change `(f_k − f_{k+1}) / max(|f_k|, |f_{k+1}|, 1)`.
    pub f_tol: f64,
    /// Infinity norm of the projected gradient.
    pub g_tol: f64,
    pub memory: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            max_iterations: 1000,
            f_tol: 1e-8,
            g_tol: 1e-5,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    ObjectiveTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub gradient: Vec<f64>,
    pub projected_gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        matches!(
            self.termination,
            Termination::GradientTolerance | Termination::ObjectiveTolerance
        )
    }
}

/// Minimizes `f` over the box. The objective returns `(value, gradient)`;
/// a non-finite value marks an infeasible point and makes the line search
/// backtrack. Returns `None` when the objective is non-finite at the start.
pub fn minimize<F>(mut objective: F, x0: &[f64], bounds: &Bounds, cfg: &OptimConfig) -> Option<Minimum>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    assert_eq!(n, bounds.len(), "start point and bounds differ in length");
    let mut x = x0.to_vec();
    bounds.clamp(&mut x);
    let (mut f, mut g) = objective(&x);
    let mut evaluations = 1;
    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut iterations = 0;
    let mut free = vec![true; n];
    let termination = loop {
        let pg = bounds.projected_gradient_norm(&x, &g);
        if pg < cfg.g_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= cfg.max_iterations {
            break Termination::MaxIterations;
        }
        iterations += 1;

        for i in 0..n {
            let at_lower = x[i] <= bounds.lower[i] && g[i] > 0.0;
            let at_upper = x[i] >= bounds.upper[i] && g[i] < 0.0;
            free[i] = !(at_lower || at_upper);
        }

        let mut step = None;
        for attempt in 0..2 {
            let use_memory = attempt == 0 && !memory.is_empty();
            let d: Vec<f64> = if use_memory {
                two_loop(&g, &memory, &free)
            } else {
                g.iter()
                    .zip(&free)
                    .map(|(&gi, &fr)| if fr { -gi } else { 0.0 })
                    .collect()
            };
            if dot(&g, &d) >= 0.0 {
                if use_memory {
                    continue;
                }
                break;
            }
            let mut t = 1.0;
            if !use_memory {
                // first steepest-descent step limited to unit length
                let norm = dot(&d, &d).sqrt();
                if norm > 1.0 {
                    t = 1.0 / norm;
                }
            }
            // keep the trial point inside the box on the first try when the
            // unconstrained step overshoots far beyond it
            let max_t = max_feasible_step(&x, &d, bounds);
            if max_t.is_finite() && max_t > 0.0 && t > max_t * 10.0 {
                t = max_t * 10.0;
            }
            for _ in 0..60 {
                let mut trial: Vec<f64> = x.iter().zip(&d).map(|(&xi, &di)| xi + t * di).collect();
                bounds.clamp(&mut trial);
                let delta: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
                let decrease = dot(&g, &delta);
                if decrease >= 0.0 {
                    t *= 0.5;
                    continue;
                }
                let (ft, gt) = objective(&trial);
                evaluations += 1;
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= f + 1e-4 * decrease {
                    step = Some((trial, ft, gt));
                    break;
                }
                t *= 0.5;
            }
            if step.is_some() {
                break;
            }
            // retry from steepest descent
            memory.clear();
        }

        let Some((x_new, f_new, g_new)) = step else {
            break Termination::LineSearchFailed;
        };
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if memory.len() == cfg.memory {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let rel = (f - f_new) / f.abs().max(f_new.abs()).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        if rel < cfg.f_tol {
            break Termination::ObjectiveTolerance;
        }
    };

    Some(Minimum {
        projected_gradient_norm: bounds.projected_gradient_norm(&x, &g),
        x,
        f,
        gradient: g,
        iterations,
        evaluations,
        termination,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_feasible_step(x: &[f64], d: &[f64], bounds: &Bounds) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..x.len() {
        if d[i] > 0.0 {
            t = t.min((bounds.upper[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            t = t.min((bounds.lower[i] - x[i]) / d[i]);
        }
    }
    t
}

/// −H·g over the free variables; frozen coordinates get zero.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, free: &[bool]) -> Vec<f64> {
    let mask = |v: &[f64]| -> Vec<f64> { v.iter().zip(free).map(|(&a, &f)| if f { a } else { 0.0 }).collect() };
    let mut q = mask(g);
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let s = mask(s);
        let a = rho * dot(&s, &q);
        let y = mask(y);
        for (qi, yi) in q.iter_mut().zip(&y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let yy = dot(y, y);
        if yy > 0.0 {
            let gamma = dot(s, y) / yy;
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let s = mask(s);
        let y = mask(y);
        let b = rho * dot(&y, &q);
        for (qi, si) in q.iter_mut().zip(&s) {
            *qi += si * (a - b);
        }
    }
    q.iter().zip(free).map(|(&v, &f)| if f { -v } else { 0.0 }).collect()
}
