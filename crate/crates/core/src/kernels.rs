//! Excitation kernels, their exact integrals and branching diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HawkesModel;

/// Below this distance from 1 the power-law integral uses its logarithmic form.
pub const POWER_LAW_LOG_BRANCH: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Exponential,
    PowerLaw,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Exponential => "exponential",
            KernelKind::PowerLaw => "power_law",
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(KernelKind::Exponential),
            "power_law" => Ok(KernelKind::PowerLaw),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel kind `{other}` (expected exponential or power_law)"
            ))),
        }
    }
}

/// An excitation kernel φ(τ).
///
/// * `Exponential`: φ(τ) = α·exp(−β·τ)
/// * `PowerLaw`: φ(τ) = α/(τ + ε)^β
///
/// `alpha = 0` is allowed and gives the zero kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Exponential { alpha: f64, beta: f64 },
    PowerLaw { alpha: f64, beta: f64, epsilon: f64 },
}

impl KernelSpec {
    pub fn exponential(alpha: f64, beta: f64) -> Result<Self> {
        let k = KernelSpec::Exponential { alpha, beta };
        k.validate()?;
        Ok(k)
    }

    pub fn power_law(alpha: f64, beta: f64, epsilon: f64) -> Result<Self> {
        let k = KernelSpec::PowerLaw { alpha, beta, epsilon };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        let alpha = self.alpha();
        let beta = self.beta();
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if let Some(eps) = self.epsilon() {
            if !(eps.is_finite() && eps > 0.0) {
                return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {eps}")));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Exponential { .. } => KernelKind::Exponential,
            KernelSpec::PowerLaw { .. } => KernelKind::PowerLaw,
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            KernelSpec::Exponential { alpha, .. } | KernelSpec::PowerLaw { alpha, .. } => alpha,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            KernelSpec::Exponential { beta, .. } | KernelSpec::PowerLaw { beta, .. } => beta,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match *self {
            KernelSpec::Exponential { .. } => None,
            KernelSpec::PowerLaw { epsilon, .. } => Some(epsilon),
        }
    }

    /// φ(τ) for τ ≥ 0.
    pub fn evaluate(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        Ok(self.value(tau))
    }

    /// ∫₀^τ φ(s) ds. `tau` may be `+inf` when the kernel is integrable.
    pub fn integrate(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("tau must be >= 0, got {tau}")));
        }
        if tau.is_infinite() {
            return self.total_mass();
        }
        Ok(self.integral(tau))
    }

    /// ∫₀^∞ φ(s) ds, the expected number of direct offspring.
    pub fn total_mass(&self) -> Result<f64> {
        match *self {
            KernelSpec::Exponential { alpha, beta } => Ok(alpha / beta),
            KernelSpec::PowerLaw { alpha, beta, epsilon } => {
                if beta <= 1.0 {
                    Err(Error::DivergentIntegral(format!(
                        "power-law kernel with beta = {beta} <= 1 has infinite mass"
                    )))
                } else {
                    Ok(alpha * epsilon.powf(1.0 - beta) / (beta - 1.0))
                }
            }
        }
    }

    #[inline]
    pub(crate) fn value(&self, tau: f64) -> f64 {
        match *self {
            KernelSpec::Exponential { alpha, beta } => alpha * (-beta * tau).exp(),
            KernelSpec::PowerLaw { alpha, beta, epsilon } => alpha * (-beta * (tau + epsilon).ln()).exp(),
        }
    }

    /// Finite-τ integral.
    pub(crate) fn integral(&self, tau: f64) -> f64 {
        match *self {
            KernelSpec::Exponential { alpha, beta } => alpha * (-(-beta * tau).exp_m1()) / beta,
            KernelSpec::PowerLaw { alpha, beta, epsilon } => alpha * power_law_unit_integral(beta, epsilon, tau),
        }
    }

    /// Partial derivatives of φ(τ) with respect to (α, β, ε).
    #[cfg(test)]
    pub(crate) fn value_grad(&self, tau: f64) -> [f64; 3] {
        match *self {
            KernelSpec::Exponential { alpha, beta } => {
                let x = (-beta * tau).exp();
                [x, -alpha * tau * x, 0.0]
            }
            KernelSpec::PowerLaw { alpha, beta, epsilon } => {
                let d = tau + epsilon;
                let l = d.ln();
                let x = (-beta * l).exp();
                [x, -alpha * l * x, -alpha * beta * x / d]
            }
        }
    }

    /// Partial derivatives of ∫₀^τ φ with respect to (α, β, ε), finite τ.
    pub(crate) fn integral_grad(&self, tau: f64) -> [f64; 3] {
        match *self {
            KernelSpec::Exponential { alpha, beta } => {
                let e = (-beta * tau).exp();
                let g = -(-beta * tau).exp_m1() / beta;
                [g, alpha * (tau * e - g) / beta, 0.0]
            }
            KernelSpec::PowerLaw { alpha, beta, epsilon } => {
                let (g, dg_du) = power_law_unit_integral_du(beta, epsilon, tau);
                let d_eps = (-beta * (tau + epsilon).ln()).exp() - (-beta * epsilon.ln()).exp();
                [g, -alpha * dg_du, alpha * d_eps]
            }
        }
    }
}

/// ∫₀^τ (s+ε)^(−β) ds written as ε^u·expm1(u·L)/u with u = 1−β and
/// L = ln(1 + τ/ε); stable on both sides of β = 1.
fn power_law_unit_integral(beta: f64, epsilon: f64, tau: f64) -> f64 {
    let l = (tau / epsilon).ln_1p();
    let u = 1.0 - beta;
    if u.abs() < POWER_LAW_LOG_BRANCH {
        l
    } else {
        epsilon.powf(u) * (u * l).exp_m1() / u
    }
}

/// Returns (g, dg/du) for g(u) = ∫₀^τ (s+ε)^(u−1) ds.
fn power_law_unit_integral_du(beta: f64, epsilon: f64, tau: f64) -> (f64, f64) {
    let l = (tau / epsilon).ln_1p();
    let u = 1.0 - beta;
    let ln_eps = epsilon.ln();
    let b_u = (u * ln_eps).exp();
    let x = u * l;
    // h(u) = expm1(uL)/u and its derivative; series near uL = 0.
    let (h, dh) = if x.abs() < 0.05 {
        let mut h = 0.0;
        let mut dh = 0.0;
        let mut term = l; // L^n u^(n-1) / n! at n = 1
        for n in 1..=16 {
            h += term;
            if n >= 2 {
                // (n-1) L^n u^(n-2) / n!
                dh += (n - 1) as f64 * term_no_u(l, u, n);
            }
            term *= x / (n + 1) as f64;
        }
        (h, dh)
    } else {
        let em1 = x.exp_m1();
        (em1 / u, (x * x.exp() - em1) / (u * u))
    };
    let g = b_u * h;
    (g, ln_eps * g + b_u * dh)
}

/// L^n u^(n-2) / n! for n >= 2.
fn term_no_u(l: f64, u: f64, n: i32) -> f64 {
    let mut v = l * l / 2.0;
    for k in 3..=n {
        v *= l * u / k as f64;
    }
    v
}

/// Expected direct-offspring matrix K with K[i][j] = ∫₀^∞ φ_ij.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingMatrix {
    pub entries: [[f64; 2]; 2],
    pub spectral_radius: f64,
    /// α_ij/β_ij for each entry.
    pub alpha_beta_ratios: [[f64; 2]; 2],
}

pub fn branching_matrix(model: &HawkesModel) -> Result<BranchingMatrix> {
    let mut entries = [[0.0; 2]; 2];
    let mut ratios = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let k = model.kernel(i, j);
            entries[i][j] = k.total_mass()?;
            ratios[i][j] = k.alpha() / k.beta();
        }
    }
    Ok(BranchingMatrix {
        spectral_radius: spectral_radius(&entries),
        entries,
        alpha_beta_ratios: ratios,
    })
}

/// Largest eigenvalue modulus of a 2×2 non-negative matrix.
pub fn spectral_radius(m: &[[f64; 2]; 2]) -> f64 {
    let half_trace = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let disc = half_diff * half_diff + m[0][1] * m[1][0];
    if disc >= 0.0 {
        (half_trace + disc.sqrt()).abs().max((half_trace - disc.sqrt()).abs())
    } else {
        // complex pair: |λ|² = det
        (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    /// Spectral radius of the branching matrix below 1.
    pub stationary: bool,
    pub spectral_radius: Option<f64>,
    pub branching: Option<[[f64; 2]; 2]>,
    pub alpha_beta_ratios: [[f64; 2]; 2],
    /// The weaker per-entry check α_ij/β_ij < 1, reported alongside.
    pub per_entry_ratio_check: bool,
    pub reason: Option<String>,
}

pub fn is_stationary(model: &HawkesModel) -> StationarityReport {
    let mut ratios = [[0.0; 2]; 2];
    for (i, row) in ratios.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            let k = model.kernel(i, j);
            *r = k.alpha() / k.beta();
        }
    }
    let per_entry = ratios.iter().flatten().all(|&r| r < 1.0);
    match branching_matrix(model) {
        Ok(b) => {
            let stationary = b.spectral_radius < 1.0;
            StationarityReport {
                stationary,
                spectral_radius: Some(b.spectral_radius),
                branching: Some(b.entries),
                alpha_beta_ratios: ratios,
                per_entry_ratio_check: per_entry,
                reason: (!stationary).then(|| format!("spectral radius {} >= 1", b.spectral_radius)),
            }
        }
        Err(_) => StationarityReport {
            stationary: false,
            spectral_radius: None,
            branching: None,
            alpha_beta_ratios: ratios,
            per_entry_ratio_check: per_entry,
            reason: Some("divergent kernel integral".into()),
        },
    }
}
