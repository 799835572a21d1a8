//! The bivariate Hawkes model: conditional intensity, compensator and
//! log-likelihood over an [`EventStream`](crate::EventStream).
//!
//! Component 0 is Buy, component 1 is Sell. Kernel `(i, j)` is the
//! influence of component `j`'s events on component `i`'s intensity. All
//! four kernels of one model share a kind.

pub(crate) mod intensity;
mod json;
mod likelihood;

pub use intensity::{compensator, compensator_at, intensity_at, intensity_path, IntensitySample};
pub use json::ModelDoc;
pub use likelihood::{log_likelihood, log_likelihood_gradient, LikelihoodWorkspace};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel {
    mu: [f64; 2],
    kernels: [[KernelSpec; 2]; 2],
}

impl HawkesModel {
    pub fn new(mu: [f64; 2], kernels: [[KernelSpec; 2]; 2]) -> Result<Self> {
        for (i, &m) in mu.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(Error::InvalidParameter(format!("mu[{i}] must be > 0, got {m}")));
            }
        }
        let kind = kernels[0][0].kind();
        for row in &kernels {
            for k in row {
                k.validate()?;
                if k.kind() != kind {
                    return Err(Error::InvalidParameter(
                        "all kernels of a model must share one kind".into(),
                    ));
                }
            }
        }
        Ok(HawkesModel { mu, kernels })
    }

    pub fn exponential(mu: [f64; 2], alpha: [[f64; 2]; 2], beta: [[f64; 2]; 2]) -> Result<Self> {
        let k = |i: usize, j: usize| KernelSpec::Exponential {
            alpha: alpha[i][j],
            beta: beta[i][j],
        };
        Self::new(mu, [[k(0, 0), k(0, 1)], [k(1, 0), k(1, 1)]])
    }

    pub fn power_law(mu: [f64; 2], alpha: [[f64; 2]; 2], beta: [[f64; 2]; 2], epsilon: [[f64; 2]; 2]) -> Result<Self> {
        let k = |i: usize, j: usize| KernelSpec::PowerLaw {
            alpha: alpha[i][j],
            beta: beta[i][j],
            epsilon: epsilon[i][j],
        };
        Self::new(mu, [[k(0, 0), k(0, 1)], [k(1, 0), k(1, 1)]])
    }

    /// Bivariate Poisson process (all kernels identically zero).
    pub fn poisson(mu: [f64; 2]) -> Result<Self> {
        Self::exponential(mu, [[0.0; 2]; 2], [[1.0; 2]; 2])
    }

    pub fn kind(&self) -> KernelKind {
        self.kernels[0][0].kind()
    }

    pub fn mu(&self) -> [f64; 2] {
        self.mu
    }

    pub fn kernel(&self, i: usize, j: usize) -> &KernelSpec {
        &self.kernels[i][j]
    }

    pub fn kernels(&self) -> &[[KernelSpec; 2]; 2] {
        &self.kernels
    }

    pub fn alpha(&self) -> [[f64; 2]; 2] {
        self.map(|k| k.alpha())
    }

    pub fn beta(&self) -> [[f64; 2]; 2] {
        self.map(|k| k.beta())
    }

    pub fn epsilon(&self) -> Option<[[f64; 2]; 2]> {
        match self.kind() {
            KernelKind::Exponential => None,
            KernelKind::PowerLaw => Some(self.map(|k| k.epsilon().unwrap_or(0.0))),
        }
    }

    fn map(&self, f: impl Fn(&KernelSpec) -> f64) -> [[f64; 2]; 2] {
        [
            [f(&self.kernels[0][0]), f(&self.kernels[0][1])],
            [f(&self.kernels[1][0]), f(&self.kernels[1][1])],
        ]
    }

    /// The model with Buy and Sell roles exchanged.
    pub fn swapped(&self) -> Self {
        let k = &self.kernels;
        HawkesModel {
            mu: [self.mu[1], self.mu[0]],
            kernels: [[k[1][1], k[1][0]], [k[0][1], k[0][0]]],
        }
    }

    /// Flat parameter vector: `[μ₁, μ₂, α (row-major ×4), β (×4)]`, followed
    /// by `ε (×4)` for power-law models.
    pub fn to_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(14);
        p.extend_from_slice(&self.mu);
        p.extend(self.alpha().iter().flatten());
        p.extend(self.beta().iter().flatten());
        if let Some(eps) = self.epsilon() {
            p.extend(eps.iter().flatten());
        }
        p
    }

    pub fn from_params(kind: KernelKind, p: &[f64]) -> Result<Self> {
        let want = param_count(kind);
        if p.len() != want {
            return Err(Error::InvalidParameter(format!(
                "{kind} model needs {want} parameters, got {}",
                p.len()
            )));
        }
        let m = |off: usize| [[p[off], p[off + 1]], [p[off + 2], p[off + 3]]];
        match kind {
            KernelKind::Exponential => Self::exponential([p[0], p[1]], m(2), m(6)),
            KernelKind::PowerLaw => Self::power_law([p[0], p[1]], m(2), m(6), m(10)),
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelDoc::from(self)).expect("model serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(s)?;
        HawkesModel::try_from(doc)
    }
}

/// Length of the full parameter vector for a kind.
pub fn param_count(kind: KernelKind) -> usize {
    match kind {
        KernelKind::Exponential => 10,
        KernelKind::PowerLaw => 14,
    }
}

/// Event times split per component, with each event's index in the stream.
#[derive(Debug, Clone)]
pub(crate) struct SplitEvents {
    pub times: [Vec<f64>; 2],
    pub index: [Vec<usize>; 2],
    pub horizon: f64,
}

impl SplitEvents {
    pub fn new(stream: &crate::EventStream) -> Self {
        let mut times = [Vec::new(), Vec::new()];
        let mut index = [Vec::new(), Vec::new()];
        for (k, e) in stream.events().iter().enumerate() {
            times[e.side.index()].push(e.time);
            index[e.side.index()].push(k);
        }
        SplitEvents {
            times,
            index,
            horizon: stream.horizon(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_models() {
        let z = [[0.0; 2]; 2];
        let one = [[1.0; 2]; 2];
        assert!(HawkesModel::exponential([0.0, 1.0], z, one).is_err());
        assert!(HawkesModel::exponential([1.0, f64::NAN], z, one).is_err());
        let mixed = [
            [
                KernelSpec::Exponential { alpha: 0.1, beta: 1.0 },
                KernelSpec::Exponential { alpha: 0.1, beta: 1.0 },
            ],
            [
                KernelSpec::PowerLaw {
                    alpha: 0.1,
                    beta: 1.5,
                    epsilon: 0.01,
                },
                KernelSpec::Exponential { alpha: 0.1, beta: 1.0 },
            ],
        ];
        assert!(HawkesModel::new([1.0, 1.0], mixed).is_err());
    }

    #[test]
    fn params_round_trip() {
        let m = HawkesModel::power_law(
            [0.3, 0.4],
            [[0.1, 0.2], [0.3, 0.4]],
            [[1.5, 1.6], [1.7, 1.8]],
            [[0.01, 0.02], [0.03, 0.04]],
        )
        .unwrap();
        let p = m.to_params();
        assert_eq!(p.len(), 14);
        assert_eq!(p[3], 0.2);
        assert_eq!(HawkesModel::from_params(KernelKind::PowerLaw, &p).unwrap(), m);
        assert!(HawkesModel::from_params(KernelKind::Exponential, &p).is_err());
    }

    #[test]
    fn swapped_permutes_roles() {
        let m = HawkesModel::exponential([0.3, 0.4], [[0.1, 0.2], [0.3, 0.4]], [[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let s = m.swapped();
        assert_eq!(s.mu(), [0.4, 0.3]);
        assert_eq!(s.alpha(), [[0.4, 0.3], [0.2, 0.1]]);
        assert_eq!(s.beta(), [[4.0, 3.0], [2.0, 1.0]]);
        assert_eq!(s.swapped(), m);
    }
}
