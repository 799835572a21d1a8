//! Goodness-of-fit and model comparison: time-rescaling residuals with a
//! Kolmogorov-Smirnov test against Exp(1), AIC comparison of the two kernel
//! kinds, and intensity export as CSV and SVG.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{fit, FitConfig, FitResult};
use crate::event_data::{EventStream, Side};
use crate::kernels::{KernelKind, KernelSpec};
use crate::model::{intensity_path, HawkesModel, IntensitySample};

pub const INTENSITY_CSV_HEADER: &str = "time,lambda_buy,lambda_sell";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub component: Side,
    pub n_residuals: usize,
    pub ks_statistic: f64,
    pub ks_critical_1pct: f64,
    pub pass: bool,
    /// Λ_i(t_k) − Λ_i(t_{k−1}) over consecutive events of the component.
    #[serde(skip)]
    pub residuals: Vec<f64>,
}

/// Time-rescaled inter-event gaps of one component and their KS test
/// against Exp(1) at the 1% level. Needs at least two events on `side`.
pub fn residuals(model: &HawkesModel, stream: &EventStream, side: Side) -> Result<ResidualReport> {
    let n = stream.count(side);
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "{} component has {n} events, residuals need at least 2",
            side.name()
        )));
    }
    let res = rescaled_gaps(model, stream)?[side.index()].clone();
    let d = ks_statistic(&res)?;
    let crit = ks_critical_1pct(res.len());
    Ok(ResidualReport {
        component: side,
        n_residuals: res.len(),
        ks_statistic: d,
        ks_critical_1pct: crit,
        pass: d <= crit,
        residuals: res,
    })
}

/// Compensator increments between consecutive same-side events, for both
/// components. Increments are accumulated interval by interval so each
/// one stays positive however large Λ grows.
fn rescaled_gaps(model: &HawkesModel, stream: &EventStream) -> Result<[Vec<f64>; 2]> {
    let mu = model.mu();
    let k = model.kernels();
    let exponential = model.kind() == KernelKind::Exponential;
    let mut state = [[0.0f64; 2]; 2];
    let mut past: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut acc = [0.0f64; 2];
    let mut seen = [false; 2];
    let mut out: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    let mut a = 0.0f64;

    let events = stream.events();
    let mut idx = 0;
    while idx < events.len() {
        let b = events[idx].time;
        let dt = b - a;
        if dt > 0.0 {
            for i in 0..2 {
                let mut inc = mu[i] * dt;
                for j in 0..2 {
                    inc += if exponential {
                        let KernelSpec::Exponential { alpha, beta } = k[i][j] else {
                            unreachable!()
                        };
                        alpha / beta * state[i][j] * -(-beta * dt).exp_m1()
                    } else {
                        past[j]
                            .iter()
                            .map(|&s| k[i][j].integral(b - s) - k[i][j].integral(a - s))
                            .sum::<f64>()
                    };
                }
                acc[i] += inc;
            }
            if exponential {
                for i in 0..2 {
                    for j in 0..2 {
                        state[i][j] *= (-k[i][j].beta() * dt).exp();
                    }
                }
            }
        }
        let mut end = idx;
        while end < events.len() && events[end].time == b {
            let s = events[end].side.index();
            if seen[s] {
                if !(acc[s].is_finite() && acc[s] > 0.0) {
                    return Err(Error::NonFinite {
                        index: end,
                        detail: format!("rescaled gap {}", acc[s]),
                    });
                }
                out[s].push(acc[s]);
            }
            seen[s] = true;
            acc[s] = 0.0;
            end += 1;
        }
        for e in &events[idx..end] {
            let j = e.side.index();
            if exponential {
                state[0][j] += 1.0;
                state[1][j] += 1.0;
            } else {
                past[j].push(b);
            }
        }
        a = b;
        idx = end;
    }
    Ok(out)
}

/// sup |F_n − F| against the Exp(1) distribution function.
pub fn ks_statistic(samples: &[f64]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("KS statistic of an empty sample".into()));
    }
    if let Some(k) = samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            index: k,
            detail: format!("sample value {}", samples[k]),
        });
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (k, &v) in x.iter().enumerate() {
        let f = if v <= 0.0 { 0.0 } else { -(-v).exp_m1() };
        d = d.max((k + 1) as f64 / n - f).max(f - k as f64 / n);
    }
    Ok(d)
}

/// 1% critical value of the one-sample KS statistic: 1.628/√n for n > 35,
/// Stephens' small-sample form 1.628/(√n + 0.12 + 0.11/√n) otherwise.
pub fn ks_critical_1pct(n: usize) -> f64 {
    let r = (n.max(1) as f64).sqrt();
    if n > 35 {
        1.628 / r
    } else {
        1.628 / (r + 0.12 + 0.11 / r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub exponential: FitResult,
    pub power_law: FitResult,
    /// LL(power-law) − LL(exponential).
    pub delta_log_likelihood: f64,
    /// AIC(power-law) − AIC(exponential).
    pub delta_aic: f64,
    pub winner: KernelKind,
    pub residuals: ComparisonResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResiduals {
    pub exponential: Vec<ResidualReport>,
    pub power_law: Vec<ResidualReport>,
}

/// Lower AIC wins; an exact tie goes to the exponential kernel.
pub fn winner(aic_exponential: f64, aic_power_law: f64) -> KernelKind {
    if aic_power_law < aic_exponential {
        KernelKind::PowerLaw
    } else {
        KernelKind::Exponential
    }
}

pub fn compare_kernels(
    stream: &EventStream,
    exponential_cfg: &FitConfig,
    power_law_cfg: &FitConfig,
) -> Result<ComparisonReport> {
    if exponential_cfg.kind != KernelKind::Exponential || power_law_cfg.kind != KernelKind::PowerLaw {
        return Err(Error::InvalidParameter(
            "compare_kernels needs one exponential and one power-law config".into(),
        ));
    }
    let (exp_fit, pl_fit) = rayon::join(|| fit(stream, exponential_cfg), || fit(stream, power_law_cfg));
    let (exp_fit, pl_fit) = (exp_fit?, pl_fit?);
    let reports = |m: &HawkesModel| -> Result<Vec<ResidualReport>> {
        Side::BOTH
            .iter()
            .filter(|&&s| stream.count(s) >= 2)
            .map(|&s| residuals(m, stream, s))
            .collect()
    };
    Ok(ComparisonReport {
        delta_log_likelihood: pl_fit.log_likelihood - exp_fit.log_likelihood,
        delta_aic: pl_fit.aic - exp_fit.aic,
        winner: winner(exp_fit.aic, pl_fit.aic),
        residuals: ComparisonResiduals {
            exponential: reports(&exp_fit.model)?,
            power_law: reports(&pl_fit.model)?,
        },
        exponential: exp_fit,
        power_law: pl_fit,
    })
}

/// [`compare_kernels`] with default fit settings and a shared seed.
pub fn compare_kernels_seeded(stream: &EventStream, seed: u64) -> Result<ComparisonReport> {
    compare_kernels(
        stream,
        &FitConfig::new(KernelKind::Exponential).with_seed(seed),
        &FitConfig::new(KernelKind::PowerLaw).with_seed(seed),
    )
}

pub fn intensity_csv(samples: &[IntensitySample]) -> String {
    let mut s = String::with_capacity(40 * (samples.len() + 1));
    s.push_str(INTENSITY_CSV_HEADER);
    s.push('\n');
    for p in samples {
        let _ = writeln!(s, "{:.9},{:.9},{:.9}", p.time, p.lambda_buy, p.lambda_sell);
    }
    s
}

const SVG_W: f64 = 800.0;
const SVG_H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Standalone SVG 1.1 line chart with one polyline per component.
pub fn intensity_svg(samples: &[IntensitySample]) -> String {
    let t_max = samples
        .iter()
        .map(|p| p.time)
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let y_max = samples
        .iter()
        .map(|p| p.lambda_buy.max(p.lambda_sell))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
        * 1.05;
    let pw = SVG_W - LEFT - RIGHT;
    let ph = SVG_H - TOP - BOTTOM;
    let x = |t: f64| LEFT + pw * t / t_max;
    let y = |v: f64| TOP + ph * (1.0 - v / y_max);

    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{SVG_W}\" height=\"{SVG_H}\" viewBox=\"0 0 {SVG_W} {SVG_H}\">"
    );
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        s,
        "<line x1=\"{LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        TOP + ph,
        LEFT + pw,
        TOP + ph
    );
    let _ = writeln!(
        s,
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>",
        TOP + ph
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let _ = writeln!(
            s,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            x(f * t_max),
            TOP + ph + 16.0,
            fmt_tick(f * t_max)
        );
        let _ = writeln!(
            s,
            "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            y(f * y_max) + 4.0,
            fmt_tick(f * y_max)
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.3}\" y=\"{:.3}\" font-size=\"13\" text-anchor=\"middle\">time (s)</text>",
        LEFT + pw / 2.0,
        SVG_H - 10.0
    );
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.3}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.3})\">intensity (events/s)</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );
    for (side, colour) in [(Side::Buy, "#1f77b4"), (Side::Sell, "#d62728")] {
        let mut pts = String::with_capacity(16 * samples.len());
        for p in samples {
            if !pts.is_empty() {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.3},{:.3}", x(p.time), y(p.get(side)));
        }
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1\" points=\"{pts}\"/>"
        );
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.3}\" y=\"18\" font-size=\"12\" fill=\"#1f77b4\">buy</text>",
        LEFT + pw - 80.0
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.3}\" y=\"18\" font-size=\"12\" fill=\"#d62728\">sell</text>",
        LEFT + pw - 40.0
    );
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 100.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.2}")
    } else {
        format!("{v:.4}")
    }
}

/// Writes the intensity path as CSV, and as SVG when `svg` is given.
pub fn export_intensity(
    model: &HawkesModel,
    stream: &EventStream,
    grid_step: f64,
    csv: &Path,
    svg: Option<&Path>,
) -> Result<Vec<IntensitySample>> {
    let samples = intensity_path(model, stream, grid_step)?;
    std::fs::write(csv, intensity_csv(&samples))?;
    if let Some(p) = svg {
        std::fs::write(p, intensity_svg(&samples))?;
    }
    Ok(samples)
}
