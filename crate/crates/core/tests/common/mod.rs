//! Independent oracles and data generators shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use hawkes_lob::{Event, EventStream, HawkesModel, KernelKind, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn log_uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for k in 0..7 {
        let x = h * GK_NODES[k];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[k] * s;
        if k % 2 == 1 {
            gauss += G_WEIGHTS[k / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to relative tolerance `tol`.
pub fn quad(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, err: f64, tol: f64, depth: u32) -> f64 {
        if err <= tol * whole.abs().max(1e-300) || depth > 60 || b - a < 1e-15 * b.abs().max(1e-300) {
            return whole;
        }
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        rec(f, a, m, l, el, tol, depth + 1) + rec(f, m, b, r, er, tol, depth + 1)
    }
    let (w, e) = gk15(f, a, b);
    rec(f, a, b, w, e, tol, 0)
}

/// φ_ij(τ) straight from the kernel formulas.
pub fn phi(model: &HawkesModel, i: usize, j: usize, tau: f64) -> f64 {
    let a = model.alpha()[i][j];
    let b = model.beta()[i][j];
    match model.kind() {
        KernelKind::Exponential => a * (-b * tau).exp(),
        KernelKind::PowerLaw => a * (tau + model.epsilon().unwrap()[i][j]).powf(-b),
    }
}

/// ∫₀^τ φ_ij from the textbook antiderivatives.
pub fn phi_integral(model: &HawkesModel, i: usize, j: usize, tau: f64) -> f64 {
    let a = model.alpha()[i][j];
    let b = model.beta()[i][j];
    match model.kind() {
        KernelKind::Exponential => a / b * (1.0 - (-b * tau).exp()),
        KernelKind::PowerLaw => {
            let e = model.epsilon().unwrap()[i][j];
            if b == 1.0 {
                a * ((tau + e) / e).ln()
            } else {
                a * ((tau + e).powf(1.0 - b) - e.powf(1.0 - b)) / (1.0 - b)
            }
        }
    }
}

/// O(n) per query brute-force intensity, summing self and cross terms in
/// the order used by the library.
pub fn brute_intensity(model: &HawkesModel, stream: &EventStream, t: f64, inclusive: bool) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (i, o) in out.iter_mut().enumerate() {
        let mut part = [0.0; 2];
        for e in stream.events() {
            if e.time < t || (inclusive && e.time == t) {
                let j = e.side.index();
                part[j] += phi(model, i, j, t - e.time);
            }
        }
        *o = model.mu()[i] + (part[i] + part[1 - i]);
    }
    out
}

/// O(n²) log-likelihood.
pub fn brute_log_likelihood(model: &HawkesModel, stream: &EventStream) -> f64 {
    let t_end = stream.horizon();
    let mut ll = 0.0;
    for e in stream.events() {
        ll += brute_intensity(model, stream, e.time, false)[e.side.index()].ln();
    }
    for i in 0..2 {
        let mut comp = model.mu()[i] * t_end;
        for e in stream.events() {
            comp += phi_integral(model, i, e.side.index(), t_end - e.time);
        }
        ll -= comp;
    }
    ll
}

/// `n` events at uniform random times in (0, horizon) with random sides.
pub fn random_stream(rng: &mut ChaCha20Rng, n: usize, horizon: f64) -> EventStream {
    let mut pairs: Vec<(f64, Side)> = (0..n)
        .map(|_| {
            let t = rng.random_range(0.0..horizon);
            let s = if rng.random_bool(0.5) { Side::Buy } else { Side::Sell };
            (t, s)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
    EventStream::from_times(&pairs, horizon).unwrap()
}

pub fn random_exponential(rng: &mut ChaCha20Rng) -> HawkesModel {
    let mut a = [[0.0; 2]; 2];
    let mut b = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = rng.random_range(0.05..1.5);
            b[i][j] = log_uniform(rng, 0.2, 20.0);
        }
    }
    HawkesModel::exponential([rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)], a, b).unwrap()
}

pub fn random_power_law(rng: &mut ChaCha20Rng) -> HawkesModel {
    let mut a = [[0.0; 2]; 2];
    let mut b = [[0.0; 2]; 2];
    let mut e = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            a[i][j] = rng.random_range(0.001..0.05);
            b[i][j] = rng.random_range(1.05..3.0);
            e[i][j] = log_uniform(rng, 1e-3, 0.5);
        }
    }
    HawkesModel::power_law([rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)], a, b, e).unwrap()
}

/// Attaches a tick-grid random-walk price to every event: buys tend to
/// lift the price, sells to lower it.
pub fn with_prices(stream: &EventStream, seed: u64, p0_ticks: i64, tick: f64) -> EventStream {
    let mut rng = rng(seed);
    let mut ticks = p0_ticks;
    let events = stream
        .events()
        .iter()
        .map(|e| {
            let u: f64 = rng.random();
            let up = if e.side == Side::Buy { 0.55 } else { 0.45 };
            if u < up * 0.6 {
                ticks += 1;
            } else if u > 1.0 - (1.0 - up) * 0.6 {
                ticks -= 1;
            }
            Event::with_price(e.time, e.side, ticks as f64 * tick)
        })
        .collect();
    EventStream::new(events, stream.horizon()).unwrap()
}

/// Symmetric exponential model with every α_ij = a and β_ij = b.
pub fn sym_exponential(mu: f64, a: f64, b: f64) -> HawkesModel {
    HawkesModel::exponential([mu; 2], [[a; 2]; 2], [[b; 2]; 2]).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}
