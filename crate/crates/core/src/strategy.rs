//! Clustering-based liquidity provision driven by fitted intensities.
//!
//! A side-i cluster opens at the first event time where λ_i ≥ k·μ_i and
//! closes once λ_i decays below μ_i + c·(peak − μ_i). While a Buy cluster
//! is open a sell limit rests one offset above the last price; while a Sell
//! cluster is open a buy limit rests one offset below it. Fills are
//! touch-based against the event price series.
//!
//! At one timestamp the loop handles cluster closes first, then the events
//! (fills and stop-loss), then cluster opens, so an order is never filled
//! by the event that triggered it.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_data::{EventStream, Side};
use crate::kernels::KernelSpec;
use crate::model::HawkesModel;

/// Fraction of a tick absorbed when comparing prices to limits.
const PRICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub threshold_multiplier: f64,
    pub offset_ticks: u32,
    pub tick_size: f64,
    pub base_order_size: f64,
    pub size_intensity_scaling: bool,
    pub stop_loss_ticks: u32,
    pub cancel_decay_fraction: f64,
    pub max_inventory: f64,
    pub fee_per_trade: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            threshold_multiplier: 3.0,
            offset_ticks: 1,
            tick_size: 0.01,
            base_order_size: 1.0,
            size_intensity_scaling: false,
            stop_loss_ticks: 5,
            cancel_decay_fraction: 0.2,
            max_inventory: 10.0,
            fee_per_trade: 0.0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("strategy config: {what}")));
        if !(self.threshold_multiplier.is_finite() && self.threshold_multiplier > 0.0) {
            return bad("threshold_multiplier must be > 0");
        }
        if self.offset_ticks < 1 {
            return bad("offset_ticks must be >= 1");
        }
        if !(self.tick_size.is_finite() && self.tick_size > 0.0) {
            return bad("tick_size must be > 0");
        }
        if !(self.base_order_size.is_finite() && self.base_order_size > 0.0) {
            return bad("base_order_size must be > 0");
        }
        if self.stop_loss_ticks < 1 {
            return bad("stop_loss_ticks must be >= 1");
        }
        if !(self.cancel_decay_fraction > 0.0 && self.cancel_decay_fraction < 1.0) {
            return bad("cancel_decay_fraction must be in (0, 1)");
        }
        if !(self.max_inventory.is_finite() && self.max_inventory > 0.0) {
            return bad("max_inventory must be > 0");
        }
        if !(self.fee_per_trade.is_finite() && self.fee_per_trade >= 0.0) {
            return bad("fee_per_trade must be >= 0");
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: StrategyConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterEvent {
    pub side: Side,
    pub start: f64,
    pub end: f64,
    /// Largest λ_side at event times inside the cluster.
    pub peak_intensity: f64,
    /// λ_side at the opening event, the peak known when orders are sized.
    pub open_intensity: f64,
}

/// λ evaluated forward in time from the latest event group.
struct Tracker<'a> {
    model: &'a HawkesModel,
    exponential: bool,
    at: f64,
    // exponential: Σ exp(−β_ij (at − t_l)) per [i][j]
    state: [[f64; 2]; 2],
    past: [Vec<f64>; 2],
}

impl<'a> Tracker<'a> {
    fn new(model: &'a HawkesModel) -> Self {
        Tracker {
            model,
            exponential: matches!(model.kernel(0, 0), KernelSpec::Exponential { .. }),
            at: 0.0,
            state: [[0.0; 2]; 2],
            past: [Vec::new(), Vec::new()],
        }
    }

    /// λ_i(t) from events at or before the last pushed time; needs t ≥ at.
    fn eval(&self, i: usize, t: f64) -> f64 {
        let mut part = [0.0; 2];
        for (j, p) in part.iter_mut().enumerate() {
            let k = self.model.kernel(i, j);
            *p = if self.exponential {
                k.alpha() * self.state[i][j] * (-k.beta() * (t - self.at)).exp()
            } else {
                self.past[j].iter().map(|&s| k.value(t - s)).sum()
            };
        }
        self.model.mu()[i] + (part[i] + part[1 - i])
    }

    fn push(&mut self, t: f64, j: usize) {
        if self.exponential {
            let dt = t - self.at;
            if dt > 0.0 {
                for i in 0..2 {
                    for jj in 0..2 {
                        self.state[i][jj] *= (-self.model.kernel(i, jj).beta() * dt).exp();
                    }
                }
            }
            self.state[0][j] += 1.0;
            self.state[1][j] += 1.0;
        } else {
            self.past[j].push(t);
        }
        self.at = self.at.max(t);
    }

    /// First time after `at` where λ_i drops below `threshold`, given that
    /// it does so no later than `upper`. The bracket grows from `at`
    /// independently of `upper`, so later events cannot move the answer.
    fn crossing(&self, i: usize, threshold: f64, upper: f64) -> f64 {
        let mut lo = self.at;
        let mut h = 1e-6;
        let mut hi = self.at + h;
        while self.eval(i, hi) >= threshold {
            lo = hi;
            h *= 2.0;
            hi = self.at + h;
        }
        for _ in 0..200 {
            if hi - lo <= 1e-12 * hi.max(1.0) {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.eval(i, mid) >= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.min(upper)
    }
}

#[derive(Debug, Clone, Copy)]
struct OpenCluster {
    start: f64,
    peak: f64,
    open_intensity: f64,
}

/// Clusters of both sides, ordered by start time.
pub fn detect_clusters(model: &HawkesModel, stream: &EventStream, cfg: &StrategyConfig) -> Vec<ClusterEvent> {
    let mu = model.mu();
    let c = cfg.cancel_decay_fraction;
    let horizon = stream.horizon();
    let threshold = |o: &OpenCluster, i: usize| mu[i] + c * (o.peak - mu[i]);
    let mut tracker = Tracker::new(model);
    let mut open: [Option<OpenCluster>; 2] = [None, None];
    let mut out = Vec::new();
    let close = |out: &mut Vec<ClusterEvent>, i: usize, o: OpenCluster, end: f64| {
        out.push(ClusterEvent {
            side: Side::from_index(i),
            start: o.start,
            end,
            peak_intensity: o.peak,
            open_intensity: o.open_intensity,
        });
    };

    let events = stream.events();
    let mut idx = 0;
    while idx < events.len() {
        let b = events[idx].time;
        for i in 0..2 {
            if let Some(o) = open[i] {
                let thr = threshold(&o, i);
                if tracker.eval(i, b) < thr {
                    close(&mut out, i, o, tracker.crossing(i, thr, b));
                    open[i] = None;
                }
            }
        }
        while idx < events.len() && events[idx].time == b {
            tracker.push(b, events[idx].side.index());
            idx += 1;
        }
        for i in 0..2 {
            let lam = tracker.eval(i, b);
            match &mut open[i] {
                Some(o) => o.peak = o.peak.max(lam),
                None => {
                    if lam >= cfg.threshold_multiplier * mu[i] && b < horizon {
                        open[i] = Some(OpenCluster {
                            start: b,
                            peak: lam,
                            open_intensity: lam,
                        });
                    }
                }
            }
        }
    }
    for i in 0..2 {
        if let Some(o) = open[i] {
            let thr = threshold(&o, i);
            let end = if tracker.eval(i, horizon) < thr {
                tracker.crossing(i, thr, horizon)
            } else {
                horizon
            };
            close(&mut out, i, o, end);
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start).then(a.side.cmp(&b.side)));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeKind {
    Limit,
    StopLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub time: f64,
    /// Buy adds to inventory, Sell removes from it.
    pub side: Side,
    pub price: f64,
    pub size: f64,
    pub kind: TradeKind,
}

impl Trade {
    /// Cash received (negative when paying).
    pub fn cashflow(&self) -> f64 {
        match self.side {
            Side::Buy => -self.price * self.size,
            Side::Sell => self.price * self.size,
        }
    }

    fn signed_size(&self) -> f64 {
        match self.side {
            Side::Buy => self.size,
            Side::Sell => -self.size,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Positions {
    pub cash: f64,
    pub inventory: f64,
    pub average_entry: Option<f64>,
}

impl Positions {
    fn apply(&mut self, trade: &Trade, fee: f64) {
        let q = trade.signed_size();
        let before = self.inventory;
        self.cash += trade.cashflow();
        self.cash -= fee;
        self.inventory += q;
        self.average_entry = if self.inventory == 0.0 {
            None
        } else if before == 0.0 || before.signum() != self.inventory.signum() {
            Some(trade.price)
        } else if before.signum() == q.signum() {
            let avg = self.average_entry.unwrap_or(trade.price);
            Some((avg * before.abs() + trade.price * q.abs()) / self.inventory.abs())
        } else {
            self.average_entry
        };
    }
}

/// cash + inventory·last_price.
pub fn mark_to_market(positions: &Positions, last_price: f64) -> f64 {
    if positions.inventory == 0.0 {
        positions.cash
    } else {
        positions.cash + positions.inventory * last_price
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnlPoint {
    pub time: f64,
    pub pnl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub trades: Vec<Trade>,
    pub pnl_series: Vec<PnlPoint>,
    pub total_pnl: f64,
    pub max_drawdown: f64,
    pub n_clusters_detected: usize,
    pub n_stop_loss_hits: usize,
    pub n_orders_placed: usize,
    pub n_orders_cancelled: usize,
    pub final_inventory: f64,
    pub last_price: Option<f64>,
    pub fee_per_trade: f64,
    pub clusters: Vec<ClusterEvent>,
}

impl BacktestReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Trades as CSV `time,side,price,size`.
    pub fn trades_csv(&self) -> String {
        let mut s = String::from("time,side,price,size\n");
        for t in &self.trades {
            let _ = writeln!(s, "{:.9},{},{},{}", t.time, t.side.token(), t.price, t.size);
        }
        s
    }
}

/// Total PnL from a trade list alone: Σ cashflows − fees + inventory·last.
pub fn pnl_from_trades(trades: &[Trade], fee_per_trade: f64, last_price: f64) -> f64 {
    let mut p = Positions::default();
    for t in trades {
        p.apply(t, fee_per_trade);
    }
    mark_to_market(&p, last_price)
}

#[derive(Debug, Clone, Copy)]
struct Order {
    side: Side,
    price: f64,
    size: f64,
}

pub fn run_backtest(model: &HawkesModel, stream: &EventStream, cfg: &StrategyConfig) -> Result<BacktestReport> {
    cfg.validate()?;
    if let Some(k) = stream.events().iter().position(|e| e.price.is_none()) {
        return Err(Error::Backtest(format!(
            "event {k} has no price; the backtest needs a price on every event"
        )));
    }
    let clusters = detect_clusters(model, stream, cfg);
    let mu = model.mu();
    let tick = cfg.tick_size;
    let offset = f64::from(cfg.offset_ticks) * tick;
    let stop = f64::from(cfg.stop_loss_ticks) * tick;

    let mut closes: Vec<usize> = (0..clusters.len()).collect();
    closes.sort_by(|&a, &b| clusters[a].end.total_cmp(&clusters[b].end).then(a.cmp(&b)));
    let mut next_open = 0;
    let mut next_close = 0;

    // resting order per cluster side, with its cluster index
    let mut resting: [Option<(usize, Order)>; 2] = [None, None];
    let mut pos = Positions::default();
    let mut last_price: Option<f64> = None;
    let mut trades: Vec<Trade> = Vec::new();
    let mut pnl_series = Vec::new();
    let mut n_stop = 0;
    let mut n_placed = 0;
    let mut n_cancelled = 0;

    let record = |pos: &mut Positions, trades: &mut Vec<Trade>, t: Trade| -> Result<()> {
        pos.apply(&t, cfg.fee_per_trade);
        trades.push(t);
        if pos.inventory.abs() > cfg.max_inventory * (1.0 + 1e-12) {
            return Err(Error::Backtest(format!(
                "inventory {} exceeds max_inventory {}",
                pos.inventory, cfg.max_inventory
            )));
        }
        Ok(())
    };
    let mut cancel_through = |t: f64, resting: &mut [Option<(usize, Order)>; 2], inclusive: bool| {
        while next_close < closes.len() {
            let c = closes[next_close];
            let end = clusters[c].end;
            if end > t || (!inclusive && end == t) {
                break;
            }
            let s = clusters[c].side.index();
            if resting[s].is_some_and(|(ci, _)| ci == c) {
                resting[s] = None;
                n_cancelled += 1;
            }
            next_close += 1;
        }
    };

    let events = stream.events();
    let mut idx = 0;
    while idx < events.len() {
        let b = events[idx].time;
        cancel_through(b, &mut resting, true);
        while idx < events.len() && events[idx].time == b {
            let p = events[idx].price.expect("prices checked above");
            last_price = Some(p);
            for slot in resting.iter_mut() {
                let Some((_, order)) = *slot else { continue };
                let touched = match order.side {
                    Side::Sell => p >= order.price - PRICE_TOL * tick,
                    Side::Buy => p <= order.price + PRICE_TOL * tick,
                };
                if !touched {
                    continue;
                }
                let room = match order.side {
                    Side::Buy => cfg.max_inventory - pos.inventory,
                    Side::Sell => cfg.max_inventory + pos.inventory,
                };
                let size = order.size.min(room);
                if size <= 0.0 {
                    continue;
                }
                record(
                    &mut pos,
                    &mut trades,
                    Trade {
                        time: b,
                        side: order.side,
                        price: order.price,
                        size,
                        kind: TradeKind::Limit,
                    },
                )?;
                *slot = None;
            }
            if let Some(entry) = pos.average_entry {
                let adverse = if pos.inventory > 0.0 { entry - p } else { p - entry };
                if adverse >= stop * (1.0 - PRICE_TOL) {
                    let side = if pos.inventory > 0.0 { Side::Sell } else { Side::Buy };
                    let size = pos.inventory.abs();
                    record(
                        &mut pos,
                        &mut trades,
                        Trade {
                            time: b,
                            side,
                            price: p,
                            size,
                            kind: TradeKind::StopLoss,
                        },
                    )?;
                    n_stop += 1;
                }
            }
            idx += 1;
        }
        while next_open < clusters.len() && clusters[next_open].start <= b {
            let cl = &clusters[next_open];
            let s = cl.side.index();
            let price = last_price.expect("clusters open at event times");
            let (side, limit, room) = match cl.side {
                Side::Buy => (Side::Sell, price + offset, cfg.max_inventory + pos.inventory),
                Side::Sell => (Side::Buy, price - offset, cfg.max_inventory - pos.inventory),
            };
            let mut size = cfg.base_order_size;
            if cfg.size_intensity_scaling {
                size *= cl.open_intensity / (cfg.threshold_multiplier * mu[s]);
            }
            let size = size.min(room);
            if size > 0.0 && limit > 0.0 {
                resting[s] = Some((
                    next_open,
                    Order {
                        side,
                        price: limit,
                        size,
                    },
                ));
                n_placed += 1;
            }
            next_open += 1;
        }
        pnl_series.push(PnlPoint {
            time: b,
            pnl: mark_to_market(&pos, last_price.unwrap_or(0.0)),
        });
    }
    cancel_through(stream.horizon(), &mut resting, true);

    let total_pnl = mark_to_market(&pos, last_price.unwrap_or(0.0));
    pnl_series.push(PnlPoint {
        time: stream.horizon(),
        pnl: total_pnl,
    });
    let mut high = 0.0f64;
    let mut max_drawdown = 0.0f64;
    for p in &pnl_series {
        high = high.max(p.pnl);
        max_drawdown = max_drawdown.max(high - p.pnl);
    }
    Ok(BacktestReport {
        trades,
        pnl_series,
        total_pnl,
        max_drawdown,
        n_clusters_detected: clusters.len(),
        n_stop_loss_hits: n_stop,
        n_orders_placed: n_placed,
        n_orders_cancelled: n_cancelled,
        final_inventory: pos.inventory,
        last_price,
        fee_per_trade: cfg.fee_per_trade,
        clusters,
    })
}
