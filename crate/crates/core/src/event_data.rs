//! Buy/sell event records and their CSV representation.
//!
//! The on-disk format is a plain CSV with header `time,side,price,size`.
//! `time` is decimal seconds with at most nine fractional digits, `side` is
//! `B` or `S`, and `price`/`size` may be left empty. Lines starting with `#`
//! are comments; a `# horizon=<seconds>` comment before the first data row
//! declares the observation window length.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "time,side,price,size";

/// Offset applied to same-side duplicate timestamps in lenient mode.
pub const TIE_NUDGE: f64 = 1e-9;

const MAX_FRACTION_DIGITS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Buy, Side::Sell];

    /// Component index: Buy = 0, Sell = 1.
    pub fn index(self) -> usize {
        match self {
            Side::Buy => 0,
            Side::Sell => 1,
        }
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::Buy
        } else {
            Side::Sell
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Side::Buy => "B",
            Side::Sell => "S",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Side::Buy => "buy",
            Side::Sell => "sell",
        }
    }

    fn from_token(token: &str) -> Option<Side> {
        match token {
            "B" => Some(Side::Buy),
            "S" => Some(Side::Sell),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    /// Seconds since the start of the observation window.
    pub time: f64,
    pub side: Side,
    pub price: Option<f64>,
    pub size: Option<f64>,
}

impl Event {
    pub fn new(time: f64, side: Side) -> Self {
        Event {
            time,
            side,
            price: None,
            size: None,
        }
    }

    pub fn with_price(time: f64, side: Side, price: f64) -> Self {
        Event {
            time,
            side,
            price: Some(price),
            size: None,
        }
    }
}

/// A validated, time-ordered sequence of buy/sell events on `[0, horizon]`.
///
/// Events are sorted by time; two events may share a timestamp only if they
/// are on different sides.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    events: Vec<Event>,
    horizon: f64,
}

impl EventStream {
    pub fn new(events: Vec<Event>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidStream(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let mut last = [f64::NEG_INFINITY; 2];
        let mut prev = f64::NEG_INFINITY;
        for (k, e) in events.iter().enumerate() {
            if !(e.time.is_finite() && e.time >= 0.0) {
                return Err(Error::InvalidStream(format!(
                    "event {k}: time must be finite and non-negative, got {}",
                    e.time
                )));
            }
            if e.time > horizon {
                return Err(Error::InvalidStream(format!(
                    "event {k}: time {} exceeds horizon {horizon}",
                    e.time
                )));
            }
            if e.time < prev {
                return Err(Error::InvalidStream(format!(
                    "event {k}: time {} precedes previous event at {prev}",
                    e.time
                )));
            }
            let s = e.side.index();
            if e.time <= last[s] {
                return Err(Error::InvalidStream(format!(
                    "event {k}: duplicate {} timestamp {}",
                    e.side.name(),
                    e.time
                )));
            }
            if let Some(p) = e.price {
                if !p.is_finite() {
                    return Err(Error::InvalidStream(format!("event {k}: non-finite price")));
                }
            }
            if let Some(q) = e.size {
                if !(q.is_finite() && q > 0.0) {
                    return Err(Error::InvalidStream(format!(
                        "event {k}: size must be positive, got {q}"
                    )));
                }
            }
            last[s] = e.time;
            prev = e.time;
        }
        Ok(EventStream { events, horizon })
    }

    /// Builds a stream from bare `(time, side)` pairs.
    pub fn from_times(pairs: &[(f64, Side)], horizon: f64) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, s)| Event::new(t, s)).collect(), horizon)
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, side: Side) -> usize {
        self.events.iter().filter(|e| e.side == side).count()
    }

    pub fn times(&self, side: Side) -> Vec<f64> {
        self.events.iter().filter(|e| e.side == side).map(|e| e.time).collect()
    }

    /// Partitions event times into (buy times, sell times), each in order.
    pub fn split_by_side(&self) -> (Vec<f64>, Vec<f64>) {
        (self.times(Side::Buy), self.times(Side::Sell))
    }

    /// Shifts every time and the horizon by `-origin`.
    pub fn normalize_time(&self, origin: f64) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::InvalidParameter(format!("origin must be finite, got {origin}")));
        }
        if let Some(first) = self.events.first() {
            if origin > first.time {
                return Err(Error::InvalidParameter(format!(
                    "origin {origin} is after the first event at {}",
                    first.time
                )));
            }
        }
        let events = self
            .events
            .iter()
            .map(|e| Event {
                time: e.time - origin,
                ..*e
            })
            .collect();
        EventStream::new(events, self.horizon - origin)
    }

    /// Events at or before `t`, observed over `[0, t]`.
    pub fn truncated(&self, t: f64) -> Result<Self> {
        let events = self.events.iter().copied().filter(|e| e.time <= t).collect();
        EventStream::new(events, t)
    }

    /// The same stream with Buy and Sell labels exchanged.
    pub fn swap_sides(&self) -> Self {
        let events = self
            .events
            .iter()
            .map(|e| Event {
                side: e.side.other(),
                ..*e
            })
            .collect();
        EventStream {
            events,
            horizon: self.horizon,
        }
    }

    pub fn last_price(&self) -> Option<f64> {
        self.events.iter().rev().find_map(|e| e.price)
    }

    /// Writes the stream in the CSV exchange format. `extra` comment lines
    /// (`# key=value`) follow the horizon line.
    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(&str, String)]) -> Result<()> {
        w.write_all(self.to_csv_string(extra).as_bytes())?;
        Ok(())
    }

    pub fn to_csv_string(&self, extra: &[(&str, String)]) -> String {
        let mut out = String::with_capacity(32 * (self.events.len() + 4));
        let _ = writeln!(out, "# horizon={}", self.horizon);
        for (k, v) in extra {
            let _ = writeln!(out, "# {k}={v}");
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for e in &self.events {
            let _ = write!(out, "{:.9},{},", e.time, e.side.token());
            if let Some(p) = e.price {
                let _ = write!(out, "{p}");
            }
            out.push(',');
            if let Some(q) = e.size {
                let _ = write!(out, "{q}");
            }
            out.push('\n');
        }
        out
    }
}

/// How raw CSV rows are turned into an [`EventStream`].
#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    /// Reject unsorted rows and same-side duplicate timestamps instead of
    /// repairing them.
    pub strict: bool,
    /// Window length in seconds; overrides a `# horizon=` comment.
    pub window: Option<f64>,
    /// Raw timestamp mapped to 0. When unset, times are taken as already
    /// window-relative if a window is declared, otherwise the first event
    /// becomes the origin.
    pub origin: Option<f64>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            strict: true,
            window: None,
            origin: None,
        }
    }
}

impl IngestConfig {
    pub fn lenient() -> Self {
        IngestConfig {
            strict: false,
            ..Default::default()
        }
    }
}

pub fn parse_csv(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<EventStream> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_csv_reader(BufReader::new(file), cfg)
}

pub fn parse_csv_reader<R: BufRead>(mut reader: R, cfg: &IngestConfig) -> Result<EventStream> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    parse_csv_str(&text, cfg)
}

struct RawRow {
    line: usize,
    event: Event,
}

pub fn parse_csv_str(text: &str, cfg: &IngestConfig) -> Result<EventStream> {
    let mut declared_horizon: Option<f64> = None;
    let mut seen_header = false;
    let mut rows: Vec<RawRow> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.trim_start().strip_prefix('#') {
            if rows.is_empty() {
                if let Some(value) = comment.trim().strip_prefix("horizon=") {
                    let h = value
                        .trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|h| h.is_finite())
                        .ok_or_else(|| Error::MalformedRow {
                            line: line_no,
                            reason: format!("bad horizon value `{}`", value.trim()),
                        })?;
                    declared_horizon = Some(h);
                }
            }
            continue;
        }
        if !seen_header {
            if line.trim() != CSV_HEADER {
                return Err(Error::Header(line.to_string()));
            }
            seen_header = true;
            continue;
        }
        rows.push(parse_row(line, line_no)?);
    }

    if !seen_header {
        return Err(Error::Empty("no header line".into()));
    }

    let window = cfg.window.or(declared_horizon);
    if let Some(w) = window {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::InvalidStream(format!("window must be positive, got {w}")));
        }
    }
    if rows.is_empty() && window.is_none() {
        return Err(Error::Empty("no events and no declared horizon".into()));
    }

    if cfg.strict {
        for pair in rows.windows(2) {
            if pair[1].event.time < pair[0].event.time {
                return Err(Error::Unsorted {
                    line: pair[1].line,
                    time: pair[1].event.time,
                });
            }
        }
    } else {
        rows.sort_by(|a, b| a.event.time.total_cmp(&b.event.time));
    }

    resolve_same_side_ties(&mut rows, cfg.strict)?;

    let origin = match (cfg.origin, window) {
        (Some(o), _) => o,
        (None, Some(_)) => 0.0,
        (None, None) => rows[0].event.time,
    };
    for r in rows.iter_mut() {
        let t = r.event.time - origin;
        if t < 0.0 {
            return Err(Error::MalformedRow {
                line: r.line,
                reason: format!("time {} precedes the window origin {origin}", r.event.time),
            });
        }
        r.event.time = t;
    }

    let horizon = match window {
        Some(w) => w,
        None => rows.last().map(|r| r.event.time).unwrap_or(0.0),
    };
    if let Some(r) = rows.iter().find(|r| r.event.time > horizon) {
        return Err(Error::MalformedRow {
            line: r.line,
            reason: format!("time {} is beyond the horizon {horizon}", r.event.time),
        });
    }
    if horizon <= 0.0 {
        return Err(Error::InvalidStream(
            "horizon is zero; declare a window with `# horizon=`".into(),
        ));
    }

    EventStream::new(rows.into_iter().map(|r| r.event).collect(), horizon)
}

fn resolve_same_side_ties(rows: &mut [RawRow], strict: bool) -> Result<()> {
    let mut last: [Option<f64>; 2] = [None, None];
    let mut nudged = false;
    for r in rows.iter_mut() {
        let s = r.event.side.index();
        if let Some(prev) = last[s] {
            if r.event.time <= prev {
                if strict {
                    return Err(Error::DuplicateTimestamp {
                        line: r.line,
                        side: r.event.side.name(),
                        time: r.event.time,
                    });
                }
                r.event.time = ((prev * 1e9).round() + TIE_NUDGE * 1e9) / 1e9;
                nudged = true;
            }
        }
        last[s] = Some(r.event.time);
    }
    if nudged {
        rows.sort_by(|a, b| a.event.time.total_cmp(&b.event.time));
    }
    Ok(())
}

fn parse_row(line: &str, line_no: usize) -> Result<RawRow> {
    let malformed = |reason: String| Error::MalformedRow { line: line_no, reason };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 4 {
        return Err(malformed(format!("expected 4 fields, found {}", fields.len())));
    }
    let time_field = fields[0];
    if time_field.starts_with('-') {
        return Err(malformed(format!("negative time `{time_field}`")));
    }
    let time = parse_decimal(time_field).ok_or_else(|| malformed(format!("bad time `{time_field}`")))?;
    let side = Side::from_token(fields[1]).ok_or_else(|| Error::UnknownSide {
        line: line_no,
        token: fields[1].to_string(),
    })?;
    let price = if fields[2].is_empty() {
        None
    } else {
        let p: f64 = fields[2]
            .parse()
            .map_err(|_| malformed(format!("bad price `{}`", fields[2])))?;
        if !p.is_finite() {
            return Err(malformed(format!("non-finite price `{}`", fields[2])));
        }
        Some(p)
    };
    let size = if fields[3].is_empty() {
        None
    } else {
        let q: f64 = fields[3]
            .parse()
            .map_err(|_| malformed(format!("bad size `{}`", fields[3])))?;
        if !(q.is_finite() && q > 0.0) {
            return Err(malformed(format!("size must be positive, got `{}`", fields[3])));
        }
        Some(q)
    };
    Ok(RawRow {
        line: line_no,
        event: Event {
            time,
            side,
            price,
            size,
        },
    })
}

/// Parses `digits[.digits]` with at most nine fractional digits.
fn parse_decimal(s: &str) -> Option<f64> {
    let (int, frac) = match s.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (s, None),
    };
    if int.is_empty() && frac.is_none_or(str::is_empty) {
        return None;
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    if let Some(f) = frac {
        if f.is_empty() || f.len() > MAX_FRACTION_DIGITS || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
    }
    let v: f64 = s.parse().ok()?;
    v.is_finite().then_some(v)
}
