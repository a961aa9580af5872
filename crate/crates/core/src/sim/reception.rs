use std::fmt;
use std::ops::{Add, Sub};

use serde::Serialize;

use crate::rf::dbm_to_mw;

/// Simulation clock in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub fn from_micros(us: f64) -> Self {
        SimTime((us * 1e3).round().max(0.0) as u64)
    }

    pub fn from_secs(s: f64) -> Self {
        SimTime((s * 1e9).round().max(0.0) as u64)
    }

    pub fn as_micros(self) -> f64 {
        self.0 as f64 / 1e3
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e9
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} µs", self.as_micros())
    }
}

/// Half-open time window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: SimTime,
    pub end: SimTime,
}

impl Window {
    pub fn new(start: SimTime, end: SimTime) -> Self {
        Window { start, end }
    }

    pub fn overlap(&self, other: &Window) -> u64 {
        let s = self.start.max(other.start);
        let e = self.end.min(other.end);
        e.0.saturating_sub(s.0)
    }
}

/// Interference burst as received at one victim.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interference {
    pub window: Window,
    pub power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Received,
    Destroyed,
    BelowSensitivity,
}

const SYMBOL_NS: u64 = 16_000;

/// Decides the fate of one frame at one victim.
///
/// The frame is destroyed when, within some 16 µs symbol, the interference
/// present (linearly summed) drives the SIR below `gamma_eff_db` for at least
/// `min_overlap_us`.
pub fn reception_outcome(
    frame: Window,
    rx_power_dbm: f64,
    sensitivity_dbm: f64,
    jams: &[Interference],
    gamma_eff_db: f64,
    min_overlap_us: f64,
) -> Outcome {
    if rx_power_dbm < sensitivity_dbm {
        return Outcome::BelowSensitivity;
    }
    let need = SimTime::from_micros(min_overlap_us).0;
    let relevant: Vec<&Interference> = jams
        .iter()
        .filter(|j| frame.overlap(&j.window) > 0)
        .collect();
    if relevant.is_empty() {
        return Outcome::Received;
    }
    let symbol_of = |t: SimTime| (t.0 - frame.start.0) / SYMBOL_NS;
    let last_symbol = symbol_of(SimTime(frame.end.0 - 1));
    let mut candidates: Vec<u64> = relevant
        .iter()
        .flat_map(|j| {
            let s = symbol_of(j.window.start.max(frame.start));
            let e = symbol_of(SimTime(j.window.end.min(frame.end).0 - 1));
            s..=e
        })
        .filter(|&k| k <= last_symbol)
        .collect();
    candidates.sort_unstable();
    candidates.dedup();

    for k in candidates {
        let sym = Window::new(
            SimTime(frame.start.0 + k * SYMBOL_NS),
            SimTime((frame.start.0 + (k + 1) * SYMBOL_NS).min(frame.end.0)),
        );
        if corrupted_time(&sym, rx_power_dbm, &relevant, gamma_eff_db) >= need.max(1) {
            return Outcome::Destroyed;
        }
    }
    Outcome::Received
}

/// Time within `sym` during which the summed interference beats the signal.
fn corrupted_time(sym: &Window, rx_power_dbm: f64, jams: &[&Interference], gamma_eff_db: f64) -> u64 {
    let mut edges = vec![sym.start.0, sym.end.0];
    for j in jams {
        for t in [j.window.start.0, j.window.end.0] {
            if t > sym.start.0 && t < sym.end.0 {
                edges.push(t);
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let signal_mw = dbm_to_mw(rx_power_dbm);
    edges
        .windows(2)
        .filter_map(|w| {
            let mid = w[0] + (w[1] - w[0]) / 2;
            let interference_mw: f64 = jams
                .iter()
                .filter(|j| j.window.start.0 <= mid && mid < j.window.end.0)
                .map(|j| dbm_to_mw(j.power_dbm))
                .sum();
            (interference_mw > 0.0
                && 10.0 * (signal_mw / interference_mw).log10() < gamma_eff_db)
                .then_some(w[1] - w[0])
        })
        .sum()
}
