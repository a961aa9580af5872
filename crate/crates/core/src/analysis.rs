//! Closed-form protection analytics.
//!
//! Attack ranges assume the worst-case collinear geometry: attacker, victim
//! and guardian on one line with the victim in the middle, so that
//! `d_ag = d_av + d_gv`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{frame_airtime, Frame};
use crate::rf::{path_loss_db, RfError, RfParams};
use crate::rules::{chain_inspection_depth, decide_time, DecisionCostModel, DepthError, RuleChain};
use crate::BYTE_US;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("stealth bound unbounded: victim sensitivity {sv_dbm} dBm is not above guardian sensitivity {sg_dbm} dBm")]
    StealthUnbounded { sv_dbm: f64, sg_dbm: f64 },
    #[error("inspection offset {offset} outside a {total}-byte frame")]
    OffsetBeyondFrame { offset: usize, total: usize },
    #[error("invalid argument `{name}`: {value}")]
    Domain { name: &'static str, value: f64 },
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Depth(#[from] DepthError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, AnalysisError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(AnalysisError::Domain { name, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeBound {
    NoGuardian,
    Stealth,
    Force,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackRangeReport {
    pub label: String,
    pub range_m: f64,
    pub binding: RangeBound,
    pub inputs: Vec<(&'static str, f64)>,
}

/// Distance at which an unprotected victim stops hearing the attacker.
pub fn no_guardian_range(pa_dbm: f64, sv_dbm: f64, params: &RfParams) -> Result<f64, AnalysisError> {
    params.validate()?;
    Ok(params.d0 * 10f64.powf((pa_dbm - sv_dbm - params.pl_d0_db) / (10.0 * params.alpha)))
}

/// Largest attacker-victim distance at which a stealthy attacker can reach
/// the victim while staying below the guardian's sensitivity.
pub fn stealth_attack_range(
    sv_dbm: f64,
    sg_dbm: f64,
    d_gv: f64,
    alpha: f64,
) -> Result<f64, AnalysisError> {
    positive("d_gv", d_gv)?;
    positive("alpha", alpha)?;
    if sv_dbm <= sg_dbm {
        return Err(AnalysisError::StealthUnbounded { sv_dbm, sg_dbm });
    }
    Ok(d_gv / (10f64.powf((sv_dbm - sg_dbm) / (10.0 * alpha)) - 1.0))
}

/// Half-open interval `[lower, upper)` of attacker powers in dBm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerWindow {
    pub lower_dbm: f64,
    pub upper_dbm: f64,
}

impl PowerWindow {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower_dbm + self.upper_dbm)
    }

    pub fn contains(&self, p: f64) -> bool {
        p >= self.lower_dbm && p < self.upper_dbm
    }
}

/// Attacker powers that reach the victim yet stay invisible to the guardian.
pub fn stealth_power_window(
    d_av: f64,
    d_ag: f64,
    sv_dbm: f64,
    sg_dbm: f64,
    params: &RfParams,
) -> Result<Option<PowerWindow>, AnalysisError> {
    let lower = sv_dbm + path_loss_db(d_av, params)?;
    let upper = sg_dbm + path_loss_db(d_ag, params)?;
    Ok((lower < upper).then_some(PowerWindow {
        lower_dbm: lower,
        upper_dbm: upper,
    }))
}

/// Largest attacker-victim distance at which a detected brute-force attacker
/// still beats the guardian's interference.
pub fn force_attack_range(
    pa_dbm: f64,
    pg_dbm: f64,
    gamma_eff_db: f64,
    d_gv: f64,
    alpha: f64,
) -> Result<f64, AnalysisError> {
    positive("d_gv", d_gv)?;
    positive("alpha", alpha)?;
    Ok(10f64.powf((pa_dbm - pg_dbm - gamma_eff_db) / (10.0 * alpha)) * d_gv)
}

/// Ratio of the energy the attacker spends sending a frame to the energy the
/// guardian spends destroying it, using received powers at the victim.
pub fn energy_cost(
    pa_dbm: f64,
    d_av: f64,
    pg_dbm: f64,
    d_gv: f64,
    frame_bytes: usize,
    t_interfere_us: f64,
    alpha: f64,
) -> Result<f64, AnalysisError> {
    positive("t_interfere", t_interfere_us)?;
    positive("d_av", d_av)?;
    positive("d_gv", d_gv)?;
    if frame_bytes == 0 {
        return Err(AnalysisError::Domain {
            name: "frame_bytes",
            value: 0.0,
        });
    }
    let attacker = 10f64.powf(pa_dbm / 10.0) * d_av.powf(-alpha) * frame_airtime(frame_bytes);
    let guardian = 10f64.powf(pg_dbm / 10.0) * d_gv.powf(-alpha) * t_interfere_us;
    Ok(attacker / guardian)
}

/// Probability that a uniformly random `field_bits`-bit value lies within
/// Hamming distance `tolerated_errors` of a fixed literal, kept as the exact
/// fraction `hits / 2^field_bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FalsePositiveRate {
    pub hits: u128,
    pub field_bits: u32,
}

impl FalsePositiveRate {
    pub fn as_f64(&self) -> f64 {
        self.hits as f64 / 2f64.powi(self.field_bits as i32)
    }
}

pub fn false_positive_rate(
    field_bits: u32,
    tolerated_errors: u32,
) -> Result<FalsePositiveRate, AnalysisError> {
    if field_bits > 64 || tolerated_errors > field_bits {
        return Err(AnalysisError::Domain {
            name: "tolerated_errors",
            value: tolerated_errors as f64,
        });
    }
    let n = field_bits as u128;
    let mut binom: u128 = 1;
    let mut hits: u128 = 1;
    for k in 1..=tolerated_errors as u128 {
        binom = binom * (n - k + 1) / k;
        hits += binom;
    }
    Ok(FalsePositiveRate { hits, field_bits })
}

/// Airtime left after byte `inspect_offset` of a `total_frame_bytes` frame.
pub fn max_react_time(inspect_offset: usize, total_frame_bytes: usize) -> Result<f64, AnalysisError> {
    if inspect_offset == 0 || inspect_offset > total_frame_bytes {
        return Err(AnalysisError::OffsetBeyondFrame {
            offset: inspect_offset,
            total: total_frame_bytes,
        });
    }
    Ok((total_frame_bytes - inspect_offset) as f64 * BYTE_US)
}

/// Guardian pipeline timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingModel {
    /// Receiver pipeline latency between a byte arriving and the framer
    /// exposing it.
    #[serde(default = "TimingModel::default_rx_delay")]
    pub rx_delay_us: f64,
    #[serde(default = "TimingModel::default_t_init")]
    pub t_init_us: f64,
    #[serde(default = "TimingModel::default_t_interfere")]
    pub t_interfere_us: f64,
    /// Interference overlap with a symbol needed to corrupt it.
    #[serde(default = "TimingModel::default_min_overlap")]
    pub min_overlap_us: f64,
    #[serde(default)]
    pub decision: DecisionCostModel,
}

impl TimingModel {
    fn default_rx_delay() -> f64 {
        4.0
    }
    fn default_t_init() -> f64 {
        3.0
    }
    fn default_t_interfere() -> f64 {
        26.0
    }
    fn default_min_overlap() -> f64 {
        13.0
    }

    pub fn with_decision(decision: DecisionCostModel) -> Self {
        TimingModel {
            decision,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for (name, v) in [
            ("rx_delay_us", self.rx_delay_us),
            ("t_init_us", self.t_init_us),
            ("t_interfere_us", self.t_interfere_us),
            ("min_overlap_us", self.min_overlap_us),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AnalysisError::Domain { name, value: v });
            }
        }
        if self.min_overlap_us > crate::SYMBOL_US {
            return Err(AnalysisError::Domain {
                name: "min_overlap_us",
                value: self.min_overlap_us,
            });
        }
        if !self.decision.is_valid() {
            return Err(AnalysisError::Domain {
                name: "decision",
                value: f64::NAN,
            });
        }
        Ok(())
    }
}

impl Default for TimingModel {
    fn default() -> Self {
        TimingModel {
            rx_delay_us: Self::default_rx_delay(),
            t_init_us: Self::default_t_init(),
            t_interfere_us: Self::default_t_interfere(),
            min_overlap_us: Self::default_min_overlap(),
            decision: DecisionCostModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingReport {
    /// Last byte the chain inspects (1-indexed).
    pub depth: usize,
    pub total_frame_bytes: usize,
    pub t_listen_us: f64,
    /// Airtime remaining after `depth`.
    pub budget_us: f64,
    pub rx_delay_us: f64,
    pub t_decide_us: f64,
    pub t_init_us: f64,
    pub t_interfere_us: f64,
    pub t_react_us: f64,
    /// Interference time landing inside the frame.
    pub in_frame_us: f64,
    pub min_overlap_us: f64,
    pub feasible: bool,
}

/// Timing breakdown for a rule that fires after byte `depth`.
pub fn timing_at_depth(
    depth: usize,
    t_decide_us: f64,
    timing: &TimingModel,
    total_frame_bytes: usize,
) -> Result<TimingReport, AnalysisError> {
    let budget = max_react_time(depth, total_frame_bytes)?;
    let t_react = t_decide_us + timing.t_init_us + timing.t_interfere_us;
    let jam_start = timing.rx_delay_us + t_decide_us + timing.t_init_us;
    let in_frame = (budget - jam_start).clamp(0.0, timing.t_interfere_us);
    Ok(TimingReport {
        depth,
        total_frame_bytes,
        t_listen_us: frame_airtime(depth),
        budget_us: budget,
        rx_delay_us: timing.rx_delay_us,
        t_decide_us,
        t_init_us: timing.t_init_us,
        t_interfere_us: timing.t_interfere_us,
        t_react_us: t_react,
        in_frame_us: in_frame,
        min_overlap_us: timing.min_overlap_us,
        feasible: timing.rx_delay_us + t_react - (timing.t_interfere_us - timing.min_overlap_us)
            <= budget,
    })
}

/// Whether a guardian running `chain` under `timing` can still corrupt a
/// `total_frame_bytes` frame laid out like `layout`.
pub fn reaction_feasible(
    chain: &RuleChain,
    layout: &Frame,
    timing: &TimingModel,
    total_frame_bytes: usize,
) -> Result<TimingReport, AnalysisError> {
    let depth = chain_inspection_depth(chain, layout)?;
    timing_at_depth(depth, decide_time(chain, &timing.decision), timing, total_frame_bytes)
}
