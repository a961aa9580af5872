use serde::Serialize;

use super::reception::SimTime;
use crate::analysis::TimingModel;
use crate::frame::{Frame, FCS_LEN};
use crate::rules::{chain_inspection_depth, decide_time, evaluate_chain, RuleChain, Verdict};
use crate::BYTE_US;

/// What a guardian node brings to one classification.
#[derive(Debug, Clone, Copy)]
pub struct GuardianView<'a> {
    pub chain: &'a RuleChain,
    pub timing: &'a TimingModel,
    pub jam_power_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JamAction {
    pub start: SimTime,
    pub duration: SimTime,
    pub power_dbm: f64,
    /// Rule that triggered the interference.
    pub rule: Option<usize>,
}

impl JamAction {
    pub fn end(&self) -> SimTime {
        self.start + self.duration
    }
}

/// Listen, decide, initialise, interfere. Returns the interference the
/// guardian emits for `frame`, or `None` when the chain accepts it.
///
/// The caller has already established that the guardian detects the frame.
/// A decision that comes too late still yields a burst; whether it hurts the
/// frame is left to the reception arithmetic.
pub fn guardian_pipeline(
    frame: &Frame,
    guardian: &GuardianView<'_>,
    rx_power_dbm: f64,
    frame_start: SimTime,
) -> Option<JamAction> {
    let observed = frame.clone().with_rss(rx_power_dbm);
    let eval = evaluate_chain(guardian.chain, &observed).ok()?;
    if eval.verdict != Verdict::Drop {
        return None;
    }
    // Fields a rule probes but this frame lacks cannot fire; the framer then
    // only triggers once the whole MPDU body has arrived.
    let depth = chain_inspection_depth(guardian.chain, frame)
        .unwrap_or(frame.total_len() - FCS_LEN);
    let t = guardian.timing;
    let start_us = depth as f64 * BYTE_US
        + t.rx_delay_us
        + decide_time(guardian.chain, &t.decision)
        + t.t_init_us;
    Some(JamAction {
        start: frame_start + SimTime::from_micros(start_us),
        duration: SimTime::from_micros(t.t_interfere_us),
        power_dbm: guardian.jam_power_dbm,
        rule: eval.rule,
    })
}
