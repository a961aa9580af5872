//! Deterministic discrete-event simulation of attackers, victims and
//! guardians on one shared channel.
//!
//! Events are ordered by time (integer nanoseconds), then node id, then
//! insertion sequence. For every frame, each guardian that hears it runs the
//! listen/decide/init/interfere pipeline against the chain loaded when the
//! frame started; the destination victim then receives the frame unless it
//! is below sensitivity or some symbol is corrupted by interference.
//!
//! Ground truth for false positives and negatives is the operator's intended
//! policy: a frame is unauthorized when some guardian's scheduled chain drops
//! it (a false negative if it is received anyway), and authorized when every
//! guardian's scheduled and loaded chains accept it (a false positive if it
//! is destroyed anyway). Frames caught between a relaxing update and its
//! activation count as neither.

mod engine;
mod pipeline;
mod reception;
mod scenario;
mod stats;

use thiserror::Error;

pub use engine::{nominal_rx_power, run};
pub use pipeline::{guardian_pipeline, GuardianView, JamAction};
pub use reception::{reception_outcome, Interference, Outcome, SimTime, Window};
pub use scenario::{
    CompiledRules, FrameKind, FrameTemplate, HexU16, NodeSpec, Role, RuleUpdate, RulesSpec,
    Scenario, Strategy, TrafficFlow,
};
pub use stats::{FlowSummary, GuardianSummary, IntervalRow, StatsReport, CSV_HEADER};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("rules: {0}")]
    Rules(String),
    #[error("io: {0}")]
    Io(String),
}
