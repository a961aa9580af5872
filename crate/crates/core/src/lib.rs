//! Reactive wireless firewall toolkit for IEEE 802.15.4 networks.
//!
//! A *guardian* node overhears frames on the channel, classifies them with a
//! gtables rule chain and destroys disallowed frames mid-air with a short
//! interference burst. This crate provides the pieces needed to reason about
//! such a node:
//!
//! - [`frame`]: bit-exact 802.15.4 frame codec, FCS and field offsets.
//! - [`rules`]: the gtables rule language, chain evaluation and decision cost.
//! - [`rf`]: dB arithmetic, path loss and the detection/destruction conditions.
//! - [`analysis`]: closed-form attack ranges, energy cost and timing budgets.
//! - [`sim`]: a deterministic discrete-event simulator of attackers, victims
//!   and guardians sharing one channel.

pub mod analysis;
pub mod frame;
pub mod rf;
pub mod rules;
pub mod sim;

/// Airtime of a single O-QPSK symbol at 2.4 GHz, in microseconds.
pub const SYMBOL_US: f64 = 16.0;

/// Airtime of one byte (two symbols), in microseconds.
pub const BYTE_US: f64 = 32.0;
