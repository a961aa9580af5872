use thiserror::Error;

use super::{FrameTypeSel, Match, MatchKind, RssDirection, RuleChain, Verdict};
use crate::frame::{field_offset, FieldRef, Frame, FrameType, APS_COMMAND_INDEX};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("chain contains an RSS match but the frame carries no reception metadata")]
    MissingRss,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("rule {rule}, match {index} (`{name}`): field `{field}` absent from frame layout")]
pub struct DepthError {
    pub rule: usize,
    pub index: usize,
    pub name: &'static str,
    pub field: FieldRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evaluation {
    pub verdict: Verdict,
    /// Index of the rule that fired, `None` when the default verdict applied.
    pub rule: Option<usize>,
}

fn within(observed: u64, literal: u64, tolerance: u32) -> bool {
    (observed ^ literal).count_ones() <= tolerance
}

fn address_fields(
    m_addr: Option<u16>,
    m_pan: Option<u16>,
    addr: Option<u16>,
    pan: Option<u16>,
) -> Option<(u64, u64)> {
    let mut observed = 0u64;
    let mut literal = 0u64;
    if let Some(lit) = m_addr {
        observed = addr? as u64;
        literal = lit as u64;
    }
    if let Some(lit) = m_pan {
        observed = (observed << 16) | pan? as u64;
        literal = (literal << 16) | lit as u64;
    }
    Some((observed, literal))
}

fn frame_type_bits(sel: FrameTypeSel) -> u8 {
    match sel {
        FrameTypeSel::Beacon => FrameType::Beacon.bits(),
        FrameTypeSel::Data => FrameType::Data.bits(),
        FrameTypeSel::Ack => FrameType::Ack.bits(),
        FrameTypeSel::Control => FrameType::Command.bits(),
    }
}

impl Match {
    /// Whether this match fires on `frame`. The caller guarantees RSS
    /// metadata when the match needs it.
    fn fires(&self, frame: &Frame) -> bool {
        let tol = self.hamming_tolerance;
        match &self.kind {
            MatchKind::Src { addr, pan } => address_fields(
                *addr,
                *pan,
                frame.src_addr.and_then(|a| a.short()),
                frame.effective_src_pan(),
            )
            .is_some_and(|(o, l)| within(o, l, tol)),
            MatchKind::Dst { addr, pan } => address_fields(
                *addr,
                *pan,
                frame.dst_addr.and_then(|a| a.short()),
                frame.dst_pan,
            )
            .is_some_and(|(o, l)| within(o, l, tol)),
            MatchKind::Type(sel) => within(
                frame.frame_type().bits() as u64,
                frame_type_bits(*sel) as u64,
                tol,
            ),
            MatchKind::Rss {
                threshold_dbm,
                direction,
            } => {
                let rss = frame.rx_meta.map_or(f64::NAN, |m| m.rss_dbm);
                match direction {
                    RssDirection::Above => rss > *threshold_dbm,
                    RssDirection::Below => rss < *threshold_dbm,
                }
            }
            MatchKind::NwCtrl(lit) => frame
                .payload
                .get(0..2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .is_some_and(|v| within(v as u64, *lit as u64, tol)),
            MatchKind::AslCmd(lit) => frame
                .payload
                .get(APS_COMMAND_INDEX)
                .is_some_and(|&v| within(v as u64, *lit as u64, tol)),
            MatchKind::RawByte { offset, value } => frame
                .payload
                .get(*offset)
                .is_some_and(|&v| within(v as u64, *value as u64, tol)),
        }
    }

    /// Fields this match must observe on a frame with the given layout.
    fn fields(&self, layout: &Frame) -> Vec<FieldRef> {
        let src_pan = if layout.src_pan.is_some() {
            FieldRef::SrcPan
        } else {
            FieldRef::DstPan
        };
        match &self.kind {
            MatchKind::Src { addr, pan } => [
                addr.map(|_| FieldRef::SrcAddr),
                pan.map(|_| src_pan),
            ]
            .into_iter()
            .flatten()
            .collect(),
            MatchKind::Dst { addr, pan } => [
                addr.map(|_| FieldRef::DstAddr),
                pan.map(|_| FieldRef::DstPan),
            ]
            .into_iter()
            .flatten()
            .collect(),
            MatchKind::Type(_) => vec![FieldRef::FrameType],
            MatchKind::Rss { .. } => vec![FieldRef::Rss],
            MatchKind::NwCtrl(_) => vec![FieldRef::NwCtrl],
            MatchKind::AslCmd(_) => vec![FieldRef::AslCmd],
            MatchKind::RawByte { offset, .. } => vec![FieldRef::PayloadByte(*offset)],
        }
    }
}

/// First-match evaluation of `chain` against `frame`.
pub fn evaluate_chain(chain: &RuleChain, frame: &Frame) -> Result<Evaluation, EvalError> {
    if frame.rx_meta.is_none() && chain.has_rss_match() {
        return Err(EvalError::MissingRss);
    }
    for (i, rule) in chain.rules.iter().enumerate() {
        if rule.matches.iter().all(|m| m.fires(frame)) {
            return Ok(Evaluation {
                verdict: rule.verdict,
                rule: Some(i),
            });
        }
    }
    Ok(Evaluation {
        verdict: chain.default_verdict,
        rule: None,
    })
}

/// Offset of the deepest byte any match of `chain` reads on `layout`. The
/// framer always needs the FCF, so the result is at least its last byte.
pub fn chain_inspection_depth(chain: &RuleChain, layout: &Frame) -> Result<usize, DepthError> {
    let fcf_end = field_offset(layout, FieldRef::Fcf).expect("FCF always present");
    let mut depth = fcf_end;
    for (ri, rule) in chain.rules.iter().enumerate() {
        for (mi, m) in rule.matches.iter().enumerate() {
            for field in m.fields(layout) {
                let off = field_offset(layout, field).map_err(|_| DepthError {
                    rule: ri,
                    index: mi,
                    name: m.name(),
                    field,
                })?;
                depth = depth.max(off);
            }
        }
    }
    Ok(depth)
}
