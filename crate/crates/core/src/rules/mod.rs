//! gtables: an iptables-style rule language for per-frame DROP/ACCEPT policies.
//!
//! A [`RuleChain`] is an ordered list of [`Rule`]s. A rule fires when all of
//! its matches fire; the first firing rule decides the verdict and an empty
//! or non-firing chain yields ACCEPT.

mod cost;
mod eval;
mod parse;

use std::fmt;

pub use cost::{decide_time, DecisionCostModel};
pub use eval::{chain_inspection_depth, evaluate_chain, DepthError, EvalError, Evaluation};
pub use parse::{parse_rule_line, parse_rules, ParseError, RulesFileError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Drop,
    Accept,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Drop => "DROP",
            Verdict::Accept => "ACCEPT",
        })
    }
}

/// Frame type selector of a `type` match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameTypeSel {
    /// MAC command frames.
    Control,
    Data,
    Beacon,
    Ack,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RssDirection {
    Above,
    Below,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatchKind {
    Src { addr: Option<u16>, pan: Option<u16> },
    Dst { addr: Option<u16>, pan: Option<u16> },
    Type(FrameTypeSel),
    Rss { threshold_dbm: f64, direction: RssDirection },
    NwCtrl(u16),
    AslCmd(u8),
    /// Byte at a 0-based MAC payload index.
    RawByte { offset: usize, value: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Match {
    pub kind: MatchKind,
    /// Maximum number of flipped bits tolerated in the matched field(s).
    pub hamming_tolerance: u32,
}

impl Match {
    pub fn exact(kind: MatchKind) -> Self {
        Match {
            kind,
            hamming_tolerance: 0,
        }
    }

    /// Number of bits compared by this match.
    pub fn bit_width(&self) -> u32 {
        match &self.kind {
            MatchKind::Src { addr, pan } | MatchKind::Dst { addr, pan } => {
                16 * (addr.is_some() as u32 + pan.is_some() as u32)
            }
            MatchKind::Type(_) => 3,
            MatchKind::Rss { .. } => 0,
            MatchKind::NwCtrl(_) => 16,
            MatchKind::AslCmd(_) | MatchKind::RawByte { .. } => 8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MatchKind::Src { .. } => "src",
            MatchKind::Dst { .. } => "dst",
            MatchKind::Type(_) => "type",
            MatchKind::Rss { .. } => "RSS",
            MatchKind::NwCtrl(_) => "nw_ctrl",
            MatchKind::AslCmd(_) => "asl_cmd",
            MatchKind::RawByte { .. } => "raw_byte",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub matches: Vec<Match>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleChain {
    pub rules: Vec<Rule>,
    pub default_verdict: Verdict,
}

impl Default for RuleChain {
    fn default() -> Self {
        RuleChain {
            rules: Vec::new(),
            default_verdict: Verdict::Accept,
        }
    }
}

impl RuleChain {
    pub fn new(rules: Vec<Rule>) -> Self {
        RuleChain {
            rules,
            default_verdict: Verdict::Accept,
        }
    }

    pub fn has_rss_match(&self) -> bool {
        self.rules
            .iter()
            .flat_map(|r| &r.matches)
            .any(|m| matches!(m.kind, MatchKind::Rss { .. }))
    }

    pub fn match_count(&self) -> usize {
        self.rules.iter().map(|r| r.matches.len()).sum()
    }
}

impl FromIterator<Rule> for RuleChain {
    fn from_iter<I: IntoIterator<Item = Rule>>(iter: I) -> Self {
        RuleChain::new(iter.into_iter().collect())
    }
}

impl fmt::Display for Match {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "-m {}", self.name())?;
        match &self.kind {
            MatchKind::Src { addr, pan } | MatchKind::Dst { addr, pan } => {
                if let Some(pan) = pan {
                    write!(f, " --pan 0x{pan:04X}")?;
                }
                if let Some(addr) = addr {
                    write!(f, " --addr 0x{addr:04X}")?;
                }
            }
            MatchKind::Type(sel) => f.write_str(match sel {
                FrameTypeSel::Control => " --control",
                FrameTypeSel::Data => " --data",
                FrameTypeSel::Beacon => " --beacon",
                FrameTypeSel::Ack => " --ack",
            })?,
            MatchKind::Rss {
                threshold_dbm,
                direction,
            } => {
                let dir = match direction {
                    RssDirection::Above => "above",
                    RssDirection::Below => "below",
                };
                write!(f, " --{dir} {threshold_dbm}")?;
            }
            MatchKind::NwCtrl(v) => write!(f, " 0x{v:04X}")?,
            MatchKind::AslCmd(v) => write!(f, " 0x{v:02X}")?,
            MatchKind::RawByte { offset, value } => {
                write!(f, " --offset {offset} --value 0x{value:02X}")?
            }
        }
        if self.hamming_tolerance > 0 {
            write!(f, " --tolerance {}", self.hamming_tolerance)?;
        }
        Ok(())
    }
}

/// Renders the canonical gtables command line for a rule.
impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("gtables -A")?;
        for m in &self.matches {
            write!(f, " {m}")?;
        }
        write!(f, " -j {}", self.verdict)
    }
}
