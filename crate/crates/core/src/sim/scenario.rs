//! Declarative scenario input, deserialised from JSON.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::SimError;
use crate::analysis::TimingModel;
use crate::rf::RfParams;
use crate::rules::{parse_rule_line, parse_rules, RuleChain};

/// A 16-bit value written as `"0xACAC"` or as a plain JSON number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HexU16(pub u16);

impl Serialize for HexU16 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{:04X}", self.0))
    }
}

impl<'de> Deserialize<'de> for HexU16 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl de::Visitor<'_> for V {
            type Value = HexU16;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a 16-bit integer or a 0x-prefixed hex string")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<HexU16, E> {
                u16::try_from(v).map(HexU16).map_err(|_| E::custom("value exceeds 0xFFFF"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<HexU16, E> {
                u16::try_from(v).map(HexU16).map_err(|_| E::custom("value outside 0..=0xFFFF"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<HexU16, E> {
                let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
                    Some(hex) => u16::from_str_radix(hex, 16),
                    None => v.parse(),
                };
                parsed.map(HexU16).map_err(|_| E::custom(format!("bad 16-bit literal `{v}`")))
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Attacker,
    Victim,
    Guardian,
}

/// Rules given inline as gtables lines or as a rules file path relative to
/// the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RulesSpec {
    Inline(Vec<String>),
    File { file: PathBuf },
}

impl Default for RulesSpec {
    fn default() -> Self {
        RulesSpec::Inline(Vec::new())
    }
}

impl RulesSpec {
    pub fn resolve(&self, base_dir: Option<&Path>) -> Result<RuleChain, SimError> {
        match self {
            RulesSpec::Inline(lines) => lines
                .iter()
                .map(|l| {
                    parse_rule_line(l).map_err(|e| SimError::Rules(format!("`{l}`: {e}")))
                })
                .collect(),
            RulesSpec::File { file } => {
                let path = match base_dir {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
                parse_rules(&text).map_err(|e| SimError::Rules(format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: u32,
    pub role: Role,
    /// Short MAC address; defaults to the low 16 bits of `id`.
    #[serde(default)]
    pub addr: Option<HexU16>,
    pub position: [f64; 2],
    #[serde(default)]
    pub tx_power_dbm: f64,
    #[serde(default)]
    pub sensitivity_dbm: Option<f64>,
    #[serde(default)]
    pub rules: Option<RulesSpec>,
    #[serde(default)]
    pub timing: Option<TimingModel>,
    /// Interference power; defaults to `tx_power_dbm`.
    #[serde(default)]
    pub jam_power_dbm: Option<f64>,
}

impl NodeSpec {
    pub fn short_addr(&self) -> u16 {
        self.addr.map_or(self.id as u16, |a| a.0)
    }

    pub fn distance_to(&self, other: &NodeSpec) -> f64 {
        let dx = self.position[0] - other.position[0];
        let dy = self.position[1] - other.position[1];
        dx.hypot(dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    #[default]
    Data,
    /// MAC command frame.
    Control,
    Beacon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameTemplate {
    #[serde(default, rename = "type")]
    pub kind: FrameKind,
    #[serde(default = "default_payload_len")]
    pub payload_len: usize,
    /// Destination address override, e.g. `0xFFFF` for broadcast. Defaults to
    /// the destination node's address.
    #[serde(default)]
    pub dst_addr: Option<HexU16>,
    #[serde(default)]
    pub nw_ctrl: Option<HexU16>,
    #[serde(default)]
    pub asl_cmd: Option<u8>,
}

fn default_payload_len() -> usize {
    15
}

impl Default for FrameTemplate {
    fn default() -> Self {
        FrameTemplate {
            kind: FrameKind::Data,
            payload_len: default_payload_len(),
            dst_addr: None,
            nw_ctrl: None,
            asl_cmd: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    FixedPower,
    /// Picks the midpoint of the stealth power window, abstains when empty.
    Stealthy,
    /// Always transmits at the node's maximum power.
    BruteForce,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficFlow {
    pub id: String,
    pub src: u32,
    pub dst: u32,
    pub pan: HexU16,
    #[serde(default)]
    pub frame: FrameTemplate,
    pub rate_pps: f64,
    pub start_s: f64,
    pub end_s: f64,
    #[serde(default)]
    pub strategy: Strategy,
    /// Defer while another frame is on the air. Disable to script overlaps.
    #[serde(default = "yes")]
    pub carrier_sense: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleUpdate {
    pub time_s: f64,
    pub guardian: u32,
    pub rules: RulesSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub rf: RfParams,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub flows: Vec<TrafficFlow>,
    #[serde(default)]
    pub rule_updates: Vec<RuleUpdate>,
    pub duration_s: f64,
    #[serde(default)]
    pub seed: u64,
    /// Delay between a scheduled rule update and the guardian using it.
    /// Defaults to one frame interval of the fastest flow.
    #[serde(default)]
    pub reconfig_latency_us: Option<f64>,
    #[serde(default = "Scenario::default_interval")]
    pub stats_interval_s: f64,
    /// Interference overlap with one symbol needed to corrupt it at a victim.
    #[serde(default = "Scenario::default_min_overlap")]
    pub min_overlap_us: f64,
    /// Resolves rules files; not part of the document.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Scenario {
    fn default_interval() -> f64 {
        1.0
    }

    fn default_min_overlap() -> f64 {
        13.0
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))
    }

    /// Reads a scenario file; relative rules file paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_json(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn reconfig_latency_us(&self) -> f64 {
        self.reconfig_latency_us.unwrap_or_else(|| {
            self.flows
                .iter()
                .map(|f| 1e6 / f.rate_pps)
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
                .unwrap_or(0.0)
        })
    }

    pub fn node(&self, id: u32) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Checks ids, roles, times and parameters, and compiles every rule
    /// chain referenced by the scenario.
    pub fn validate(&self) -> Result<CompiledRules, SimError> {
        let invalid = |msg: String| Err(SimError::Invalid(msg));
        self.rf.validate().map_err(|e| SimError::Invalid(e.to_string()))?;
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return invalid(format!("duration_s must be non-negative, got {}", self.duration_s));
        }
        if !(self.stats_interval_s > 0.0 && self.stats_interval_s.is_finite()) {
            return invalid(format!("stats_interval_s must be positive, got {}", self.stats_interval_s));
        }
        if !(0.0..=crate::SYMBOL_US).contains(&self.min_overlap_us) {
            return invalid(format!("min_overlap_us must lie in [0, 16], got {}", self.min_overlap_us));
        }
        if let Some(l) = self.reconfig_latency_us {
            if !(l >= 0.0 && l.is_finite()) {
                return invalid(format!("reconfig_latency_us must be non-negative, got {l}"));
            }
        }

        let mut roles = HashMap::new();
        for n in &self.nodes {
            if roles.insert(n.id, n.role).is_some() {
                return invalid(format!("duplicate node id {}", n.id));
            }
            if !n.position.iter().all(|c| c.is_finite()) || !n.tx_power_dbm.is_finite() {
                return invalid(format!("node {}: non-finite position or power", n.id));
            }
            match n.role {
                Role::Victim | Role::Guardian if n.sensitivity_dbm.is_none() => {
                    return invalid(format!("node {}: sensitivity_dbm required", n.id));
                }
                Role::Guardian => {
                    if let Some(t) = &n.timing {
                        t.validate().map_err(|e| SimError::Invalid(format!("node {}: {e}", n.id)))?;
                    }
                }
                _ => {}
            }
        }

        let mut flow_ids = HashSet::new();
        for f in &self.flows {
            if !flow_ids.insert(f.id.as_str()) {
                return invalid(format!("duplicate flow id `{}`", f.id));
            }
            if f.id.contains([',', '"', '\n', '\r']) {
                return invalid(format!("flow id `{}` contains a reserved character", f.id));
            }
            match roles.get(&f.src) {
                Some(Role::Attacker | Role::Victim) => {}
                Some(Role::Guardian) => return invalid(format!("flow `{}`: guardians do not originate traffic", f.id)),
                None => return invalid(format!("flow `{}`: unknown src node {}", f.id, f.src)),
            }
            match roles.get(&f.dst) {
                Some(Role::Victim) => {}
                Some(_) => return invalid(format!("flow `{}`: dst {} is not a victim", f.id, f.dst)),
                None => return invalid(format!("flow `{}`: unknown dst node {}", f.id, f.dst)),
            }
            if f.src == f.dst {
                return invalid(format!("flow `{}`: src and dst are the same node", f.id));
            }
            if !(f.rate_pps > 0.0 && f.rate_pps.is_finite()) {
                return invalid(format!("flow `{}`: rate_pps must be positive", f.id));
            }
            if !(f.start_s >= 0.0 && f.end_s > f.start_s) {
                return invalid(format!("flow `{}`: window [{}, {}) is empty or negative", f.id, f.start_s, f.end_s));
            }
            if f.end_s > self.duration_s {
                return invalid(format!("flow `{}`: window ends after duration_s", f.id));
            }
            let probe_len = if f.frame.asl_cmd.is_some() {
                crate::frame::APS_COMMAND_INDEX + 1
            } else if f.frame.nw_ctrl.is_some() {
                crate::frame::NWK_CONTROL_INDEX + 1
            } else {
                0
            };
            if f.frame.payload_len < probe_len {
                return invalid(format!("flow `{}`: payload too short for its ZigBee probes", f.id));
            }
            // 6-byte SHR/PHR is outside the MPDU; 9-byte MHR plus FCS inside
            if 9 + f.frame.payload_len + 2 > crate::frame::MAX_PHY_LEN {
                return invalid(format!("flow `{}`: payload_len exceeds the PHY limit", f.id));
            }
        }

        let mut initial = HashMap::new();
        for n in self.nodes.iter().filter(|n| n.role == Role::Guardian) {
            let chain = n
                .rules
                .as_ref()
                .map(|r| r.resolve(self.base_dir.as_deref()))
                .transpose()?
                .unwrap_or_default();
            initial.insert(n.id, Arc::new(chain));
        }
        let mut updates = Vec::new();
        for u in &self.rule_updates {
            if !(u.time_s >= 0.0 && u.time_s.is_finite()) {
                return invalid(format!("rule update at negative time {}", u.time_s));
            }
            if roles.get(&u.guardian) != Some(&Role::Guardian) {
                return invalid(format!("rule update targets {} which is not a guardian", u.guardian));
            }
            updates.push((u.time_s, u.guardian, Arc::new(u.rules.resolve(self.base_dir.as_deref())?)));
        }

        for f in &self.flows {
            let src = self.node(f.src).expect("validated");
            let dst = self.node(f.dst).expect("validated");
            let mut links = vec![(src, dst)];
            for g in self.nodes.iter().filter(|n| n.role == Role::Guardian) {
                links.push((src, g));
                links.push((g, dst));
            }
            for (a, b) in links {
                if !(a.distance_to(b) > 0.0) {
                    return invalid(format!("nodes {} and {} are co-located", a.id, b.id));
                }
            }
        }
        Ok(CompiledRules { initial, updates })
    }
}

/// Rule chains resolved during validation.
#[derive(Debug, Clone)]
pub struct CompiledRules {
    pub initial: HashMap<u32, Arc<RuleChain>>,
    /// `(time_s, guardian, chain)` in document order.
    pub updates: Vec<(f64, u32, Arc<RuleChain>)>,
}
