use serde::{Deserialize, Serialize};

use super::RuleChain;

/// Worst-case rule checker execution time model.
///
/// The firmware checker walks the chain sequentially; every rule and every
/// match adds a fixed overhead and all rules are assumed to be traversed
/// (no rule fires). The FPGA checker compares all rules in parallel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum DecisionCostModel {
    Firmware {
        /// Interrupt entry, call and return, interference trigger.
        #[serde(default = "defaults::base")]
        c_base_us: f64,
        /// Chain traversal per rule.
        #[serde(default = "defaults::rule")]
        c_rule_us: f64,
        /// Dispatch to a match function.
        #[serde(default = "defaults::dispatch")]
        c_dispatch_us: f64,
        /// Match function body (address match taken as representative).
        #[serde(default = "defaults::exec")]
        c_exec_us: f64,
    },
    Fpga {
        #[serde(default = "defaults::fpga")]
        const_us: f64,
    },
    /// A measured decision time, independent of the chain.
    Fixed { t_decide_us: f64 },
}

mod defaults {
    pub fn base() -> f64 {
        4.03
    }
    pub fn rule() -> f64 {
        0.26
    }
    pub fn dispatch() -> f64 {
        0.34
    }
    pub fn exec() -> f64 {
        1.86
    }
    pub fn fpga() -> f64 {
        10.0
    }
}

impl DecisionCostModel {
    pub fn firmware() -> Self {
        DecisionCostModel::Firmware {
            c_base_us: defaults::base(),
            c_rule_us: defaults::rule(),
            c_dispatch_us: defaults::dispatch(),
            c_exec_us: defaults::exec(),
        }
    }

    pub fn fpga() -> Self {
        DecisionCostModel::Fpga {
            const_us: defaults::fpga(),
        }
    }

    pub fn is_valid(&self) -> bool {
        let coeffs: &[f64] = match self {
            DecisionCostModel::Firmware {
                c_base_us,
                c_rule_us,
                c_dispatch_us,
                c_exec_us,
            } => &[*c_base_us, *c_rule_us, *c_dispatch_us, *c_exec_us],
            DecisionCostModel::Fpga { const_us } => &[*const_us],
            DecisionCostModel::Fixed { t_decide_us } => &[*t_decide_us],
        };
        coeffs.iter().all(|c| c.is_finite() && *c >= 0.0)
    }
}

impl Default for DecisionCostModel {
    fn default() -> Self {
        Self::fpga()
    }
}

/// Worst-case decision time in µs for `chain` under `model`.
pub fn decide_time(chain: &RuleChain, model: &DecisionCostModel) -> f64 {
    match *model {
        DecisionCostModel::Firmware {
            c_base_us,
            c_rule_us,
            c_dispatch_us,
            c_exec_us,
        } => {
            c_base_us
                + chain
                    .rules
                    .iter()
                    .map(|r| c_rule_us + r.matches.len() as f64 * (c_dispatch_us + c_exec_us))
                    .sum::<f64>()
        }
        DecisionCostModel::Fpga { const_us } => const_us,
        DecisionCostModel::Fixed { t_decide_us } => t_decide_us,
    }
}
