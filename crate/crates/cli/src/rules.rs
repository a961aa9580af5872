use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Subcommand};
use guardian_core::frame::{decode_frame, from_hex};
use guardian_core::rules::{decide_time, evaluate_chain, parse_rules, DecisionCostModel, RuleChain};

use crate::num::fixed2;
use crate::CliError;

#[derive(Subcommand, Debug)]
pub enum RulesCmd {
    /// Parse a rules file and print one summary line per rule
    Check {
        file: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct MatchArgs {
    /// Whole frame as hex
    frame: String,
    /// Rules file
    file: PathBuf,
    /// RSS observed for the frame, in dBm
    #[arg(long, allow_hyphen_values = true)]
    rss: Option<f64>,
}

pub fn load_rules(path: &Path) -> Result<RuleChain, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))?;
    parse_rules(&text).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn run(cmd: RulesCmd, out: &mut impl Write) -> Result<(), CliError> {
    let RulesCmd::Check { file } = cmd;
    let chain = load_rules(&file)?;
    let io = |r: std::io::Result<()>| r.map_err(CliError::from);
    for (i, rule) in chain.rules.iter().enumerate() {
        io(writeln!(
            out,
            "rule {i}: verdict={} matches={} | {rule}",
            rule.verdict,
            rule.matches.len()
        ))?;
    }
    io(writeln!(
        out,
        "rules={} t_decide_firmware_us={} t_decide_fpga_us={}",
        chain.rules.len(),
        fixed2(decide_time(&chain, &DecisionCostModel::firmware())),
        fixed2(decide_time(&chain, &DecisionCostModel::fpga())),
    ))
}

pub fn run_match(a: MatchArgs, out: &mut impl Write) -> Result<(), CliError> {
    let bytes = from_hex(&a.frame).map_err(|e| CliError::Usage(format!("frame: {e}")))?;
    let mut frame = decode_frame(&bytes).map_err(CliError::domain)?;
    if let Some(rss) = a.rss {
        frame = frame.with_rss(rss);
    }
    let chain = load_rules(&a.file)?;
    let e = evaluate_chain(&chain, &frame).map_err(CliError::domain)?;
    let rule = e.rule.map_or("none".to_string(), |r| r.to_string());
    Ok(writeln!(out, "verdict={}\nrule={rule}", e.verdict)?)
}
