use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand, ValueEnum};
use guardian_core::analysis::{
    energy_cost, false_positive_rate, force_attack_range, no_guardian_range, reaction_feasible,
    stealth_attack_range, timing_at_depth, TimingModel, TimingReport,
};
use guardian_core::frame::{Frame, FrameType};
use guardian_core::rf::RfParams;
use guardian_core::rules::{decide_time, DecisionCostModel, RuleChain};

use crate::num::{axis, fixed2, sig6};
use crate::rules::load_rules;
use crate::CliError;

#[derive(Subcommand, Debug)]
pub enum AnalyzeCmd {
    /// Maximum attacker-victim distance for a successful injection
    Range(RangeArgs),
    /// Attacker-to-guardian energy ratio for one destroyed frame
    Energy(EnergyArgs),
    /// False-positive rate of a Hamming-tolerant match on a uniform field
    Fp(FpArgs),
    /// Reaction-time breakdown and feasibility of a blocking rule
    Timing(TimingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// No guardian: the victim's sensitivity contour
    None,
    /// Attacker stays below the guardian's sensitivity
    Stealth,
    /// Detected attacker overpowers the interference
    Force,
}

#[derive(Args, Debug, Clone)]
pub struct SweepOpts {
    /// Vary one numeric flag, e.g. `alpha=2:4:0.5` (inclusive)
    #[arg(long, value_name = "NAME=FROM:TO:STEP")]
    sweep: Option<String>,
    /// Print the sweep as CSV
    #[arg(long, requires = "sweep")]
    csv: bool,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct RangeArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Attacker transmit power (dBm)
    #[arg(long)]
    pa: Option<f64>,
    /// Guardian interference power (dBm)
    #[arg(long)]
    pg: Option<f64>,
    /// Victim sensitivity (dBm)
    #[arg(long)]
    sv: Option<f64>,
    /// Guardian sensitivity (dBm)
    #[arg(long)]
    sg: Option<f64>,
    /// Guardian-victim distance (m)
    #[arg(long)]
    dgv: Option<f64>,
    /// Path-loss exponent
    #[arg(long, default_value_t = 3.3)]
    alpha: f64,
    /// Effective destruction threshold (dB); defaults to γ_SIR plus waveform gain
    #[arg(long)]
    gamma: Option<f64>,
    /// Reference distance (m)
    #[arg(long, default_value_t = 8.0)]
    d0: f64,
    /// Path loss at the reference distance (dB)
    #[arg(long, default_value_t = 58.5)]
    pl_d0: f64,
    #[command(flatten)]
    sweep: SweepOpts,
}

#[derive(Args, Debug, Clone)]
#[command(allow_negative_numbers = true)]
pub struct EnergyArgs {
    #[arg(long, default_value_t = 0.0)]
    pa: f64,
    #[arg(long, default_value_t = 1.0)]
    dav: f64,
    #[arg(long, default_value_t = 0.0)]
    pg: f64,
    #[arg(long, default_value_t = 1.0)]
    dgv: f64,
    /// Frame length in bytes
    #[arg(long, default_value_t = 32)]
    len: usize,
    /// Interference duration (µs)
    #[arg(long, default_value_t = 26.0)]
    t_interfere: f64,
    #[arg(long, default_value_t = 3.3)]
    alpha: f64,
    #[command(flatten)]
    sweep: SweepOpts,
}

#[derive(Args, Debug)]
pub struct FpArgs {
    /// Width of the matched field
    #[arg(long, default_value_t = 32)]
    bits: u32,
    /// Tolerated bit errors
    #[arg(long, default_value_t = 0)]
    tolerance: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Fpga,
    Firmware,
    /// A measured decision time given by --t-decide
    Fixed,
}

#[derive(Args, Debug, Clone)]
pub struct TimingArgs {
    /// Inspection depth (1-indexed byte offset); alternative to --rules
    #[arg(long, conflicts_with = "rules", required_unless_present = "rules")]
    depth: Option<usize>,
    /// Rules file; depth and decision cost come from the chain
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Total frame length in bytes including preamble
    #[arg(long, default_value_t = 32)]
    total: usize,
    #[arg(long, value_enum, default_value = "fpga")]
    model: Model,
    /// Decision time for the fixed model, or the FPGA constant (µs)
    #[arg(long)]
    t_decide: Option<f64>,
    #[arg(long, default_value_t = 4.0)]
    rx_delay: f64,
    #[arg(long, default_value_t = 3.0)]
    t_init: f64,
    #[arg(long, default_value_t = 26.0)]
    t_interfere: f64,
    #[arg(long, default_value_t = 13.0)]
    min_overlap: f64,
}

pub fn run(cmd: AnalyzeCmd, out: &mut impl Write) -> Result<(), CliError> {
    let lines = match cmd {
        AnalyzeCmd::Range(a) => {
            let opts = a.sweep.clone();
            sweepable(&opts, a, "range_m", |a, name, v| a.set(name, v), |a| a.eval().map(fixed2))?
        }
        AnalyzeCmd::Energy(a) => {
            let opts = a.sweep.clone();
            sweepable(&opts, a, "energy_cost", |a, name, v| a.set(name, v), |a| a.eval().map(sig6))?
        }
        AnalyzeCmd::Fp(a) => {
            let fp = false_positive_rate(a.bits, a.tolerance).map_err(CliError::domain)?;
            vec![
                format!("hits={}", fp.hits),
                format!("field_bits={}", fp.field_bits),
                format!("rate={}", sig6(fp.as_f64())),
            ]
        }
        AnalyzeCmd::Timing(a) => timing_lines(&timing(&a)?),
    };
    for l in lines {
        writeln!(out, "{l}")?;
    }
    Ok(())
}

impl RangeArgs {
    fn need(v: Option<f64>, flag: &str, mode: &str) -> Result<f64, CliError> {
        v.ok_or_else(|| CliError::Usage(format!("--mode {mode} requires --{flag}")))
    }

    fn eval(&self) -> Result<f64, CliError> {
        match self.mode {
            Mode::None => {
                let params = RfParams {
                    d0: self.d0,
                    alpha: self.alpha,
                    pl_d0_db: self.pl_d0,
                    ..RfParams::default()
                };
                no_guardian_range(Self::need(self.pa, "pa", "none")?, Self::need(self.sv, "sv", "none")?, &params)
            }
            Mode::Stealth => stealth_attack_range(
                Self::need(self.sv, "sv", "stealth")?,
                Self::need(self.sg, "sg", "stealth")?,
                Self::need(self.dgv, "dgv", "stealth")?,
                self.alpha,
            ),
            Mode::Force => force_attack_range(
                Self::need(self.pa, "pa", "force")?,
                Self::need(self.pg, "pg", "force")?,
                self.gamma.unwrap_or_else(|| RfParams::default().gamma_eff_db()),
                Self::need(self.dgv, "dgv", "force")?,
                self.alpha,
            ),
        }
        .map_err(CliError::domain)
    }

    fn set(&mut self, name: &str, v: f64) -> Result<(), CliError> {
        match name {
            "pa" => self.pa = Some(v),
            "pg" => self.pg = Some(v),
            "sv" => self.sv = Some(v),
            "sg" => self.sg = Some(v),
            "dgv" => self.dgv = Some(v),
            "alpha" => self.alpha = v,
            "gamma" => self.gamma = Some(v),
            "d0" => self.d0 = v,
            "pl_d0" | "pl-d0" => self.pl_d0 = v,
            _ => return Err(CliError::Usage(format!("cannot sweep `{name}`"))),
        }
        Ok(())
    }
}

impl EnergyArgs {
    fn eval(&self) -> Result<f64, CliError> {
        energy_cost(self.pa, self.dav, self.pg, self.dgv, self.len, self.t_interfere, self.alpha)
            .map_err(CliError::domain)
    }

    fn set(&mut self, name: &str, v: f64) -> Result<(), CliError> {
        match name {
            "pa" => self.pa = v,
            "dav" => self.dav = v,
            "pg" => self.pg = v,
            "dgv" => self.dgv = v,
            "len" if v >= 0.0 && v.fract() == 0.0 => self.len = v as usize,
            "t_interfere" | "t-interfere" => self.t_interfere = v,
            "alpha" => self.alpha = v,
            _ => return Err(CliError::Usage(format!("cannot sweep `{name}`"))),
        }
        Ok(())
    }
}

/// Parses `name=from:to:step` into the axis name and its values.
fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>), CliError> {
    let bad = || CliError::Usage(format!("--sweep expects NAME=FROM:TO:STEP, got `{spec}`"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<f64> = range
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let [from, to, step] = parts[..] else { return Err(bad()) };
    if !(step > 0.0) || !(to >= from) || !from.is_finite() || !to.is_finite() {
        return Err(bad());
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(CliError::Usage("--sweep has more than 100000 points".into()));
    }
    Ok((name.trim().to_string(), (0..=n).map(|i| ((from + i as f64 * step) * 1e9).round() / 1e9).collect()))
}

fn sweepable<A: Clone>(
    opts: &SweepOpts,
    args: A,
    key: &str,
    set: impl Fn(&mut A, &str, f64) -> Result<(), CliError>,
    eval: impl Fn(&A) -> Result<String, CliError>,
) -> Result<Vec<String>, CliError> {
    let Some(spec) = &opts.sweep else {
        return Ok(vec![format!("{key}={}", eval(&args)?)]);
    };
    let (name, values) = parse_sweep(spec)?;
    let mut lines = Vec::with_capacity(values.len() + 1);
    if opts.csv {
        lines.push(format!("{name},{key}"));
    }
    for v in values {
        let mut a = args.clone();
        set(&mut a, &name, v)?;
        let result = eval(&a)?;
        lines.push(if opts.csv {
            format!("{},{result}", axis(v))
        } else {
            format!("{name}={} {key}={result}", axis(v))
        });
    }
    Ok(lines)
}

fn timing(a: &TimingArgs) -> Result<TimingReport, CliError> {
    let decision = match (a.model, a.t_decide) {
        (Model::Fpga, t) => DecisionCostModel::Fpga {
            const_us: t.unwrap_or(10.0),
        },
        (Model::Firmware, None) => DecisionCostModel::firmware(),
        (Model::Firmware, Some(_)) => {
            return Err(CliError::Usage("--t-decide does not apply to the firmware model; use --model fixed".into()))
        }
        (Model::Fixed, Some(t)) => DecisionCostModel::Fixed { t_decide_us: t },
        (Model::Fixed, None) => return Err(CliError::Usage("--model fixed requires --t-decide".into())),
    };
    let timing = TimingModel {
        rx_delay_us: a.rx_delay,
        t_init_us: a.t_init,
        t_interfere_us: a.t_interfere,
        min_overlap_us: a.min_overlap,
        decision,
    };
    timing.validate().map_err(CliError::domain)?;
    match (&a.rules, a.depth) {
        (Some(path), _) => {
            let chain = load_rules(path)?;
            let payload_len = a
                .total
                .checked_sub(6 + 9 + 2)
                .ok_or_else(|| CliError::Domain(format!("a {}-byte frame cannot hold the MAC header", a.total)))?;
            let layout = Frame::intra_pan(FrameType::Data, 0, 0, 0, 0, vec![0; payload_len]);
            reaction_feasible(&chain, &layout, &timing, a.total).map_err(CliError::domain)
        }
        (None, Some(depth)) => {
            let t_decide = decide_time(&RuleChain::default(), &timing.decision);
            timing_at_depth(depth, t_decide, &timing, a.total).map_err(CliError::domain)
        }
        (None, None) => unreachable!("clap requires one of --depth/--rules"),
    }
}

fn timing_lines(r: &TimingReport) -> Vec<String> {
    vec![
        format!("depth={}", r.depth),
        format!("total_frame_bytes={}", r.total_frame_bytes),
        format!("t_listen_us={}", fixed2(r.t_listen_us)),
        format!("budget_us={}", fixed2(r.budget_us)),
        format!("rx_delay_us={}", fixed2(r.rx_delay_us)),
        format!("t_decide_us={}", fixed2(r.t_decide_us)),
        format!("t_init_us={}", fixed2(r.t_init_us)),
        format!("t_interfere_us={}", fixed2(r.t_interfere_us)),
        format!("t_react_us={}", fixed2(r.t_react_us)),
        format!("in_frame_us={}", fixed2(r.in_frame_us)),
        format!("min_overlap_us={}", fixed2(r.min_overlap_us)),
        format!("verdict={}", if r.feasible { "feasible" } else { "infeasible" }),
    ]
}
