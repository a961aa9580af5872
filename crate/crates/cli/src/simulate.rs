use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use guardian_core::sim::{run as run_scenario, Scenario, StatsReport};

use crate::CliError;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scenario JSON files
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Write `<name>.csv` and `<name>.summary.json` per scenario here instead
    /// of printing the CSV
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Write the JSON summary of a single scenario to this path
    #[arg(long, conflicts_with = "out_dir")]
    summary: Option<PathBuf>,
    /// Override the scenario seed
    #[arg(long)]
    seed: Option<u64>,
    /// Scenarios to run concurrently
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=256))]
    jobs: u64,
}

fn simulate_file(path: &Path, seed: Option<u64>) -> Result<StatsReport, CliError> {
    let named = |e: guardian_core::sim::SimError| CliError::Domain(format!("{}: {e}", path.display()));
    let mut sc = Scenario::load(path).map_err(named)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    run_scenario(&sc).map_err(named)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

pub fn run(a: SimulateArgs, out: &mut impl Write) -> Result<(), CliError> {
    if a.out_dir.is_none() && a.files.len() > 1 {
        return Err(CliError::Usage("several scenarios need --out-dir".into()));
    }
    let jobs = a.jobs as usize;
    let mut results: Vec<Option<Result<StatsReport, CliError>>> = (0..a.files.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        for (chunk_files, chunk_out) in a
            .files
            .chunks(a.files.len().div_ceil(jobs))
            .zip(results.chunks_mut(a.files.len().div_ceil(jobs)))
        {
            s.spawn(|| {
                for (f, slot) in chunk_files.iter().zip(chunk_out.iter_mut()) {
                    *slot = Some(simulate_file(f, a.seed));
                }
            });
        }
    });
    let io = |r: std::io::Result<()>| r.map_err(CliError::from);
    let Some(dir) = &a.out_dir else {
        let report = results.pop().flatten().expect("one scenario")?;
        io(out.write_all(report.to_csv().as_bytes()))?;
        if let Some(p) = &a.summary {
            write_file(p, &report.summary_json())?;
        }
        return Ok(());
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::Domain(format!("{}: {e}", dir.display())))?;
    for (path, result) in a.files.iter().zip(results) {
        let report = result.expect("every scenario ran")?;
        let stem = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
        write_file(&dir.join(format!("{stem}.csv")), &report.to_csv())?;
        write_file(&dir.join(format!("{stem}.summary.json")), &report.summary_json())?;
        let sum = |f: fn(&guardian_core::sim::FlowSummary) -> u64| report.flows.iter().map(f).sum::<u64>();
        io(writeln!(
            out,
            "{stem}: sent={} received={} destroyed={} below_sensitivity={} false_pos={} false_neg={}",
            sum(|f| f.sent),
            sum(|f| f.received),
            sum(|f| f.destroyed),
            sum(|f| f.below_sensitivity),
            sum(|f| f.false_pos),
            sum(|f| f.false_neg),
        ))?;
    }
    Ok(())
}
