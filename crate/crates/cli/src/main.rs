use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use wkam_core::experiments::{exit_code_for, run_scenario, write_failure, Scenario, Verb};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VerbArg {
    PairCheck,
    Alpha,
    WeakKam,
    Barrier,
    Aubry,
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem4,
    FlowCheck,
}

impl From<VerbArg> for Verb {
    fn from(v: VerbArg) -> Self {
        match v {
            VerbArg::PairCheck => Verb::PairCheck,
            VerbArg::Alpha => Verb::Alpha,
            VerbArg::WeakKam => Verb::WeakKam,
            VerbArg::Barrier => Verb::Barrier,
            VerbArg::Aubry => Verb::Aubry,
            VerbArg::Theorem1 => Verb::Theorem1,
            VerbArg::Theorem2 => Verb::Theorem2,
            VerbArg::Theorem3 => Verb::Theorem3,
            VerbArg::Theorem4 => Verb::Theorem4,
            VerbArg::FlowCheck => Verb::FlowCheck,
        }
    }
}

/// Discrete weak KAM verification runs.
///
/// Exit codes: 0 all criteria pass, 1 a criterion fails, 2 configuration error, 3 solver error.
#[derive(Debug, Parser)]
#[command(name = "wkam", version)]
struct Cli {
    /// Verification to run; replaces `verification.kind` in the config.
    #[arg(value_enum)]
    verb: VerbArg,
    /// Scenario JSON document.
    #[arg(long)]
    config: PathBuf,
    /// Directory for report.json and CSV artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker count; recorded in the report.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let verb = Verb::from(cli.verb);
    let scenario = match Scenario::load(&cli.config, Some(verb)) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("wkam: {e}");
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    match run_scenario(&scenario, cli.out.as_deref(), cli.seed, cli.threads) {
        Ok(report) => {
            for line in report.summary_lines() {
                println!("{line}");
            }
            let failed = report.criteria.iter().filter(|c| !c.passed).count();
            println!("{}: {} criteria, {failed} failed", verb.name(), report.criteria.len());
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("wkam: {e}");
            if let Some(out) = &cli.out {
                if let Err(w) = write_failure(out, verb.name(), &e) {
                    eprintln!("wkam: could not write failure marker: {w}");
                }
            }
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
