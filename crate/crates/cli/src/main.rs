use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rind_core::catalog::{parse_catalog, run_catalog, summary_table, ReportKind, RunConfig};
use rind_core::padic::{verify_uniform, UniformConfig};

/// Vanishing tables, uniformity checks and oracle cross-checks for derived
/// smooth induction from congruence subgroups.
#[derive(Parser)]
#[command(name = "rind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every report requested in a catalog.
    Run {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Also print a one-line-per-entry table to stdout.
        #[arg(long)]
        summary: bool,
    },
    /// Sample the uniformity checks in GL_size(Z_p) at one congruence level.
    VerifyUniform {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 2)]
        size: usize,
        #[arg(long)]
        level: i32,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 12)]
        precision: i32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_slack: i32,
    },
    /// Run only the brute-force oracles for every catalog entry.
    OracleSuite {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(clap::Args)]
struct RunFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 12)]
    precision: i32,
    #[arg(long = "box", default_value_t = 4)]
    box_bound: u64,
    #[arg(long, default_value_t = 3)]
    ladder: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Samples per uniformity check.
    #[arg(long, default_value_t = 200)]
    samples: usize,
}

impl RunFlags {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            precision: self.precision,
            box_bound: self.box_bound,
            ladder: self.ladder,
            jobs: self.jobs,
            samples: self.samples,
            ..RunConfig::default()
        }
    }
}

enum Outcome {
    Passed,
    ChecksFailed,
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_catalog(path: &Path) -> Result<Vec<rind_core::CatalogEntry>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_catalog(&text).with_context(|| format!("in {}", path.display()))
}

fn execute(cli: Cli) -> Result<Outcome> {
    let passed = match cli.command {
        Command::Run {
            catalog,
            output,
            run,
            summary,
        } => {
            let entries = load_catalog(&catalog)?;
            let report = run_catalog(&entries, &run.config())?;
            write_json(&output, &report)?;
            if summary {
                print!("{}", summary_table(&report));
            }
            report.all_passed
        }
        Command::VerifyUniform {
            p,
            size,
            level,
            samples,
            precision,
            seed,
            max_slack,
        } => {
            let report = verify_uniform(&UniformConfig {
                p,
                size,
                level,
                samples,
                precision,
                seed,
                max_slack,
            })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            report.all_passed()
        }
        Command::OracleSuite {
            catalog,
            report,
            run,
        } => {
            let mut entries = load_catalog(&catalog)?;
            for entry in &mut entries {
                entry.reports = vec![ReportKind::Oracles];
            }
            let result = run_catalog(&entries, &run.config())?;
            write_json(&report, &result)?;
            result.all_passed
        }
    };
    Ok(if passed {
        Outcome::Passed
    } else {
        Outcome::ChecksFailed
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(Outcome::Passed) => ExitCode::SUCCESS,
        Ok(Outcome::ChecksFailed) => {
            eprintln!("some checks failed; see the report");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
