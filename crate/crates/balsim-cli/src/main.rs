use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use balsim::model::MarketKind;
use balsim::pipeline::{run, PipelineSpec};
use balsim::report::write_report;
use balsim::{Error, Scenario};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_VALIDATION: u8 = 2;
const EXIT_STAGE: u8 = 3;

#[derive(Parser)]
#[command(name = "balsim", version, about = "Balancing market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Market {
    #[value(name = "RR")]
    Rr,
    #[value(name = "mFRR")]
    Mfrr,
}

#[derive(Subcommand)]
enum Command {
    /// Run a pipeline on a scenario and write its artifacts.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "markets+bm", value_parser = ["markets", "bm", "markets+bm"])]
        pipeline: String,
        #[arg(long, value_enum, default_value = "RR")]
        market: Market,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write summary tables for a run directory into DIR/report.
    Report { dir: PathBuf },
    /// Check a scenario and list every violation.
    Validate { scenario: PathBuf },
}

fn load(path: &Path) -> anyhow::Result<Scenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scenario::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn report_violations(e: &Error) {
    if let Error::Validation(vs) = e {
        for v in vs {
            eprintln!("  {v}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Validation(_)) | Some(Error::Json(_)) => ExitCode::from(EXIT_VALIDATION),
                Some(Error::Stage { .. }) => ExitCode::from(EXIT_STAGE),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn execute(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Run {
            scenario,
            pipeline,
            market,
            seed,
            out,
        } => {
            let kind = match market {
                Market::Rr => MarketKind::Rr,
                Market::Mfrr => MarketKind::Mfrr,
            };
            let spec = PipelineSpec::preset(&pipeline, kind, seed, out)?;
            let sc = load(&scenario)?;
            match run(&spec, &sc) {
                Ok(outcome) => {
                    for a in &outcome.manifest.artifacts {
                        println!("{}  {}", a.sha256, a.file);
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    report_violations(&e);
                    Err(e.into())
                }
            }
        }
        Command::Report { dir } => {
            let rep = write_report(&dir, &dir.join("report"))?;
            for p in &rep.written {
                println!("wrote {}", p.display());
            }
            for s in &rep.skipped {
                println!("skipped {s}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { scenario } => {
            let sc = load(&scenario)?;
            let vs = sc.violations();
            if vs.is_empty() {
                println!("ok");
                return Ok(ExitCode::SUCCESS);
            }
            for v in &vs {
                println!("{v}");
            }
            Ok(ExitCode::from(EXIT_VALIDATION))
        }
    }
}
