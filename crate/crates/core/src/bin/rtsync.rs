use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rtsync::harness::{self, HarnessError, ManagersFile, RunOptions, TransformArgs};
use rtsync::tgg::Direction;
use rtsync::views::ViewKind;

/// Runtime model synchronisation: transforms, scenario runs with
/// autonomic managers, consistency checks and the incrementality bench.
///
/// Exit codes: 0 success, 2 validation error, 3 parse error, 4 scenario fault.
#[derive(Parser)]
#[command(name = "rtsync", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dir {
    Forward,
    Backward,
}

#[derive(Subcommand)]
enum Cmd {
    /// Derive one model of a triple from the other.
    Transform {
        #[arg(long)]
        meta_src: PathBuf,
        #[arg(long)]
        meta_tgt: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value = "forward")]
        direction: Dir,
        /// Output model; `<stem>.corr.json` and `<stem>.session.json` are written alongside.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario with managers and write a run report.
    SyncRun {
        #[arg(long)]
        scenario: PathBuf,
        /// Steps to run (default: the whole scenario).
        #[arg(long)]
        steps: Option<usize>,
        /// Manager configuration file (default: one manager per view).
        #[arg(long)]
        managers: Option<PathBuf>,
        #[arg(long)]
        report: PathBuf,
        /// Trigger every manager every k steps.
        #[arg(long)]
        trigger_every: Option<usize>,
        /// Break connector cycles through the backward path.
        #[arg(long)]
        adapt: bool,
        /// Trigger and analyse managers concurrently.
        #[arg(long)]
        parallel: bool,
        /// Runtime event log, JSON lines.
        #[arg(long)]
        events: Option<PathBuf>,
        /// All findings, JSON lines.
        #[arg(long)]
        findings: Option<PathBuf>,
    },
    /// Check a synchronised triple for consistency.
    Check {
        /// Session file written by `transform`.
        #[arg(long)]
        session: PathBuf,
    },
    /// Incremental versus batch touched-element counts.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "100,500,1000")]
        sizes: Vec<usize>,
        /// View whose rule set is measured: arch, perf or fail.
        #[arg(long, default_value = "arch")]
        rules: ViewKind,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(|e| HarnessError::Validation(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.cmd {
        Cmd::Transform {
            meta_src,
            meta_tgt,
            rules,
            model,
            direction,
            out,
        } => {
            let direction = match direction {
                Dir::Forward => Direction::Forward,
                Dir::Backward => Direction::Backward,
            };
            let o = harness::transform(&TransformArgs {
                meta_src,
                meta_tgt,
                rules,
                model,
                direction,
                out,
            })?;
            println!("{}", o.report.to_json());
            for id in &o.report.uncovered {
                eprintln!("uncovered input element {id}");
            }
        }
        Cmd::SyncRun {
            scenario,
            steps,
            managers,
            report,
            trigger_every,
            adapt,
            parallel,
            events,
            findings,
        } => {
            let scenario = harness::load_scenario(&scenario)?;
            let managers = match managers {
                Some(p) => ManagersFile::from_json(
                    &std::fs::read_to_string(&p).map_err(|e| HarnessError::Validation(format!("{}: {e}", p.display())))?,
                )?,
                None => ManagersFile::default(),
            };
            if trigger_every == Some(0) {
                return Err(HarnessError::Validation("--trigger-every must be positive".into()));
            }
            let opts = RunOptions {
                steps,
                trigger_every,
                adapt,
                parallel,
            };
            let run = harness::run_scenario(&scenario, &managers, &opts)?;
            write(&report, &run.report.to_json())?;
            if let Some(p) = events {
                write(&p, &run.runtime.events_jsonl())?;
            }
            if let Some(p) = findings {
                let mut lines = String::new();
                for f in run.report.steps.iter().flat_map(|s| &s.findings).chain(&run.report.final_findings) {
                    lines.push_str(&f.to_json_line());
                    lines.push('\n');
                }
                write(&p, &lines)?;
            }
            for f in &run.report.final_findings {
                eprintln!("{f}");
            }
        }
        Cmd::Check { session } => {
            let report = harness::check_session(&session)?;
            for f in &report.findings {
                println!("{}", serde_json::to_string(f).expect("finding serializes"));
            }
            if !report.is_empty() {
                return Err(HarnessError::Validation(format!("{} consistency finding(s)", report.len())));
            }
        }
        Cmd::Bench { sizes, rules, csv, out } => {
            if sizes.is_empty() {
                return Err(HarnessError::Validation("--sizes must not be empty".into()));
            }
            let table = harness::bench(&sizes, rules)?;
            let text = if csv { table.to_csv() } else { table.to_json() };
            match out {
                Some(p) => write(&p, &text)?,
                None => print!("{text}{}", if csv { "" } else { "\n" }),
            }
            if !(table.incremental_constant && table.batch_linear) {
                return Err(HarnessError::Validation(
                    "incremental cost is not constant or batch cost is not linear".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rtsync: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
