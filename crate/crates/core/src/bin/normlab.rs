use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use normlab::harness::{
    load_scenario, run_consolidation, run_experiment, run_probe, write_outcome, Outcome, Overrides,
    ProbeKind, ScenarioConfig,
};
use normlab::Error;

// Output goes to a possibly closed pipe; write errors are ignored.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BACKEND: u8 = 3;

#[derive(Parser)]
#[command(
    name = "normlab",
    version,
    about = "Run normlab scenarios, probes and consolidation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario's experiment.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        ticks: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one configured probe: convention, sanction, norm or epsilon.
    Probe {
        kind: ProbeKind,
        scenario: PathBuf,
        /// Comma-separated edit fractions.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an actor's memories into its table and report the effect.
    Consolidate {
        scenario: PathBuf,
        #[arg(long)]
        passes: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file and report every problem.
    Validate { scenario: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    if e.is_backend() {
        EXIT_BACKEND
    } else {
        EXIT_CONFIG
    }
}

fn report_error(e: &Error) {
    match e {
        Error::Schema(issues) => {
            eprintln!("error: scenario has {} problem(s)", issues.len());
            for i in issues {
                eprintln!("  {i}");
            }
        }
        e => eprintln!("error: {e}"),
    }
}

fn progress_log(dir: &Path) -> Option<std::fs::File> {
    std::fs::create_dir_all(dir).ok()?;
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(dir.join("progress.log"))
        .ok()
}

fn execute(
    cfg: &ScenarioConfig,
    out: Option<PathBuf>,
    run: impl FnOnce(&ScenarioConfig, &mut dyn FnMut(u64, u64)) -> normlab::Result<Outcome>,
) -> normlab::Result<Option<bool>> {
    let dir = out.unwrap_or_else(|| cfg.output_dir());
    let mut log = progress_log(&dir);
    let mut progress = |t: u64, total: u64| {
        if let Some(f) = log.as_mut() {
            let _ = writeln!(f, "{} tick {t}/{total}", cfg.name);
        }
    };
    let outcome = run(cfg, &mut progress)?;
    write_outcome(cfg, &outcome, &dir)?;
    match outcome.verdict {
        Some(v) => say!(
            "{} {}: {}",
            outcome.scenario,
            outcome.kind,
            if v { "PASS" } else { "FAIL" }
        ),
        None => say!("{} {}: done", outcome.scenario, outcome.kind),
    }
    say!("output written to {}", dir.display());
    Ok(outcome.verdict)
}

fn dispatch(cmd: Command) -> normlab::Result<Option<bool>> {
    match cmd {
        Command::Validate { scenario } => {
            let cfg = load_scenario(&scenario)?;
            say!(
                "{}: ok ({} actors)",
                scenario.display(),
                cfg.all_ids().len()
            );
            Ok(None)
        }
        Command::Run {
            scenario,
            seed,
            ticks,
            out,
        } => {
            let o = Overrides {
                seed,
                ticks,
                ..Overrides::default()
            };
            let cfg = o.apply(&load_scenario(&scenario)?);
            execute(&cfg, out, |c, p| run_experiment(c, p))
        }
        Command::Probe {
            kind,
            scenario,
            grid,
            seed,
            out,
        } => {
            let o = Overrides {
                seed,
                ..Overrides::default()
            };
            let cfg = o.apply(&load_scenario(&scenario)?);
            execute(&cfg, out, |c, p| run_probe(c, kind, grid, p))
        }
        Command::Consolidate {
            scenario,
            passes,
            seed,
            out,
        } => {
            let o = Overrides {
                seed,
                passes,
                ..Overrides::default()
            };
            let cfg = o.apply(&load_scenario(&scenario)?);
            execute(&cfg, out, |c, p| run_consolidation(c, p))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Some(false)) => ExitCode::from(EXIT_FAIL),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(exit_code(&e))
        }
    }
}
