//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification or solve fails, 2 on
//! input errors (unreadable files, parse errors, invalid grids).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use exbound_cli::runner::{
    run_bonus_profile, run_boundary, run_psor_verify, run_table1, RunConfig, RunSummary,
    Table1Profile,
};
use exbound_cli::scenario::{parse_grid, parse_scenarios, Scenario};

#[derive(Parser)]
#[command(
    name = "exbound",
    about = "Early exercise boundary limits at expiry, with PSOR verification"
)]
struct Cli {
    /// Directory for per-scenario CSV artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Concurrent scenario solves.
    #[arg(long, global = true, default_value_t = default_workers())]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form boundaries for every scenario in a file.
    Boundary { file: PathBuf },
    /// Bonus-function profiles over a state grid, as plot-ready CSV.
    BonusProfile {
        file: PathBuf,
        /// Sampling grid `lo:hi:n` in spot (or ratio) space.
        #[arg(long)]
        grid: String,
    },
    /// Solve the obstacle problem and compare with the analytic boundary.
    PsorVerify { file: PathBuf },
    /// Reproduce the built-in condor comparison table.
    Table1 {
        #[arg(long, value_enum, default_value_t = ProfileArg::Full)]
        profile: ProfileArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    /// 250x40000 grid, tolerance 1e-14, error gate 0.05%.
    Full,
    /// 4000 space steps, tolerance 1e-10, error gate 0.5%.
    Ci,
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

const EXIT_VERIFICATION: u8 = 1;
const EXIT_INPUT: u8 = 2;

fn load_scenarios(path: &PathBuf) -> Result<Vec<Scenario>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_scenarios(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn finish(summary: RunSummary, out_dir: &Option<PathBuf>) -> ExitCode {
    print!("{}", summary.markdown);
    if let Some(dir) = out_dir {
        if let Err(e) =
            std::fs::create_dir_all(dir).and_then(|()| std::fs::write(dir.join("summary.md"), &summary.markdown))
        {
            eprintln!("error: cannot write summary: {e}");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    if summary.all_pass() {
        ExitCode::SUCCESS
    } else {
        for failure in &summary.failures {
            eprintln!("FAIL {failure}");
        }
        ExitCode::from(EXIT_VERIFICATION)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli.out.clone();
    let run_cfg = RunConfig {
        out_dir: cli.out,
        workers: cli.workers,
    };
    match cli.command {
        Command::Boundary { file } => match load_scenarios(&file) {
            Ok(scenarios) => finish(run_boundary(&scenarios, &run_cfg), &out_dir),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT)
            }
        },
        Command::BonusProfile { file, grid } => {
            let grid = match parse_grid(&grid) {
                Ok(g) => g,
                Err(e) => {
                    eprintln!("error: invalid --grid: {}", e.message);
                    return ExitCode::from(EXIT_INPUT);
                }
            };
            match load_scenarios(&file) {
                Ok(scenarios) => finish(run_bonus_profile(&scenarios, grid, &run_cfg), &out_dir),
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_INPUT)
                }
            }
        }
        Command::PsorVerify { file } => match load_scenarios(&file) {
            Ok(scenarios) => finish(run_psor_verify(&scenarios, &run_cfg), &out_dir),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_INPUT)
            }
        },
        Command::Table1 { profile } => {
            let profile = match profile {
                ProfileArg::Full => Table1Profile::Full,
                ProfileArg::Ci => Table1Profile::Ci,
            };
            finish(run_table1(profile, &run_cfg), &out_dir)
        }
    }
}
