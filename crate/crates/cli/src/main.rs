use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fringebench::commands::{cmd_commutators, cmd_fringe, cmd_verify};
use fringebench::CliError;

/// Discretized double-slit simulator.
#[derive(Parser)]
#[command(name = "fringebench", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conditional fringe pattern of a scenario file.
    Fringe {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Seeded invariant suite: forms, purify, locality, spread or all.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Windowed two-time commutator scan.
    Commutators {
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("FRINGEBENCH_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::validation("FRINGEBENCH_THREADS", format!("not a count: {raw:?}"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    match cli.command {
        Command::Fringe { scenario, out } => {
            let rep = cmd_fringe(&scenario, &out)?;
            match rep.spacing {
                Some(s) => println!(
                    "spacing {s:.6} (analytic {:.6}), correlation {:.6}, visibility {:.6}, p1 {:.6e}",
                    rep.analytic_spacing, rep.correlation, rep.visibility, rep.p1
                ),
                None => println!("no fringes found, p1 {:.6e}", rep.p1),
            }
        }
        Command::Verify { suite, seed, out } => {
            let rep = cmd_verify(&suite, seed, &out)?;
            for s in &rep.suites {
                for c in &s.checks {
                    let tag = match c.passed {
                        Some(true) => "ok",
                        Some(false) => "FAIL",
                        None => "info",
                    };
                    println!(
                        "{:<8} {:<4} {:<40} {:e}",
                        s.suite.name(),
                        tag,
                        c.name,
                        c.value
                    );
                }
            }
        }
        Command::Commutators { spec, out } => {
            let rep = cmd_commutators(&spec, &out)?;
            println!(
                "{} entries, equal-time max {:e}, unequal-time max deviation {:e}",
                rep.entries.len(),
                rep.equal_time_max(),
                rep.unequal_time_max_deviation()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fringebench: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
