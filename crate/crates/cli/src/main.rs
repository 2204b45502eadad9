use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qflow::run::{run_file, verify_catalog, RunError, RunOutcome, Subcommand};

/// Mean-momentum flow of one-dimensional wave packets.
///
/// Exit status: 0 success, 1 verification failure, 2 configuration error,
/// 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "qflow", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Command,
    /// Scenario file. For `verify` this may also be a directory of `.cfg` files.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Evolve,
    Fields,
    Trajectories,
    Weak,
    Wigner,
    Paths,
    Verify,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::Evolve => Subcommand::Evolve,
            Command::Fields => Subcommand::Fields,
            Command::Trajectories => Subcommand::Trajectories,
            Command::Weak => Subcommand::Weak,
            Command::Wigner => Subcommand::Wigner,
            Command::Paths => Subcommand::Paths,
            Command::Verify => Subcommand::Verify,
        }
    }
}

fn report(outcome: &RunOutcome) -> u8 {
    for c in &outcome.checks {
        let status = if c.passed { "pass" } else { "FAIL" };
        match c.lower {
            Some(lo) => println!("{status} {}: {:.3e} in [{lo}, {}]", c.name, c.value, c.tolerance),
            None => println!("{status} {}: {:.3e} < {:.1e}", c.name, c.value, c.tolerance),
        }
    }
    for f in &outcome.files {
        println!("wrote {}", f.display());
    }
    outcome.exit_code() as u8
}

fn fail(e: &RunError) -> u8 {
    eprintln!("qflow: {e}");
    e.exit_code() as u8
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cmd = Subcommand::from(cli.subcommand);
    if matches!(cmd, Subcommand::Verify) && cli.config.is_dir() {
        return match verify_catalog(&cli.config, &cli.out, cli.seed, cli.tolerance_scale) {
            Ok((entries, summary)) => {
                let mut code = 0;
                for e in &entries {
                    println!("== {}", e.config.display());
                    let c = match &e.result {
                        Ok(o) => report(o),
                        Err(err) => fail(err),
                    };
                    code = code.max(c);
                }
                println!("wrote {}", summary.display());
                ExitCode::from(code)
            }
            Err(e) => ExitCode::from(fail(&e)),
        };
    }
    match run_file(cmd, &cli.config, &cli.out, cli.seed, cli.tolerance_scale) {
        Ok(o) => ExitCode::from(report(&o)),
        Err(e) => ExitCode::from(fail(&e)),
    }
}
