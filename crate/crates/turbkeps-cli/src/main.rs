//! Command-line front end: argument parsing and stream routing around the
//! orchestration layer.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 partial
//! sweep failure, 4 solver abort. Estimate verdicts are data in the
//! reports and never drive the exit code. Set `TURBKEPS_LOG` to `error`,
//! `warn`, `info` or `debug` to enable logging.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use turbkeps::orchestrate::{
    cmd_audit, cmd_exponents, cmd_run, cmd_sweep, CommandOutcome, ExponentFlags,
};

#[derive(Parser)]
#[command(
    name = "turbkeps",
    version,
    about = "Spectral Galerkin solver and a-priori-estimate auditor for a \
             one-equation turbulence model in permeable media"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configuration, audit the trajectory, write the artifacts
    Run {
        /// TOML run configuration
        #[arg(long)]
        config: PathBuf,
        /// Output directory for trajectory.tkef, diagnostics.csv, audit.json, audit.csv
        #[arg(long)]
        out: PathBuf,
        /// Emit JSON on standard output instead of a table
        #[arg(long)]
        json: bool,
        /// Accept parameter sets that violate the growth conditions
        #[arg(long)]
        override_admissibility: bool,
    },
    /// Run the refinement study of the [sweep] section
    Sweep {
        /// TOML run configuration with a [sweep] section
        #[arg(long)]
        config: PathBuf,
        /// Output directory for uniformity.json and per-level artifacts
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for the constituent runs; 0 uses every core
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Emit JSON on standard output instead of a table
        #[arg(long)]
        json: bool,
        /// Accept parameter sets that violate the growth conditions
        #[arg(long)]
        override_admissibility: bool,
    },
    /// Print derived integrability exponents and admissibility as JSON
    Exponents {
        /// Space dimension (2..=4)
        #[arg(long, default_value_t = 2)]
        d: u32,
        /// Drag growth exponent; accepts decimals or fractions like 7/2
        #[arg(long, default_value = "2")]
        alpha: String,
        /// Production velocity exponent
        #[arg(long, default_value = "1")]
        beta: String,
        /// Production energy growth exponent
        #[arg(long, default_value = "3/10")]
        gamma: String,
        /// Viscosity growth exponent
        #[arg(long, default_value = "0")]
        eta: String,
        /// Diffusion growth exponent
        #[arg(long, default_value = "0")]
        zeta: String,
        /// Dissipation growth exponent
        #[arg(long, default_value = "0")]
        theta: String,
        /// Emit only the JSON document, without the human summary
        #[arg(long)]
        json: bool,
    },
    /// Replay the estimate audit on an existing trajectory dump
    Audit {
        /// TOML run configuration the dump was produced with
        #[arg(long)]
        config: PathBuf,
        /// Trajectory dump (TKEF container) to audit
        #[arg(long)]
        trajectory: PathBuf,
        /// Output directory for audit.json and audit.csv
        #[arg(long)]
        out: PathBuf,
        /// Emit JSON on standard output instead of a table
        #[arg(long)]
        json: bool,
        /// Accept parameter sets that violate the growth conditions
        #[arg(long)]
        override_admissibility: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TURBKEPS_LOG")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let outcome: CommandOutcome = match cli.command {
        Command::Run {
            config,
            out,
            json,
            override_admissibility,
        } => cmd_run(&config, &out, json, override_admissibility),
        Command::Sweep {
            config,
            out,
            jobs,
            json,
            override_admissibility,
        } => cmd_sweep(&config, &out, jobs, json, override_admissibility),
        Command::Exponents {
            d,
            alpha,
            beta,
            gamma,
            eta,
            zeta,
            theta,
            json,
        } => cmd_exponents(
            &ExponentFlags {
                d,
                alpha,
                beta,
                gamma,
                eta,
                zeta,
                theta,
            },
            json,
        ),
        Command::Audit {
            config,
            trajectory,
            out,
            json,
            override_admissibility,
        } => cmd_audit(&config, &trajectory, &out, json, override_admissibility),
    };

    print!("{}", outcome.stdout);
    for line in &outcome.errors {
        eprintln!("{line}");
    }
    ExitCode::from(outcome.status.code() as u8)
}
