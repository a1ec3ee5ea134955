use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gatekeeping_cli::commands::{self, EchoFormat, SimulateArgs};

/// Bonferroni-based gatekeeping with retesting.
///
/// Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or arguments.
#[derive(Parser)]
#[command(name = "gatekeep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured procedure and print the stage-by-stage audit table.
    Run {
        config: PathBuf,
        /// Write the table here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write a CSV audit file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Validate a config and echo it in normalized form.
    Validate {
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = EchoFormat::Text)]
        format: EchoFormat,
    },
    /// Estimate the familywise error rate by Monte Carlo simulation.
    Simulate {
        config: PathBuf,
        /// True nulls: `all`, `none`, or comma-separated hypothesis labels.
        #[arg(long, default_value = "all")]
        nulls: String,
        /// `independent` or `equicorr:<rho>` with rho in [0, 1).
        #[arg(long, default_value = "independent")]
        model: String,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Mean shift of the z-statistics of false nulls.
        #[arg(long, default_value_t = 3.0)]
        effect: f64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = io::stdout().lock();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            csv,
        } => commands::run(&config, output.as_ref(), csv.as_ref(), &mut stdout),
        Command::Validate { config, format } => commands::validate(&config, format, &mut stdout),
        Command::Simulate {
            config,
            nulls,
            model,
            reps,
            seed,
            effect,
            output,
        } => {
            let args = SimulateArgs {
                nulls,
                model,
                reps,
                seed,
                effect,
            };
            commands::simulate(&config, &args, output.as_ref(), &mut stdout)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
