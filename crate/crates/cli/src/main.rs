mod commands;
mod overrides;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Exit codes: 0 ok, 2 usage or input error, 3 oracle divergence.
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "vigil",
    version,
    about = "Driver drowsiness and alcohol safety-controller simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario script.
    Run {
        file: PathBuf,
        /// Write the trace as JSON lines.
        #[arg(long, value_name = "OUT.jsonl")]
        trace: Option<PathBuf>,
        /// Write the trace as CSV.
        #[arg(long, value_name = "OUT.csv")]
        csv: Option<PathBuf>,
        /// Write the alert-link transcript as JSON lines.
        #[arg(long, value_name = "OUT.jsonl")]
        transcript: Option<PathBuf>,
        /// Alert-link RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also run the fixed-step reference and compare traces.
        #[arg(long)]
        oracle: bool,
        /// Override a controller or channel setting, e.g. `stop_duration=10`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Parse a scenario script without running it.
    Check {
        file: PathBuf,
        /// Print the canonical form.
        #[arg(long)]
        fmt: bool,
    },
    /// Summarise an alert-link transcript.
    Metrics { transcript: PathBuf },
    /// Run the controller live for the driver console.
    Serve {
        #[arg(long, default_value_t = 8717)]
        port: u16,
        /// Virtual seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        pace: f64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VIGIL_LOG", "off"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            file,
            trace,
            csv,
            transcript,
            seed,
            oracle,
            sets,
        } => commands::run(commands::RunArgs {
            file,
            trace,
            csv,
            transcript,
            seed,
            oracle,
            sets,
        }),
        Command::Check { file, fmt } => commands::check(&file, fmt),
        Command::Metrics { transcript } => commands::metrics(&transcript),
        Command::Serve { port, pace, sets } => serve::serve(port, pace, &sets),
    };
    ExitCode::from(code)
}
