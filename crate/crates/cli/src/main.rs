mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::CommonArgs;

#[derive(Parser)]
#[command(
    name = "entdist",
    version,
    about = "Resource-assisted local discrimination of maximally entangled bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fully entangled fraction and negativity of the resource.
    Fef {
        #[command(flatten)]
        common: CommonArgs,
        /// Tabulate this many spectra instead of the configured one.
        #[arg(long, value_name = "POINTS")]
        sweep: Option<usize>,
    },
    /// Validate a basis of unitaries.
    Basis {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the basis as a basis file.
        #[arg(long, value_name = "PATH")]
        export: Option<std::path::PathBuf>,
    },
    /// Teleportation protocol success probability.
    Protocol {
        #[command(flatten)]
        common: CommonArgs,
        /// Sample this many protocol runs in addition to the exact value.
        #[arg(long, value_name = "SHOTS")]
        shots: Option<usize>,
    },
    /// Build the dual certificate and check its feasibility.
    Certificate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the PPT discrimination SDP.
    Sdp {
        #[command(flatten)]
        common: CommonArgs,
        /// Include the measurement operators in the report.
        #[arg(long)]
        with_operators: bool,
    },
    /// Lower and upper bounds for the first N basis states.
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Protocol, SDP and certificate values side by side.
    Sandwich {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run every analytic check at the configured dimension.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn configure_threads() -> Result<(), commands::CliError> {
    let Ok(value) = std::env::var("ENTDIST_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| {
            commands::CliError::Input(format!(
                "ENTDIST_THREADS={value:?} is not a positive integer"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| commands::CliError::Input(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.command {
        Command::Fef { common, sweep } => commands::fef(&common, sweep),
        Command::Basis { common, export } => commands::basis(&common, export.as_deref()),
        Command::Protocol { common, shots } => commands::protocol(&common, shots),
        Command::Certificate { common } => commands::certificate(&common),
        Command::Sdp {
            common,
            with_operators,
        } => commands::sdp(&common, with_operators),
        Command::Bounds { common } => commands::bounds(&common),
        Command::Sandwich { common } => commands::sandwich(&common),
        Command::Verify { common } => commands::verify(&common),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("entdist: numerical check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("entdist: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
