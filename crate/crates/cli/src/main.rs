use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use scs_cli::{cmd_run, cmd_sweep, cmd_verify, read_scenario, write_output, CliError, Suite};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Share-constrained slicing: simulate scenario files and check the
/// fairness properties of the allocation engines.
#[derive(Parser)]
#[command(name = "scs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every engine and seed of a scenario file.
    Run {
        file: PathBuf,
        /// Output CSV (stdout if omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the event trace of each run here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// As `run`, for every value of the scenario's sweep block.
    Sweep {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a property suite over random instances.
    Verify {
        #[arg(value_parser = parse_suite)]
        suite: Suite,
        #[arg(long)]
        instances: Option<usize>,
        #[arg(long, default_value_t = 1)]
        meta_seed: u64,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("{e} (expected one of {})", names.join(", "))
    })
}

fn emit(output: Option<PathBuf>, csv: String) -> Result<(), CliError> {
    match output {
        Some(p) => write_output(&p, &csv),
        None => std::io::stdout()
            .write_all(csv.as_bytes())
            .map_err(|e| CliError::Io {
                path: "<stdout>".into(),
                message: e.to_string(),
            }),
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run {
            file,
            output,
            trace,
        } => {
            let config = read_scenario(&file)?;
            emit(output, cmd_run(&config, trace.as_deref())?)
        }
        Command::Sweep {
            file,
            output,
            trace,
        } => {
            let config = read_scenario(&file)?;
            emit(output, cmd_sweep(&config, trace.as_deref())?)
        }
        Command::Verify {
            suite,
            instances,
            meta_seed,
        } => {
            let report = cmd_verify(suite, instances, meta_seed)?;
            println!("{report}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification(report)) => {
            println!("{report}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
