use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chns::cli::{convergence, read_config, simulate};

#[derive(Parser)]
#[command(name = "chns", version, about = "Cahn-Hilliard-Navier-Stokes space-time FE solver")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write timeseries.csv and VTK snapshots.
    Simulate { config: PathBuf },
    /// Run the refinement study and write table1.csv.
    Convergence { config: PathBuf },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Simulate { config } => read_config(&config).and_then(|cfg| {
            let out = simulate(&cfg)?;
            println!("{} steps, time series in {}", out.reports.len(), out.timeseries.display());
            Ok(())
        }),
        Command::Convergence { config } => read_config(&config).and_then(|cfg| {
            let table = convergence(&cfg, |level| eprintln!("level {level} done"))?;
            print!("{table}");
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
