use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use circulator_cli::commands::{run, Invocation};

/// Frequency-domain simulator of a fiber-linked optomechanical circulator.
#[derive(Parser)]
#[command(name = "circulator", version, about, long_about = None)]
struct Cli {
    /// One of: effective-params, spectrum, sweep, bell, validate,
    /// circulator-search
    subcommand: String,

    /// Configuration file (sections [physical], [phenomenological], [grid],
    /// [sweep], [bell], [output])
    #[arg(long)]
    config: PathBuf,

    /// Output file path, overriding `[output] path`
    #[arg(long)]
    output: Option<PathBuf>,

    /// Frequency grid `omega_min:omega_max:points`, overriding `[grid]`
    #[arg(long)]
    grid: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let inv = Invocation {
        subcommand: cli.subcommand,
        config_path: cli.config,
        output_override: cli.output,
        grid_override: cli.grid,
    };
    match run(&inv) {
        Ok(paths) => {
            for path in paths {
                println!("wrote {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
