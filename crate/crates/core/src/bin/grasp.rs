use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use continuum_grasp::cli::{load_scenario, run, RunOptions};

#[derive(Parser)]
#[command(
    name = "grasp",
    about = "Continuum grasp force and quality computations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write its outputs.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads. GRASP_THREADS takes precedence.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        no_svg: bool,
        /// Also write the gramians and grasp map of the segment.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Parse and check a scenario without running it.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Version => {
            println!("grasp {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_scenario(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Run {
            config,
            out,
            threads,
            no_svg,
            dump_matrices,
        } => {
            let threads = std::env::var("GRASP_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
                .or(threads);
            let opts = RunOptions {
                out_dir: out,
                threads,
                no_svg,
                dump_matrices,
            };
            match run(&config, &opts) {
                Ok(manifest) => {
                    for o in &manifest.outputs {
                        println!("{}", o.path.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
