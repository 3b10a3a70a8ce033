use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fractal_trace_lab::error::code;

#[derive(Parser)]
#[command(name = "fractal-trace-lab", version, about = "Config-driven fractal trace/extension experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single experiment described by a config file.
    Run {
        config: PathBuf,
        /// Write outputs here instead of the config's `output.dir`.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// Run every point of the config's `[sweep]` grid.
    Sweep {
        config: PathBuf,
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Ok(n) = std::env::var(fractal_trace_lab::WORKERS_ENV) {
        let workers = match n.trim().parse::<usize>() {
            Ok(w) if w > 0 => w,
            _ => {
                eprintln!("error: {} must be a positive integer, got `{n}`", fractal_trace_lab::WORKERS_ENV);
                std::process::exit(code::INVALID);
            }
        };
        rayon::ThreadPoolBuilder::new().num_threads(workers).build_global().expect("thread pool already built");
    }
    let status = match &cli.command {
        Command::Run { config, output_dir } => fractal_trace_lab::run(config, output_dir.as_deref()),
        Command::Sweep { config, output_dir } => fractal_trace_lab::sweep(config, output_dir.as_deref()),
    };
    std::process::exit(status);
}
