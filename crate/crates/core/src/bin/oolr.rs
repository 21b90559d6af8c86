use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oolr::harness::{cli_generate, cli_report, cli_run, format_summary};

#[derive(Parser)]
#[command(name = "oolr", about = "Online reservation experiments on in-advance and spot markets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a trace CSV from a config file.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides trace.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every configured combination and write one report CSV each.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Use this trace CSV instead of generating one.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Join average-regret columns of several reports into one CSV.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, out, seed } => {
            cli_generate(&config, &out, seed).map(|n| println!("wrote {n} rows to {}", out.display()))
        }
        Command::Run {
            config,
            trace,
            out_dir,
            seed,
        } => cli_run(&config, trace.as_deref(), &out_dir, seed).map(|o| {
            print!("{}", format_summary(&o.runs));
            println!("config hash {}", o.manifest.config_hash);
        }),
        Command::Report { out, files } => {
            cli_report(&files, &out).map(|n| println!("wrote {n} rows to {}", out.display()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
