use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use statewalk::config::Experiment;
use statewalk::{execute, Overrides, EXIT_CONFIG, EXIT_RUNTIME};

/// Random-Hamiltonian walks of quantum states.
#[derive(Parser, Debug)]
#[command(name = "statewalk", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML config file.
    #[arg(long, short)]
    config: PathBuf,
    /// Root seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Primary trial count of the experiment, overriding the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Print nothing but errors.
    #[arg(long, short)]
    quiet: bool,
}

fn lanes() -> Result<Option<usize>, String> {
    match std::env::var("STATEWALK_LANES") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("STATEWALK_LANES must be a positive integer, got {v:?}")),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match lanes() {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_RUNTIME as u8);
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }

    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        trials: cli.trials,
    };
    let quiet = cli.quiet;
    let mut progress = |line: &str| {
        if !quiet {
            eprintln!("{line}");
        }
    };
    match execute(cli.experiment, &cli.config, &overrides, &mut progress) {
        Ok(outcome) => {
            if !quiet {
                println!(
                    "{}: {} reports, {} in {}",
                    cli.experiment,
                    outcome.reports,
                    if outcome.passed {
                        "all passed".to_string()
                    } else {
                        format!("failed: {}", outcome.failures.join(", "))
                    },
                    outcome.output_dir.display()
                );
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
