use std::process::ExitCode;

use clap::Parser;
use parnet_cli::args::{Cli, Command};
use parnet_cli::commands;
use parnet_cli::{CliError, Result};

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match cli.command {
        Command::Fit(args) => {
            let cfg = commands::fit_config(&args)?;
            let files = commands::run_fit(&cfg, &args.out)?;
            println!("wrote {} and manifest.json to {}", files.join(", "), args.out.display());
        }
        Command::Predict(args) => {
            commands::run_predict(&args)?;
            println!("wrote {}", args.out.display());
        }
        Command::Generate(args) => {
            commands::run_generate(&args)?;
            println!("wrote {}", args.out.display());
        }
        Command::Experiment(args) => {
            let cfg = commands::experiment_config(&args)?;
            let out = args.out.clone().unwrap_or_else(|| commands::default_experiment_dir(&cfg));
            let report = commands::run_experiment(&cfg, &out)?;
            for line in commands::summary_lines(&report) {
                println!("{line}");
            }
            println!("results in {}", out.display());
        }
        Command::Replay(args) => {
            let manifest = commands::run_replay(&args.manifest, args.out.as_deref())?;
            println!("regenerated {}", manifest.artifacts.join(", "));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
