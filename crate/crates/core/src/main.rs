use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use satvnf::config::{load_config, ExperimentConfig};
use satvnf::runner::{oracle_check, run_experiment, write_outputs};
use satvnf::{Algorithm, Error};

/// Satellite edge VNF placement experiments.
#[derive(Parser)]
#[command(name = "satvnf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write result files.
    Run(Common),
    /// Check a config file and print the resolved settings.
    Validate(Common),
    /// Compare the beam search with exhaustive search and audit every run.
    OracleCheck(Common),
}

#[derive(Args)]
struct Common {
    config: PathBuf,
    /// Root seed, overriding `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding `experiment.out_dir`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated subset of dvnfp, greedy, viterbi.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Record wall-clock times in the `wall_ms` column.
    #[arg(long)]
    timing: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig, Error> {
        let mut config = load_config(&self.config)?;
        if let Some(seed) = self.seed {
            config.experiment.seed = seed;
        }
        if let Some(dir) = &self.out_dir {
            config.experiment.out_dir = dir.clone();
        }
        if let Some(algorithms) = &self.algorithms {
            config.experiment.algorithms = algorithms.clone();
        }
        config.experiment.timing |= self.timing;
        config.validate()?;
        Ok(config)
    }
}

fn execute(command: &Command) -> Result<ExitCode, Error> {
    match command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let output = run_experiment(&config, args.jobs)?;
            let dir = &config.experiment.out_dir;
            write_outputs(dir, &config, &output)?;
            eprintln!(
                "wrote {} detail rows and {} aggregate rows to {}",
                output.detail.len(),
                output.aggregate.len(),
                dir.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let config = args.resolve()?;
            print!("{}", config.to_toml_string());
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck(args) => {
            let config = args.resolve()?;
            let report = oracle_check(&config, args.jobs)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(3) })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } | Error::InvalidParameter { .. } => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
