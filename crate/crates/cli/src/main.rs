use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pecf_cli::run::{evaluation_summary, MODEL_FILE, SUMMARY_FILE};
use pecf_cli::{evaluate_saved, prepare_dataset, run_experiment, sweep, Overrides, RunConfig, SweepAxis, SweepParam};
use pecf_core::synth::{write_synthetic, SynthConfig};

/// Weighted matrix factorization and its ensembles for implicit feedback.
#[derive(Debug, Parser)]
#[command(name = "pecf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load, binarize, sample zeros and split; write manifest.txt and entries.csv.
    Prepare(ConfigArgs),
    /// Train the configured method and write manifest, model, metrics and summary.
    Train(ConfigArgs),
    /// Score a saved model on the configured dataset.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        /// Model file; defaults to model.bin in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train once per parameter value (or value pair) and tabulate the results.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Second parameter, crossed with the first.
        #[arg(long, value_enum, requires = "pair_values")]
        pair_param: Option<SweepParam>,
        #[arg(long, value_delimiter = ',', requires = "pair_param")]
        pair_values: Vec<String>,
    },
    /// Write a block-structured synthetic rating file (user,item,rating).
    Synth {
        #[arg(long, default_value_t = SynthConfig::default().users)]
        users: usize,
        #[arg(long, default_value_t = SynthConfig::default().items)]
        items: usize,
        #[arg(long, default_value_t = SynthConfig::default().blocks)]
        blocks: usize,
        /// Rank of each block's factors.
        #[arg(long, default_value_t = SynthConfig::default().rank)]
        rank: usize,
        #[arg(long, default_value_t = SynthConfig::default().noise)]
        noise: f64,
        /// Fraction of each block's pairs that are positive.
        #[arg(long, default_value_t = SynthConfig::default().density)]
        density: f64,
        #[arg(long, default_value_t = SynthConfig::default().seed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML run configuration; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

impl ConfigArgs {
    fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        self.overrides.apply(&mut config)?;
        Ok(config)
    }
}

fn execute(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Prepare(args) => {
            let config = args.resolve()?;
            let dataset = prepare_dataset(&config)?;
            print!("{}", dataset.manifest());
            println!("written to {}", config.output.display());
        }
        Command::Train(args) => {
            let config = args.resolve()?;
            let outcome = run_experiment(&config)?;
            print!("{}", std::fs::read_to_string(outcome.output.join(SUMMARY_FILE))?);
            println!("artifacts in {}", outcome.output.display());
        }
        Command::Evaluate { config, model } => {
            let config = config.resolve()?;
            let model = model.unwrap_or_else(|| config.output.join(MODEL_FILE));
            let reports = evaluate_saved(&config, &model)?;
            print!("{}", evaluation_summary(&config, &reports));
        }
        Command::Sweep { config, param, values, pair_param, pair_values } => {
            let config = config.resolve()?;
            let mut axes = vec![SweepAxis { param, values }];
            if let Some(param) = pair_param {
                axes.push(SweepAxis { param, values: pair_values });
            }
            let rows = sweep(&config, &axes)?;
            print!("{}", pecf_cli::sweep::sweep_table(&rows));
        }
        Command::Synth { users, items, blocks, rank, noise, density, seed, out } => {
            let cfg = SynthConfig { users, items, blocks, rank, noise, density, seed };
            let count = write_synthetic(&out, &cfg)?;
            println!("{count} positives written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
