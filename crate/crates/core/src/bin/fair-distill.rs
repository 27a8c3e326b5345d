use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fair_distill::experiment::{cmd_ablate, cmd_eval, cmd_gen_data, cmd_train, ExperimentConfig, Phase};

#[derive(Parser)]
#[command(version, about = "Fair knowledge distillation from two group-biased teachers")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the root seed of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate or load the dataset and write the train/test split.
    GenData,
    /// Train one phase: base, teacher0, teacher1 or student.
    Train {
        #[arg(long)]
        phase: Phase,
    },
    /// Evaluate a checkpoint and write fairness reports.
    Eval {
        /// Defaults to `<out>/student.ckpt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Defaults to `<out>/test.csv`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Run the single-term ablation grid.
    Ablate,
}

fn config(cli: &Cli) -> fair_distill::Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    Ok(cfg.with_seed(cli.seed))
}

fn run(cli: &Cli) -> fair_distill::Result<Vec<PathBuf>> {
    match &cli.command {
        Command::GenData => cmd_gen_data(&config(cli)?, &cli.out),
        Command::Train { phase } => cmd_train(&config(cli)?, *phase, &cli.out),
        Command::Eval { checkpoint, dataset } => {
            let ckpt = checkpoint.clone().unwrap_or_else(|| cli.out.join("student.ckpt"));
            let data = dataset.clone().unwrap_or_else(|| cli.out.join("test.csv"));
            cmd_eval(&ckpt, &data, &cli.out)
        }
        Command::Ablate => cmd_ablate(&config(cli)?, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
