use anyhow::Result;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use unlearn_cli::{ExperimentConfig, Pipeline};

/// Desk-scale laboratory for token-level language-model unlearning.
#[derive(Parser)]
#[command(name = "unlearnlab", version, about)]
struct Cli {
    /// Experiment config file (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the global seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Validate the configuration and print the plan without side effects.
    #[arg(long, global = true)]
    dry_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic annotated QA corpus.
    GenCorpus,
    /// Fine-tune the reference model on forget + retain.
    Finetune,
    /// Train the retrained baseline on retain only.
    Retrain,
    /// Run every configured unlearning cell from the reference checkpoint.
    Unlearn,
    /// Score unlearned checkpoints: forget quality, utility, ROC, histograms.
    Eval,
    /// Temperature-by-split sweep of the entropy weighting.
    Sweep,
    /// Emit the metrics table and token-highlight HTML pages.
    Report,
    /// Run the whole pipeline: gen-corpus through report.
    RunAll,
    /// Print the default configuration as TOML.
    PrintConfig,
}

fn main() -> Result<()> {
    let cli = Cli::parse();

    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }

    if matches!(cli.command, Command::PrintConfig) {
        print!("{}", config.to_toml());
        return Ok(());
    }

    let pipeline = Pipeline::new(config, cli.dry_run)?;
    match cli.command {
        Command::GenCorpus => pipeline.cmd_gen_corpus(),
        Command::Finetune => pipeline.cmd_finetune(),
        Command::Retrain => pipeline.cmd_retrain(),
        Command::Unlearn => pipeline.cmd_unlearn(),
        Command::Eval => pipeline.cmd_eval(),
        Command::Sweep => pipeline.cmd_sweep(),
        Command::Report => pipeline.cmd_report(),
        Command::RunAll => pipeline.cmd_run_all(),
        Command::PrintConfig => unreachable!(),
    }
}
