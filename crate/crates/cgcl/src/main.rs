use cgcl::cli::{cmd_ablate, cmd_eval, cmd_synth, cmd_train, CliError};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Community-aware graph contrastive learning toolkit.
#[derive(Parser)]
#[command(name = "cgcl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (TOML; `train`/`eval`/`ablate` also accept a previous
    /// run's manifest.json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Root seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-partition dataset directory.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train on a dataset and write manifest, log, params, embeddings and
    /// metrics.
    Train {
        /// Dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate exported embeddings against a dataset.
    Eval {
        /// Dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        /// Embeddings CSV, or a run directory with embeddings_<k>.csv files.
        #[arg(long)]
        embeddings: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Train objective-term variants and/or a community-count sweep.
    Ablate {
        /// Dataset directory.
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated loss-term variants, e.g. "node,node+deca,full".
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        /// Comma-separated community counts, e.g. "2,4,6,8".
        #[arg(long, value_delimiter = ',')]
        k_sweep: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth { common } => {
            let config = common.config.ok_or_else(|| {
                CliError::Usage("synth requires --config with a generator config".into())
            })?;
            cmd_synth(&config, &common.out, common.seed, common.quiet)
        }
        Command::Train { dataset, common } => cmd_train(
            &dataset,
            common.config.as_deref(),
            &common.out,
            common.seed,
            common.quiet,
        ),
        Command::Eval {
            dataset,
            embeddings,
            common,
        } => cmd_eval(
            &dataset,
            &embeddings,
            common.config.as_deref(),
            &common.out,
            common.seed,
            common.quiet,
        ),
        Command::Ablate {
            dataset,
            variants,
            k_sweep,
            common,
        } => cmd_ablate(
            &dataset,
            common.config.as_deref(),
            &variants,
            &k_sweep,
            &common.out,
            common.seed,
            common.quiet,
        ),
    }
}

fn main() {
    env_logger::init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
