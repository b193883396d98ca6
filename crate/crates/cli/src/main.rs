//! `headsup` — build utterance taxonomies, train delay-aware notification
//! policies, and run the evaluation suites.

mod commands;
mod runner;

use clap::{Parser, Subcommand};
use headsup_core::CoreError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "headsup", version, about = "delay-aware notification policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build or inspect the offline utterance taxonomy.
    Taxonomy {
        #[command(subcommand)]
        action: TaxonomyAction,
    },
    /// Train the configured notifier (or base pilot) for every seed.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate one or more checkpoints over the seeded episode batch.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Checkpoint file(s); repeat for side-by-side comparison.
        #[arg(long, required = true)]
        checkpoint: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format: csv | markdown | plot-data.
        #[arg(long, default_value = "csv")]
        format: String,
    },
    /// Robustness sweep: training regimes crossed with evaluation delays.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scripted incremental-notification walkthrough in the kitchen.
    Demo {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Truncate the utterance by issuing a second one at this tick.
        #[arg(long)]
        preempt_at: Option<u32>,
        /// Reaction delay of the demo human.
        #[arg(long, default_value_t = 0)]
        reaction_delay: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render stored metrics reports in another format.
    Report {
        /// metrics.json files produced by `eval`.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TaxonomyAction {
    /// Generate, score, and store the utterance database.
    Build {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the records stored for one (domain, topic, k, l) cell.
    Inspect {
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        topic: String,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        l: u32,
    },
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CoreError>() {
        Some(CoreError::Reproducibility(_)) => 3,
        Some(
            CoreError::Config(_)
            | CoreError::Validation(_)
            | CoreError::InvalidAction(_)
            | CoreError::Retrieval(_),
        ) => 1,
        Some(_) => 2,
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Taxonomy { action } => match action {
            TaxonomyAction::Build { config, out, seed } => {
                commands::taxonomy_build(&config, out.as_deref(), seed)
            }
            TaxonomyAction::Inspect {
                db,
                domain,
                topic,
                k,
                l,
            } => commands::taxonomy_inspect(&db, &domain, &topic, k, l),
        },
        Command::Train { config, seed, out } => commands::train(&config, seed, out.as_deref()),
        Command::Eval {
            config,
            checkpoint,
            out,
            format,
        } => commands::eval(&config, &checkpoint, out.as_deref(), &format),
        Command::Sweep { config, out } => commands::sweep(&config, out.as_deref()),
        Command::Demo {
            config,
            preempt_at,
            reaction_delay,
            out,
        } => commands::demo(config.as_deref(), reaction_delay, preempt_at, out.as_deref()),
        Command::Report { input, format, out } => commands::report(&input, &format, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
