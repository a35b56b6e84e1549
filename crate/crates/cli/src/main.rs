use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use prmlab::commands::{build_partial, compare, decode, eval_ar, synth, train};
use prmlab::config::ExperimentConfig;

/// Desk-scale preference-data, reward-model, and guided-decoding pipeline.
#[derive(Parser)]
#[command(name = "prmlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's out_dir; relative paths
    /// live under $PRMLAB_OUT when set).
    #[arg(long)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a vocabulary, corpus, preference dataset, and prompts.
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_pairs: Option<usize>,
        #[arg(long)]
        noise: Option<f64>,
    },
    /// Truncate a preference dataset into partial pairs.
    BuildPartial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// "tlt" or "sst".
        #[arg(long)]
        builder: Option<String>,
        #[arg(long)]
        k: Option<u32>,
    },
    /// Train the featurized reward model on partial pairs.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// "reference" or "uniform".
        #[arg(long)]
        weighting: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Agreement-rate and reward-gap reports over a prefix grid.
    EvalAr {
        #[command(flatten)]
        common: Common,
        /// Evaluate this checkpoint as the model under test.
        #[arg(long)]
        rm: Option<String>,
    },
    /// Run a guided decoder over a prompt file.
    Decode {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// "sample", "bon", "args", "cbs", "tbs", "cards", or "rgs".
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        bon_n: Option<usize>,
        /// Verify a persisted run reproduces byte-identically instead of
        /// decoding anew.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Aggregate decode runs into a comparison table.
    Compare {
        /// Run directories to aggregate.
        #[arg(long, value_delimiter = ',', required = true)]
        runs: Vec<String>,
        #[arg(long)]
        out: String,
    },
}

fn dispatch(command: Command) -> prmlab::Result<Option<PathBuf>> {
    match command {
        Command::Synth {
            common,
            seed,
            n_pairs,
            noise,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let dir = synth::run(
                &config,
                &synth::SynthArgs {
                    seed,
                    out: common.out,
                    n_pairs,
                    noise,
                },
            )?;
            Ok(Some(dir))
        }
        Command::BuildPartial {
            common,
            seed,
            builder,
            k,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let dir = build_partial::run(
                &config,
                &build_partial::BuildPartialArgs {
                    seed,
                    out: common.out,
                    builder,
                    k,
                },
            )?;
            Ok(Some(dir))
        }
        Command::Train {
            common,
            seed,
            weighting,
            epochs,
        } => {
            let config = ExperimentConfig::load(&common.config)?;
            let dir = train::run(
                &config,
                &train::TrainArgs {
                    seed,
                    out: common.out,
                    weighting,
                    epochs,
                },
            )?;
            Ok(Some(dir))
        }
        Command::EvalAr { common, rm } => {
            let config = ExperimentConfig::load(&common.config)?;
            let dir = eval_ar::run(
                &config,
                &eval_ar::EvalArArgs {
                    out: common.out,
                    rm_checkpoint: rm,
                },
            )?;
            Ok(Some(dir))
        }
        Command::Decode {
            common,
            seed,
            method,
            bon_n,
            replay,
        } => {
            if let Some(run_dir) = replay {
                decode::replay(&run_dir)?;
                println!("replay ok: {}", run_dir.display());
                return Ok(None);
            }
            let config = ExperimentConfig::load(&common.config)?;
            let dir = decode::run(
                &config,
                &decode::DecodeArgs {
                    seed,
                    out: common.out,
                    method,
                    bon_n,
                },
            )?;
            Ok(Some(dir))
        }
        Command::Compare { runs, out } => {
            let dir = compare::run(&compare::CompareArgs {
                runs,
                out: Some(out),
            })?;
            Ok(Some(dir))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Some(dir)) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
