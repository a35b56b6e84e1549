//! `train`: build partial pairs from a preference dataset, weight them with
//! the reference scorer (or uniformly), run gradient descent, and persist
//! the checkpoint and loss curve.

use std::path::PathBuf;

use prmlab_core::reward::{FeaturizedReward, RewardArch};
use prmlab_core::train::{train, train_unweighted, EpochStat, TrainConfig};

use crate::commands::build_partial;
use crate::config::{resolve_out_dir, ExperimentConfig};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct TrainArgs {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub weighting: Option<String>,
    pub epochs: Option<usize>,
}

pub fn run(config: &ExperimentConfig, args: &TrainArgs) -> Result<PathBuf> {
    let seed = config.require_seed(args.seed)?;
    let vocab = formats::load_vocab(&config.require_path("vocab")?)?;
    let dataset_path = config.require_path("dataset")?;
    let dataset = formats::load_prefs_jsonl(&dataset_path, &vocab)?;

    let builder = config.builder.clone().unwrap_or_default();
    let mut partial = build_partial::build(&dataset, &builder, Some(seed))?;
    if config.include_complete.unwrap_or(true) {
        partial = partial.with_complete_pairs(&dataset)?;
    }

    let reward_section = config.reward.clone().unwrap_or_default();
    let rm = reward_section.instantiate(&vocab, seed)?;
    let default_lr = match rm.arch() {
        RewardArch::Linear => 1e-2,
        RewardArch::Mlp { .. } => 1e-3,
    };

    let mut train_section = config.train.clone().unwrap_or_default();
    if let Some(epochs) = args.epochs {
        train_section.epochs = Some(epochs);
    }
    if let Some(weighting) = &args.weighting {
        train_section.weighting = Some(weighting.clone());
    }
    let tcfg = train_section.train_config(seed, default_lr)?;
    let weighting = train_section.weighting.as_deref().unwrap_or("reference");
    let save_interval = train_section.save_interval.unwrap_or(0);

    let dir = rundir::prepare(&resolve_out_dir(args.out.as_deref(), config)?)?;

    let mut intermediate: Vec<String> = Vec::new();
    let (trained, curve) = match weighting {
        "uniform" => {
            run_chunked(rm, &tcfg, save_interval, &dir, &vocab, &mut intermediate, |rm, cfg| {
                Ok(train_unweighted(rm, &partial.records, cfg)?)
            })?
        }
        "reference" => {
            let reference_spec = config.reference.clone().ok_or_else(|| {
                CliError::Config(
                    "reference weighting needs a \"reference\" reward spec".to_string(),
                )
            })?;
            let reference = reference_spec.resolve(&vocab)?;
            let wcfg = train_section.weighting_config()?;
            run_chunked(rm, &tcfg, save_interval, &dir, &vocab, &mut intermediate, |rm, cfg| {
                Ok(train(rm, &partial, reference.as_ref(), &wcfg, cfg)?)
            })?
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown weighting mode {other:?} (use \"reference\" or \"uniform\")"
            )))
        }
    };

    formats::save_reward(&dir.join("checkpoint.json"), &trained, &vocab)?;
    formats::save_loss_curve(&dir.join("loss_curve.csv"), &curve)?;

    let mut config_snapshot = config.clone();
    config_snapshot.train = Some(train_section);
    let mut manifest = Manifest::new("train", Some(seed), config_snapshot.to_value()?);
    manifest.input("dataset", &dataset_path);
    manifest.output("checkpoint.json");
    manifest.output("loss_curve.csv");
    for name in intermediate {
        manifest.output(&name);
    }
    rundir::write_manifest(&dir, &manifest)?;
    Ok(dir)
}

/// Run training in `save_interval`-sized chunks so intermediate checkpoints
/// can be persisted. Chunking restarts the optimizer's moment estimates and
/// the shuffle stream at each boundary; with `save_interval = 0` the whole
/// run is a single chunk.
fn run_chunked(
    mut rm: FeaturizedReward,
    tcfg: &TrainConfig,
    save_interval: usize,
    dir: &std::path::Path,
    vocab: &prmlab_core::Vocab,
    saved: &mut Vec<String>,
    mut step: impl FnMut(FeaturizedReward, &TrainConfig) -> Result<(FeaturizedReward, Vec<EpochStat>)>,
) -> Result<(FeaturizedReward, Vec<EpochStat>)> {
    if save_interval == 0 || save_interval >= tcfg.epochs {
        return step(rm, tcfg);
    }
    let mut curve: Vec<EpochStat> = Vec::new();
    let mut done = 0;
    while done < tcfg.epochs {
        let chunk = save_interval.min(tcfg.epochs - done);
        let chunk_cfg = TrainConfig {
            epochs: chunk,
            ..tcfg.clone()
        };
        let (next, chunk_curve) = step(rm, &chunk_cfg)?;
        rm = next;
        for stat in chunk_curve {
            // Chunks re-report their own epoch 0; keep only the first.
            if stat.epoch == 0 && done > 0 {
                continue;
            }
            curve.push(EpochStat {
                epoch: done + stat.epoch,
                ..stat
            });
        }
        done += chunk;
        if done < tcfg.epochs {
            let name = format!("checkpoint_epoch_{done}.json");
            formats::save_reward(&dir.join(&name), &rm, vocab)?;
            saved.push(name);
        }
    }
    Ok((rm, curve))
}
