//! `build-partial`: truncate a preference dataset into partial pairs with
//! the token-level or stochastic builder and persist them as JSONL.

use std::path::PathBuf;

use prmlab_core::dataset::{build_sst, build_tlt, PartialDataset, PreferenceDataset};
use prmlab_core::rng;

use crate::config::{resolve_out_dir, BuilderSection, ExperimentConfig};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct BuildPartialArgs {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub builder: Option<String>,
    pub k: Option<u32>,
}

/// Run the configured builder over an in-memory dataset.
pub fn build(
    dataset: &PreferenceDataset,
    section: &BuilderSection,
    seed: Option<u64>,
) -> Result<PartialDataset> {
    match section.kind.as_str() {
        "tlt" => Ok(build_tlt(dataset)?),
        "sst" => {
            let seed = seed.ok_or_else(|| {
                CliError::Config("the sst builder needs a seed (--seed or config)".to_string())
            })?;
            let k = section.k.unwrap_or(5);
            let mut r = rng::stream(seed, "dataset");
            Ok(build_sst(dataset, k, Some(seed), &mut r)?)
        }
        other => Err(CliError::Config(format!("unknown builder {other:?}"))),
    }
}

pub fn run(config: &ExperimentConfig, args: &BuildPartialArgs) -> Result<PathBuf> {
    let vocab = formats::load_vocab(&config.require_path("vocab")?)?;
    let dataset_path = config.require_path("dataset")?;
    let dataset = formats::load_prefs_jsonl(&dataset_path, &vocab)?;

    let mut section = config.builder.clone().unwrap_or_default();
    if let Some(kind) = &args.builder {
        section.kind = kind.clone();
    }
    if let Some(k) = args.k {
        section.k = Some(k);
    }
    let seed = args.seed.or(config.seed);
    let partial = build(&dataset, &section, seed)?;

    let dir = rundir::prepare(&resolve_out_dir(args.out.as_deref(), config)?)?;
    formats::save_partial_jsonl(&dir.join("partial.jsonl"), &vocab, &partial)?;

    let mut config_snapshot = config.clone();
    config_snapshot.builder = Some(section);
    let mut manifest = Manifest::new("build-partial", partial.seed, config_snapshot.to_value()?);
    manifest.input("dataset", &dataset_path);
    manifest.output("partial.jsonl");
    rundir::write_manifest(&dir, &manifest)?;
    Ok(dir)
}
