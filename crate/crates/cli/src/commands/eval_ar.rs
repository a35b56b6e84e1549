//! `eval-ar`: agreement-rate and reward-gap reports for one or more reward
//! models over a prefix-length grid.

use std::path::PathBuf;

use prmlab_core::metrics::ARReport;

use crate::config::{resolve_out_dir, ExperimentConfig, NamedRewardSpec};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct EvalArArgs {
    pub out: Option<String>,
    /// Override: evaluate this checkpoint path as the single "rm".
    pub rm_checkpoint: Option<String>,
}

pub fn run(config: &ExperimentConfig, args: &EvalArArgs) -> Result<PathBuf> {
    let vocab = formats::load_vocab(&config.require_path("vocab")?)?;
    let dataset_path = config.require_path("dataset")?;
    let dataset = formats::load_prefs_jsonl(&dataset_path, &vocab)?;

    let t_grid = config
        .t_grid
        .clone()
        .filter(|g| !g.is_empty())
        .ok_or_else(|| CliError::Config("a non-empty t_grid is required".to_string()))?;

    let mut rms: Vec<NamedRewardSpec> = Vec::new();
    if let Some(path) = &args.rm_checkpoint {
        rms.push(NamedRewardSpec {
            name: "rm".to_string(),
            spec: crate::config::RewardSpec::Checkpoint { path: path.clone() },
        });
    } else if let Some(list) = &config.eval_rms {
        rms.extend(list.iter().cloned());
    } else if let Some(spec) = &config.rm {
        rms.push(NamedRewardSpec {
            name: "rm".to_string(),
            spec: spec.clone(),
        });
    }
    if rms.is_empty() {
        return Err(CliError::Config(
            "nothing to evaluate: set \"rm\", \"eval_rms\", or --rm".to_string(),
        ));
    }

    let dir = rundir::prepare(&resolve_out_dir(args.out.as_deref(), config)?)?;
    let mut manifest = Manifest::new("eval-ar", config.seed, config.to_value()?);
    manifest.input("dataset", &dataset_path);

    for named in &rms {
        let rm = named.spec.resolve(&vocab)?;
        // The judge defaults to the model itself (self-agreement columns
        // then read 1.0, a useful sanity row).
        let judge = match &config.judge {
            Some(spec) => spec.resolve(&vocab)?,
            None => named.spec.resolve(&vocab)?,
        };
        let report = ARReport::compute(rm.as_ref(), judge.as_ref(), &dataset, &t_grid)?;
        let stem = format!("{}_ar_report", named.name);
        for file in formats::save_ar_report(&dir, &stem, &report)? {
            manifest.output(&file);
        }
    }
    rundir::write_manifest(&dir, &manifest)?;
    Ok(dir)
}
