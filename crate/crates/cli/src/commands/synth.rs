//! `synth`: generate a vocabulary, an n-gram training corpus, an
//! oracle-labeled preference dataset, and a standalone prompt file.

use std::path::PathBuf;

use prmlab_core::dataset::{synth_corpus, synth_prompts, SynthParams};
use prmlab_core::rng;

use crate::config::{resolve_out_dir, ExperimentConfig};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct SynthArgs {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub n_pairs: Option<usize>,
    pub noise: Option<f64>,
}

pub fn run(config: &ExperimentConfig, args: &SynthArgs) -> Result<PathBuf> {
    let seed = config.require_seed(args.seed)?;
    let section = config
        .synth
        .clone()
        .ok_or_else(|| CliError::Config("config needs a \"synth\" section".to_string()))?;
    let n_pairs = args.n_pairs.unwrap_or(section.n_pairs);
    let noise = args.noise.unwrap_or(section.noise);
    let vocab = section.vocab()?;
    let oracle_spec = section.oracle_spec(seed);
    let oracle = oracle_spec.resolve(&vocab)?;
    let params = SynthParams {
        prompt_len: section.prompt_len.unwrap_or((2, 6)),
        response_len: section.response_len.unwrap_or((24, 56)),
    };

    let mut dataset_rng = rng::stream(seed, "dataset");
    let mut dataset = synth_corpus(
        &vocab,
        n_pairs,
        oracle.as_ref(),
        noise,
        params,
        &mut dataset_rng,
    )?;
    dataset.provenance.seed = Some(seed);

    let mut prompt_rng = rng::stream(seed, "prompts");
    let prompts = synth_prompts(
        &vocab,
        section.n_prompts.unwrap_or(200),
        params.prompt_len,
        &mut prompt_rng,
    )?;

    let dir = rundir::prepare(&resolve_out_dir(args.out.as_deref(), config)?)?;
    formats::save_vocab(&dir.join("vocab.json"), &vocab)?;

    // The corpus holds every response, one line each, for policy fitting.
    let mut corpus_lines = Vec::with_capacity(2 * dataset.len());
    for pair in &dataset.records {
        corpus_lines.push(pair.chosen.clone());
        corpus_lines.push(pair.rejected.clone());
    }
    formats::save_token_lines(&dir.join("corpus.txt"), &vocab, &corpus_lines)?;
    formats::save_prefs_jsonl(&dir.join("prefs.jsonl"), &dataset)?;
    formats::save_token_lines(&dir.join("prompts.txt"), &vocab, &prompts)?;

    let mut config_snapshot = config.clone();
    config_snapshot.synth = Some(crate::config::SynthSection {
        oracle: Some(oracle_spec),
        n_pairs,
        noise,
        ..section
    });
    let mut manifest = Manifest::new("synth", Some(seed), config_snapshot.to_value()?);
    for name in ["vocab.json", "corpus.txt", "prefs.jsonl", "prompts.txt"] {
        manifest.output(name);
    }
    rundir::write_manifest(&dir, &manifest)?;
    Ok(dir)
}
