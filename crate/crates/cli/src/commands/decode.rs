//! `decode`: run a reward-guided decoder over a prompt file, persisting
//! generations, full search traces, and a summary. Also hosts `--replay`,
//! which re-derives a persisted run and verifies byte identity.

use std::path::{Path, PathBuf};
use std::time::Instant;

use prmlab_core::metrics::diversity;
use prmlab_core::policy::PolicyModel;
use prmlab_core::reward::RewardModel;
use prmlab_core::search::{args_greedy, best_of_n, cards, cbs, rgs_general, SearchConfig};
use prmlab_core::{rng, TokenSeq, Vocab};

use crate::config::{resolve_out_dir, ExperimentConfig};
use crate::formats::{DecodeSummary, GenerationRecord, TraceFile};
use crate::rundir::{self, Manifest};
use crate::{formats, CliError, Result};

#[derive(Clone, Debug, Default)]
pub struct DecodeArgs {
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub method: Option<String>,
    pub bon_n: Option<usize>,
}

/// One decoded prompt: the chosen output and the full trace.
fn decode_prompt(
    method: &str,
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    cfg: &SearchConfig,
    bon_n: usize,
    prompt: &TokenSeq,
) -> Result<(TokenSeq, prmlab_core::search::SearchTrace)> {
    match method {
        "sample" => {
            let mut r = rng::stream(cfg.seed, "decode");
            Ok(best_of_n(policy, rm, 1, prompt, cfg.temperature, &mut r)?)
        }
        "bon" => {
            let mut r = rng::stream(cfg.seed, "decode");
            Ok(best_of_n(policy, rm, bon_n, prompt, cfg.temperature, &mut r)?)
        }
        "args" => Ok(args_greedy(policy, rm, cfg, prompt)?),
        "cbs" => Ok(cbs(policy, rm, cfg, prompt)?),
        "tbs" => {
            let cfg = SearchConfig {
                chunk_len: 1,
                ..cfg.clone()
            };
            Ok(cbs(policy, rm, &cfg, prompt)?)
        }
        "cards" => Ok(cards(policy, rm, cfg, prompt)?),
        "rgs" => {
            let (outputs, trace) = rgs_general(policy, rm, cfg, prompt)?;
            let best = outputs
                .into_iter()
                .next()
                .ok_or_else(|| CliError::Data("search returned no sequences".to_string()))?;
            Ok((best, trace))
        }
        other => Err(CliError::Config(format!("unknown decode method {other:?}"))),
    }
}

struct DecodeProducts {
    generations: Vec<GenerationRecord>,
    traces: Vec<TraceFile>,
    summary: DecodeSummary,
}

fn run_decode(
    config: &ExperimentConfig,
    method: &str,
    seed: u64,
    bon_n: usize,
    vocab: &Vocab,
    prompts: &[TokenSeq],
) -> Result<(DecodeProducts, prmlab_core::policy::NGramLM)> {
    let search_section = config.search.clone().unwrap_or_default();
    let template = search_section.search_config(vocab, seed)?;
    let policy_spec = config.policy.clone().unwrap_or_default();
    let corpus_path = config.corpus.as_ref().map(PathBuf::from);
    let policy = policy_spec.resolve(vocab, corpus_path.as_deref(), template.max_len)?;
    let rm_spec = config
        .rm
        .clone()
        .ok_or_else(|| CliError::Config("decode needs an \"rm\" reward spec".to_string()))?;
    let rm = rm_spec.resolve(vocab)?;

    let mut generations = Vec::with_capacity(prompts.len());
    let mut traces = Vec::with_capacity(prompts.len());
    let mut rewards = Vec::with_capacity(prompts.len());
    let mut diversities = Vec::with_capacity(prompts.len());
    let mut token_total = 0usize;

    for (i, prompt) in prompts.iter().enumerate() {
        let cfg = SearchConfig {
            seed: rng::indexed_substream_seed(seed, "decode", i as u64),
            ..template.clone()
        };
        let (output, trace) = decode_prompt(method, &policy, rm.as_ref(), &cfg, bon_n, prompt)?;
        let reward = rm.score(prompt, &output)?;
        let div = diversity(&output, vocab.eos());
        rewards.push(reward);
        diversities.push(div);
        token_total += output.len();
        generations.push(GenerationRecord {
            prompt: prompt
                .ids()
                .iter()
                .map(|&id| vocab.symbol(id).map(str::to_string))
                .collect::<prmlab_core::Result<_>>()?,
            output: output
                .ids()
                .iter()
                .map(|&id| vocab.symbol(id).map(str::to_string))
                .collect::<prmlab_core::Result<_>>()?,
            reward,
            diversity: div,
            tokens: output.len(),
        });
        traces.push(TraceFile::build(vocab, prompt, &trace)?);
    }

    let n = prompts.len();
    let mean = |xs: &[f64]| {
        if xs.is_empty() {
            0.0
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    };
    let mean_reward = mean(&rewards);
    let std_reward = if n > 1 {
        (rewards
            .iter()
            .map(|r| (r - mean_reward) * (r - mean_reward))
            .sum::<f64>()
            / (n as f64 - 1.0))
            .sqrt()
    } else {
        0.0
    };
    let summary = DecodeSummary {
        method: method.to_string(),
        n_prompts: n,
        mean_reward,
        std_reward,
        mean_diversity: mean(&diversities),
        mean_tokens: if n == 0 {
            0.0
        } else {
            token_total as f64 / n as f64
        },
    };
    Ok((
        DecodeProducts {
            generations,
            traces,
            summary,
        },
        policy,
    ))
}

pub fn run(config: &ExperimentConfig, args: &DecodeArgs) -> Result<PathBuf> {
    let start = Instant::now();
    let seed = config.require_seed(args.seed)?;
    let vocab = formats::load_vocab(&config.require_path("vocab")?)?;
    let prompts_path = config.require_path("prompts")?;
    let prompts = formats::load_prompts(&prompts_path, &vocab)?;
    if prompts.is_empty() {
        return Err(CliError::Data(format!(
            "no prompts in {}",
            prompts_path.display()
        )));
    }

    let search_section = config.search.clone().unwrap_or_default();
    let method = args.method.clone().unwrap_or_else(|| search_section.method());
    let bon_n = args.bon_n.unwrap_or_else(|| search_section.bon_n());

    let (products, policy) = run_decode(config, &method, seed, bon_n, &vocab, &prompts)?;

    let dir = rundir::prepare(&resolve_out_dir(args.out.as_deref(), config)?)?;
    formats::save_jsonl(&dir.join("generations.jsonl"), &products.generations)?;
    formats::save_jsonl(&dir.join("traces.jsonl"), &products.traces)?;
    formats::write_json(&dir.join("summary.json"), &products.summary)?;
    formats::save_ngram(&dir.join("policy.json"), &policy)?;

    let mut config_snapshot = config.clone();
    let mut section = search_section;
    section.method = Some(method.clone());
    section.bon_n = Some(bon_n);
    config_snapshot.search = Some(section);
    let mut manifest = Manifest::new("decode", Some(seed), config_snapshot.to_value()?);
    manifest.input("prompts", &prompts_path);
    for name in ["generations.jsonl", "traces.jsonl", "summary.json", "policy.json"] {
        manifest.output(name);
    }
    rundir::write_manifest(&dir, &manifest)?;
    rundir::write_timing(&dir, start.elapsed().as_millis() as u64)?;
    Ok(dir)
}

/// Re-derive a persisted decode run from its manifest and verify that the
/// regenerated outputs are byte-identical. Any mismatch is a divergence.
pub fn replay(run_dir: &Path) -> Result<()> {
    let manifest = rundir::read_manifest(run_dir)?;
    if manifest.command != "decode" {
        return Err(CliError::Config(format!(
            "{} is a {} run, not a decode run",
            run_dir.display(),
            manifest.command
        )));
    }
    let config: ExperimentConfig = serde_json::from_value(manifest.config.clone())
        .map_err(|e| CliError::Data(format!("manifest config: {e}")))?;
    let seed = manifest
        .seed
        .ok_or_else(|| CliError::Data("manifest has no seed".to_string()))?;
    let vocab = formats::load_vocab(&config.require_path("vocab")?)?;
    let prompts = formats::load_prompts(&config.require_path("prompts")?, &vocab)?;
    let section = config.search.clone().unwrap_or_default();
    let (products, _) = run_decode(&config, &section.method(), seed, section.bon_n(), &vocab, &prompts)?;

    let mut regenerated = String::new();
    for row in &products.generations {
        regenerated.push_str(&serde_json::to_string(row).map_err(|e| CliError::Data(e.to_string()))?);
        regenerated.push('\n');
    }
    let persisted = std::fs::read_to_string(run_dir.join("generations.jsonl"))?;
    if regenerated != persisted {
        return Err(CliError::Divergence(format!(
            "replay of {} produced different generations",
            run_dir.display()
        )));
    }
    Ok(())
}
