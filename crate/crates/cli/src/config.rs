//! One self-contained JSON experiment configuration shared by every
//! subcommand, with CLI flag overrides taking precedence over file values
//! and file values over defaults.
//!
//! Commands read only the sections they need; unknown keys are rejected so
//! typos surface as validation errors.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use prmlab_core::policy::{Granularity, NGramLM, PolicyModel, SentenceRule};
use prmlab_core::reward::{FeaturizedReward, LexOracleReward, RewardArch, RewardModel};
use prmlab_core::search::{CandidateSource, SearchConfig, TauSchedule};
use prmlab_core::train::{Optimizer, TrainConfig, WeightingConfig};
use prmlab_core::{rng, TokenId, Vocab};

use crate::formats;
use crate::{CliError, Result};

/// Environment variable naming the root under which relative output
/// directories are created.
pub const OUT_ROOT_ENV: &str = "PRMLAB_OUT";

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out_dir: Option<String>,

    /// Input paths.
    pub vocab: Option<String>,
    pub corpus: Option<String>,
    pub dataset: Option<String>,
    pub partial: Option<String>,
    pub prompts: Option<String>,

    pub t_grid: Option<Vec<usize>>,

    pub synth: Option<SynthSection>,
    pub builder: Option<BuilderSection>,
    /// Mix the full-length pair of every record into the partial dataset
    /// before training (default true).
    pub include_complete: Option<bool>,

    pub reward: Option<RewardSection>,
    /// Reference scorer for confidence weighting during training.
    pub reference: Option<RewardSpec>,
    /// Human-preference proxy for agreement metrics.
    pub judge: Option<RewardSpec>,
    /// Scorer under evaluation / guiding decode.
    pub rm: Option<RewardSpec>,
    /// Multiple named scorers for side-by-side evaluation.
    pub eval_rms: Option<Vec<NamedRewardSpec>>,

    pub train: Option<TrainSection>,
    pub policy: Option<PolicySpec>,
    pub search: Option<SearchSection>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("parse {}: {e}", path.display())))
    }

    /// Snapshot for run manifests.
    pub fn to_value(&self) -> Result<serde_json::Value> {
        serde_json::to_value(self).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn require_seed(&self, flag: Option<u64>) -> Result<u64> {
        flag.or(self.seed)
            .ok_or_else(|| CliError::Config("a seed is required (--seed or config)".to_string()))
    }

    pub fn require_path(&self, field: &str) -> Result<PathBuf> {
        let value = match field {
            "vocab" => &self.vocab,
            "corpus" => &self.corpus,
            "dataset" => &self.dataset,
            "partial" => &self.partial,
            "prompts" => &self.prompts,
            other => return Err(CliError::Config(format!("unknown path field {other}"))),
        };
        value
            .as_ref()
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Config(format!("config field {field:?} is required")))
    }
}

/// Resolve the run directory: `--out` flag over config, both relative to
/// `$PRMLAB_OUT` (or the working directory) unless absolute.
pub fn resolve_out_dir(flag: Option<&str>, config: &ExperimentConfig) -> Result<PathBuf> {
    let dir = flag
        .map(str::to_string)
        .or_else(|| config.out_dir.clone())
        .ok_or_else(|| CliError::Config("an output directory is required (--out or config)".to_string()))?;
    let dir = PathBuf::from(dir);
    if dir.is_absolute() {
        return Ok(dir);
    }
    match std::env::var_os(OUT_ROOT_ENV) {
        Some(root) => Ok(PathBuf::from(root).join(dir)),
        None => Ok(dir),
    }
}

// ---------------------------------------------------------------------------
// Synth
// ---------------------------------------------------------------------------

fn default_tokens() -> Vec<String> {
    let mut tokens = vec!["<eos>".to_string()];
    tokens.extend(
        ["a", "b", "c", "d", "e", "f", "g", "h"]
            .iter()
            .map(|s| s.to_string()),
    );
    tokens
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSection {
    pub tokens: Option<Vec<String>>,
    pub eos: Option<String>,
    pub n_pairs: usize,
    pub noise: f64,
    /// Standalone prompts written alongside the dataset (for decoding).
    pub n_prompts: Option<usize>,
    pub prompt_len: Option<(usize, usize)>,
    pub response_len: Option<(usize, usize)>,
    /// Labeling oracle; defaults to random positional ranks seeded from the
    /// root seed.
    pub oracle: Option<RewardSpec>,
}

impl SynthSection {
    pub fn vocab(&self) -> Result<Vocab> {
        let tokens = self.tokens.clone().unwrap_or_else(default_tokens);
        let eos = self.eos.clone().unwrap_or_else(|| "<eos>".to_string());
        Ok(Vocab::new(tokens, &eos)?)
    }

    pub fn oracle_spec(&self, root_seed: u64) -> RewardSpec {
        self.oracle.clone().unwrap_or(RewardSpec::LexRandom {
            seed: rng::substream_seed(root_seed, "oracle"),
            positions: 64,
        })
    }
}

// ---------------------------------------------------------------------------
// Reward model specs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RewardSpec {
    /// Score-consistent oracle with identity ranks (needs eos at id 0).
    LexIdentity,
    /// Score-consistent oracle with seeded random per-position ranks.
    LexRandom { seed: u64, positions: usize },
    /// A trained featurized checkpoint.
    Checkpoint { path: String },
}

impl RewardSpec {
    /// Instantiate against `vocab`; checkpoint vocabularies must match.
    pub fn resolve(&self, vocab: &Vocab) -> Result<Box<dyn RewardModel>> {
        match self {
            RewardSpec::LexIdentity => Ok(Box::new(LexOracleReward::identity(vocab)?)),
            RewardSpec::LexRandom { seed, positions } => {
                let mut r = rng::stream(*seed, "oracle-ranks");
                Ok(Box::new(LexOracleReward::random(vocab, *positions, &mut r)?))
            }
            RewardSpec::Checkpoint { path } => {
                let (rm, ckpt_vocab) = formats::load_reward(Path::new(path))?;
                if &ckpt_vocab != vocab {
                    return Err(CliError::Config(format!(
                        "checkpoint {path} was trained on a different vocabulary"
                    )));
                }
                Ok(Box::new(rm))
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NamedRewardSpec {
    pub name: String,
    #[serde(flatten)]
    pub spec: RewardSpec,
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuilderSection {
    /// "tlt" or "sst".
    pub kind: String,
    pub k: Option<u32>,
}

impl Default for BuilderSection {
    fn default() -> Self {
        BuilderSection {
            kind: "sst".to_string(),
            k: Some(5),
        }
    }
}

// ---------------------------------------------------------------------------
// Trainable reward model
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSection {
    /// "linear" or "mlp".
    pub arch: Option<String>,
    pub hidden: Option<usize>,
    pub norm_len: Option<usize>,
    pub init_scale: Option<f64>,
}

impl Default for RewardSection {
    fn default() -> Self {
        RewardSection {
            arch: Some("linear".to_string()),
            hidden: None,
            norm_len: None,
            init_scale: None,
        }
    }
}

impl RewardSection {
    pub fn arch(&self) -> Result<RewardArch> {
        match self.arch.as_deref().unwrap_or("linear") {
            "linear" => Ok(RewardArch::Linear),
            "mlp" => Ok(RewardArch::Mlp {
                hidden: self.hidden.unwrap_or(16),
            }),
            other => Err(CliError::Config(format!("unknown reward arch {other:?}"))),
        }
    }

    pub fn norm_len(&self) -> usize {
        self.norm_len.unwrap_or(prmlab_core::policy::DEFAULT_MAX_LEN)
    }

    /// Fresh model: zeros for linear, small random init for the MLP.
    pub fn instantiate(&self, vocab: &Vocab, seed: u64) -> Result<FeaturizedReward> {
        let arch = self.arch()?;
        match arch {
            RewardArch::Linear => Ok(FeaturizedReward::zeros(vocab, arch, self.norm_len())?),
            RewardArch::Mlp { .. } => {
                let mut r = rng::stream(seed, "init");
                Ok(FeaturizedReward::random(
                    vocab,
                    arch,
                    self.norm_len(),
                    self.init_scale.unwrap_or(0.1),
                    &mut r,
                )?)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    /// "adam" or "sgd".
    pub optimizer: Option<String>,
    pub shuffle: Option<bool>,
    /// "reference" (confidence weighting, default) or "uniform".
    pub weighting: Option<String>,
    pub entropy_floor: Option<f64>,
    pub weight_cap: Option<f64>,
    /// Save a checkpoint every this many epochs (0 = final only).
    pub save_interval: Option<usize>,
}

impl TrainSection {
    pub fn train_config(&self, seed: u64, default_lr: f64) -> Result<TrainConfig> {
        let optimizer = match self.optimizer.as_deref().unwrap_or("adam") {
            "adam" => Optimizer::default(),
            "sgd" => Optimizer::Sgd,
            other => return Err(CliError::Config(format!("unknown optimizer {other:?}"))),
        };
        let cfg = TrainConfig {
            learning_rate: self.learning_rate.unwrap_or(default_lr),
            epochs: self.epochs.unwrap_or(50),
            batch_size: self.batch_size.unwrap_or(64),
            seed,
            optimizer,
            shuffle: self.shuffle.unwrap_or(true),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn weighting_config(&self) -> Result<WeightingConfig> {
        let cfg = WeightingConfig {
            entropy_floor: self.entropy_floor.unwrap_or(1e-3),
            weight_cap: self.weight_cap.unwrap_or(100.0),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PolicySpec {
    /// Fit an n-gram model on a corpus file at decode time.
    Ngram {
        corpus: Option<String>,
        order: Option<usize>,
        alpha: Option<f64>,
        max_len: Option<usize>,
    },
    /// Load a previously fitted checkpoint.
    Checkpoint { path: String },
}

impl Default for PolicySpec {
    fn default() -> Self {
        PolicySpec::Ngram {
            corpus: None,
            order: Some(2),
            alpha: Some(0.5),
            max_len: None,
        }
    }
}

impl PolicySpec {
    /// Instantiate; `fallback_corpus` is the top-level `corpus` path.
    pub fn resolve(
        &self,
        vocab: &Vocab,
        fallback_corpus: Option<&Path>,
        search_max_len: usize,
    ) -> Result<NGramLM> {
        match self {
            PolicySpec::Ngram {
                corpus,
                order,
                alpha,
                max_len,
            } => {
                let corpus_path = corpus
                    .as_ref()
                    .map(PathBuf::from)
                    .or_else(|| fallback_corpus.map(Path::to_path_buf))
                    .ok_or_else(|| {
                        CliError::Config("an n-gram policy needs a corpus path".to_string())
                    })?;
                let lines = formats::load_corpus(&corpus_path, vocab)?;
                Ok(NGramLM::fit(
                    vocab.clone(),
                    &lines,
                    order.unwrap_or(2),
                    alpha.unwrap_or(0.5),
                    max_len.unwrap_or(search_max_len),
                )?)
            }
            PolicySpec::Checkpoint { path } => {
                let lm = formats::load_ngram(Path::new(path))?;
                if lm.vocab() != vocab {
                    return Err(CliError::Config(format!(
                        "policy checkpoint {path} was fitted on a different vocabulary"
                    )));
                }
                Ok(lm)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Search
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    /// "sample", "bon", "args", "cbs", "tbs", "cards", or "rgs".
    pub method: Option<String>,
    /// Granularity for "rgs": "token", "chunk", "sentence", "response".
    pub granularity: Option<String>,
    pub candidate_size: Option<usize>,
    pub return_count: Option<usize>,
    pub beam_width: Option<usize>,
    pub chunk_len: Option<usize>,
    pub args_w: Option<f64>,
    pub args_k: Option<usize>,
    pub cards_tau_u: Option<f64>,
    pub cards_beta: Option<f64>,
    pub cards_tau_r_start: Option<f64>,
    pub cards_tau_r_target: Option<f64>,
    pub cards_expected_segments: Option<usize>,
    pub cards_max_rejects: Option<usize>,
    pub temperature: Option<f64>,
    pub max_len: Option<usize>,
    pub bon_n: Option<usize>,
    pub exhaustive: Option<bool>,
    /// Boundary (punctuation) token symbols for sentence segmentation.
    pub sentence_boundary: Option<Vec<String>>,
    /// Entropy threshold for the "sentence" granularity of "rgs".
    pub sentence_entropy: Option<f64>,
}

impl SearchSection {
    pub fn method(&self) -> String {
        self.method.clone().unwrap_or_else(|| "sample".to_string())
    }

    pub fn bon_n(&self) -> usize {
        self.bon_n.unwrap_or(16)
    }

    fn boundary_ids(&self, vocab: &Vocab) -> Result<Vec<TokenId>> {
        self.sentence_boundary
            .as_deref()
            .unwrap_or(&[])
            .iter()
            .map(|s| Ok(vocab.id(s)?))
            .collect()
    }

    pub fn search_config(&self, vocab: &Vocab, seed: u64) -> Result<SearchConfig> {
        let boundary = self.boundary_ids(vocab)?;
        let granularity = match self.granularity.as_deref().unwrap_or("token") {
            "token" => Granularity::Token,
            "chunk" => Granularity::Chunk(self.chunk_len.unwrap_or(30)),
            "response" => Granularity::Response,
            "sentence" => Granularity::Sentence(SentenceRule {
                boundary_tokens: boundary.clone(),
                entropy_threshold: self.sentence_entropy.unwrap_or(1.0),
            }),
            other => {
                return Err(CliError::Config(format!("unknown granularity {other:?}")))
            }
        };
        let cfg = SearchConfig {
            granularity,
            candidate_size: self.candidate_size.unwrap_or(8),
            return_count: self.return_count.unwrap_or(1),
            beam_width: self.beam_width.unwrap_or(8),
            chunk_len: self.chunk_len.unwrap_or(30),
            args_w: self.args_w.unwrap_or(1.5),
            args_k: self.args_k.unwrap_or(30),
            cards_tau_u: self.cards_tau_u.unwrap_or(7.0),
            cards_beta: self.cards_beta.unwrap_or(1.0),
            cards_tau_r: TauSchedule {
                start: self.cards_tau_r_start.unwrap_or(0.0),
                target: self.cards_tau_r_target.unwrap_or(0.5),
                expected_segments: self.cards_expected_segments.unwrap_or(8),
            },
            cards_max_rejects: self.cards_max_rejects.unwrap_or(64),
            sentence_boundary: boundary,
            temperature: self.temperature.unwrap_or(1.0),
            max_len: self.max_len.unwrap_or(prmlab_core::policy::DEFAULT_MAX_LEN),
            seed,
            source: if self.exhaustive.unwrap_or(false) {
                CandidateSource::Exhaustive
            } else {
                CandidateSource::Sampled
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"sede": 1}"#).unwrap();
        let err = ExperimentConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn seed_requirement() {
        let cfg = ExperimentConfig::default();
        assert!(cfg.require_seed(None).is_err());
        assert_eq!(cfg.require_seed(Some(7)).unwrap(), 7);
        let cfg = ExperimentConfig {
            seed: Some(3),
            ..Default::default()
        };
        assert_eq!(cfg.require_seed(None).unwrap(), 3);
        assert_eq!(cfg.require_seed(Some(9)).unwrap(), 9);
    }

    #[test]
    fn reward_spec_resolution() {
        let v = Vocab::new(["<eos>", "a", "b"], "<eos>").unwrap();
        let spec = RewardSpec::LexIdentity;
        assert!(spec.resolve(&v).is_ok());
        let spec = RewardSpec::LexRandom {
            seed: 1,
            positions: 4,
        };
        let rm1 = spec.resolve(&v).unwrap();
        let rm2 = spec.resolve(&v).unwrap();
        let seq = v.encode("a b").unwrap();
        let empty = prmlab_core::TokenSeq::empty();
        assert_eq!(
            rm1.score(&empty, &seq).unwrap(),
            rm2.score(&empty, &seq).unwrap()
        );
    }

    #[test]
    fn search_section_builds_valid_configs() {
        let v = Vocab::new(["<eos>", "a", "b"], "<eos>").unwrap();
        let section = SearchSection::default();
        let cfg = section.search_config(&v, 5).unwrap();
        assert_eq!(cfg.seed, 5);
        assert_eq!(cfg.args_w, 1.5);
        assert_eq!(cfg.args_k, 30);
        assert_eq!(cfg.beam_width, 8);
        assert_eq!(cfg.candidate_size, 8);
        assert_eq!(cfg.chunk_len, 30);
        assert_eq!(cfg.cards_tau_u, 7.0);
        let bad = SearchSection {
            granularity: Some("word".to_string()),
            ..Default::default()
        };
        assert!(bad.search_config(&v, 5).is_err());
    }
}
