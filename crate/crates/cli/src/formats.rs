//! On-disk formats: vocabulary files, token-line text files, preference and
//! partial-pair JSONL, model checkpoints, metric reports, and decode
//! outputs.
//!
//! All JSON is emitted with sorted-map/struct-order determinism and a
//! trailing newline; JSONL rows are compact, one record per line. Sequences
//! inside JSONL records are whitespace-joined symbol strings (tokenized
//! back against the vocabulary on load); sequences inside traces and
//! generation records are arrays of token symbols.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use prmlab_core::dataset::{PartialDataset, PreferenceDataset, Provenance};
use prmlab_core::metrics::ARReport;
use prmlab_core::policy::{NGramLM, PolicyModel};
use prmlab_core::reward::{FeatureSpec, FeaturizedReward, RewardArch};
use prmlab_core::search::SearchTrace;
use prmlab_core::train::EpochStat;
use prmlab_core::{PartialPair, PreferencePair, TokenId, TokenSeq, Vocab};

use crate::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

/// Write a pretty JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(format!("serialize {}: {e}", path.display())))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| CliError::Data(format!("parse {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct VocabFile {
    pub tokens: Vec<String>,
    pub eos: String,
}

impl VocabFile {
    pub fn from_vocab(vocab: &Vocab) -> Result<Self> {
        Ok(VocabFile {
            tokens: vocab.symbols().to_vec(),
            eos: vocab.symbol(vocab.eos())?.to_string(),
        })
    }

    pub fn to_vocab(&self) -> Result<Vocab> {
        Ok(Vocab::new(self.tokens.clone(), &self.eos)?)
    }
}

pub fn save_vocab(path: &Path, vocab: &Vocab) -> Result<()> {
    write_json(path, &VocabFile::from_vocab(vocab)?)
}

pub fn load_vocab(path: &Path) -> Result<Vocab> {
    read_json::<VocabFile>(path)?.to_vocab()
}

// ---------------------------------------------------------------------------
// Token-line text files (corpus, prompts)
// ---------------------------------------------------------------------------

pub fn save_token_lines(path: &Path, vocab: &Vocab, seqs: &[TokenSeq]) -> Result<()> {
    let mut text = String::new();
    for seq in seqs {
        text.push_str(&vocab.render(seq)?);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Load corpus lines as raw id streams (eos may appear anywhere).
pub fn load_corpus(path: &Path, vocab: &Vocab) -> Result<Vec<Vec<TokenId>>> {
    let mut lines = Vec::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ids: std::result::Result<Vec<TokenId>, _> =
            line.split_whitespace().map(|s| vocab.id(s)).collect();
        lines.push(ids.map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?);
    }
    Ok(lines)
}

/// Load prompt lines as validated sequences.
pub fn load_prompts(path: &Path, vocab: &Vocab) -> Result<Vec<TokenSeq>> {
    let mut prompts = Vec::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        prompts.push(
            vocab
                .encode(line)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(prompts)
}

// ---------------------------------------------------------------------------
// Preference JSONL
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrefRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

pub fn save_prefs_jsonl(path: &Path, d: &PreferenceDataset) -> Result<()> {
    let mut text = String::new();
    for pair in &d.records {
        let rec = PrefRecord {
            prompt: d.vocab.render(&pair.prompt)?,
            chosen: d.vocab.render(&pair.chosen)?,
            rejected: d.vocab.render(&pair.rejected)?,
        };
        text.push_str(
            &serde_json::to_string(&rec).map_err(|e| CliError::Data(e.to_string()))?,
        );
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_prefs_jsonl(path: &Path, vocab: &Vocab) -> Result<PreferenceDataset> {
    let mut records = Vec::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let context = |e: String| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1));
        let rec: PrefRecord =
            serde_json::from_str(line).map_err(|e| context(e.to_string()))?;
        let prompt = vocab.encode(&rec.prompt).map_err(|e| context(e.to_string()))?;
        let chosen = vocab.encode(&rec.chosen).map_err(|e| context(e.to_string()))?;
        let rejected = vocab
            .encode(&rec.rejected)
            .map_err(|e| context(e.to_string()))?;
        records.push(
            PreferencePair::new(prompt, chosen, rejected).map_err(|e| context(e.to_string()))?,
        );
    }
    Ok(PreferenceDataset::new(
        records,
        vocab.clone(),
        Provenance {
            source: path.display().to_string(),
            seed: None,
        },
    ))
}

// ---------------------------------------------------------------------------
// Partial-pair JSONL
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub t: usize,
    pub weight: f64,
    pub parent: usize,
}

pub fn save_partial_jsonl(path: &Path, vocab: &Vocab, d: &PartialDataset) -> Result<()> {
    let mut text = String::new();
    for rec in &d.records {
        let row = PartialRecord {
            prompt: vocab.render(&rec.prompt)?,
            chosen: vocab.render(&rec.chosen_prefix)?,
            rejected: vocab.render(&rec.rejected_prefix)?,
            t: rec.t,
            weight: rec.weight,
            parent: rec.parent,
        };
        text.push_str(
            &serde_json::to_string(&row).map_err(|e| CliError::Data(e.to_string()))?,
        );
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_partial_jsonl(
    path: &Path,
    vocab: &Vocab,
    builder: prmlab_core::dataset::Builder,
) -> Result<PartialDataset> {
    let mut records = Vec::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let context = |e: String| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1));
        let row: PartialRecord =
            serde_json::from_str(line).map_err(|e| context(e.to_string()))?;
        if row.t == 0 {
            return Err(context("prefix length t must be >= 1".to_string()));
        }
        if !(row.weight >= 0.0) {
            return Err(context(format!("weight must be non-negative, got {}", row.weight)));
        }
        records.push(PartialPair {
            prompt: vocab.encode(&row.prompt).map_err(|e| context(e.to_string()))?,
            chosen_prefix: vocab.encode(&row.chosen).map_err(|e| context(e.to_string()))?,
            rejected_prefix: vocab
                .encode(&row.rejected)
                .map_err(|e| context(e.to_string()))?,
            t: row.t,
            weight: row.weight,
            parent: row.parent,
        });
    }
    Ok(PartialDataset {
        records,
        builder,
        seed: None,
    })
}

// ---------------------------------------------------------------------------
// N-gram checkpoint
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NGramCheckpoint {
    pub format_version: u32,
    pub order: usize,
    pub alpha: f64,
    pub max_len: usize,
    pub vocab: VocabFile,
    /// Context (space-joined symbols, empty string for order 1) to
    /// token-symbol counts.
    pub counts: BTreeMap<String, BTreeMap<String, u64>>,
}

pub fn save_ngram(path: &Path, lm: &NGramLM) -> Result<()> {
    let vocab = lm.vocab();
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (ctx, tok, n) in lm.counts() {
        let ctx_key = ctx
            .iter()
            .map(|&id| vocab.symbol(id).map(str::to_string))
            .collect::<std::result::Result<Vec<_>, _>>()?
            .join(" ");
        counts
            .entry(ctx_key)
            .or_default()
            .insert(vocab.symbol(tok)?.to_string(), n);
    }
    write_json(
        path,
        &NGramCheckpoint {
            format_version: FORMAT_VERSION,
            order: lm.order(),
            alpha: lm.alpha(),
            max_len: lm.max_len(),
            vocab: VocabFile::from_vocab(vocab)?,
            counts,
        },
    )
}

pub fn load_ngram(path: &Path) -> Result<NGramLM> {
    let ckpt: NGramCheckpoint = read_json(path)?;
    if ckpt.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "unsupported checkpoint format version {}",
            ckpt.format_version
        )));
    }
    let vocab = ckpt.vocab.to_vocab()?;
    let mut entries = Vec::new();
    for (ctx_key, tokens) in &ckpt.counts {
        let ctx: std::result::Result<Vec<TokenId>, _> =
            ctx_key.split_whitespace().map(|s| vocab.id(s)).collect();
        let ctx = ctx?;
        for (tok, &n) in tokens {
            entries.push((ctx.clone(), vocab.id(tok)?, n));
        }
    }
    Ok(NGramLM::from_counts(
        vocab,
        ckpt.order,
        ckpt.alpha,
        ckpt.max_len,
        entries,
    )?)
}

// ---------------------------------------------------------------------------
// Reward checkpoint
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureSpecFile {
    pub vocab: VocabFile,
    pub norm_len: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RewardCheckpoint {
    pub format_version: u32,
    pub arch: String,
    pub d: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none")]
    pub w: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    pub feature_spec: FeatureSpecFile,
}

pub fn save_reward(path: &Path, rm: &FeaturizedReward, vocab: &Vocab) -> Result<()> {
    let d = rm.spec().dim();
    let mut ckpt = RewardCheckpoint {
        format_version: FORMAT_VERSION,
        arch: String::new(),
        d,
        h: None,
        theta: None,
        w: None,
        b: None,
        v: None,
        feature_spec: FeatureSpecFile {
            vocab: VocabFile::from_vocab(vocab)?,
            norm_len: rm.spec().norm_len,
        },
    };
    match rm.arch() {
        RewardArch::Linear => {
            ckpt.arch = "linear".to_string();
            ckpt.theta = Some(rm.params().to_vec());
        }
        RewardArch::Mlp { hidden } => {
            let h = *hidden;
            ckpt.arch = "mlp".to_string();
            ckpt.h = Some(h);
            let params = rm.params();
            ckpt.w = Some((0..h).map(|j| params[j * d..(j + 1) * d].to_vec()).collect());
            ckpt.b = Some(params[h * d..h * d + h].to_vec());
            ckpt.v = Some(params[h * d + h..].to_vec());
        }
    }
    write_json(path, &ckpt)
}

/// Load a trained reward model together with the vocabulary it was fit on.
pub fn load_reward(path: &Path) -> Result<(FeaturizedReward, Vocab)> {
    let ckpt: RewardCheckpoint = read_json(path)?;
    if ckpt.format_version != FORMAT_VERSION {
        return Err(CliError::Data(format!(
            "unsupported checkpoint format version {}",
            ckpt.format_version
        )));
    }
    let vocab = ckpt.feature_spec.vocab.to_vocab()?;
    let spec = FeatureSpec::new(&vocab, ckpt.feature_spec.norm_len)?;
    if spec.dim() != ckpt.d {
        return Err(CliError::Data(format!(
            "feature dimension {} does not match the vocabulary ({} expected)",
            ckpt.d,
            spec.dim()
        )));
    }
    let (arch, params) = match ckpt.arch.as_str() {
        "linear" => {
            let theta = ckpt
                .theta
                .ok_or_else(|| CliError::Data("linear checkpoint missing theta".to_string()))?;
            (RewardArch::Linear, theta)
        }
        "mlp" => {
            let h = ckpt
                .h
                .ok_or_else(|| CliError::Data("mlp checkpoint missing h".to_string()))?;
            let w = ckpt
                .w
                .ok_or_else(|| CliError::Data("mlp checkpoint missing W".to_string()))?;
            let b = ckpt
                .b
                .ok_or_else(|| CliError::Data("mlp checkpoint missing b".to_string()))?;
            let v = ckpt
                .v
                .ok_or_else(|| CliError::Data("mlp checkpoint missing v".to_string()))?;
            if w.len() != h || w.iter().any(|row| row.len() != ckpt.d) {
                return Err(CliError::Data("mlp checkpoint W has wrong shape".to_string()));
            }
            let mut params: Vec<f64> = w.into_iter().flatten().collect();
            params.extend(b);
            params.extend(v);
            (RewardArch::Mlp { hidden: h }, params)
        }
        other => {
            return Err(CliError::Data(format!("unknown reward arch {other:?}")));
        }
    };
    Ok((FeaturizedReward::from_parts(spec, arch, params)?, vocab))
}

// ---------------------------------------------------------------------------
// Agreement-rate reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ARReportFile {
    pub t_grid: Vec<usize>,
    pub ar_rm_sc: Vec<f64>,
    pub ar_sc_hp: Vec<f64>,
    pub ar_rm_hp: Vec<f64>,
    pub mean_reward_gap: Vec<f64>,
    pub n: Vec<usize>,
}

impl From<&ARReport> for ARReportFile {
    fn from(r: &ARReport) -> Self {
        ARReportFile {
            t_grid: r.t_grid.clone(),
            ar_rm_sc: r.ar_rm_sc.clone(),
            ar_sc_hp: r.ar_sc_hp.clone(),
            ar_rm_hp: r.ar_rm_hp.clone(),
            mean_reward_gap: r.mean_reward_gap.clone(),
            n: r.n.clone(),
        }
    }
}

/// Write `<stem>.json`, `<stem>.csv` (wide), and `<stem>_long.csv`
/// (plot-ready t,metric,value rows).
pub fn save_ar_report(dir: &Path, stem: &str, report: &ARReport) -> Result<Vec<String>> {
    let json_name = format!("{stem}.json");
    write_json(&dir.join(&json_name), &ARReportFile::from(report))?;

    let csv_name = format!("{stem}.csv");
    let mut wide = String::from("t,ar_rm_sc,ar_sc_hp,ar_rm_hp,mean_reward_gap,n\n");
    for (i, &t) in report.t_grid.iter().enumerate() {
        wide.push_str(&format!(
            "{t},{},{},{},{},{}\n",
            report.ar_rm_sc[i],
            report.ar_sc_hp[i],
            report.ar_rm_hp[i],
            report.mean_reward_gap[i],
            report.n[i]
        ));
    }
    fs::write(dir.join(&csv_name), wide)?;

    let long_name = format!("{stem}_long.csv");
    let mut long = String::from("t,metric,value\n");
    for (i, &t) in report.t_grid.iter().enumerate() {
        for (metric, series) in [
            ("ar_rm_sc", &report.ar_rm_sc),
            ("ar_sc_hp", &report.ar_sc_hp),
            ("ar_rm_hp", &report.ar_rm_hp),
            ("mean_reward_gap", &report.mean_reward_gap),
        ] {
            long.push_str(&format!("{t},{metric},{}\n", series[i]));
        }
    }
    fs::write(dir.join(&long_name), long)?;
    Ok(vec![json_name, csv_name, long_name])
}

// ---------------------------------------------------------------------------
// Loss curve
// ---------------------------------------------------------------------------

pub fn save_loss_curve(path: &Path, curve: &[EpochStat]) -> Result<()> {
    let mut text = String::from("epoch,loss,weight_mass\n");
    for stat in curve {
        text.push_str(&format!("{},{},{}\n", stat.epoch, stat.loss, stat.weight_mass));
    }
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Decode outputs
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prompt: Vec<String>,
    pub output: Vec<String>,
    pub reward: f64,
    pub diversity: f64,
    pub tokens: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceCandidateFile {
    pub tokens: Vec<String>,
    pub score: f64,
    pub selected: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceStepFile {
    pub index: usize,
    pub candidates: Vec<TraceCandidateFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceFile {
    pub prompt: Vec<String>,
    pub method: String,
    pub notes: Vec<String>,
    pub steps: Vec<TraceStepFile>,
    pub outputs: Vec<TraceOutputFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceOutputFile {
    pub tokens: Vec<String>,
    pub reward: f64,
}

fn symbols(vocab: &Vocab, ids: &[TokenId]) -> Result<Vec<String>> {
    ids.iter()
        .map(|&id| Ok(vocab.symbol(id)?.to_string()))
        .collect()
}

impl TraceFile {
    pub fn build(vocab: &Vocab, prompt: &TokenSeq, trace: &SearchTrace) -> Result<Self> {
        Ok(TraceFile {
            prompt: symbols(vocab, prompt.ids())?,
            method: trace.method.clone(),
            notes: trace.notes.clone(),
            steps: trace
                .steps
                .iter()
                .map(|s| {
                    Ok(TraceStepFile {
                        index: s.index,
                        candidates: s
                            .candidates
                            .iter()
                            .map(|c| {
                                Ok(TraceCandidateFile {
                                    tokens: symbols(vocab, &c.ids)?,
                                    score: c.score,
                                    selected: c.selected,
                                    note: c.note.clone(),
                                })
                            })
                            .collect::<Result<_>>()?,
                    })
                })
                .collect::<Result<_>>()?,
            outputs: trace
                .outputs
                .iter()
                .map(|o| {
                    Ok(TraceOutputFile {
                        tokens: symbols(vocab, &o.ids)?,
                        reward: o.reward,
                    })
                })
                .collect::<Result<_>>()?,
        })
    }
}

/// Append-style JSONL writer (whole file at once for determinism).
pub fn save_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).map_err(|e| CliError::Data(e.to_string()))?);
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rows = Vec::new();
    for (i, line) in read_to_string(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        rows.push(
            serde_json::from_str(line)
                .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodeSummary {
    pub method: String,
    pub n_prompts: usize,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_diversity: f64,
    pub mean_tokens: f64,
}

// ---------------------------------------------------------------------------
// Comparison report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompareRow {
    pub run_dir: String,
    pub method: String,
    pub seed: Option<u64>,
    pub mean_reward: f64,
    pub std_reward: f64,
    pub mean_diversity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ar_rm_sc_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub format_version: u32,
    pub version: String,
    pub rows: Vec<CompareRow>,
}

pub fn save_comparison(dir: &Path, report: &ComparisonReport) -> Result<()> {
    write_json(&dir.join("report.json"), report)?;
    let mut csv = String::from(
        "run_dir,method,seed,mean_reward,std_reward,mean_diversity,ar_rm_sc_mean,runtime_ms\n",
    );
    for row in &report.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            row.run_dir,
            row.method,
            row.seed.map_or(String::new(), |s| s.to_string()),
            row.mean_reward,
            row.std_reward,
            row.mean_diversity,
            row.ar_rm_sc_mean.map_or(String::new(), |x| x.to_string()),
            row.runtime_ms.map_or(String::new(), |x| x.to_string()),
        ));
    }
    fs::write(dir.join("report.csv"), csv)?;
    Ok(())
}
