//! Agreement-rate diagnostics, reward-gap curves, and lexical diversity.
//!
//! All metrics sweep a grid of prefix lengths over a preference dataset;
//! prefixes clamp at each response's length so one grid covers
//! variable-length data. Scorers are compared through strict orderings —
//! a tie in either scorer counts as "no strict preference", and the
//! two-scorer agreement counts a pair only when both scorers produce the
//! same outcome (including both tying).

use alloc::string::ToString;
use alloc::vec::Vec;

use crate::dataset::PreferenceDataset;
use crate::error::{Error, Result};
use crate::reward::{Preference, RewardModel};
use crate::seq::{TokenId, TokenSeq};

/// Per-prefix-length agreement rates and reward gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct ARReport {
    pub t_grid: Vec<usize>,
    /// Fraction of pairs where the model strictly prefers the chosen prefix.
    pub ar_rm_sc: Vec<f64>,
    /// Same rate for the judge (human-preference proxy).
    pub ar_sc_hp: Vec<f64>,
    /// Fraction of pairs where model and judge order prefixes identically.
    pub ar_rm_hp: Vec<f64>,
    /// Mean absolute score gap between the two prefixes.
    pub mean_reward_gap: Vec<f64>,
    /// Pairs contributing at each grid point.
    pub n: Vec<usize>,
}

impl ARReport {
    /// Run every metric of the report in one pass.
    pub fn compute(
        rm: &dyn RewardModel,
        judge: &dyn RewardModel,
        d: &PreferenceDataset,
        t_grid: &[usize],
    ) -> Result<ARReport> {
        validate(d, t_grid)?;
        Ok(ARReport {
            t_grid: t_grid.to_vec(),
            ar_rm_sc: ar_rm_sc(rm, d, t_grid)?,
            ar_sc_hp: ar_sc_hp(judge, d, t_grid)?,
            ar_rm_hp: ar_rm_hp(rm, judge, d, t_grid)?,
            mean_reward_gap: reward_gap(rm, d, t_grid)?,
            n: t_grid.iter().map(|_| d.len()).collect(),
        })
    }
}

fn validate(d: &PreferenceDataset, t_grid: &[usize]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Data("metrics need a non-empty dataset".to_string()));
    }
    if t_grid.is_empty() {
        return Err(Error::Config("t_grid must be non-empty".to_string()));
    }
    if t_grid.contains(&0) {
        return Err(Error::Config("prefix lengths must be >= 1".to_string()));
    }
    Ok(())
}

fn prefix_preference(
    model: &dyn RewardModel,
    prompt: &TokenSeq,
    chosen: &TokenSeq,
    rejected: &TokenSeq,
    t: usize,
) -> Result<Preference> {
    let sc = model.score(prompt, &chosen.prefix(t))?;
    let sr = model.score(prompt, &rejected.prefix(t))?;
    Ok(Preference::from_scores(sc, sr))
}

/// Fraction of pairs, per prefix length, where the model strictly prefers
/// the labeled-chosen prefix.
pub fn ar_rm_sc(
    rm: &dyn RewardModel,
    d: &PreferenceDataset,
    t_grid: &[usize],
) -> Result<Vec<f64>> {
    validate(d, t_grid)?;
    let mut rates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut hits = 0usize;
        for pair in &d.records {
            if prefix_preference(rm, &pair.prompt, &pair.chosen, &pair.rejected, t)?
                == Preference::Chosen
            {
                hits += 1;
            }
        }
        rates.push(hits as f64 / d.len() as f64);
    }
    Ok(rates)
}

/// [`ar_rm_sc`] with the judge in the scoring slot: how often the labeled
/// ordering agrees with the human-preference proxy on prefixes.
pub fn ar_sc_hp(
    judge: &dyn RewardModel,
    d: &PreferenceDataset,
    t_grid: &[usize],
) -> Result<Vec<f64>> {
    ar_rm_sc(judge, d, t_grid)
}

/// Fraction of pairs, per prefix length, where model and judge produce the
/// same strict ordering (or both tie).
pub fn ar_rm_hp(
    rm: &dyn RewardModel,
    judge: &dyn RewardModel,
    d: &PreferenceDataset,
    t_grid: &[usize],
) -> Result<Vec<f64>> {
    validate(d, t_grid)?;
    let mut rates = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut hits = 0usize;
        for pair in &d.records {
            let by_rm = prefix_preference(rm, &pair.prompt, &pair.chosen, &pair.rejected, t)?;
            let by_judge =
                prefix_preference(judge, &pair.prompt, &pair.chosen, &pair.rejected, t)?;
            if by_rm == by_judge {
                hits += 1;
            }
        }
        rates.push(hits as f64 / d.len() as f64);
    }
    Ok(rates)
}

/// Mean absolute score gap `|r(chosen prefix) - r(rejected prefix)|` per
/// prefix length.
pub fn reward_gap(
    rm: &dyn RewardModel,
    d: &PreferenceDataset,
    t_grid: &[usize],
) -> Result<Vec<f64>> {
    validate(d, t_grid)?;
    let mut gaps = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let mut total = 0.0;
        for pair in &d.records {
            let sc = rm.score(&pair.prompt, &pair.chosen.prefix(t))?;
            let sr = rm.score(&pair.prompt, &pair.rejected.prefix(t))?;
            total += libm::fabs(sc - sr);
        }
        gaps.push(total / d.len() as f64);
    }
    Ok(gaps)
}

/// Lexical diversity: the product over n = 2..=4 of distinct/total n-gram
/// ratios, computed on the eos-stripped body.
///
/// Sequences shorter than 5 tokens return 1.0 by convention (no 4-gram
/// statistics exist).
pub fn diversity(seq: &TokenSeq, eos: TokenId) -> f64 {
    let body = seq.body(eos);
    if body.len() < 5 {
        return 1.0;
    }
    let mut product = 1.0;
    for n in 2..=4 {
        let total = body.len() + 1 - n;
        let distinct = {
            let mut seen: alloc::collections::BTreeSet<&[TokenId]> =
                alloc::collections::BTreeSet::new();
            for window in body.windows(n) {
                seen.insert(window);
            }
            seen.len()
        };
        product *= distinct as f64 / total as f64;
    }
    product
}
