//! Preference datasets and partial-sequence builders.
//!
//! Two truncation strategies turn a preference dataset into partial-pair
//! training data:
//!
//! - **token-level** ([`build_tlt`]): one partial pair at every prefix
//!   length `1..=max(|chosen|, |rejected|)` — exhaustive, output size is
//!   exactly the sum of those horizons;
//! - **stochastic** ([`build_sst`]): per pair, draw `k ~ U{0..2K}` once and
//!   then `k` truncation points `t_i ~ U{1..T}`, deduplicated — output size
//!   depends only on `K`.
//!
//! Builders keep every generated record (including ones whose prefixes
//! coincide); the training stage drops vacuous and zero-weight records.
//!
//! [`synth_corpus`] manufactures oracle-labeled preference data for
//! desk-scale experiments, with optional label noise.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::reward::RewardModel;
use crate::seq::{PartialPair, PreferencePair, TokenId, TokenSeq, Vocab};

/// A labeled preference dataset over one vocabulary.
#[derive(Clone, Debug)]
pub struct PreferenceDataset {
    pub records: Vec<PreferencePair>,
    pub vocab: Vocab,
    pub provenance: Provenance,
}

/// Where a dataset came from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
}

impl PreferenceDataset {
    pub fn new(records: Vec<PreferencePair>, vocab: Vocab, provenance: Provenance) -> Self {
        PreferenceDataset {
            records,
            vocab,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Which truncation strategy produced a partial dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Builder {
    TokenLevel,
    Stochastic { k_max_half: u32 },
}

impl Builder {
    pub fn name(&self) -> &'static str {
        match self {
            Builder::TokenLevel => "TLT",
            Builder::Stochastic { .. } => "SST",
        }
    }
}

/// Truncated preference pairs plus builder metadata.
#[derive(Clone, Debug)]
pub struct PartialDataset {
    pub records: Vec<PartialPair>,
    pub builder: Builder,
    pub seed: Option<u64>,
}

impl PartialDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Append the full-horizon pair of every source record that does not
    /// already have one, so complete sequences take part in training.
    pub fn with_complete_pairs(mut self, source: &PreferenceDataset) -> Result<Self> {
        let mut have: BTreeSet<(usize, usize)> = BTreeSet::new();
        for rec in &self.records {
            have.insert((rec.parent, rec.t));
        }
        for (parent, pair) in source.records.iter().enumerate() {
            let horizon = pair.horizon();
            if !have.contains(&(parent, horizon)) {
                self.records
                    .push(PartialPair::from_pair(pair, parent, horizon)?);
            }
        }
        Ok(self)
    }
}

/// Token-level truncation: every prefix length of every pair.
pub fn build_tlt(d: &PreferenceDataset) -> Result<PartialDataset> {
    if d.is_empty() {
        return Err(Error::Data("cannot truncate an empty dataset".to_string()));
    }
    let mut records = Vec::new();
    for (parent, pair) in d.records.iter().enumerate() {
        for t in 1..=pair.horizon() {
            records.push(PartialPair::from_pair(pair, parent, t)?);
        }
    }
    Ok(PartialDataset {
        records,
        builder: Builder::TokenLevel,
        seed: None,
    })
}

/// One stochastic truncation draw: the raw `k` and the deduplicated,
/// ascending truncation points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SstDraw {
    pub raw_k: u32,
    pub ts: Vec<usize>,
}

/// Draw truncation points for one pair: `k ~ U{0..2K}` once, then `k`
/// values `t_i ~ U{1..horizon}`, deduplicated.
pub fn sst_draw<R: Rng>(horizon: usize, k: u32, rng: &mut R) -> SstDraw {
    let raw_k = rng.gen_range(0..=2 * k);
    let mut ts = BTreeSet::new();
    for _ in 0..raw_k {
        ts.insert(rng.gen_range(1..=horizon));
    }
    SstDraw {
        raw_k,
        ts: ts.into_iter().collect(),
    }
}

/// Stochastic sampling truncation with budget hyperparameter `k >= 1`.
///
/// Records appear in source order; within a pair, truncation points ascend.
/// The generator is consumed in a fixed order (one `k` draw, then `k`
/// point draws per record), so a clone of the rng replays the build.
pub fn build_sst<R: Rng>(
    d: &PreferenceDataset,
    k: u32,
    seed: Option<u64>,
    rng: &mut R,
) -> Result<PartialDataset> {
    if d.is_empty() {
        return Err(Error::Data("cannot truncate an empty dataset".to_string()));
    }
    if k == 0 {
        return Err(Error::Config("SST budget K must be >= 1".to_string()));
    }
    let mut records = Vec::new();
    for (parent, pair) in d.records.iter().enumerate() {
        let draw = sst_draw(pair.horizon(), k, rng);
        for t in draw.ts {
            records.push(PartialPair::from_pair(pair, parent, t)?);
        }
    }
    Ok(PartialDataset {
        records,
        builder: Builder::Stochastic { k_max_half: k },
        seed,
    })
}

/// Length bounds for synthetic prompts and responses (inclusive).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthParams {
    pub prompt_len: (usize, usize),
    pub response_len: (usize, usize),
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            prompt_len: (2, 6),
            response_len: (24, 56),
        }
    }
}

impl SynthParams {
    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (usize, usize)| lo >= 1 && lo <= hi;
        if !ok(self.prompt_len) || !ok(self.response_len) {
            return Err(Error::Config(
                "length bounds must satisfy 1 <= lo <= hi".to_string(),
            ));
        }
        Ok(())
    }
}

fn random_body<R: Rng>(vocab: &Vocab, len: usize, rng: &mut R) -> Vec<TokenId> {
    let non_eos: Vec<TokenId> = vocab.non_eos_ids().collect();
    (0..len)
        .map(|_| non_eos[rng.gen_range(0..non_eos.len())])
        .collect()
}

/// Sample `n` eos-free prompts with lengths drawn from the inclusive range.
pub fn synth_prompts<R: Rng>(
    vocab: &Vocab,
    n: usize,
    len_range: (usize, usize),
    rng: &mut R,
) -> Result<Vec<TokenSeq>> {
    if len_range.0 < 1 || len_range.0 > len_range.1 {
        return Err(Error::Config(
            "length bounds must satisfy 1 <= lo <= hi".to_string(),
        ));
    }
    (0..n)
        .map(|_| {
            let len = rng.gen_range(len_range.0..=len_range.1);
            TokenSeq::from_ids(random_body(vocab, len, rng), vocab)
        })
        .collect()
}

/// Generate `n_pairs` oracle-labeled preference records.
///
/// Prompts are eos-free; responses are eos-terminated. The response with
/// the higher oracle score becomes `chosen` (ties keep the first sample),
/// then the label flips with probability `noise`. Draw order per record is
/// fixed (prompt length, prompt tokens, two response lengths and bodies,
/// flip), so a fixed seed reproduces the dataset bit for bit.
pub fn synth_corpus<R: Rng>(
    vocab: &Vocab,
    n_pairs: usize,
    oracle: &dyn RewardModel,
    noise: f64,
    params: SynthParams,
    rng: &mut R,
) -> Result<PreferenceDataset> {
    if !(0.0..0.5).contains(&noise) {
        return Err(Error::Config(format!(
            "label-flip probability must be in [0, 0.5), got {noise}"
        )));
    }
    params.validate()?;
    let mut records = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let plen = rng.gen_range(params.prompt_len.0..=params.prompt_len.1);
        let prompt = TokenSeq::from_ids(random_body(vocab, plen, rng), vocab)?;

        let response = |rng: &mut R| -> Result<TokenSeq> {
            let len = rng.gen_range(params.response_len.0..=params.response_len.1);
            let mut ids = random_body(vocab, len, rng);
            ids.push(vocab.eos());
            TokenSeq::from_ids(ids, vocab)
        };
        let first = response(rng)?;
        let mut second = response(rng)?;
        let mut tries = 0;
        while second == first {
            second = response(rng)?;
            tries += 1;
            if tries > 100 {
                return Err(Error::Data(
                    "could not draw two distinct responses".to_string(),
                ));
            }
        }

        let s_first = oracle.score(&prompt, &first)?;
        let s_second = oracle.score(&prompt, &second)?;
        let (mut chosen, mut rejected) = if s_second > s_first {
            (second, first)
        } else {
            (first, second)
        };
        if noise > 0.0 && rng.gen::<f64>() < noise {
            core::mem::swap(&mut chosen, &mut rejected);
        }
        records.push(PreferencePair::new(prompt, chosen, rejected)?);
    }
    Ok(PreferenceDataset::new(
        records,
        vocab.clone(),
        Provenance {
            source: "synthetic".to_string(),
            seed: None,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::LexOracleReward;
    use crate::rng;

    fn vocab() -> Vocab {
        Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap()
    }

    fn tiny_dataset() -> PreferenceDataset {
        let v = vocab();
        let pair = |c: &str, r: &str| {
            PreferencePair::new(
                v.encode("a").unwrap(),
                v.encode(c).unwrap(),
                v.encode(r).unwrap(),
            )
            .unwrap()
        };
        PreferenceDataset::new(
            vec![pair("b c a", "c b"), pair("b", "c")],
            v,
            Provenance::default(),
        )
    }

    #[test]
    fn tlt_sizes_and_clamping() {
        let d = tiny_dataset();
        let partial = build_tlt(&d).unwrap();
        // Horizons 3 and 1.
        assert_eq!(partial.len(), 4);
        assert_eq!(partial.builder.name(), "TLT");
        // Third record of the first pair clamps the shorter response.
        let rec = &partial.records[2];
        assert_eq!(rec.t, 3);
        assert_eq!(rec.chosen_prefix.len(), 3);
        assert_eq!(rec.rejected_prefix.len(), 2);
        // Degenerate-length pair reproduces the originals.
        let rec = &partial.records[3];
        assert_eq!(rec.chosen_prefix, d.records[1].chosen);
        assert_eq!(rec.rejected_prefix, d.records[1].rejected);
    }

    #[test]
    fn tlt_partial_pairs_roundtrip_via_prefix() {
        let d = tiny_dataset();
        for rec in &build_tlt(&d).unwrap().records {
            let parent = &d.records[rec.parent];
            assert_eq!(rec.chosen_prefix, parent.chosen.prefix(rec.t));
            assert_eq!(rec.rejected_prefix, parent.rejected.prefix(rec.t));
        }
    }

    #[test]
    fn tlt_scales_linearly() {
        let v = vocab();
        let long = |sym: &str| {
            let mut text = String::new();
            for _ in 0..100 {
                text.push_str(sym);
                text.push(' ');
            }
            v.encode(&text).unwrap()
        };
        let records: Vec<PreferencePair> = (0..10)
            .map(|_| PreferencePair::new(v.encode("a").unwrap(), long("b"), long("c")).unwrap())
            .collect();
        let d = PreferenceDataset::new(records, v, Provenance::default());
        assert_eq!(build_tlt(&d).unwrap().len(), 1000);
    }

    #[test]
    fn sst_respects_budget_and_support() {
        let d = tiny_dataset();
        let mut r = rng::stream(5, "sst");
        let partial = build_sst(&d, 5, Some(5), &mut r).unwrap();
        for rec in &partial.records {
            let horizon = d.records[rec.parent].horizon();
            assert!(rec.t >= 1 && rec.t <= horizon);
        }
        // Per-record output never exceeds min(2K, T).
        for (parent, pair) in d.records.iter().enumerate() {
            let count = partial.records.iter().filter(|r| r.parent == parent).count();
            assert!(count <= (2 * 5).min(pair.horizon()));
        }
    }

    #[test]
    fn sst_draw_statistics() {
        let mut r = rng::stream(99, "sst");
        let mut total_k = 0u64;
        let n = 20_000;
        for _ in 0..n {
            let draw = sst_draw(30, 5, &mut r);
            assert!(draw.ts.len() <= draw.raw_k as usize);
            total_k += u64::from(draw.raw_k);
        }
        let mean = total_k as f64 / n as f64;
        assert!((mean - 5.0).abs() < 0.25, "mean raw k = {mean}");
    }

    #[test]
    fn sst_single_point_support() {
        let v = vocab();
        let d = PreferenceDataset::new(
            vec![PreferencePair::new(
                v.encode("a").unwrap(),
                v.encode("b").unwrap(),
                v.encode("c").unwrap(),
            )
            .unwrap()],
            v,
            Provenance::default(),
        );
        let mut r = rng::stream(8, "sst");
        let partial = build_sst(&d, 5, None, &mut r).unwrap();
        assert!(partial.len() <= 1);
        for rec in &partial.records {
            assert_eq!(rec.t, 1);
        }
    }

    #[test]
    fn builders_reject_empty_input() {
        let d = PreferenceDataset::new(Vec::new(), vocab(), Provenance::default());
        assert!(matches!(build_tlt(&d), Err(Error::Data(_))));
        let mut r = rng::stream(0, "sst");
        assert!(matches!(build_sst(&d, 5, None, &mut r), Err(Error::Data(_))));
        let d2 = tiny_dataset();
        assert!(build_sst(&d2, 0, None, &mut r).is_err());
    }

    #[test]
    fn with_complete_pairs_fills_missing_horizons() {
        let d = tiny_dataset();
        let mut r = rng::stream(3, "sst");
        let partial = build_sst(&d, 1, None, &mut r).unwrap();
        let completed = partial.with_complete_pairs(&d).unwrap();
        for (parent, pair) in d.records.iter().enumerate() {
            assert_eq!(
                completed
                    .records
                    .iter()
                    .filter(|rec| rec.parent == parent && rec.t == pair.horizon())
                    .count(),
                1
            );
        }
    }

    #[test]
    fn synth_noiseless_agrees_with_oracle() {
        let v = vocab();
        let oracle = LexOracleReward::random(&v, 8, &mut rng::stream(1, "o")).unwrap();
        let mut r = rng::stream(2, "synth");
        let d = synth_corpus(&v, 200, &oracle, 0.0, SynthParams::default(), &mut r).unwrap();
        assert_eq!(d.len(), 200);
        for pair in &d.records {
            let sc = oracle.score(&pair.prompt, &pair.chosen).unwrap();
            let sr = oracle.score(&pair.prompt, &pair.rejected).unwrap();
            assert!(sc >= sr);
            assert!(pair.chosen.is_complete() && pair.rejected.is_complete());
        }
    }

    #[test]
    fn synth_noise_rate_is_binomial() {
        let v = vocab();
        let oracle = LexOracleReward::random(&v, 8, &mut rng::stream(1, "o")).unwrap();
        let mut r = rng::stream(3, "synth");
        let d = synth_corpus(&v, 10_000, &oracle, 0.1, SynthParams::default(), &mut r).unwrap();
        let agree = d
            .records
            .iter()
            .filter(|p| {
                oracle.score(&p.prompt, &p.chosen).unwrap()
                    >= oracle.score(&p.prompt, &p.rejected).unwrap()
            })
            .count();
        let rate = agree as f64 / d.len() as f64;
        assert!((rate - 0.9).abs() < 0.01, "agreement {rate}");
    }

    #[test]
    fn synth_is_reproducible_and_validates() {
        let v = vocab();
        let oracle = LexOracleReward::random(&v, 4, &mut rng::stream(7, "o")).unwrap();
        let run = |seed| {
            let mut r = rng::stream(seed, "synth");
            synth_corpus(&v, 50, &oracle, 0.2, SynthParams::default(), &mut r).unwrap()
        };
        let a = run(9);
        let b = run(9);
        assert_eq!(a.records, b.records);
        let mut r = rng::stream(9, "synth");
        assert!(matches!(
            synth_corpus(&v, 1, &oracle, 0.5, SynthParams::default(), &mut r),
            Err(Error::Config(_))
        ));
        let empty = synth_corpus(&v, 0, &oracle, 0.0, SynthParams::default(), &mut r).unwrap();
        assert!(empty.is_empty());
    }
}
