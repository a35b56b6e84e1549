//! Reward models: the scoring interface, a provably score-consistent
//! lexicographic oracle, a trainable featurized scorer, and brute-force
//! search oracles.
//!
//! Score consistency is the property that whenever a complete sequence
//! outscores another, every pair of equal-length prefixes preserves that
//! ordering (ties allowed). [`LexOracleReward`] satisfies it exactly:
//! with per-position token ranks in `0..|V|` and base `c = |V| + 1`, the
//! score `sum c^-i * rank_i(y_i)` is dominated by the first position where
//! two sequences differ, because `c^-j` strictly exceeds the largest
//! possible tail `sum_{i>j} c^-i * (|V| - 1)`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::seq::{PreferencePair, TokenId, TokenSeq, Vocab};

/// A frozen scorer for `(prompt, sequence)`.
///
/// Implementations must be deterministic, finite on valid inputs, and
/// padding-neutral: eos-padding a complete sequence must not change its
/// score. Frozen models are read-only; concurrent scoring is safe.
pub trait RewardModel: Sync {
    fn score(&self, prompt: &TokenSeq, seq: &TokenSeq) -> Result<f64>;
}

/// Which side of a pair a scorer prefers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preference {
    Chosen,
    Rejected,
    Tie,
}

impl Preference {
    /// Strict comparison of two scores; equality is a tie.
    pub fn from_scores(chosen: f64, rejected: f64) -> Preference {
        if chosen > rejected {
            Preference::Chosen
        } else if rejected > chosen {
            Preference::Rejected
        } else {
            Preference::Tie
        }
    }
}

/// Score-consistent oracle: positionally ranked tokens with geometrically
/// decaying weight.
///
/// `score(x, y) = sum_{i=1..|y|} c^-i * rank_i(y_i)` where each `rank_i` is
/// a permutation of `0..|V|` that pins the eos token to rank 0 (which makes
/// eos-padding score-neutral). Rank tables cycle when a sequence is longer
/// than the table. The prompt does not affect the score.
#[derive(Clone, Debug)]
pub struct LexOracleReward {
    vocab_size: usize,
    ranks: Vec<Vec<u32>>,
    base: f64,
}

impl LexOracleReward {
    /// Build from explicit per-position rank tables.
    ///
    /// Every table must be a permutation of `0..|V|` with `rank(eos) = 0`.
    pub fn new(vocab: &Vocab, ranks: Vec<Vec<u32>>) -> Result<Self> {
        if ranks.is_empty() {
            return Err(Error::Config("need at least one rank table".to_string()));
        }
        let size = vocab.size();
        for (pos, table) in ranks.iter().enumerate() {
            if table.len() != size {
                return Err(Error::Config(format!(
                    "rank table {pos} has {} entries for a {size}-token vocabulary",
                    table.len()
                )));
            }
            let mut seen = alloc::vec![false; size];
            for &r in table {
                if r as usize >= size || seen[r as usize] {
                    return Err(Error::Config(format!(
                        "rank table {pos} is not a permutation of 0..{size}"
                    )));
                }
                seen[r as usize] = true;
            }
            if table[vocab.eos() as usize] != 0 {
                return Err(Error::Config(format!(
                    "rank table {pos} must pin eos to rank 0"
                )));
            }
        }
        Ok(LexOracleReward {
            vocab_size: size,
            ranks,
            base: (size + 1) as f64,
        })
    }

    /// Identity ranks (`rank(token) = token id`) at every position.
    ///
    /// Requires the eos token to have id 0 so its rank is 0.
    pub fn identity(vocab: &Vocab) -> Result<Self> {
        if vocab.eos() != 0 {
            return Err(Error::Config(
                "identity ranks need the eos token at id 0".to_string(),
            ));
        }
        let table: Vec<u32> = (0..vocab.size() as u32).collect();
        LexOracleReward::new(vocab, alloc::vec![table])
    }

    /// Random rank permutations for `positions` positions (cycled beyond).
    pub fn random<R: Rng>(vocab: &Vocab, positions: usize, rng: &mut R) -> Result<Self> {
        if positions == 0 {
            return Err(Error::Config("need at least one rank position".to_string()));
        }
        let size = vocab.size();
        let mut ranks = Vec::with_capacity(positions);
        for _ in 0..positions {
            let mut values: Vec<u32> = (1..size as u32).collect();
            values.shuffle(rng);
            let mut table = alloc::vec![0u32; size];
            let mut next = values.into_iter();
            for id in 0..size as TokenId {
                if id != vocab.eos() {
                    table[id as usize] = next.next().expect("one rank value per non-eos token");
                }
            }
            ranks.push(table);
        }
        LexOracleReward::new(vocab, ranks)
    }

    /// The rank of `token` at 0-based position `pos`.
    pub fn rank_at(&self, pos: usize, token: TokenId) -> u32 {
        self.ranks[pos % self.ranks.len()][token as usize]
    }

    /// Number of distinct rank positions before the tables cycle.
    pub fn positions(&self) -> usize {
        self.ranks.len()
    }
}

impl RewardModel for LexOracleReward {
    fn score(&self, _prompt: &TokenSeq, seq: &TokenSeq) -> Result<f64> {
        let mut factor = 1.0;
        let mut total = 0.0;
        for (pos, &id) in seq.ids().iter().enumerate() {
            if id as usize >= self.vocab_size {
                return Err(Error::Vocab(format!("token id {id} out of range")));
            }
            factor /= self.base;
            total += factor * f64::from(self.rank_at(pos, id));
        }
        Ok(total)
    }
}

/// One observed breach of score consistency: the complete sequences order
/// one way, the length-`t` prefixes the other.
#[derive(Clone, Debug)]
pub struct ScoreConsistencyViolation {
    pub pair_index: usize,
    pub pair: PreferencePair,
    pub t: usize,
    pub full_order: Preference,
    pub prefix_order: Preference,
}

/// Find every `(pair, t)` in the grid where a reward model's prefix
/// ordering contradicts its complete-sequence ordering.
///
/// Responses are eos-padded to a common length before comparison. Ties on
/// prefixes are consistent with a strict complete-sequence order; a tie on
/// the complete sequences requires prefixes to tie as well.
pub fn check_score_consistency(
    rm: &dyn RewardModel,
    vocab: &Vocab,
    pairs: &[PreferencePair],
    t_grid: &[usize],
) -> Result<Vec<ScoreConsistencyViolation>> {
    if t_grid.is_empty() {
        return Err(Error::Config("t_grid must be non-empty".to_string()));
    }
    let eos = vocab.eos();
    let mut violations = Vec::new();
    for (pair_index, pair) in pairs.iter().enumerate() {
        let horizon = pair.horizon();
        let chosen = pair.chosen.pad_to(horizon, eos, vocab)?;
        let rejected = pair.rejected.pad_to(horizon, eos, vocab)?;
        let full_order = Preference::from_scores(
            rm.score(&pair.prompt, &chosen)?,
            rm.score(&pair.prompt, &rejected)?,
        );
        for &t in t_grid {
            let prefix_order = Preference::from_scores(
                rm.score(&pair.prompt, &chosen.prefix(t))?,
                rm.score(&pair.prompt, &rejected.prefix(t))?,
            );
            let violated = match full_order {
                Preference::Chosen => prefix_order == Preference::Rejected,
                Preference::Rejected => prefix_order == Preference::Chosen,
                Preference::Tie => prefix_order != Preference::Tie,
            };
            if violated {
                violations.push(ScoreConsistencyViolation {
                    pair_index,
                    pair: pair.clone(),
                    t,
                    full_order,
                    prefix_order,
                });
            }
        }
    }
    Ok(violations)
}

/// Exhaustive-enumeration budget for brute-force search.
pub const BRUTE_FORCE_GUARD: u128 = 10_000_000;

/// Enumerate every valid sequence of exactly `len` tokens and return the
/// highest-scoring one; ties go to the lexicographically smallest token-id
/// sequence.
///
/// Sequences where eos is followed by a non-eos token are skipped (they are
/// not valid [`TokenSeq`] values). Fails when `|V|^len` exceeds
/// [`BRUTE_FORCE_GUARD`].
pub fn brute_force_argmax(
    rm: &dyn RewardModel,
    prompt: &TokenSeq,
    vocab: &Vocab,
    len: usize,
) -> Result<TokenSeq> {
    if len == 0 {
        return Err(Error::Config("search length must be >= 1".to_string()));
    }
    let size = vocab.size() as u128;
    let mut space: u128 = 1;
    for _ in 0..len {
        space = space.saturating_mul(size);
        if space > BRUTE_FORCE_GUARD {
            return Err(Error::Size(format!(
                "search space {}^{len} exceeds the {BRUTE_FORCE_GUARD} guard",
                vocab.size()
            )));
        }
    }

    let eos = vocab.eos();
    let max_id = vocab.size() as TokenId - 1;
    let mut ids = alloc::vec![0 as TokenId; len];
    let mut best: Option<(f64, TokenSeq)> = None;
    loop {
        let valid = {
            let mut seen_eos = false;
            let mut ok = true;
            for &id in &ids {
                if seen_eos && id != eos {
                    ok = false;
                    break;
                }
                if id == eos {
                    seen_eos = true;
                }
            }
            ok
        };
        if valid {
            let mut seq = TokenSeq::from_ids(ids.clone(), vocab)?;
            if !seq.is_complete() {
                seq.mark_complete();
            }
            let score = rm.score(prompt, &seq)?;
            // Strict improvement keeps the first (lexicographically
            // smallest) sequence on ties.
            if best.as_ref().map_or(true, |(b, _)| score > *b) {
                best = Some((score, seq));
            }
        }
        // Odometer increment in lexicographic order.
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(best.expect("non-empty enumeration").1);
            }
            pos -= 1;
            if ids[pos] < max_id {
                ids[pos] += 1;
                for slot in ids.iter_mut().skip(pos + 1) {
                    *slot = 0;
                }
                break;
            }
        }
    }
}

/// Shape of the trainable scorer's input representation.
///
/// Features are computed on the response only (the prompt slot is kept in
/// the interface for scorers that need it): token unigram counts, adjacent
/// bigram counts, length normalized by `norm_len`, and a completion flag.
/// Counts are taken on the eos-stripped body, so eos-padding never moves a
/// score.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub vocab_size: usize,
    pub eos: TokenId,
    pub norm_len: usize,
}

impl FeatureSpec {
    pub fn new(vocab: &Vocab, norm_len: usize) -> Result<Self> {
        if norm_len == 0 {
            return Err(Error::Config("norm_len must be >= 1".to_string()));
        }
        Ok(FeatureSpec {
            vocab_size: vocab.size(),
            eos: vocab.eos(),
            norm_len,
        })
    }

    /// Feature dimension `|V| + |V|^2 + 2`.
    pub fn dim(&self) -> usize {
        self.vocab_size + self.vocab_size * self.vocab_size + 2
    }

    fn features(&self, seq: &TokenSeq) -> Result<Vec<f64>> {
        let v = self.vocab_size;
        let mut phi = alloc::vec![0.0; self.dim()];
        let body = seq.body(self.eos);
        for &id in body {
            if id as usize >= v {
                return Err(Error::Vocab(format!("token id {id} out of range")));
            }
            phi[id as usize] += 1.0;
        }
        for pair in body.windows(2) {
            let idx = v + pair[0] as usize * v + pair[1] as usize;
            phi[idx] += 1.0;
        }
        phi[v + v * v] = body.len() as f64 / self.norm_len as f64;
        phi[v + v * v + 1] = if seq.is_complete() { 1.0 } else { 0.0 };
        Ok(phi)
    }
}

/// Architecture of the trainable scorer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RewardArch {
    /// `score = theta . phi`
    Linear,
    /// `score = v . tanh(W phi + b)` with one hidden layer of `hidden` units.
    Mlp { hidden: usize },
}

impl RewardArch {
    fn param_count(&self, dim: usize) -> usize {
        match self {
            RewardArch::Linear => dim,
            RewardArch::Mlp { hidden } => hidden * dim + hidden + hidden,
        }
    }
}

/// Trainable reward model over hand-rolled sequence features.
///
/// Parameters live in one flat vector (for the MLP: `W` row-major, then
/// `b`, then `v`), which keeps optimizers and gradient checks simple.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturizedReward {
    spec: FeatureSpec,
    arch: RewardArch,
    params: Vec<f64>,
}

impl FeaturizedReward {
    /// Zero-initialized model: scores 0 on every input.
    pub fn zeros(vocab: &Vocab, arch: RewardArch, norm_len: usize) -> Result<Self> {
        let spec = FeatureSpec::new(vocab, norm_len)?;
        Self::validate_arch(&arch)?;
        let params = alloc::vec![0.0; arch.param_count(spec.dim())];
        Ok(FeaturizedReward { spec, arch, params })
    }

    /// Small symmetric random init (uniform in `[-scale, scale]`), which the
    /// MLP needs to break hidden-unit symmetry.
    pub fn random<R: Rng>(
        vocab: &Vocab,
        arch: RewardArch,
        norm_len: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut rm = Self::zeros(vocab, arch, norm_len)?;
        for p in &mut rm.params {
            *p = (rng.gen::<f64>() * 2.0 - 1.0) * scale;
        }
        Ok(rm)
    }

    /// Reassemble a model from checkpoint parts.
    pub fn from_parts(spec: FeatureSpec, arch: RewardArch, params: Vec<f64>) -> Result<Self> {
        Self::validate_arch(&arch)?;
        let expect = arch.param_count(spec.dim());
        if params.len() != expect {
            return Err(Error::Config(format!(
                "expected {expect} parameters, got {}",
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("parameters must be finite".to_string()));
        }
        Ok(FeaturizedReward { spec, arch, params })
    }

    fn validate_arch(arch: &RewardArch) -> Result<()> {
        match arch {
            RewardArch::Mlp { hidden: 0 } => {
                Err(Error::Config("hidden width must be >= 1".to_string()))
            }
            _ => Ok(()),
        }
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn arch(&self) -> &RewardArch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// The feature vector for `(prompt, seq)`.
    pub fn features(&self, _prompt: &TokenSeq, seq: &TokenSeq) -> Result<Vec<f64>> {
        self.spec.features(seq)
    }

    /// Score together with the gradient w.r.t. the flat parameter vector.
    pub fn score_with_grad(&self, prompt: &TokenSeq, seq: &TokenSeq) -> Result<(f64, Vec<f64>)> {
        let phi = self.features(prompt, seq)?;
        let d = phi.len();
        match &self.arch {
            RewardArch::Linear => {
                let score = dot(&self.params, &phi);
                Ok((score, phi))
            }
            RewardArch::Mlp { hidden } => {
                let h = *hidden;
                let (w, rest) = self.params.split_at(h * d);
                let (b, v) = rest.split_at(h);
                let mut grad = alloc::vec![0.0; self.params.len()];
                let mut score = 0.0;
                for j in 0..h {
                    let row = &w[j * d..(j + 1) * d];
                    let act = math::tanh(dot(row, &phi) + b[j]);
                    score += v[j] * act;
                    let dpre = v[j] * (1.0 - act * act);
                    for (slot, &x) in grad[j * d..(j + 1) * d].iter_mut().zip(&phi) {
                        *slot = dpre * x;
                    }
                    grad[h * d + j] = dpre;
                    grad[h * d + h + j] = act;
                }
                Ok((score, grad))
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl RewardModel for FeaturizedReward {
    fn score(&self, prompt: &TokenSeq, seq: &TokenSeq) -> Result<f64> {
        self.score_with_grad(prompt, seq).map(|(s, _)| s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Vocab {a, b, c} with eos = "a" (id 0), matching identity ranks.
    fn abc() -> Vocab {
        Vocab::new(["a", "b", "c"], "a").unwrap()
    }

    fn seq(v: &Vocab, text: &str) -> TokenSeq {
        v.encode(text).unwrap()
    }

    #[test]
    fn identity_oracle_hand_values() {
        let v = abc();
        let rm = LexOracleReward::identity(&v).unwrap();
        let x = TokenSeq::empty();
        // c = |V| + 1 = 4; score("b a") = 1/4 * 1 + 1/16 * 0.
        let ba = TokenSeq::from_ids(vec![1, 0], &v).unwrap();
        assert_eq!(rm.score(&x, &ba).unwrap(), 0.25);
        let bb = TokenSeq::from_ids(vec![1, 1], &v).unwrap();
        assert_eq!(rm.score(&x, &bb).unwrap(), 0.3125);
        // Their length-1 prefixes tie, which is consistent with bb > ba.
        assert_eq!(
            rm.score(&x, &bb.prefix(1)).unwrap(),
            rm.score(&x, &ba.prefix(1)).unwrap()
        );
    }

    #[test]
    fn oracle_is_padding_neutral() {
        let v = abc();
        let rm = LexOracleReward::identity(&v).unwrap();
        let x = TokenSeq::empty();
        let y = seq(&v, "b c a"); // complete: ends with eos
        let base = rm.score(&x, &y).unwrap();
        for extra in 1..4 {
            let padded = y.pad_to(y.len() + extra, v.eos(), &v).unwrap();
            assert_eq!(rm.score(&x, &padded).unwrap(), base);
        }
    }

    #[test]
    fn rank_table_validation() {
        let v = abc();
        assert!(LexOracleReward::new(&v, vec![vec![0, 1]]).is_err());
        assert!(LexOracleReward::new(&v, vec![vec![0, 1, 1]]).is_err());
        assert!(LexOracleReward::new(&v, vec![vec![1, 0, 2]]).is_err()); // eos not rank 0
        assert!(LexOracleReward::new(&v, vec![]).is_err());
        let ok = LexOracleReward::new(&v, vec![vec![0, 2, 1], vec![0, 1, 2]]).unwrap();
        assert_eq!(ok.positions(), 2);
        assert_eq!(ok.rank_at(0, 1), 2);
        assert_eq!(ok.rank_at(2, 1), 2); // cycles
    }

    #[test]
    fn random_oracle_has_no_violations() {
        let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
        let mut r = rng::stream(17, "oracle");
        let rm = LexOracleReward::random(&v, 6, &mut r).unwrap();
        let mut pairs = Vec::new();
        let mut gen = rng::stream(17, "pairs");
        for _ in 0..200 {
            let draw = |g: &mut rng::StreamRng| {
                let len = 1 + (g.gen::<u64>() % 6) as usize;
                let ids: Vec<TokenId> = (0..len).map(|_| 1 + (g.gen::<u64>() % 3) as u32).collect();
                TokenSeq::from_ids(ids, &v).unwrap()
            };
            let a = draw(&mut gen);
            let b = draw(&mut gen);
            if a == b {
                continue;
            }
            pairs.push(PreferencePair::new(TokenSeq::empty(), a, b).unwrap());
        }
        let grid: Vec<usize> = (1..=8).collect();
        let violations = check_score_consistency(&rm, &v, &pairs, &grid).unwrap();
        assert!(violations.is_empty());
    }

    /// A deliberately inconsistent scorer: the rank of the last token only.
    struct LastTokenReward;

    impl RewardModel for LastTokenReward {
        fn score(&self, _prompt: &TokenSeq, seq: &TokenSeq) -> Result<f64> {
            Ok(seq.ids().last().map_or(0.0, |&id| f64::from(id)))
        }
    }

    #[test]
    fn last_token_scorer_is_caught() {
        let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
        // chosen "b c" beats rejected "c a" on last tokens (3 vs 1), but the
        // length-1 prefixes order the other way (2 vs 3).
        let pair = PreferencePair::new(TokenSeq::empty(), seq(&v, "b c"), seq(&v, "c a")).unwrap();
        let violations =
            check_score_consistency(&LastTokenReward, &v, &[pair], &[1, 2]).unwrap();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].t, 1);
        assert_eq!(violations[0].full_order, Preference::Chosen);
        assert_eq!(violations[0].prefix_order, Preference::Rejected);
    }

    #[test]
    fn shared_prefixes_tie_without_violation() {
        let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
        let rm = LexOracleReward::random(&v, 4, &mut rng::stream(3, "o")).unwrap();
        let pair =
            PreferencePair::new(TokenSeq::empty(), seq(&v, "a b c"), seq(&v, "a b a")).unwrap();
        let violations = check_score_consistency(&rm, &v, &[pair], &[1, 2, 3]).unwrap();
        assert!(violations.is_empty());
    }

    #[test]
    fn brute_force_identity_repeats_top_token() {
        let v = abc();
        let rm = LexOracleReward::identity(&v).unwrap();
        let best = brute_force_argmax(&rm, &TokenSeq::empty(), &v, 4).unwrap();
        assert_eq!(best.ids(), &[2, 2, 2, 2]);
        assert!(best.is_complete());
        let single = brute_force_argmax(&rm, &TokenSeq::empty(), &v, 1).unwrap();
        assert_eq!(single.ids(), &[2]);
    }

    #[test]
    fn brute_force_matches_per_position_argmax() {
        let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
        let mut r = rng::stream(23, "ranks");
        let rm = LexOracleReward::random(&v, 5, &mut r).unwrap();
        let best = brute_force_argmax(&rm, &TokenSeq::empty(), &v, 5).unwrap();
        for (pos, &id) in best.ids().iter().enumerate() {
            let top = (0..v.size() as TokenId)
                .max_by_key(|&t| rm.rank_at(pos, t))
                .unwrap();
            assert_eq!(id, top);
        }
    }

    #[test]
    fn brute_force_guard_trips() {
        let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
        let rm = LexOracleReward::random(&v, 2, &mut rng::stream(1, "g")).unwrap();
        assert!(matches!(
            brute_force_argmax(&rm, &TokenSeq::empty(), &v, 20),
            Err(Error::Size(_))
        ));
        assert!(brute_force_argmax(&rm, &TokenSeq::empty(), &v, 0).is_err());
    }

    #[test]
    fn zero_featurized_scores_zero() {
        let v = abc();
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 64).unwrap();
        assert_eq!(rm.score(&TokenSeq::empty(), &seq(&v, "b c")).unwrap(), 0.0);
        let mlp = FeaturizedReward::zeros(&v, RewardArch::Mlp { hidden: 3 }, 64).unwrap();
        assert_eq!(mlp.score(&TokenSeq::empty(), &seq(&v, "b c")).unwrap(), 0.0);
    }

    #[test]
    fn featurized_is_padding_neutral() {
        let v = abc();
        let mut r = rng::stream(7, "feat");
        for arch in [RewardArch::Linear, RewardArch::Mlp { hidden: 4 }] {
            let rm = FeaturizedReward::random(&v, arch, 64, 0.5, &mut r).unwrap();
            let y = seq(&v, "b c b a");
            let base = rm.score(&TokenSeq::empty(), &y).unwrap();
            let padded = y.pad_to(9, v.eos(), &v).unwrap();
            assert!((rm.score(&TokenSeq::empty(), &padded).unwrap() - base).abs() < 1e-15);
        }
    }

    #[test]
    fn feature_layout() {
        let v = abc();
        let rm = FeaturizedReward::zeros(&v, RewardArch::Linear, 10).unwrap();
        let phi = rm.features(&TokenSeq::empty(), &seq(&v, "b c b a")).unwrap();
        assert_eq!(phi.len(), 3 + 9 + 2);
        assert_eq!(phi[1], 2.0); // two "b"
        assert_eq!(phi[2], 1.0); // one "c"
        assert_eq!(phi[3 + 1 * 3 + 2], 1.0); // bigram (b, c)
        assert_eq!(phi[3 + 2 * 3 + 1], 1.0); // bigram (c, b)
        assert_eq!(phi[12], 3.0 / 10.0); // body length 3, norm_len 10
        assert_eq!(phi[13], 1.0); // complete
    }

    #[test]
    fn foreign_vocab_tokens_are_rejected() {
        // A sequence built under a larger vocabulary scored by a smaller
        // model surfaces as a vocabulary error.
        let small = abc();
        let big = Vocab::new(["a", "b", "c", "d", "e"], "a").unwrap();
        let foreign = big.encode("d e").unwrap();
        let rm = FeaturizedReward::zeros(&small, RewardArch::Linear, 64).unwrap();
        assert!(matches!(
            rm.score(&TokenSeq::empty(), &foreign),
            Err(Error::Vocab(_))
        ));
        let oracle = LexOracleReward::identity(&small).unwrap();
        assert!(matches!(
            oracle.score(&TokenSeq::empty(), &foreign),
            Err(Error::Vocab(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let v = abc();
        let x = TokenSeq::empty();
        let y = seq(&v, "b c b");
        let mut r = rng::stream(11, "grad");
        for arch in [RewardArch::Linear, RewardArch::Mlp { hidden: 3 }] {
            let rm = FeaturizedReward::random(&v, arch, 64, 0.3, &mut r).unwrap();
            let (_, grad) = rm.score_with_grad(&x, &y).unwrap();
            let h = 1e-5;
            for i in 0..rm.param_count() {
                let mut plus = rm.clone();
                plus.params_mut()[i] += h;
                let mut minus = rm.clone();
                minus.params_mut()[i] -= h;
                let numeric =
                    (plus.score(&x, &y).unwrap() - minus.score(&x, &y).unwrap()) / (2.0 * h);
                assert!(
                    (grad[i] - numeric).abs() <= 1e-6 * grad[i].abs().max(numeric.abs()).max(1.0),
                    "param {i}: analytic {} vs numeric {numeric}",
                    grad[i]
                );
            }
        }
    }
}
