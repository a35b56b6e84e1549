//! Reward-guided search: a general candidate-expand-select engine and the
//! four concrete decoders built on it.
//!
//! Every decoder shares the same skeleton: a policy proposes segments at
//! some granularity, a reward model scores the extended candidates, and a
//! deterministic selection keeps the best. Completed candidates are frozen
//! and keep competing for selection; everything terminates because segments
//! are non-empty and sequences complete at eos or the length cap.
//!
//! Ties are broken toward the lexicographically smallest token-id sequence
//! (and toward the earliest sample in best-of-n), so golden traces are
//! stable. A [`SearchTrace`] records every candidate considered and replays
//! to the decoder's output.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::policy::{sample_segment, Granularity, PolicyModel, SentenceRule, DEFAULT_MAX_LEN};
use crate::reward::{RewardModel, BRUTE_FORCE_GUARD};
use crate::rng::{self, StreamRng};
use crate::seq::{TokenId, TokenSeq, Vocab};

/// Where candidate segments come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CandidateSource {
    /// `candidate_size` i.i.d. draws from the policy per live sequence.
    Sampled,
    /// Every segment of the granularity, enumerated (small vocabularies
    /// only; guarded by the brute-force budget).
    Exhaustive,
}

/// Linear ramp for the rejection decoder's acceptance threshold: from
/// `start` at the first segment to `target` after `expected_segments`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauSchedule {
    pub start: f64,
    pub target: f64,
    pub expected_segments: usize,
}

impl TauSchedule {
    pub fn value(&self, segment_index: usize) -> f64 {
        let frac = (segment_index as f64 / self.expected_segments as f64).min(1.0);
        self.start + (self.target - self.start) * frac
    }
}

impl Default for TauSchedule {
    fn default() -> Self {
        TauSchedule {
            start: 0.0,
            target: 0.5,
            expected_segments: 8,
        }
    }
}

/// Decoder hyperparameters. Field names mirror the CLI flags one to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    /// Segment granularity for the general engine.
    pub granularity: Granularity,
    /// Candidates sampled per live sequence per step (K).
    pub candidate_size: usize,
    /// Sequences kept per step and returned (N).
    pub return_count: usize,
    /// Beam width for chunk beam search (W).
    pub beam_width: usize,
    /// Chunk length for chunk beam search (L); 1 gives token beam search.
    pub chunk_len: usize,
    /// Reward coefficient in greedy token reranking.
    pub args_w: f64,
    /// Top-k likelihood cut in greedy token reranking (clamped to |V|).
    pub args_k: usize,
    /// Entropy boundary (nats) for rejection-sampling segments.
    pub cards_tau_u: f64,
    /// Acceptance temperature for rejection sampling.
    pub cards_beta: f64,
    /// Acceptance threshold schedule for rejection sampling.
    pub cards_tau_r: TauSchedule,
    /// Consecutive rejections before the best rejected segment is forced.
    pub cards_max_rejects: usize,
    /// Boundary (punctuation) tokens for sentence-style segmentation.
    pub sentence_boundary: Vec<TokenId>,
    /// Sampling temperature.
    pub temperature: f64,
    /// Response length cap (further clamped by the policy's own cap).
    pub max_len: usize,
    /// Root seed; decoders draw from its "decode" substream.
    pub seed: u64,
    pub source: CandidateSource,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            granularity: Granularity::Token,
            candidate_size: 8,
            return_count: 1,
            beam_width: 8,
            chunk_len: 30,
            args_w: 1.5,
            args_k: 30,
            cards_tau_u: 7.0,
            cards_beta: 1.0,
            cards_tau_r: TauSchedule::default(),
            cards_max_rejects: 64,
            sentence_boundary: Vec::new(),
            temperature: 1.0,
            max_len: DEFAULT_MAX_LEN,
            seed: 0,
            source: CandidateSource::Sampled,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.candidate_size == 0
            || self.return_count == 0
            || self.beam_width == 0
            || self.chunk_len == 0
            || self.args_k == 0
        {
            return Err(Error::Config(
                "candidate_size, return_count, beam_width, chunk_len, and args_k must be >= 1"
                    .to_string(),
            ));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be >= 1".to_string()));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::Config("temperature must be > 0".to_string()));
        }
        if !(self.cards_tau_u > 0.0) {
            return Err(Error::Config("cards_tau_u must be > 0".to_string()));
        }
        if !(self.cards_beta > 0.0) {
            return Err(Error::Config("cards_beta must be > 0".to_string()));
        }
        if self.cards_tau_r.expected_segments == 0 {
            return Err(Error::Config(
                "cards_tau_r.expected_segments must be >= 1".to_string(),
            ));
        }
        if self.cards_max_rejects == 0 {
            return Err(Error::Config("cards_max_rejects must be >= 1".to_string()));
        }
        Ok(())
    }

    fn effective_max_len(&self, policy: &dyn PolicyModel) -> usize {
        self.max_len.min(policy.max_len())
    }
}

/// One scored candidate considered during a decode step.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceCandidate {
    pub ids: Vec<TokenId>,
    pub score: f64,
    pub selected: bool,
    pub note: Option<String>,
}

/// All candidates of one expand-select step.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub index: usize,
    pub candidates: Vec<TraceCandidate>,
}

/// A final output with its reward.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceOutput {
    pub ids: Vec<TokenId>,
    pub reward: f64,
}

/// Full record of a decode: every step's candidates, clamp annotations, and
/// the outputs. Bit-identical for a fixed seed and config.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchTrace {
    pub method: String,
    pub notes: Vec<String>,
    pub steps: Vec<TraceStep>,
    pub outputs: Vec<TraceOutput>,
}

impl SearchTrace {
    fn new(method: &str) -> Self {
        SearchTrace {
            method: method.to_string(),
            notes: Vec::new(),
            steps: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Replay check: every output must be a selected candidate of the final
    /// step it appears in.
    pub fn verify(&self) -> bool {
        let Some(last) = self.steps.last() else {
            return self.outputs.is_empty();
        };
        self.outputs.iter().all(|out| {
            last.candidates
                .iter()
                .any(|c| c.selected && c.ids == out.ids)
        })
    }
}

/// A scored live sequence.
#[derive(Clone, Debug)]
struct Scored {
    seq: TokenSeq,
    score: f64,
}

fn rank_desc(a: &Scored, b: &Scored) -> core::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.seq.ids().cmp(b.seq.ids()))
}

/// Finish a freshly extended candidate: truncate at the length cap and mark
/// it complete there.
fn cap_candidate(seq: TokenSeq, eff_max: usize) -> TokenSeq {
    if seq.len() < eff_max {
        return seq;
    }
    let mut capped = seq.prefix(eff_max);
    if !capped.is_complete() {
        capped.mark_complete();
    }
    capped
}

/// Enumerate every valid segment of a granularity within `remaining`
/// tokens: all eos-free segments of the full length plus every shorter
/// eos-terminated one.
fn enumerate_segments(
    vocab: &Vocab,
    granularity: &Granularity,
    remaining: usize,
) -> Result<Vec<TokenSeq>> {
    let len = match granularity {
        Granularity::Token => 1,
        Granularity::Chunk(l) => (*l).min(remaining),
        Granularity::Response => remaining,
        Granularity::Sentence(_) => {
            return Err(Error::Config(
                "exhaustive enumeration is not defined for sentence granularity".to_string(),
            ))
        }
    };
    let non_eos: Vec<TokenId> = vocab.non_eos_ids().collect();
    let base = non_eos.len() as u128;
    // Total = eos-free bodies of the full length plus every shorter
    // eos-terminated body.
    let mut total: u128 = 0;
    let mut pow: u128 = 1;
    for _ in 0..len {
        total = total.saturating_add(pow);
        pow = pow.saturating_mul(base);
    }
    total = total.saturating_add(pow);
    if total > BRUTE_FORCE_GUARD {
        return Err(Error::Size(format!(
            "exhaustive segment space {total} exceeds the {BRUTE_FORCE_GUARD} guard"
        )));
    }

    // Odometer increment in lexicographic order; false once exhausted.
    fn advance(indices: &mut [usize], radix: usize) -> bool {
        for pos in (0..indices.len()).rev() {
            if indices[pos] + 1 < radix {
                indices[pos] += 1;
                for slot in &mut indices[pos + 1..] {
                    *slot = 0;
                }
                return true;
            }
        }
        false
    }

    let mut segments = Vec::new();
    for body_len in 0..=len {
        let terminated = body_len < len;
        let mut indices = alloc::vec![0usize; body_len];
        loop {
            let mut ids: Vec<TokenId> = indices.iter().map(|&i| non_eos[i]).collect();
            if terminated {
                ids.push(vocab.eos());
            }
            segments.push(TokenSeq::from_ids(ids, vocab)?);
            if !advance(&mut indices, non_eos.len()) {
                break;
            }
        }
    }
    Ok(segments)
}

/// The expand-score-select loop shared by the general engine and chunk beam
/// search. Returns the final live set, best first.
#[allow(clippy::too_many_arguments)]
fn guided_beam(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    prompt: &TokenSeq,
    granularity: &Granularity,
    expand_k: usize,
    keep_n: usize,
    source: CandidateSource,
    temperature: f64,
    eff_max: usize,
    rng: &mut StreamRng,
    trace: &mut SearchTrace,
) -> Result<Vec<Scored>> {
    let vocab = policy.vocab();
    let mut live: Vec<Scored> = (0..keep_n)
        .map(|_| Scored {
            seq: TokenSeq::empty(),
            score: 0.0,
        })
        .collect();

    let mut step_index = 0;
    while live.iter().any(|s| !s.seq.is_complete()) {
        if step_index > eff_max + 1 {
            return Err(Error::Divergence(
                "search failed to terminate within the length cap".to_string(),
            ));
        }
        // Completed sequences are frozen and keep competing.
        let mut pool: BTreeMap<Vec<TokenId>, TokenSeq> = BTreeMap::new();
        for s in &live {
            if s.seq.is_complete() {
                pool.insert(s.seq.ids().to_vec(), s.seq.clone());
            }
        }
        for s in &live {
            if s.seq.is_complete() {
                continue;
            }
            let segments: Vec<TokenSeq> = match source {
                CandidateSource::Sampled => {
                    let mut drawn = Vec::with_capacity(expand_k);
                    for _ in 0..expand_k {
                        drawn.push(sample_segment(
                            policy,
                            prompt,
                            &s.seq,
                            granularity,
                            temperature,
                            rng,
                        )?);
                    }
                    drawn
                }
                CandidateSource::Exhaustive => {
                    enumerate_segments(vocab, granularity, eff_max - s.seq.len())?
                }
            };
            for segment in segments {
                let candidate = cap_candidate(s.seq.concat(&segment, vocab)?, eff_max);
                pool.insert(candidate.ids().to_vec(), candidate);
            }
        }

        let mut scored: Vec<Scored> = Vec::with_capacity(pool.len());
        for (_, seq) in pool {
            let score = rm.score(prompt, &seq)?;
            scored.push(Scored { seq, score });
        }
        scored.sort_by(rank_desc);
        let kept = keep_n.min(scored.len());
        trace.steps.push(TraceStep {
            index: step_index,
            candidates: scored
                .iter()
                .enumerate()
                .map(|(i, s)| TraceCandidate {
                    ids: s.seq.ids().to_vec(),
                    score: s.score,
                    selected: i < kept,
                    note: None,
                })
                .collect(),
        });
        scored.truncate(kept);
        live = scored;
        step_index += 1;
    }
    if live.len() < keep_n {
        trace.notes.push(format!(
            "candidate pool supplied {} of {keep_n} requested sequences",
            live.len()
        ));
    }
    Ok(live)
}

/// General reward-guided search: keep `return_count` live sequences, expand
/// each incomplete one with `candidate_size` segments of the configured
/// granularity, and keep the top scorers until all are complete.
///
/// Returns the final sequences (best first) and the trace.
pub fn rgs_general(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    cfg: &SearchConfig,
    prompt: &TokenSeq,
) -> Result<(Vec<TokenSeq>, SearchTrace)> {
    cfg.validate()?;
    let mut trace = SearchTrace::new("rgs");
    let eff_max = cfg.effective_max_len(policy);
    if eff_max < cfg.max_len {
        trace
            .notes
            .push(format!("max_len clamped to the policy cap {eff_max}"));
    }
    let mut rng = rng::stream(cfg.seed, "decode");
    let live = guided_beam(
        policy,
        rm,
        prompt,
        &cfg.granularity,
        cfg.candidate_size,
        cfg.return_count,
        cfg.source,
        cfg.temperature,
        eff_max,
        &mut rng,
        &mut trace,
    )?;
    trace.outputs = live
        .iter()
        .map(|s| TraceOutput {
            ids: s.seq.ids().to_vec(),
            reward: s.score,
        })
        .collect();
    Ok((live.into_iter().map(|s| s.seq).collect(), trace))
}

/// Chunk-level beam search: `beam_width` beams, `candidate_size` sampled
/// chunks of up to `chunk_len` tokens per beam, top beams kept by reward;
/// returns the best terminal sequence. `chunk_len = 1` is token-level beam
/// search.
pub fn cbs(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    cfg: &SearchConfig,
    prompt: &TokenSeq,
) -> Result<(TokenSeq, SearchTrace)> {
    cfg.validate()?;
    let mut trace = SearchTrace::new(if cfg.chunk_len == 1 { "tbs" } else { "cbs" });
    let eff_max = cfg.effective_max_len(policy);
    let chunk = cfg.chunk_len.min(eff_max);
    if chunk < cfg.chunk_len {
        trace
            .notes
            .push(format!("chunk_len clamped from {} to {chunk}", cfg.chunk_len));
    }
    let mut rng = rng::stream(cfg.seed, "decode");
    let live = guided_beam(
        policy,
        rm,
        prompt,
        &Granularity::Chunk(chunk),
        cfg.candidate_size,
        cfg.beam_width,
        cfg.source,
        cfg.temperature,
        eff_max,
        &mut rng,
        &mut trace,
    )?;
    let best = live.first().expect("beam search keeps at least one beam");
    trace.outputs = alloc::vec![TraceOutput {
        ids: best.seq.ids().to_vec(),
        reward: best.score,
    }];
    Ok((best.seq.clone(), trace))
}

/// Greedy decoding over reward-shifted token scores: at each position the
/// `args_k` most likely tokens are rescored as `ln P(v) + args_w *
/// reward(prefix + v)` and the argmax is appended. Deterministic — no
/// sampling is involved.
pub fn args_greedy(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    cfg: &SearchConfig,
    prompt: &TokenSeq,
) -> Result<(TokenSeq, SearchTrace)> {
    cfg.validate()?;
    let mut trace = SearchTrace::new("args");
    let vocab = policy.vocab();
    let eff_max = cfg.effective_max_len(policy);
    let k = cfg.args_k.min(vocab.size());
    if k < cfg.args_k {
        trace
            .notes
            .push(format!("args_k clamped from {} to {k}", cfg.args_k));
    }

    let mut current = TokenSeq::empty();
    let mut step_index = 0;
    while !current.is_complete() {
        let dist = policy.next_dist(prompt, &current);
        // Top-k by likelihood, ties toward the lower token id.
        let mut order: Vec<TokenId> = (0..vocab.size() as TokenId).collect();
        order.sort_by(|&a, &b| {
            dist[b as usize]
                .total_cmp(&dist[a as usize])
                .then(a.cmp(&b))
        });
        order.truncate(k);

        let mut best: Option<(f64, TokenSeq, f64)> = None;
        let mut candidates = Vec::with_capacity(k);
        for &tok in &order {
            let single = TokenSeq::from_ids(alloc::vec![tok], vocab)?;
            let candidate = cap_candidate(current.concat(&single, vocab)?, eff_max);
            let reward = rm.score(prompt, &candidate)?;
            let combined = math::ln(dist[tok as usize]) + cfg.args_w * reward;
            let replace = match &best {
                None => true,
                Some((top, seq, _)) => {
                    combined > *top
                        || (combined == *top && candidate.ids() < seq.ids())
                }
            };
            if replace {
                best = Some((combined, candidate.clone(), reward));
            }
            candidates.push(TraceCandidate {
                ids: candidate.ids().to_vec(),
                score: combined,
                selected: false,
                note: Some(format!(
                    "logp={} reward={reward}",
                    math::ln(dist[tok as usize])
                )),
            });
        }
        let (_, chosen, _) = best.expect("args_k >= 1 guarantees a candidate");
        for cand in &mut candidates {
            if cand.ids == chosen.ids() {
                cand.selected = true;
            }
        }
        trace.steps.push(TraceStep {
            index: step_index,
            candidates,
        });
        current = chosen;
        step_index += 1;
    }
    let reward = rm.score(prompt, &current)?;
    trace.outputs = alloc::vec![TraceOutput {
        ids: current.ids().to_vec(),
        reward,
    }];
    Ok((current, trace))
}

/// Segment-level rejection sampling: segments end where predictive entropy
/// reaches `cards_tau_u` (or at a boundary token), and each segment is
/// accepted iff `u < exp((reward - tau_r) / beta)` against the scheduled
/// threshold. After `cards_max_rejects` consecutive rejections the
/// best-scoring rejected extension is accepted to guarantee progress.
pub fn cards(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    cfg: &SearchConfig,
    prompt: &TokenSeq,
) -> Result<(TokenSeq, SearchTrace)> {
    cfg.validate()?;
    let mut trace = SearchTrace::new("cards");
    let vocab = policy.vocab();
    let eff_max = cfg.effective_max_len(policy);
    let max_entropy = math::ln(vocab.size() as f64);
    if cfg.cards_tau_u >= max_entropy {
        trace.notes.push(format!(
            "entropy threshold {} is at or above ln|V| = {max_entropy}; segments run to completion",
            cfg.cards_tau_u
        ));
    }
    let rule = Granularity::Sentence(SentenceRule {
        boundary_tokens: cfg.sentence_boundary.clone(),
        entropy_threshold: cfg.cards_tau_u,
    });

    let mut rng = rng::stream(cfg.seed, "decode");
    let mut response = TokenSeq::empty();
    let mut accepted_segments = 0usize;
    let mut consecutive_rejects = 0usize;
    let mut best_rejected: Option<Scored> = None;
    let mut step_index = 0;
    let step_guard = eff_max * cfg.cards_max_rejects.max(1) + cfg.cards_max_rejects + 1;

    while !response.is_complete() {
        if step_index > step_guard {
            return Err(Error::Divergence(
                "rejection sampling failed to terminate".to_string(),
            ));
        }
        let segment = sample_segment(policy, prompt, &response, &rule, cfg.temperature, &mut rng)?;
        let candidate = cap_candidate(response.concat(&segment, vocab)?, eff_max);
        let reward = rm.score(prompt, &candidate)?;
        let tau_r = cfg.cards_tau_r.value(accepted_segments);
        let u: f64 = rng.gen();
        let accept = u < math::exp((reward - tau_r) / cfg.cards_beta);
        trace.steps.push(TraceStep {
            index: step_index,
            candidates: alloc::vec![TraceCandidate {
                ids: candidate.ids().to_vec(),
                score: reward,
                selected: accept,
                note: Some(format!("u={u} tau_r={tau_r} beta={}", cfg.cards_beta)),
            }],
        });
        step_index += 1;

        if accept {
            response = candidate;
            accepted_segments += 1;
            consecutive_rejects = 0;
            best_rejected = None;
            continue;
        }
        consecutive_rejects += 1;
        if best_rejected
            .as_ref()
            .map_or(true, |b| reward > b.score)
        {
            best_rejected = Some(Scored {
                seq: candidate,
                score: reward,
            });
        }
        if consecutive_rejects >= cfg.cards_max_rejects {
            let forced = best_rejected.take().expect("at least one rejected segment");
            trace.steps.push(TraceStep {
                index: step_index,
                candidates: alloc::vec![TraceCandidate {
                    ids: forced.seq.ids().to_vec(),
                    score: forced.score,
                    selected: true,
                    note: Some(format!(
                        "force-accepted after {} consecutive rejections",
                        cfg.cards_max_rejects
                    )),
                }],
            });
            step_index += 1;
            response = forced.seq;
            accepted_segments += 1;
            consecutive_rejects = 0;
        }
    }
    let reward = rm.score(prompt, &response)?;
    trace.outputs = alloc::vec![TraceOutput {
        ids: response.ids().to_vec(),
        reward,
    }];
    Ok((response, trace))
}

/// Sample `n` complete responses i.i.d. and return the one the reward model
/// scores highest; ties keep the earliest sample.
pub fn best_of_n<R: Rng>(
    policy: &dyn PolicyModel,
    rm: &dyn RewardModel,
    n: usize,
    prompt: &TokenSeq,
    temperature: f64,
    rng: &mut R,
) -> Result<(TokenSeq, SearchTrace)> {
    if n == 0 {
        return Err(Error::Config("best-of-n needs n >= 1".to_string()));
    }
    let mut trace = SearchTrace::new("bon");
    let mut best: Option<Scored> = None;
    let mut candidates = Vec::with_capacity(n);
    for _ in 0..n {
        let mut sample = sample_segment(
            policy,
            prompt,
            &TokenSeq::empty(),
            &Granularity::Response,
            temperature,
            rng,
        )?;
        if !sample.is_complete() {
            sample.mark_complete(); // response granularity ran to the cap
        }
        let score = rm.score(prompt, &sample)?;
        candidates.push(TraceCandidate {
            ids: sample.ids().to_vec(),
            score,
            selected: false,
            note: None,
        });
        if best.as_ref().map_or(true, |b| score > b.score) {
            best = Some(Scored { seq: sample, score });
        }
    }
    let best = best.expect("n >= 1");
    for cand in &mut candidates {
        if cand.ids == best.seq.ids() && cand.score == best.score {
            cand.selected = true;
            break;
        }
    }
    trace.steps.push(TraceStep {
        index: 0,
        candidates,
    });
    trace.outputs = alloc::vec![TraceOutput {
        ids: best.seq.ids().to_vec(),
        reward: best.score,
    }];
    Ok((best.seq, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::NGramLM;
    use crate::reward::{brute_force_argmax, LexOracleReward};

    fn vocab() -> Vocab {
        Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap()
    }

    fn uniform_policy(max_len: usize) -> NGramLM {
        let v = vocab();
        // Unigram over one token of each kind: uniform-ish smoothed model.
        let corpus = vec![vec![1, 2, 3]];
        NGramLM::fit(v, &corpus, 1, 10.0, max_len).unwrap()
    }

    fn oracle(seed: u64, positions: usize) -> LexOracleReward {
        LexOracleReward::random(&vocab(), positions, &mut rng::stream(seed, "o")).unwrap()
    }

    #[test]
    fn schedule_ramps_linearly() {
        let sched = TauSchedule {
            start: 0.0,
            target: 1.0,
            expected_segments: 4,
        };
        assert_eq!(sched.value(0), 0.0);
        assert_eq!(sched.value(2), 0.5);
        assert_eq!(sched.value(4), 1.0);
        assert_eq!(sched.value(100), 1.0);
    }

    #[test]
    fn exhaustive_segments_cover_the_space() {
        let v = vocab();
        let tokens = enumerate_segments(&v, &Granularity::Token, 5).unwrap();
        assert_eq!(tokens.len(), 4); // every token, eos included
        let chunks = enumerate_segments(&v, &Granularity::Chunk(2), 5).unwrap();
        // bodies of len 0 and 1 terminated (1 + 3) plus eos-free pairs (9)
        assert_eq!(chunks.len(), 13);
        for seg in &chunks {
            assert!(seg.len() <= 2);
        }
        // Chunk clamped by remaining budget.
        let clamped = enumerate_segments(&v, &Granularity::Chunk(10), 1).unwrap();
        assert_eq!(clamped.len(), 4);
        assert!(enumerate_segments(
            &v,
            &Granularity::Sentence(SentenceRule {
                boundary_tokens: vec![],
                entropy_threshold: 1.0
            }),
            3
        )
        .is_err());
    }

    #[test]
    fn exhaustive_guard_trips_on_huge_spaces() {
        let v = vocab();
        assert!(matches!(
            enumerate_segments(&v, &Granularity::Response, 40),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn token_level_exhaustive_search_recovers_the_brute_force_optimum() {
        let policy = uniform_policy(5);
        let rm = oracle(41, 5);
        let prompt = TokenSeq::empty();
        let expect = brute_force_argmax(&rm, &prompt, policy.vocab(), 5).unwrap();
        let cfg = SearchConfig {
            granularity: Granularity::Token,
            return_count: 1,
            source: CandidateSource::Exhaustive,
            max_len: 5,
            ..SearchConfig::default()
        };
        let (out, trace) = rgs_general(&policy, &rm, &cfg, &prompt).unwrap();
        assert_eq!(out[0], expect);
        assert!(trace.verify());
    }

    #[test]
    fn rgs_outputs_are_complete_and_deterministic() {
        let policy = uniform_policy(6);
        let rm = oracle(7, 6);
        let cfg = SearchConfig {
            granularity: Granularity::Chunk(2),
            candidate_size: 3,
            return_count: 2,
            max_len: 6,
            seed: 99,
            ..SearchConfig::default()
        };
        let prompt = policy.vocab().encode("a").unwrap();
        let (out1, trace1) = rgs_general(&policy, &rm, &cfg, &prompt).unwrap();
        let (out2, trace2) = rgs_general(&policy, &rm, &cfg, &prompt).unwrap();
        assert_eq!(out1, out2);
        assert_eq!(trace1, trace2);
        assert!(out1.iter().all(|s| s.is_complete()));
        assert!(trace1.verify());
        // Outputs are sorted by reward, best first.
        let r: Vec<f64> = trace1.outputs.iter().map(|o| o.reward).collect();
        assert!(r.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn response_granularity_with_one_return_matches_best_of_n() {
        let policy = uniform_policy(6);
        let rm = oracle(13, 6);
        let prompt = policy.vocab().encode("b").unwrap();
        let n = 5;
        let cfg = SearchConfig {
            granularity: Granularity::Response,
            candidate_size: n,
            return_count: 1,
            max_len: 6,
            seed: 4242,
            ..SearchConfig::default()
        };
        let (rgs_out, _) = rgs_general(&policy, &rm, &cfg, &prompt).unwrap();
        let mut bon_rng = rng::stream(cfg.seed, "decode");
        let (bon_out, bon_trace) =
            best_of_n(&policy, &rm, n, &prompt, cfg.temperature, &mut bon_rng).unwrap();
        assert_eq!(rgs_out[0].ids(), bon_out.ids());
        assert!(bon_trace.verify());
    }

    #[test]
    fn cbs_dominates_its_trace_under_a_monotone_oracle() {
        let policy = uniform_policy(8);
        let rm = oracle(3, 8);
        let cfg = SearchConfig {
            beam_width: 3,
            candidate_size: 3,
            chunk_len: 3,
            max_len: 8,
            seed: 17,
            ..SearchConfig::default()
        };
        let prompt = TokenSeq::empty();
        let (best, trace) = cbs(&policy, &rm, &cfg, &prompt).unwrap();
        assert!(best.is_complete());
        let final_score = trace.outputs[0].reward;
        for step in &trace.steps {
            for cand in &step.candidates {
                assert!(
                    final_score >= cand.score - 1e-12,
                    "trace candidate outscored the result"
                );
            }
        }
        assert!(trace.verify());
    }

    #[test]
    fn cbs_chunk_len_one_is_token_beam_search() {
        let policy = uniform_policy(4);
        let rm = oracle(5, 4);
        let cfg = SearchConfig {
            chunk_len: 1,
            beam_width: 2,
            candidate_size: 2,
            max_len: 4,
            ..SearchConfig::default()
        };
        let (_, trace) = cbs(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        assert_eq!(trace.method, "tbs");
    }

    #[test]
    fn cbs_clamps_long_chunks_and_notes_it() {
        let policy = uniform_policy(4);
        let rm = oracle(5, 4);
        let cfg = SearchConfig {
            chunk_len: 30,
            max_len: 4,
            ..SearchConfig::default()
        };
        let (_, trace) = cbs(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        assert!(trace.notes.iter().any(|n| n.contains("clamped")));
    }

    #[test]
    fn args_zero_weight_is_pure_greedy() {
        let v = vocab();
        // Policy that strongly favours "c" after anything.
        let corpus = vec![vec![3, 3, 3, 3, 3, 3]];
        let policy = NGramLM::fit(v.clone(), &corpus, 1, 1e-6, 3).unwrap();
        let rm = oracle(19, 3);
        let cfg = SearchConfig {
            args_w: 0.0,
            args_k: 30,
            max_len: 3,
            ..SearchConfig::default()
        };
        let (out, trace) = args_greedy(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        assert_eq!(out.ids(), &[3, 3, 3]);
        assert!(out.is_complete());
        assert!(trace.notes.iter().any(|n| n.contains("args_k clamped")));
        assert!(trace.verify());
    }

    #[test]
    fn args_with_uniform_policy_follows_the_reward() {
        let policy = uniform_policy(4);
        let rm = oracle(23, 4);
        let cfg = SearchConfig {
            args_w: 1.5,
            args_k: 4,
            max_len: 4,
            ..SearchConfig::default()
        };
        let (out, _) = args_greedy(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        // With a uniform policy the likelihood term is constant, so each
        // step takes the per-position top-ranked token.
        for (pos, &id) in out.ids().iter().enumerate() {
            let top = (0..4u32).max_by_key(|&t| rm.rank_at(pos, t)).unwrap();
            assert_eq!(id, top);
        }
    }

    #[test]
    fn cards_accepts_when_reward_clears_the_threshold() {
        let policy = uniform_policy(6);
        let rm = oracle(29, 6);
        let cfg = SearchConfig {
            cards_tau_r: TauSchedule {
                start: -100.0,
                target: -100.0,
                expected_segments: 1,
            },
            cards_tau_u: 7.0,
            max_len: 6,
            seed: 31,
            ..SearchConfig::default()
        };
        let (out, trace) = cards(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        assert!(out.is_complete());
        // Reward is always >= tau_r here, so nothing is ever rejected.
        assert!(trace
            .steps
            .iter()
            .all(|s| s.candidates.iter().all(|c| c.selected)));
        // tau_u = 7 >= ln 4: whole-response segments, noted in the trace.
        assert!(trace.notes.iter().any(|n| n.contains("ln|V|")));
        assert!(trace.verify());
    }

    #[test]
    fn cards_tiny_beta_rejects_until_forced() {
        let policy = uniform_policy(4);
        let rm = oracle(37, 4);
        let cfg = SearchConfig {
            cards_tau_r: TauSchedule {
                start: 100.0, // unreachable reward
                target: 100.0,
                expected_segments: 1,
            },
            cards_beta: 1e-9,
            cards_max_rejects: 5,
            max_len: 4,
            seed: 41,
            ..SearchConfig::default()
        };
        let (out, trace) = cards(&policy, &rm, &cfg, &TokenSeq::empty()).unwrap();
        assert!(out.is_complete());
        let forced = trace
            .steps
            .iter()
            .filter(|s| {
                s.candidates
                    .iter()
                    .any(|c| c.note.as_deref().is_some_and(|n| n.contains("force-accepted")))
            })
            .count();
        assert!(forced >= 1);
        assert!(trace.verify());
    }

    #[test]
    fn best_of_n_degenerate_and_monotone() {
        let policy = uniform_policy(6);
        let rm = oracle(43, 6);
        let prompt = TokenSeq::empty();
        let single = |seed| {
            let mut r = rng::stream(seed, "decode");
            best_of_n(&policy, &rm, 1, &prompt, 1.0, &mut r).unwrap().0
        };
        let mut r = rng::stream(77, "decode");
        let (out, trace) = best_of_n(&policy, &rm, 1, &prompt, 1.0, &mut r).unwrap();
        assert_eq!(out, single(77));
        // Returned reward equals the max over the sampled rewards.
        let max = trace.steps[0]
            .candidates
            .iter()
            .map(|c| c.score)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(trace.outputs[0].reward, max);
        assert!(matches!(
            best_of_n(&policy, &rm, 0, &prompt, 1.0, &mut r),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_validation_rejects_zeroes() {
        let bad = SearchConfig {
            candidate_size: 0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            temperature: 0.0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SearchConfig {
            cards_beta: 0.0,
            ..SearchConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
