//! Language-model policies that propose candidate segments.
//!
//! A [`PolicyModel`] maps `(prompt, prefix)` to a next-token distribution.
//! The reference implementation is an add-alpha smoothed n-gram model
//! ([`NGramLM`]); neural policies can plug in behind the same trait.
//!
//! Sampling uses inverse-CDF over the vocabulary in token-id order with a
//! seeded generator, so every draw is replayable.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;
use crate::seq::{TokenId, TokenSeq, Vocab};

/// Default cap on generated response length.
pub const DEFAULT_MAX_LEN: usize = 64;

/// A frozen next-token policy.
///
/// Implementations must be deterministic given `(prompt, prefix)` and return
/// a non-negative distribution over the vocabulary summing to 1 (within
/// 1e-9). Frozen policies are read-only, so scoring and sampling from
/// multiple workers concurrently is safe.
pub trait PolicyModel: Sync {
    fn vocab(&self) -> &Vocab;

    /// Maximum response length (prompt excluded) this policy will generate.
    fn max_len(&self) -> usize;

    /// Distribution over the next token given the prompt and the response
    /// prefix generated so far.
    fn next_dist(&self, prompt: &TokenSeq, prefix: &TokenSeq) -> Vec<f64>;
}

/// How much of a response a single policy call should produce.
#[derive(Clone, Debug, PartialEq)]
pub enum Granularity {
    /// One token.
    Token,
    /// Up to the given number of tokens (fewer if eos is emitted).
    Chunk(usize),
    /// Tokens until the semantic-boundary rule fires.
    Sentence(SentenceRule),
    /// Tokens until eos or the policy's length cap.
    Response,
}

/// Stand-in for sentence segmentation on toy vocabularies: a segment ends
/// after a designated boundary token, or before a position whose predictive
/// entropy reaches the threshold (the rejection-sampling decoder's
/// uncertainty rule). The boundary check only fires once the segment is
/// non-empty, so every segment makes progress.
#[derive(Clone, Debug, PartialEq)]
pub struct SentenceRule {
    pub boundary_tokens: Vec<TokenId>,
    /// Entropy threshold in nats; positions at least this uncertain start a
    /// new segment.
    pub entropy_threshold: f64,
}

impl Granularity {
    fn validate(&self) -> Result<()> {
        match self {
            Granularity::Chunk(0) => Err(Error::Config("chunk length must be >= 1".to_string())),
            Granularity::Sentence(rule) if rule.entropy_threshold <= 0.0 => Err(Error::Config(
                "sentence entropy threshold must be > 0".to_string(),
            )),
            _ => Ok(()),
        }
    }
}

/// Add-alpha smoothed n-gram language model.
///
/// `P(v | ctx) = (count(ctx, v) + alpha) / (count(ctx, .) + alpha * |V|)`;
/// contexts never seen in training fall back to the uniform smoothed
/// distribution.
///
/// The model is fit on raw token streams (corpus lines), which unlike
/// response sequences may contain eos anywhere.
#[derive(Clone, Debug)]
pub struct NGramLM {
    vocab: Vocab,
    order: usize,
    alpha: f64,
    max_len: usize,
    counts: BTreeMap<Vec<TokenId>, ContextCounts>,
}

#[derive(Clone, Debug, Default)]
struct ContextCounts {
    per_token: BTreeMap<TokenId, u64>,
    total: u64,
}

impl NGramLM {
    /// Fit counts over every length-`order` window of the corpus lines.
    pub fn fit(
        vocab: Vocab,
        corpus: &[Vec<TokenId>],
        order: usize,
        alpha: f64,
        max_len: usize,
    ) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Data(
                "cannot fit an n-gram model on an empty corpus".to_string(),
            ));
        }
        if order == 0 {
            return Err(Error::Config("n-gram order must be >= 1".to_string()));
        }
        if !(alpha > 0.0) {
            return Err(Error::Config("smoothing alpha must be > 0".to_string()));
        }
        if max_len == 0 {
            return Err(Error::Config("max_len must be >= 1".to_string()));
        }
        let mut counts: BTreeMap<Vec<TokenId>, ContextCounts> = BTreeMap::new();
        for line in corpus {
            for &id in line {
                if !vocab.contains(id) {
                    return Err(Error::Vocab(format!("corpus token id {id} out of range")));
                }
            }
            if line.len() < order {
                continue;
            }
            for start in 0..=(line.len() - order) {
                let ctx = line[start..start + order - 1].to_vec();
                let tok = line[start + order - 1];
                let entry = counts.entry(ctx).or_default();
                *entry.per_token.entry(tok).or_insert(0) += 1;
                entry.total += 1;
            }
        }
        Ok(NGramLM {
            vocab,
            order,
            alpha,
            max_len,
            counts,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Windowed counts, keyed by (n-1)-token context, in deterministic order.
    pub fn counts(&self) -> impl Iterator<Item = (&[TokenId], TokenId, u64)> {
        self.counts.iter().flat_map(|(ctx, c)| {
            c.per_token
                .iter()
                .map(move |(&tok, &n)| (ctx.as_slice(), tok, n))
        })
    }

    /// Rebuild a model from previously exported counts (checkpoint loading).
    pub fn from_counts(
        vocab: Vocab,
        order: usize,
        alpha: f64,
        max_len: usize,
        entries: impl IntoIterator<Item = (Vec<TokenId>, TokenId, u64)>,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("n-gram order must be >= 1".to_string()));
        }
        if !(alpha > 0.0) {
            return Err(Error::Config("smoothing alpha must be > 0".to_string()));
        }
        let mut counts: BTreeMap<Vec<TokenId>, ContextCounts> = BTreeMap::new();
        for (ctx, tok, n) in entries {
            if ctx.len() + 1 != order {
                return Err(Error::Data(format!(
                    "context length {} does not match order {order}",
                    ctx.len()
                )));
            }
            for &id in ctx.iter().chain([&tok]) {
                if !vocab.contains(id) {
                    return Err(Error::Vocab(format!("count token id {id} out of range")));
                }
            }
            let entry = counts.entry(ctx).or_default();
            *entry.per_token.entry(tok).or_insert(0) += n;
            entry.total += n;
        }
        Ok(NGramLM {
            vocab,
            order,
            alpha,
            max_len,
            counts,
        })
    }
}

impl PolicyModel for NGramLM {
    fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    fn max_len(&self) -> usize {
        self.max_len
    }

    fn next_dist(&self, prompt: &TokenSeq, prefix: &TokenSeq) -> Vec<f64> {
        let ctx_len = self.order - 1;
        let total_len = prompt.len() + prefix.len();
        let skip = total_len.saturating_sub(ctx_len);
        let mut history: Vec<TokenId> = Vec::with_capacity(ctx_len);
        for (i, &id) in prompt.ids().iter().chain(prefix.ids()).enumerate() {
            if i >= skip {
                history.push(id);
            }
        }
        let size = self.vocab.size();
        let empty = ContextCounts::default();
        let ctx = if history.len() == ctx_len {
            self.counts.get(&history).unwrap_or(&empty)
        } else {
            // Shorter history than the context width: unseen by definition.
            &empty
        };
        let denom = ctx.total as f64 + self.alpha * size as f64;
        (0..size as TokenId)
            .map(|id| {
                let count = ctx.per_token.get(&id).copied().unwrap_or(0);
                (count as f64 + self.alpha) / denom
            })
            .collect()
    }
}

/// Shannon entropy (nats) of the policy's next-token distribution.
pub fn predictive_entropy(policy: &dyn PolicyModel, prompt: &TokenSeq, prefix: &TokenSeq) -> f64 {
    math::entropy(&policy.next_dist(prompt, prefix))
}

/// Rescale a distribution by `1/temperature` in probability space and
/// renormalize. Temperature 1 is the identity.
pub fn apply_temperature(dist: &mut [f64], temperature: f64) {
    if temperature == 1.0 {
        return;
    }
    let inv = 1.0 / temperature;
    let mut sum = 0.0;
    for p in dist.iter_mut() {
        *p = libm::pow(*p, inv);
        sum += *p;
    }
    if sum > 0.0 {
        for p in dist.iter_mut() {
            *p /= sum;
        }
    }
}

/// Draw one token by inverse-CDF over the vocabulary in id order.
pub fn sample_token<R: Rng>(dist: &[f64], rng: &mut R) -> TokenId {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (id, &p) in dist.iter().enumerate() {
        cum += p;
        if u < cum {
            return id as TokenId;
        }
    }
    (dist.len() - 1) as TokenId
}

/// Sample one segment of the requested granularity from the policy.
///
/// The segment always contains at least one token (provided the prefix is
/// below the policy's length cap) and stops early if eos is drawn or the cap
/// is reached. For [`Granularity::Sentence`], the boundary rule is evaluated
/// before each token after the first.
pub fn sample_segment<R: Rng>(
    policy: &dyn PolicyModel,
    prompt: &TokenSeq,
    prefix: &TokenSeq,
    granularity: &Granularity,
    temperature: f64,
    rng: &mut R,
) -> Result<TokenSeq> {
    granularity.validate()?;
    if prefix.is_complete() {
        return Err(Error::State(
            "cannot sample from a complete prefix".to_string(),
        ));
    }
    if !(temperature > 0.0) {
        return Err(Error::Config("temperature must be > 0".to_string()));
    }
    let vocab = policy.vocab();
    let eos = vocab.eos();
    let remaining = policy.max_len().saturating_sub(prefix.len());
    let limit = match granularity {
        Granularity::Token => remaining.min(1),
        Granularity::Chunk(len) => remaining.min(*len),
        Granularity::Sentence(_) | Granularity::Response => remaining,
    };

    let boundary: BTreeSet<TokenId> = match granularity {
        Granularity::Sentence(rule) => rule.boundary_tokens.iter().copied().collect(),
        _ => BTreeSet::new(),
    };

    let mut segment: Vec<TokenId> = Vec::new();
    let mut current = prefix.clone();
    while segment.len() < limit {
        if let Granularity::Sentence(rule) = granularity {
            if !segment.is_empty()
                && predictive_entropy(policy, prompt, &current) >= rule.entropy_threshold
            {
                break;
            }
        }
        let mut dist = policy.next_dist(prompt, &current);
        apply_temperature(&mut dist, temperature);
        let tok = sample_token(&dist, rng);
        segment.push(tok);
        if tok == eos || boundary.contains(&tok) {
            break;
        }
        current = current.concat(&TokenSeq::from_ids(alloc::vec![tok], vocab)?, vocab)?;
    }
    TokenSeq::from_ids(segment, vocab)
}
