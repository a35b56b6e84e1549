//! Vocabularies, token sequences, and preference pairs.
//!
//! These are the value types every other module shares. A [`TokenSeq`] is a
//! finite list of token ids with a completion flag; the end-of-sequence
//! token may only occur as a trailing run, which is what makes eos-padding
//! for equal-length comparisons well-formed. All types are immutable values
//! and safe to share across threads.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Index of a token within a [`Vocab`]. Ids are dense: `0..vocab.size()`.
pub type TokenId = u32;

/// An ordered set of distinct token symbols with a designated
/// end-of-sequence token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    eos: TokenId,
}

impl Vocab {
    /// Build a vocabulary from distinct symbols; `eos` must be one of them.
    pub fn new<I, S>(tokens: I, eos: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if tokens.len() < 2 {
            return Err(Error::Config(format!(
                "vocabulary needs at least 2 tokens, got {}",
                tokens.len()
            )));
        }
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Config(format!(
                    "token {i:?} is empty or contains whitespace: {tok:?}"
                )));
            }
            if tokens[..i].contains(tok) {
                return Err(Error::Config(format!("duplicate token symbol {tok:?}")));
            }
        }
        let eos_id = tokens
            .iter()
            .position(|t| t == eos)
            .ok_or_else(|| Error::Config(format!("eos symbol {eos:?} not in vocabulary")))?;
        Ok(Vocab {
            tokens,
            eos: eos_id as TokenId,
        })
    }

    /// Number of tokens.
    pub fn size(&self) -> usize {
        self.tokens.len()
    }

    /// Id of the end-of-sequence token.
    pub fn eos(&self) -> TokenId {
        self.eos
    }

    /// Whether `id` is a valid token id.
    pub fn contains(&self, id: TokenId) -> bool {
        (id as usize) < self.tokens.len()
    }

    /// The symbol for `id`.
    pub fn symbol(&self, id: TokenId) -> Result<&str> {
        self.tokens
            .get(id as usize)
            .map(String::as_str)
            .ok_or_else(|| Error::Vocab(format!("token id {id} out of range")))
    }

    /// The id for `symbol`.
    pub fn id(&self, symbol: &str) -> Result<TokenId> {
        self.tokens
            .iter()
            .position(|t| t == symbol)
            .map(|i| i as TokenId)
            .ok_or_else(|| Error::Vocab(format!("unknown token {symbol:?}")))
    }

    /// All token symbols in id order.
    pub fn symbols(&self) -> &[String] {
        &self.tokens
    }

    /// Ids that are not the eos token, in ascending order.
    pub fn non_eos_ids(&self) -> impl Iterator<Item = TokenId> + '_ {
        (0..self.tokens.len() as TokenId).filter(move |&id| id != self.eos)
    }

    /// Tokenize whitespace-separated symbols into a sequence.
    pub fn encode(&self, text: &str) -> Result<TokenSeq> {
        let ids: Vec<TokenId> = text
            .split_whitespace()
            .map(|sym| self.id(sym))
            .collect::<Result<_>>()?;
        TokenSeq::from_ids(ids, self)
    }

    /// Render a sequence as whitespace-separated symbols.
    pub fn render(&self, seq: &TokenSeq) -> Result<String> {
        let mut out = String::new();
        for (i, &id) in seq.ids().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(self.symbol(id)?);
        }
        Ok(out)
    }
}

/// A finite token sequence with a completion flag.
///
/// A sequence is complete when it ends with eos or when a decoder marked it
/// complete at its length limit. The eos token may only appear as a trailing
/// run, so `[a, b, eos, eos]` (a padded sequence) is valid while
/// `[a, eos, b]` is not.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TokenSeq {
    ids: Vec<TokenId>,
    complete: bool,
}

impl TokenSeq {
    /// The empty, incomplete sequence.
    pub fn empty() -> Self {
        TokenSeq {
            ids: Vec::new(),
            complete: false,
        }
    }

    /// Validate `ids` against `vocab` and derive completeness.
    pub fn from_ids(ids: Vec<TokenId>, vocab: &Vocab) -> Result<Self> {
        let eos = vocab.eos();
        let mut seen_eos = false;
        for &id in &ids {
            if !vocab.contains(id) {
                return Err(Error::Vocab(format!("token id {id} out of range")));
            }
            if seen_eos && id != eos {
                return Err(Error::State(
                    "eos must be a trailing run; found a token after eos".to_string(),
                ));
            }
            if id == eos {
                seen_eos = true;
            }
        }
        let complete = ids.last() == Some(&eos);
        Ok(TokenSeq { ids, complete })
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Whether the sequence has been terminated (eos or length limit).
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Mark a sequence complete (used when a decoder hits its length limit).
    pub fn mark_complete(&mut self) {
        self.complete = true;
    }

    /// The ids with any trailing eos run removed.
    pub fn body(&self, eos: TokenId) -> &[TokenId] {
        let mut end = self.ids.len();
        while end > 0 && self.ids[end - 1] == eos {
            end -= 1;
        }
        &self.ids[..end]
    }

    /// The first `min(t, len)` tokens.
    ///
    /// `t` past the end clamps to the full sequence, so one prefix-length
    /// grid can be applied to a whole variable-length dataset. The result is
    /// complete only when it covers a complete sequence entirely.
    pub fn prefix(&self, t: usize) -> TokenSeq {
        let take = t.min(self.ids.len());
        TokenSeq {
            ids: self.ids[..take].to_vec(),
            complete: take == self.ids.len() && self.complete,
        }
    }

    /// The tokens after the first `min(t, len)` — the complement of
    /// [`TokenSeq::prefix`], carrying the original completion state.
    pub fn suffix(&self, t: usize) -> TokenSeq {
        let skip = t.min(self.ids.len());
        TokenSeq {
            ids: self.ids[skip..].to_vec(),
            complete: self.complete,
        }
    }

    /// Extend to exactly `len` tokens with `pad_id`.
    ///
    /// Fails if `len` is shorter than the sequence, or if padding would put
    /// a non-eos token after an eos.
    pub fn pad_to(&self, len: usize, pad_id: TokenId, vocab: &Vocab) -> Result<TokenSeq> {
        if len < self.ids.len() {
            return Err(Error::Length(format!(
                "cannot pad a {}-token sequence down to {len}",
                self.ids.len()
            )));
        }
        if !vocab.contains(pad_id) {
            return Err(Error::Vocab(format!("pad token id {pad_id} out of range")));
        }
        let mut ids = self.ids.clone();
        ids.resize(len, pad_id);
        TokenSeq::from_ids(ids, vocab)
    }

    /// Concatenate a segment onto an incomplete prefix.
    ///
    /// Completeness is re-evaluated: the result is complete iff the segment
    /// ends with eos.
    pub fn concat(&self, segment: &TokenSeq, vocab: &Vocab) -> Result<TokenSeq> {
        if self.complete {
            return Err(Error::State(
                "cannot extend a complete sequence".to_string(),
            ));
        }
        let mut ids = self.ids.clone();
        ids.extend_from_slice(&segment.ids);
        TokenSeq::from_ids(ids, vocab)
    }
}

impl fmt::Display for TokenSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, id) in self.ids.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "]{}", if self.complete { "!" } else { "" })
    }
}

/// A prompt with a preferred and a dispreferred response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreferencePair {
    pub prompt: TokenSeq,
    pub chosen: TokenSeq,
    pub rejected: TokenSeq,
}

impl PreferencePair {
    /// Build a pair; the two responses must be non-empty and distinct.
    pub fn new(prompt: TokenSeq, chosen: TokenSeq, rejected: TokenSeq) -> Result<Self> {
        if chosen.is_empty() || rejected.is_empty() {
            return Err(Error::Data("preference responses must be non-empty".to_string()));
        }
        if chosen == rejected {
            return Err(Error::Data(
                "chosen and rejected responses are identical".to_string(),
            ));
        }
        Ok(PreferencePair {
            prompt,
            chosen,
            rejected,
        })
    }

    /// The longer of the two response lengths — the truncation horizon.
    pub fn horizon(&self) -> usize {
        self.chosen.len().max(self.rejected.len())
    }
}

/// A preference pair truncated at prefix length `t`, with a training weight.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialPair {
    pub prompt: TokenSeq,
    pub chosen_prefix: TokenSeq,
    pub rejected_prefix: TokenSeq,
    /// Requested prefix length; prefixes clamp at each response's length.
    pub t: usize,
    /// Non-negative training weight (1.0 until a weighting pass runs).
    pub weight: f64,
    /// Index of the source pair in the parent dataset.
    pub parent: usize,
}

impl PartialPair {
    /// Truncate `pair` at prefix length `t >= 1`.
    pub fn from_pair(pair: &PreferencePair, parent: usize, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Config("prefix length t must be >= 1".to_string()));
        }
        Ok(PartialPair {
            prompt: pair.prompt.clone(),
            chosen_prefix: pair.chosen.prefix(t),
            rejected_prefix: pair.rejected.prefix(t),
            t,
            weight: 1.0,
            parent,
        })
    }

    /// Whether the two prefixes coincide (the comparison is vacuous).
    pub fn is_degenerate(&self) -> bool {
        self.chosen_prefix == self.rejected_prefix
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abc() -> Vocab {
        Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap()
    }

    fn seq(v: &Vocab, text: &str) -> TokenSeq {
        v.encode(text).unwrap()
    }

    #[test]
    fn vocab_rejects_bad_input() {
        assert!(matches!(Vocab::new(["a"], "a"), Err(Error::Config(_))));
        assert!(matches!(
            Vocab::new(["a", "a", "<eos>"], "<eos>"),
            Err(Error::Config(_))
        ));
        assert!(matches!(Vocab::new(["a", "b"], "x"), Err(Error::Config(_))));
        assert!(matches!(
            Vocab::new(["a b", "<eos>"], "<eos>"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn encode_render_roundtrip() {
        let v = abc();
        let s = seq(&v, "a b c <eos>");
        assert_eq!(s.ids(), &[1, 2, 3, 0]);
        assert!(s.is_complete());
        assert_eq!(v.render(&s).unwrap(), "a b c <eos>");
        assert!(matches!(v.encode("a z"), Err(Error::Vocab(_))));
    }

    #[test]
    fn eos_must_be_trailing() {
        let v = abc();
        assert!(TokenSeq::from_ids(vec![1, 0, 2], &v).is_err());
        assert!(TokenSeq::from_ids(vec![1, 0, 0], &v).is_ok());
        assert!(matches!(
            TokenSeq::from_ids(vec![9], &v),
            Err(Error::Vocab(_))
        ));
    }

    #[test]
    fn prefix_examples() {
        let v = abc();
        let s = seq(&v, "a b c");
        assert_eq!(s.prefix(2).ids(), &[1, 2]);
        assert_eq!(seq(&v, "a b").prefix(5).ids(), &[1, 2]);
        assert_eq!(seq(&v, "a").prefix(1).ids(), &[1]);
    }

    #[test]
    fn prefix_completeness() {
        let v = abc();
        let s = seq(&v, "a b <eos>");
        assert!(!s.prefix(2).is_complete());
        assert!(s.prefix(3).is_complete());
        assert!(s.prefix(10).is_complete());
        // An incomplete sequence stays incomplete even when fully covered.
        assert!(!seq(&v, "a b").prefix(2).is_complete());
    }

    #[test]
    fn pad_to_examples() {
        let v = abc();
        let eos = v.eos();
        let padded = seq(&v, "a b").pad_to(4, eos, &v).unwrap();
        assert_eq!(padded.ids(), &[1, 2, 0, 0]);
        assert_eq!(seq(&v, "a b").pad_to(2, eos, &v).unwrap().ids(), &[1, 2]);
        assert_eq!(TokenSeq::empty().pad_to(1, eos, &v).unwrap().ids(), &[0]);
        assert!(matches!(
            seq(&v, "a b c").pad_to(2, eos, &v),
            Err(Error::Length(_))
        ));
        // Padding a complete sequence with a non-eos token breaks the
        // trailing-run invariant.
        assert!(seq(&v, "a <eos>").pad_to(4, 2, &v).is_err());
    }

    #[test]
    fn concat_examples() {
        let v = abc();
        let joined = seq(&v, "a").concat(&seq(&v, "b c"), &v).unwrap();
        assert_eq!(joined.ids(), &[1, 2, 3]);
        assert!(!joined.is_complete());
        assert_eq!(
            TokenSeq::empty().concat(&seq(&v, "a"), &v).unwrap().ids(),
            &[1]
        );
        let done = seq(&v, "a").concat(&seq(&v, "<eos>"), &v).unwrap();
        assert_eq!(done.ids(), &[1, 0]);
        assert!(done.is_complete());
        assert!(matches!(
            done.concat(&seq(&v, "a"), &v),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn body_strips_trailing_eos_run() {
        let v = abc();
        let s = seq(&v, "a b").pad_to(5, v.eos(), &v).unwrap();
        assert_eq!(s.body(v.eos()), &[1, 2]);
        assert_eq!(seq(&v, "a b").body(v.eos()), &[1, 2]);
        assert!(seq(&v, "<eos>").body(v.eos()).is_empty());
    }

    #[test]
    fn preference_pair_invariants() {
        let v = abc();
        let p = seq(&v, "a");
        assert!(PreferencePair::new(p.clone(), seq(&v, "b"), seq(&v, "b")).is_err());
        assert!(PreferencePair::new(p.clone(), TokenSeq::empty(), seq(&v, "b")).is_err());
        let pair = PreferencePair::new(p, seq(&v, "b c"), seq(&v, "c")).unwrap();
        assert_eq!(pair.horizon(), 2);
    }

    #[test]
    fn partial_pair_clamps() {
        let v = abc();
        let pair =
            PreferencePair::new(seq(&v, "a"), seq(&v, "b c a"), seq(&v, "c b")).unwrap();
        let part = PartialPair::from_pair(&pair, 0, 3).unwrap();
        assert_eq!(part.chosen_prefix.len(), 3);
        assert_eq!(part.rejected_prefix.len(), 2);
        assert!(PartialPair::from_pair(&pair, 0, 0).is_err());
        let shared =
            PreferencePair::new(seq(&v, "a"), seq(&v, "b c"), seq(&v, "b a")).unwrap();
        assert!(PartialPair::from_pair(&shared, 0, 1).unwrap().is_degenerate());
        assert!(!PartialPair::from_pair(&shared, 0, 2).unwrap().is_degenerate());
    }

    fn arb_seq() -> impl Strategy<Value = (Vocab, TokenSeq)> {
        // Bodies over {a, b, c}, optionally eos-terminated.
        (proptest::collection::vec(1u32..4, 0..12), proptest::bool::ANY).prop_map(
            |(mut ids, terminate)| {
                let v = Vocab::new(["<eos>", "a", "b", "c"], "<eos>").unwrap();
                if terminate {
                    ids.push(0);
                }
                let s = TokenSeq::from_ids(ids, &v).unwrap();
                (v, s)
            },
        )
    }

    proptest! {
        #[test]
        fn prefix_of_prefix_is_min((_v, s) in arb_seq(), u in 0usize..16, t in 0usize..16) {
            prop_assert_eq!(s.prefix(u).prefix(t), s.prefix(u.min(t)));
        }

        #[test]
        fn pad_preserves_content((v, s) in arb_seq(), extra in 0usize..6) {
            let target = s.len() + extra;
            if let Ok(p) = s.pad_to(target, v.eos(), &v) {
                prop_assert_eq!(p.len(), target);
                let head = p.prefix(s.len());
                prop_assert_eq!(head.ids(), s.ids());
            }
        }

        #[test]
        fn concat_splits_roundtrip((v, s) in arb_seq(), t in 0usize..16) {
            let head = s.prefix(t);
            let tail = s.suffix(t);
            if !head.is_complete() {
                prop_assert_eq!(head.concat(&tail, &v).unwrap(), s);
            } else {
                // A complete head means the split point covered the whole
                // sequence; the tail must then be empty.
                prop_assert!(tail.is_empty());
            }
        }
    }
}
