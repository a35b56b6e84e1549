//! Desk-scale laboratory for process reward models and reward-guided text
//! search over finite vocabularies.
//!
//! The crate is organised around a handful of small, composable pieces:
//!
//! - [`seq`] — vocabularies, token sequences, and preference pairs, plus the
//!   prefix/padding arithmetic everything else is built on.
//! - [`policy`] — the [`policy::PolicyModel`] trait and a smoothed n-gram
//!   reference implementation that generates candidate segments.
//! - [`reward`] — the [`reward::RewardModel`] trait, a provably
//!   score-consistent lexicographic oracle, a trainable featurized scorer,
//!   and brute-force search oracles.
//! - [`dataset`] — preference datasets, the token-level and stochastic
//!   truncation builders for partial-sequence data, and a synthetic corpus
//!   generator with oracle labels.
//! - [`train`] — Bradley-Terry losses (plain and confidence-weighted),
//!   reference-model weighting, and gradient-descent training.
//! - [`search`] — the general reward-guided beam engine and the four
//!   concrete decoders (greedy token reranking, chunk beam search,
//!   entropy-segmented rejection sampling, best-of-n).
//! - [`metrics`] — agreement-rate diagnostics, reward-gap curves, and the
//!   n-gram diversity score.
//!
//! All models are frozen after construction, every type is an immutable
//! value, and all randomness flows through [`rng`] substreams derived from a
//! single root seed, so every experiment is bit-reproducible.
//!
//! The crate is `no_std`-compatible (with `alloc`); file formats, IO, and
//! the command-line surface live in the companion `prmlab` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod dataset;
mod error;
pub(crate) mod math;
pub mod metrics;
pub mod policy;
pub mod reward;
pub mod rng;
pub mod search;
pub mod seq;
pub mod train;

pub use error::{Error, Result};
pub use seq::{PartialPair, PreferencePair, TokenId, TokenSeq, Vocab};
