//! Emotion-controlled response generation by simulated annealing.
//!
//! A response is first decoded by (diverse) beam search over a conditional
//! scorer, then edited word by word (replace, insert, delete) to maximize
//!
//! ```text
//! log f(y; x, e) = log P_cond(y | x) + alpha * log P_emo(e | y)
//! ```
//!
//! The conditional scorer is an interpolated n-gram model mixed with an
//! IBM Model 1 lexical translation table; the emotion posterior comes from a
//! multinomial naive Bayes classifier over six labels.
//!
//! Module map:
//!
//! - [`corpus`]: tokenization, labeled dialogue files, vocabulary
//! - [`lm`]: n-gram fluency model, IBM-1 table, the mixed [`lm::ConditionalScorer`]
//! - [`emotion`]: naive Bayes emotion posterior
//! - [`objective`]: the search objective in log space
//! - [`decode`]: beam search and diverse beam search for the initial candidate
//! - [`anneal`]: the simulated-annealing edit search with replayable traces
//! - [`eval`]: BLEU, Dist-n, emotion accuracy, embedding metrics, alpha sweeps
//! - [`pipeline`]: trained-model bundle and the end-to-end decode + anneal run
//! - [`config`]: flat `key=value` run configuration
//! - [`synth`]: deterministic synthetic emotional dialogue corpus
//!
//! Runnable walkthroughs live in the crate's `examples/` directory, e.g.
//! `cargo run -p emoanneal --example end_to_end`.

pub mod anneal;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod decode;
pub mod emotion;
mod error;
pub mod eval;
pub mod lm;
pub mod objective;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

/// Index into a [`corpus::Vocabulary`].
pub type TokenId = u32;
