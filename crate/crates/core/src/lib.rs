//! Loose counterfactual generation for polarity-labeled text.
//!
//! The pieces: a word-level tokenizer and dataset I/O ([`text`]), smoothed
//! n-gram language models behind a pluggable interface ([`lm`]), CNF
//! lexical constraints with incremental partial-match tracking
//! ([`constraints`]), a constrained beam-search decoder ([`decoder`]),
//! lexicon-backed concept extraction and alteration ([`concepts`]),
//! polarity scoring ([`sentiment`]), prompt construction ([`prompts`]),
//! intrinsic similarity metrics ([`metrics`]), and the end-to-end
//! augmentation pipeline ([`pipeline`]).

pub mod concepts;
pub mod constraints;
pub mod decoder;
pub mod lm;
pub mod metrics;
pub mod pipeline;
pub mod prompts;
pub mod runconfig;
pub mod sentiment;
pub mod text;

pub use decoder::{decode, DecoderConfig, Generation};
pub use text::{tokenize, Casing, LabeledExample, Polarity, Token, Vocabulary};
