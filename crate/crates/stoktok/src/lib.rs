//! Byte-level BPE tokenisation with stochastic segmentation schemes.
//!
//! This crate implements:
//!
//! - a byte-level BPE vocabulary with canonical encoding/decoding, split
//!   maps, and BPE-dropout ([`vocab`]);
//! - exact enumeration, counting, and uniform sampling over the set of all
//!   valid tokenisations of a string, including restrictions to a fixed
//!   segment count per token and a fixed edit distance from a reference
//!   tokenisation ([`enumerate`]);
//! - the stochastic tokenisation schemes `stochastok`, `stochastok-uni`,
//!   `uniform-k`, `uniform`, and `bpe-dropout` ([`samplers`]);
//! - token-level edit distances, split-count statistics, and the
//!   theoretical split-count distributions each scheme induces
//!   ([`metrics`]);
//! - radius-bounded tokenisation neighbourhoods, a greedy adversarial
//!   search over them, and a multiple-choice evaluation harness with a
//!   pluggable scorer ([`adversarial`]);
//! - a batch CLI over all of the above ([`cli`]).
//!
//! Start with the runnable programs under `examples/`; each one walks
//! through a major capability end to end.
//!
//! ```
//! use rand::SeedableRng;
//! use stoktok::samplers::{Sampler, SamplerSpec, Scheme};
//! use stoktok::vocab::{decode, Vocabulary};
//!
//! let vocab = Vocabulary::from_tokens(["ab", "ba", "aba"]).unwrap();
//! let mut sampler = Sampler::new(&vocab, SamplerSpec::new(Scheme::Uniform)).unwrap();
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//!
//! let drawn = sampler.sample(b"abab", false, &mut rng).unwrap();
//! assert_eq!(decode(&drawn.seq, &vocab).unwrap(), b"abab");
//! ```

pub mod adversarial;
pub mod cli;
pub mod enumerate;
pub mod metrics;
pub mod samplers;
pub mod trie;
pub mod vocab;

pub use vocab::{TokenId, TokenSeq, Vocabulary};

use thiserror::Error;

/// Derives an effective seed for work item `index` from a base seed via
/// one splitmix64 step. Batch runs use this so the result of item `i`
/// never depends on the degree of parallelism.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut x = seed.wrapping_add(index.wrapping_mul(0x9e3779b97f4a7c15));
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Errors produced by any operation in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid vocabulary: {0}")]
    InvalidVocab(String),

    #[error("unknown token id {0}")]
    UnknownToken(TokenId),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("input of {len} bytes exceeds the enumeration guard of {max} bytes")]
    GuardExceeded { len: usize, max: usize },

    #[error("no tokenisation with {requested} segments")]
    NoPathOfLength { requested: usize },

    #[error("no tokenisation at edit distance {k}")]
    EmptyDistanceLayer { k: usize },

    #[error("token sequences do not decode to the same string")]
    StringMismatch,

    #[error("token span {0}..{1} crosses a canonical token boundary")]
    BoundaryCrossing(usize, usize),

    #[error("canonical token sequence is empty")]
    EmptyCanonical,

    #[error("histogram needs at least one draw")]
    ZeroDraws,

    #[error("scorer: {0}")]
    Scorer(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
