#![allow(dead_code)]
//! Shared fixtures and brute-force oracles for the integration suites.
//! Everything here is independent of the library's DP/sampling paths: the
//! oracles enumerate outcomes directly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use stoktok::vocab::{SplitMap, TokenId, Vocabulary};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load_fixture_vocab(stem: &str) -> Vocabulary {
    let dir = fixture_dir();
    Vocabulary::load(
        &dir.join(format!("{stem}_vocab.json")),
        &dir.join(format!("{stem}_merges.txt")),
    )
    .expect("fixture vocabulary loads")
}

/// Vocabulary containing every substring of `text`.
pub fn all_substring_vocab(text: &[u8]) -> Vocabulary {
    let mut tokens = Vec::new();
    for i in 0..text.len() {
        for j in i + 1..=text.len() {
            tokens.push(text[i..j].to_vec());
        }
    }
    Vocabulary::from_tokens(tokens).expect("substring vocabulary")
}

/// Random small vocabulary over a tiny alphabet: all single bytes plus a
/// handful of random multi-byte tokens.
pub fn random_vocab<R: Rng>(rng: &mut R, alphabet: &[u8], multi_tokens: usize) -> Vocabulary {
    let mut tokens: Vec<Vec<u8>> = Vec::new();
    for _ in 0..multi_tokens {
        let len = rng.gen_range(2..=4);
        let tok: Vec<u8> = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect();
        if !tokens.contains(&tok) {
            tokens.push(tok);
        }
    }
    Vocabulary::from_tokens(tokens).expect("random vocabulary")
}

pub fn random_text<R: Rng>(rng: &mut R, alphabet: &[u8], max_len: usize) -> Vec<u8> {
    let len = rng.gen_range(1..=max_len);
    (0..len)
        .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
        .collect()
}

pub fn id_key(ids: &[TokenId]) -> String {
    ids.iter()
        .map(|id| id.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

/// Exact pmf of StochasTok's output after `iterations` random
/// (position, decomposition) choices, by enumerating every choice trace
/// with rational probabilities.
pub fn stochastok_trace_pmf(
    canonical: &[TokenId],
    split_map: &SplitMap,
    iterations: usize,
) -> BTreeMap<String, BigRational> {
    let mut pmf = BTreeMap::new();
    trace(
        canonical.to_vec(),
        BigRational::one(),
        iterations,
        split_map,
        &mut pmf,
    );
    pmf
}

fn trace(
    state: Vec<TokenId>,
    p: BigRational,
    iterations: usize,
    split_map: &SplitMap,
    pmf: &mut BTreeMap<String, BigRational>,
) {
    if iterations == 0 || state.is_empty() {
        let slot = pmf.entry(id_key(&state)).or_insert_with(BigRational::zero);
        *slot += p;
        return;
    }
    let p_pos = p / BigRational::from(BigInt::from(state.len()));
    for i in 0..state.len() {
        let decomps = split_map.splits(state[i]);
        if decomps.is_empty() {
            trace(state.clone(), p_pos.clone(), iterations - 1, split_map, pmf);
            continue;
        }
        let p_decomp = p_pos.clone() / BigRational::from(BigInt::from(decomps.len()));
        for decomp in decomps {
            let mut next = Vec::with_capacity(state.len() + decomp.len() - 1);
            next.extend_from_slice(&state[..i]);
            next.extend_from_slice(decomp);
            next.extend_from_slice(&state[i + 1..]);
            trace(next, p_decomp.clone(), iterations - 1, split_map, pmf);
        }
    }
}

/// Renders an exact pmf as the f64 map used by `metrics::tv_distance`.
pub fn pmf_to_f64(pmf: &BTreeMap<String, BigRational>) -> BTreeMap<String, f64> {
    pmf.iter()
        .map(|(k, v)| {
            (
                k.clone(),
                num_traits::ToPrimitive::to_f64(v).expect("pmf value fits f64"),
            )
        })
        .collect()
}
