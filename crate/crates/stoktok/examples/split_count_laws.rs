//! The split-count distributions each scheme induces: Dirichlet-
//! multinomial counts from the Polya urn, the binomial law of full
//! uniform sampling, and the generating-function conditionals of
//! uniform-k.
//!
//! Run with: cargo run --example split_count_laws

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stoktok::metrics::{
    binomial_split_pmf, dirmult_pmf, split_count_polynomials,
};
use stoktok::samplers::{sample_split_counts, Sampler, SamplerSpec, Scheme, SplitCounts};
use stoktok::vocab::{encode_canonical, Vocabulary};

fn main() -> stoktok::Result<()> {
    // Polya urn draws against the closed form 1/C(N+m-1, m-1).
    let (n, m, draws) = (2usize, 2usize, 50_000u32);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut hits: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
    for _ in 0..draws {
        *hits
            .entry(sample_split_counts(n, m, &mut rng).counts().to_vec())
            .or_insert(0) += 1;
    }
    println!("urn draws vs DirMult({n}, 1) over {m} tokens:");
    for (counts, hit) in &hits {
        let exact = dirmult_pmf(&SplitCounts::new(counts.clone()), n, m)
            .to_f64()
            .unwrap();
        println!(
            "  S = {counts:?}: empirical {:.4}, exact {exact:.4}",
            f64::from(*hit) / f64::from(draws)
        );
    }

    // Full uniform sampling over an all-substring vocabulary flips a fair
    // coin at every internal boundary: S ~ Binom(L-1, 1/2).
    let word = b"abcdefgh";
    let mut tokens = Vec::new();
    for i in 0..word.len() {
        for j in i + 1..=word.len() {
            tokens.push(word[i..j].to_vec());
        }
    }
    let vocab = Vocabulary::from_tokens(tokens)?;
    let mut sampler = Sampler::new(&vocab, SamplerSpec::new(Scheme::Uniform))?;
    let mut splits = vec![0u32; word.len()];
    for _ in 0..draws {
        let s = sampler.sample(word, false, &mut rng)?;
        splits[s.seq.len() - 1] += 1;
    }
    println!("\nuniform splits of an {}-byte token vs Binom({}, 1/2):", word.len(), word.len() - 1);
    for (s, hit) in splits.iter().enumerate() {
        let exact = binomial_split_pmf(s, word.len()).to_f64().unwrap();
        if exact > 0.0 {
            println!(
                "  S = {s}: empirical {:.4}, exact {exact:.4}",
                f64::from(*hit) / f64::from(draws)
            );
        }
    }

    // Uniform-k induces a different per-token law; its conditionals come
    // from per-token polynomials A_i and their products.
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let rev = Vocabulary::load(&dir.join("rev_vocab.json"), &dir.join("rev_merges.txt"))?;
    let canonical = encode_canonical(b"revolution evolution", &rev, true);
    let dist = split_count_polynomials(&canonical, &rev)?;
    println!("\nwithin-boundary split polynomials of \"revolution evolution\":");
    for i in 0..dist.num_tokens() {
        let coeffs: Vec<String> = dist.token_poly(i).iter().map(|c| c.to_string()).collect();
        println!("  A_{i}(x) coefficients: [{}]", coeffs.join(", "));
    }
    let k = 3;
    println!("conditionals Pr(S_i = s | total = {k}):");
    for i in 0..dist.num_tokens() {
        let pmf = dist.conditional_pmf(i, k).expect("k feasible");
        let rendered: Vec<String> = pmf
            .iter()
            .enumerate()
            .filter(|(_, p)| !num_traits::Zero::is_zero(*p))
            .map(|(s, p)| format!("{s}:{}", p))
            .collect();
        println!("  token {i}: {}", rendered.join("  "));
    }
    Ok(())
}
