//! Exact enumeration, counting, and uniform sampling over all valid
//! tokenisations of a string.
//!
//! Run with: cargo run --example counting_and_enumeration

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stoktok::enumerate::{count_tokenisations, enumerate_all, SegmentationDag};
use stoktok::vocab::{escape_bytes, Vocabulary};

fn main() -> stoktok::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("sec2_vocab.json"), &dir.join("sec2_merges.txt"))?;

    let text = b"revolution";
    let all = enumerate_all(text, &vocab, usize::MAX)?;
    println!("|T_V(\"revolution\")| = {} over the compact fixture:", all.len());
    for seq in &all {
        let rendered: Vec<String> = seq
            .ids()
            .iter()
            .map(|&id| escape_bytes(vocab.bytes_of(id).unwrap()))
            .collect();
        println!("  {}", rendered.join("-"));
    }
    assert_eq!(
        num_bigint::BigUint::from(all.len()),
        count_tokenisations(text, &vocab)
    );

    // Counts grow roughly like 2^(n-1); the DP handles sizes the
    // enumeration oracle never could.
    let mut tokens = Vec::new();
    let big = b"abcdefghijklmnopqrstuvwxyzabcdefghijklmnopqrstuvwxyz";
    for i in 0..big.len() {
        for j in i + 1..=(i + 8).min(big.len()) {
            tokens.push(big[i..j].to_vec());
        }
    }
    let wide = Vocabulary::from_tokens(tokens)?;
    println!(
        "\n52-byte string over a substring-rich vocabulary: {} tokenisations",
        count_tokenisations(big, &wide)
    );

    // The segmentation DAG samples exactly uniformly using integer-ratio
    // branching on the same path counts.
    let dag = SegmentationDag::build(text, &vocab);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("\nfive uniform draws:");
    for _ in 0..5 {
        let seq = dag.sample_uniform(&mut rng);
        println!("  {}", seq.id_key());
    }
    Ok(())
}
