//! Token edit distance (insert 1, delete 0) and the radius-bounded
//! neighbourhoods the greedy attack explores.
//!
//! Run with: cargo run --example distances_and_neighbourhoods

use std::path::Path;

use stoktok::adversarial::neighbourhood;
use stoktok::metrics::{normalised_splits, span_match_distance, token_edit_distance};
use stoktok::vocab::{escape_bytes, TokenSeq, Vocabulary};

fn main() -> stoktok::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("rev_vocab.json"), &dir.join("rev_merges.txt"))?;
    let seq = |names: &[&str]| -> TokenSeq {
        let ids: Vec<_> = names
            .iter()
            .map(|n| vocab.id_of(n.as_bytes()).expect("fixture token"))
            .collect();
        TokenSeq::from_ids(&ids, &vocab).expect("valid sequence")
    };

    let whole = seq(&["revolution"]);
    let pairs = [
        seq(&["rev", "olution"]),
        seq(&["re", "vol", "ution"]),
        seq(&["re", "v", "ol", "ution"]),
    ];
    println!("distances from (revolution):");
    for u in &pairs {
        let d = token_edit_distance(&whole, u, &vocab)?;
        let alpha = normalised_splits(u, &whole)?;
        println!("  d = {d}, normalised splits = {alpha}: {}", render(&vocab, u));
        assert_eq!(d, span_match_distance(&whole, u, &vocab)?);
    }
    // Shared spans cost nothing: only the re-segmented region counts.
    let a = seq(&["re", "v", "ol", "ution"]);
    let b = seq(&["re", "vol", "ution"]);
    println!(
        "  d({}, {}) = {}",
        render(&vocab, &a),
        render(&vocab, &b),
        token_edit_distance(&a, &b, &vocab)?
    );

    let start = seq(&["rev", "olution"]);
    let neigh = neighbourhood(&start, b"revolution", &vocab, 2)?;
    println!(
        "\nradius-2 neighbourhood of {} ({} members):",
        render(&vocab, &start),
        neigh.len()
    );
    for u in &neigh {
        println!(
            "  d = {}: {}",
            span_match_distance(&start, u, &vocab)?,
            render(&vocab, u)
        );
    }
    let wide = neighbourhood(&start, b"revolution", &vocab, 4)?;
    println!("radius-4 closure: {} members", wide.len());
    Ok(())
}

fn render(vocab: &Vocabulary, seq: &TokenSeq) -> String {
    seq.ids()
        .iter()
        .map(|&id| escape_bytes(vocab.bytes_of(id).unwrap()))
        .collect::<Vec<_>>()
        .join("-")
}
