//! Canonical BPE encoding, decoding, and BPE-dropout.
//!
//! Run with: cargo run --example encode_decode

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stoktok::vocab::{bpe_dropout_encode, decode, encode_canonical, escape_bytes, Vocabulary};

fn main() -> stoktok::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("rev_vocab.json"), &dir.join("rev_merges.txt"))?;
    println!(
        "loaded {} tokens ({} multi-byte)",
        vocab.len(),
        vocab.multi_byte_count()
    );

    let show = |label: &str, seq: &stoktok::TokenSeq| {
        let rendered: Vec<String> = seq
            .ids()
            .iter()
            .map(|&id| escape_bytes(vocab.bytes_of(id).unwrap()))
            .collect();
        println!("{label:<22} {}", rendered.join(" | "));
    };

    let text = b"revolution evolution";
    show("canonical:", &encode_canonical(text, &vocab, false));
    show("pretokenised:", &encode_canonical(text, &vocab, true));

    // BPE-dropout skips each merge application with probability p, so the
    // same sentence tokenises differently per draw while always decoding
    // back to the original bytes.
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p_drop in [0.0, 0.3, 1.0] {
        let seq = bpe_dropout_encode(text, &vocab, p_drop, false, &mut rng)?;
        show(&format!("dropout p={p_drop}:"), &seq);
        assert_eq!(decode(&seq, &vocab)?, text);
    }
    Ok(())
}
