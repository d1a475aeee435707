//! StochasTok's sampling bias versus the uniform two-stage sampler.
//!
//! Conditioned on producing four segments of "revolution", StochasTok
//! concentrates on low-branching split paths and misses tokenisations it
//! cannot reach through pairwise splits, while stochastok-uni covers all
//! of them with equal probability.
//!
//! Run with: cargo run --example stochastok_bias

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stoktok::enumerate::enumerate_all;
use stoktok::samplers::{Sampler, SamplerSpec, Scheme};
use stoktok::vocab::{escape_bytes, Vocabulary};

fn main() -> stoktok::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("rev_vocab.json"), &dir.join("rev_merges.txt"))?;
    let text = b"revolution";
    let draws = 50_000u32;

    let conditional = |scheme: Scheme| -> stoktok::Result<BTreeMap<String, f64>> {
        let spec = SamplerSpec::new(scheme).with_alpha(3.0);
        let mut sampler = Sampler::new(&vocab, spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits: BTreeMap<String, u32> = BTreeMap::new();
        let mut kept = 0u32;
        for _ in 0..draws {
            let s = sampler.sample(text, false, &mut rng)?;
            if s.seq.len() == 4 {
                *hits.entry(render(&vocab, s.seq.ids())).or_insert(0) += 1;
                kept += 1;
            }
        }
        Ok(hits
            .into_iter()
            .map(|(k, c)| (k, f64::from(c) / f64::from(kept)))
            .collect())
    };

    let biased = conditional(Scheme::StochasTok)?;
    let uniform = conditional(Scheme::StochasTokUni)?;
    let support: usize = enumerate_all(text, &vocab, usize::MAX)?
        .iter()
        .filter(|s| s.len() == 4)
        .count();

    println!("4-segment tokenisations of \"revolution\": {support}");
    println!("{:<22} {:>10} {:>14}", "segmentation", "stochastok", "stochastok-uni");
    for (key, p_uni) in &uniform {
        let p_stok = biased.get(key).copied().unwrap_or(0.0);
        println!("{key:<22} {p_stok:>10.4} {p_uni:>14.4}");
    }
    println!(
        "\nstochastok support: {} of {} outcomes (missing ones are unreachable by pair splits)",
        biased.len(),
        support
    );
    Ok(())
}

fn render(vocab: &Vocabulary, ids: &[stoktok::TokenId]) -> String {
    ids.iter()
        .map(|&id| escape_bytes(vocab.bytes_of(id).unwrap()))
        .collect::<Vec<_>>()
        .join("-")
}
