//! Distance-layered sampling: counting tokenisations by edit distance
//! from the canonical reference and drawing uniformly within a layer.
//!
//! Run with: cargo run --example uniform_distance_sampling

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stoktok::enumerate::DistanceDag;
use stoktok::samplers::{Sampler, SamplerSpec, Scheme};
use stoktok::vocab::{encode_canonical, Vocabulary};

fn main() -> stoktok::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let vocab = Vocabulary::load(&dir.join("rev_vocab.json"), &dir.join("rev_merges.txt"))?;

    let text = b"revolution";
    let canonical = encode_canonical(text, &vocab, false);
    let ddag = DistanceDag::build(text, &canonical, text.len(), &vocab)?;
    println!("tokenisations of \"revolution\" by edit distance from canonical:");
    let mut total = num_bigint::BigUint::from(0u32);
    for (k, count) in ddag.counts_per_k().iter().enumerate() {
        if !num_traits::Zero::is_zero(count) {
            println!("  k = {k:>2}: {count}");
        }
        total += count;
    }
    println!("  total: {total} (= |T_V|, the layers partition the set)");

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    println!("\nthree uniform draws at k = 4:");
    for _ in 0..3 {
        let u = ddag.sample_at(4, &mut rng)?;
        println!("  {}", u.id_key());
    }

    // The uniform-k scheme adds largest-feasible fallback and, under
    // pretokenisation, distributes the distance budget across chunks by
    // exact convolution of the per-chunk layer counts.
    let spec = SamplerSpec::new(Scheme::UniformK).with_k(5);
    let mut sampler = Sampler::new(&vocab, spec)?;
    let sentence = b"revolution evolution";
    println!("\nuniform-k (k = 5) on a two-chunk sentence:");
    for _ in 0..3 {
        let s = sampler.sample(sentence, true, &mut rng)?;
        println!(
            "  realised k = {}, splits = {}: {}",
            s.meta.realised_k.unwrap(),
            s.meta.splits,
            s.seq.id_key()
        );
    }
    Ok(())
}
