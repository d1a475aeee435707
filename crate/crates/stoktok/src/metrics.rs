//! Distances, split statistics, theoretical split-count distributions,
//! and empirical-vs-theoretical comparison utilities.

use std::collections::{BTreeMap, HashSet};

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::enumerate::{build_segment_tree, TreeMode};
use crate::samplers::{Sampler, SamplerSpec, SplitCounts};
use crate::vocab::{build_split_map, decode, SplitArity, TokenSeq, Vocabulary};
use crate::{Error, Result};

/// Token-level edit distance with insertion cost 1 and deletion cost 0
/// (no substitution; a replacement is a deletion plus an insertion).
///
/// Both sequences must tokenise the same string. A match in the DP pairs
/// the same token at the same byte offset, i.e. the same occurrence in the
/// underlying string, which makes this provably equal to the span-matching
/// formula implemented by [`span_match_distance`].
pub fn token_edit_distance(v: &TokenSeq, u: &TokenSeq, vocab: &Vocabulary) -> Result<usize> {
    check_same_string(v, u, vocab)?;
    let nv = v.len();
    let nu = u.len();
    // dist[i][j]: cost of transforming v[..i] into u[..j].
    let mut dist = vec![vec![0usize; nu + 1]; nv + 1];
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=nv {
        for j in 0..=nu {
            let mut best = dist[i - 1][j]; // delete v_i, cost 0
            if j > 0 {
                best = best.min(dist[i][j - 1] + 1); // insert u_j
                if v.ids()[i - 1] == u.ids()[j - 1] && v.spans()[i - 1] == u.spans()[j - 1] {
                    best = best.min(dist[i - 1][j - 1]);
                }
            }
            dist[i][j] = best;
        }
    }
    Ok(dist[nv][nu])
}

/// Closed form of the same distance for same-string pairs:
/// `|u|` minus the number of `u` tokens whose byte spans coincide with a
/// span of `v`.
pub fn span_match_distance(v: &TokenSeq, u: &TokenSeq, vocab: &Vocabulary) -> Result<usize> {
    check_same_string(v, u, vocab)?;
    let v_spans: HashSet<(usize, usize)> = v.spans().iter().copied().collect();
    let matched = u.spans().iter().filter(|s| v_spans.contains(s)).count();
    Ok(u.len() - matched)
}

fn check_same_string(v: &TokenSeq, u: &TokenSeq, vocab: &Vocabulary) -> Result<()> {
    if decode(v, vocab)? != decode(u, vocab)? {
        return Err(Error::StringMismatch);
    }
    Ok(())
}

/// Per-canonical-token split counts: `S_i` is the number of `v` tokens
/// inside canonical token `i`, minus one.
///
/// Errors when a `v` token crosses a canonical boundary (the vector is
/// undefined there; the aggregate `|v| - |v^c|` is still available via
/// [`normalised_splits_aggregate`]).
pub fn split_count_vector(canonical: &TokenSeq, v: &TokenSeq) -> Result<SplitCounts> {
    let mut counts = vec![0usize; canonical.len()];
    let mut ci = 0;
    for &(s, e) in v.spans() {
        while ci < canonical.len() && canonical.spans()[ci].1 <= s {
            ci += 1;
        }
        match canonical.spans().get(ci) {
            Some(&(cs, ce)) if cs <= s && e <= ce => counts[ci] += 1,
            _ => return Err(Error::BoundaryCrossing(s, e)),
        }
    }
    for (i, c) in counts.iter_mut().enumerate() {
        if *c == 0 && canonical.spans()[i].0 != canonical.spans()[i].1 {
            // Unreachable for well-formed same-string inputs.
            return Err(Error::BoundaryCrossing(
                canonical.spans()[i].0,
                canonical.spans()[i].1,
            ));
        }
        *c -= 1;
    }
    Ok(SplitCounts::new(counts))
}

/// Normalised number of splits `α(v, v^c) = ΣS_i / |v^c|`, exact.
pub fn normalised_splits(v: &TokenSeq, canonical: &TokenSeq) -> Result<BigRational> {
    if canonical.is_empty() {
        return Err(Error::EmptyCanonical);
    }
    let s = split_count_vector(canonical, v)?;
    Ok(BigRational::new(
        BigInt::from(s.total()),
        BigInt::from(canonical.len()),
    ))
}

/// Aggregate variant `(|v| - |v^c|) / |v^c|`, defined even when `v`
/// crosses canonical boundaries.
pub fn normalised_splits_aggregate(v: &TokenSeq, canonical: &TokenSeq) -> Result<BigRational> {
    if canonical.is_empty() {
        return Err(Error::EmptyCanonical);
    }
    Ok(BigRational::new(
        BigInt::from(v.len() as i64 - canonical.len() as i64),
        BigInt::from(canonical.len()),
    ))
}

/// Joint pmf of the symmetric Dirichlet-multinomial with concentration 1:
/// every composition of `n` into `m` parts has probability
/// `1 / C(n+m-1, m-1)`.
pub fn dirmult_pmf(s: &SplitCounts, n: usize, m: usize) -> BigRational {
    if s.counts().len() != m || s.total() != n {
        return BigRational::zero();
    }
    BigRational::new(
        BigInt::one(),
        BigInt::from(binomial(BigUint::from(n + m - 1), BigUint::from(m - 1))),
    )
}

/// Marginal pmf of one coordinate under the same model: the number of
/// compositions of `n - s` into the other `m - 1` parts over the total.
pub fn dirmult_marginal_pmf(s: usize, n: usize, m: usize) -> BigRational {
    if s > n || m == 0 {
        return BigRational::zero();
    }
    if m == 1 {
        return if s == n { BigRational::one() } else { BigRational::zero() };
    }
    BigRational::new(
        BigInt::from(binomial(BigUint::from(n - s + m - 2), BigUint::from(m - 2))),
        BigInt::from(binomial(BigUint::from(n + m - 1), BigUint::from(m - 1))),
    )
}

/// Split-count law of full uniform sampling under the infinite-vocabulary
/// idealisation: `S_i ~ Binom(L-1, 1/2)` for a token of `L` bytes, from
/// flipping a fair coin at every internal boundary.
pub fn binomial_split_pmf(s: usize, token_len: usize) -> BigRational {
    if token_len == 0 || s > token_len - 1 {
        return BigRational::zero();
    }
    BigRational::new(
        BigInt::from(binomial(BigUint::from(token_len - 1), BigUint::from(s))),
        BigInt::from(BigUint::one() << (token_len - 1)),
    )
}

/// Per-token split-count polynomials for a canonical tokenisation,
/// restricted to splits within canonical token boundaries.
///
/// `A_i(s)` counts the tokenisations of token `i`'s byte string with `s`
/// splits; `G = Π A_i` so `[x^k]G` counts whole-sequence within-boundary
/// tokenisations with `k` total splits; `H_i = Π_{j≠i} A_j` yields the
/// conditional `Pr(S_i = s | ΣS = k) = A_i(s)·[x^{k-s}]H_i / [x^k]G`.
#[derive(Debug)]
pub struct SplitDistribution {
    per_token: Vec<Vec<BigUint>>,
    g: Vec<BigUint>,
    h: Vec<Vec<BigUint>>,
}

impl SplitDistribution {
    /// Coefficients of `A_i` (index = split count).
    pub fn token_poly(&self, i: usize) -> &[BigUint] {
        &self.per_token[i]
    }

    pub fn num_tokens(&self) -> usize {
        self.per_token.len()
    }

    /// Coefficients of `G` (index = total split count).
    pub fn g(&self) -> &[BigUint] {
        &self.g
    }

    /// Total within-boundary tokenisation count, `Σ_k [x^k]G`.
    pub fn total(&self) -> BigUint {
        self.g.iter().sum()
    }

    /// Conditional pmf of `S_i` given `ΣS = k`, as exact rationals indexed
    /// by `s`. `None` when no within-boundary tokenisation has `k` splits.
    pub fn conditional_pmf(&self, i: usize, k: usize) -> Option<Vec<BigRational>> {
        let gk = self.g.get(k)?;
        if gk.is_zero() {
            return None;
        }
        let mut pmf = Vec::with_capacity(self.per_token[i].len());
        for (s, a) in self.per_token[i].iter().enumerate() {
            let h = if k >= s {
                self.h[i].get(k - s).cloned().unwrap_or_else(BigUint::zero)
            } else {
                BigUint::zero()
            };
            pmf.push(BigRational::new(
                BigInt::from(a * h),
                BigInt::from(gk.clone()),
            ));
        }
        Some(pmf)
    }
}

/// Builds [`SplitDistribution`] from segment-tree leaf counts.
pub fn split_count_polynomials(
    canonical: &TokenSeq,
    vocab: &Vocabulary,
) -> Result<SplitDistribution> {
    let split_map = build_split_map(vocab, SplitArity::Two);
    let mut per_token = Vec::with_capacity(canonical.len());
    for &id in canonical.ids() {
        let tree = build_segment_tree(id, &split_map, vocab, TreeMode::AllSegmentations)?;
        let leaf_counts = tree.leaf_counts();
        // leaf_counts is indexed by segments; shift to splits.
        per_token.push(leaf_counts[1..].to_vec());
    }
    let mut g = vec![BigUint::one()];
    for poly in &per_token {
        g = poly_mul(&g, poly);
    }
    let mut h = Vec::with_capacity(per_token.len());
    for i in 0..per_token.len() {
        let mut hi = vec![BigUint::one()];
        for (j, poly) in per_token.iter().enumerate() {
            if j != i {
                hi = poly_mul(&hi, poly);
            }
        }
        h.push(hi);
    }
    Ok(SplitDistribution { per_token, g, h })
}

fn poly_mul(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            out[i + j] += ca * cb;
        }
    }
    out
}

/// Empirical distribution over serialised tokenisations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: BTreeMap<String, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Histogram { bins: BTreeMap::new(), total: 0 }
    }

    pub fn record(&mut self, key: String) {
        *self.bins.entry(key).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn bins(&self) -> &BTreeMap<String, u64> {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequency(&self, key: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        *self.bins.get(key).unwrap_or(&0) as f64 / self.total as f64
    }

    /// Merges another histogram into this one (per-task accumulation).
    pub fn merge(&mut self, other: &Histogram) {
        for (k, c) in &other.bins {
            *self.bins.entry(k.clone()).or_insert(0) += c;
        }
        self.total += other.total;
    }

    /// JSON export: outcome → empirical probability.
    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, f64> = self
            .bins
            .iter()
            .map(|(k, &c)| (k.as_str(), c as f64 / self.total as f64))
            .collect();
        serde_json::to_string(&map).expect("histogram serialises")
    }

    /// CSV export with an `outcome,count,probability` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count,probability\n");
        for (k, &c) in &self.bins {
            out.push_str(&format!("{k},{c},{}\n", c as f64 / self.total as f64));
        }
        out
    }
}

impl Default for Histogram {
    fn default() -> Self {
        Self::new()
    }
}

/// Draws `draws` samples from the given scheme and bins them by
/// [`TokenSeq::id_key`].
pub fn empirical_histogram<R: Rng>(
    spec: &SamplerSpec,
    text: &[u8],
    vocab: &Vocabulary,
    draws: u64,
    pretokenise: bool,
    rng: &mut R,
) -> Result<Histogram> {
    if draws == 0 {
        return Err(Error::ZeroDraws);
    }
    let mut sampler = Sampler::new(vocab, spec.clone())?;
    let mut hist = Histogram::new();
    for _ in 0..draws {
        let s = sampler.sample(text, pretokenise, rng)?;
        hist.record(s.seq.id_key());
    }
    Ok(hist)
}

/// Total-variation distance `½ Σ |p̂ - p|` between a histogram and a
/// reference pmf, summed over the union of outcomes.
pub fn tv_distance(hist: &Histogram, reference: &BTreeMap<String, f64>) -> f64 {
    let mut keys: HashSet<&str> = hist.bins.keys().map(String::as_str).collect();
    keys.extend(reference.keys().map(String::as_str));
    let mut acc = 0.0;
    for k in keys {
        let p_hat = hist.frequency(k);
        let p = reference.get(k).copied().unwrap_or(0.0);
        acc += (p_hat - p).abs();
    }
    acc / 2.0
}

/// Pearson chi-square p-value of observed counts against expected
/// probabilities. Bins with zero expectation must have zero observations.
pub fn chi_square_pvalue(observed: &[u64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    let mut df = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = p * total as f64;
        if e == 0.0 {
            assert_eq!(o, 0, "observation in a zero-probability bin");
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        df += 1;
    }
    if df < 2 {
        return 1.0;
    }
    let dist = ChiSquared::new((df - 1) as f64).expect("positive dof");
    1.0 - dist.cdf(stat)
}

/// Chi-square p-value against the uniform distribution over the bins.
pub fn chi_square_uniform_pvalue(observed: &[u64]) -> f64 {
    let expected = vec![1.0 / observed.len() as f64; observed.len()];
    chi_square_pvalue(observed, &expected)
}

/// Converts an exact pmf over outcome keys into the f64 map used by
/// [`tv_distance`].
pub fn pmf_to_f64(pmf: &BTreeMap<String, BigRational>) -> BTreeMap<String, f64> {
    pmf.iter()
        .map(|(k, v)| (k.clone(), v.to_f64().unwrap_or(0.0)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_all;
    use crate::samplers::sample_split_counts;
    use crate::vocab::encode_canonical;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rev_vocab() -> Vocabulary {
        let mut tokens: Vec<Vec<u8>> = (b'a'..=b'z').map(|c| vec![c]).collect();
        for t in ["re", "v", "ol", "vol", "ution", "rev", "olution", "revolution"] {
            let b = t.as_bytes().to_vec();
            if !tokens.contains(&b) {
                tokens.push(b);
            }
        }
        Vocabulary::from_tokens(tokens).unwrap()
    }

    fn seq(v: &Vocabulary, names: &[&str]) -> TokenSeq {
        let ids: Vec<_> = names.iter().map(|n| v.id_of(n.as_bytes()).unwrap()).collect();
        TokenSeq::from_ids(&ids, v).unwrap()
    }

    #[test]
    fn distance_of_identical_sequences_is_zero() {
        let v = rev_vocab();
        let s = seq(&v, &["re", "v", "ol", "ution"]);
        assert_eq!(token_edit_distance(&s, &s, &v).unwrap(), 0);
    }

    #[test]
    fn distance_examples_from_dp_oracle() {
        let v = rev_vocab();
        let whole = seq(&v, &["revolution"]);
        let split = seq(&v, &["rev", "olution"]);
        // No shared spans: delete the single token free, insert two.
        assert_eq!(token_edit_distance(&whole, &split, &v).unwrap(), 2);
        assert_eq!(token_edit_distance(&split, &whole, &v).unwrap(), 1);

        // "re" (0..2) and "ution" (5..10) are shared spans, so only "vol"
        // is new: distance 1.
        let a = seq(&v, &["re", "v", "ol", "ution"]);
        let b = seq(&v, &["re", "vol", "ution"]);
        assert_eq!(token_edit_distance(&a, &b, &v).unwrap(), 1);
        assert_eq!(span_match_distance(&a, &b, &v).unwrap(), 1);
    }

    #[test]
    fn distance_requires_same_string() {
        let v = rev_vocab();
        let a = seq(&v, &["re"]);
        let b = seq(&v, &["rev"]);
        assert!(matches!(
            token_edit_distance(&a, &b, &v),
            Err(Error::StringMismatch)
        ));
    }

    #[test]
    fn occurrence_matching_beats_bare_symbol_matching() {
        // v = (ab, a), u = (a, ba): the token "a" occurs in both but at
        // different offsets, so nothing matches and the distance is 2.
        let v = Vocabulary::from_tokens(vec![&b"a"[..], b"b", b"ab", b"ba"]).unwrap();
        let x = seq(&v, &["ab", "a"]);
        let y = seq(&v, &["a", "ba"]);
        assert_eq!(token_edit_distance(&x, &y, &v).unwrap(), 2);
        assert_eq!(span_match_distance(&x, &y, &v).unwrap(), 2);
    }

    #[test]
    fn split_count_vector_examples() {
        let v = rev_vocab();
        let canonical = seq(&v, &["revolution"]);
        let three = seq(&v, &["re", "vol", "ution"]);
        assert_eq!(
            split_count_vector(&canonical, &three).unwrap().counts(),
            &[2]
        );
        assert_eq!(
            split_count_vector(&canonical, &canonical).unwrap().counts(),
            &[0]
        );
    }

    #[test]
    fn split_count_vector_detects_crossing() {
        let v = Vocabulary::from_tokens(vec![&b"a"[..], b"b", b"ab", b"ba"]).unwrap();
        let canonical = seq(&v, &["ab", "a", "b"]); // spans 0..2, 2..3, 3..4
        let crossing = seq(&v, &["a", "ba", "b"]); // "ba" spans 1..3
        let err = split_count_vector(&canonical, &crossing).unwrap_err();
        assert!(matches!(err, Error::BoundaryCrossing(1, 3)));
    }

    #[test]
    fn normalised_splits_examples() {
        let v = rev_vocab();
        let canonical = seq(&v, &["revolution"]);
        let three = seq(&v, &["re", "vol", "ution"]);
        assert_eq!(
            normalised_splits(&three, &canonical).unwrap(),
            BigRational::from(BigInt::from(2))
        );
        assert_eq!(
            normalised_splits(&canonical, &canonical).unwrap(),
            BigRational::zero()
        );
        assert_eq!(
            normalised_splits_aggregate(&three, &canonical).unwrap(),
            BigRational::from(BigInt::from(2))
        );
        assert!(matches!(
            normalised_splits(&canonical, &TokenSeq::empty()),
            Err(Error::EmptyCanonical)
        ));
    }

    #[test]
    fn dirmult_closed_form_examples() {
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let third = BigRational::new(BigInt::one(), BigInt::from(3));
        assert_eq!(dirmult_pmf(&SplitCounts::new(vec![1, 0]), 1, 2), half);
        assert_eq!(dirmult_pmf(&SplitCounts::new(vec![1, 1]), 2, 2), third);
        assert_eq!(dirmult_pmf(&SplitCounts::new(vec![0]), 0, 1), BigRational::one());
        assert_eq!(dirmult_pmf(&SplitCounts::new(vec![1]), 2, 1), BigRational::zero());
    }

    #[test]
    fn dirmult_marginal_sums_to_one() {
        for m in 1..=5usize {
            for n in 0..=5usize {
                let total: BigRational =
                    (0..=n).map(|s| dirmult_marginal_pmf(s, n, m)).sum();
                assert_eq!(total, BigRational::one(), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn dirmult_matches_urn_within_3_sigma() {
        let draws = 50_000u32;
        for m in 1..=4usize {
            for n in 1..=4usize {
                let mut rng = ChaCha8Rng::seed_from_u64((n * 17 + m) as u64);
                let mut hits: BTreeMap<Vec<usize>, u32> = BTreeMap::new();
                for _ in 0..draws {
                    let s = sample_split_counts(n, m, &mut rng);
                    *hits.entry(s.counts().to_vec()).or_insert(0) += 1;
                }
                for (counts, hit) in hits {
                    let p = dirmult_pmf(&SplitCounts::new(counts.clone()), n, m)
                        .to_f64()
                        .unwrap();
                    let sigma = (p * (1.0 - p) / f64::from(draws)).sqrt();
                    let p_hat = f64::from(hit) / f64::from(draws);
                    assert!(
                        (p_hat - p).abs() <= 3.0 * sigma.max(1e-9),
                        "(n={n}, m={m}) counts {counts:?}: {p_hat} vs {p}"
                    );
                }
            }
        }
    }

    #[test]
    fn binomial_split_pmf_examples() {
        assert_eq!(
            binomial_split_pmf(0, 2),
            BigRational::new(BigInt::one(), BigInt::from(2))
        );
        assert_eq!(
            binomial_split_pmf(1, 2),
            BigRational::new(BigInt::one(), BigInt::from(2))
        );
        assert_eq!(binomial_split_pmf(0, 1), BigRational::one());
        assert_eq!(
            binomial_split_pmf(2, 5),
            BigRational::new(BigInt::from(6), BigInt::from(16))
        );
        assert_eq!(binomial_split_pmf(5, 3), BigRational::zero());
    }

    #[test]
    fn polynomials_single_token_conditional_is_point_mass() {
        let v = rev_vocab();
        let canonical = encode_canonical(b"revolution", &v, false);
        let dist = split_count_polynomials(&canonical, &v).unwrap();
        for k in 0..dist.g().len() {
            if dist.g()[k].is_zero() {
                assert!(dist.conditional_pmf(0, k).is_none());
                continue;
            }
            let pmf = dist.conditional_pmf(0, k).unwrap();
            for (s, p) in pmf.iter().enumerate() {
                let expect = if s == k { BigRational::one() } else { BigRational::zero() };
                assert_eq!(*p, expect, "k={k} s={s}");
            }
        }
    }

    #[test]
    fn polynomials_match_brute_force_on_two_token_fixture() {
        let v = Vocabulary::from_tokens(vec![
            &b"a"[..],
            b"b",
            b"c",
            b"ab",
            b"bc",
            b"abc",
            b"cc",
        ])
        .unwrap();
        let text = b"abccc";
        // Canonical built by hand: (abc)(cc).
        let canonical = seq(&v, &["abc", "cc"]);
        canonical.validate_against(text, &v).unwrap();
        let dist = split_count_polynomials(&canonical, &v).unwrap();

        // Oracle: enumerate all tokenisations, keep the within-boundary
        // ones, and bucket by (S_0, total).
        let all = enumerate_all(text, &v, usize::MAX).unwrap();
        let mut bucket: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut per_k: BTreeMap<usize, usize> = BTreeMap::new();
        for u in &all {
            if let Ok(sc) = split_count_vector(&canonical, u) {
                let total = sc.total();
                *bucket.entry((sc.counts()[0], total)).or_insert(0) += 1;
                *per_k.entry(total).or_insert(0) += 1;
            }
        }
        let within_total: usize = per_k.values().sum();
        assert_eq!(BigUint::from(within_total), dist.total());

        for (&k, &layer) in &per_k {
            let pmf = dist.conditional_pmf(0, k).unwrap();
            let sum: BigRational = pmf.iter().cloned().sum();
            assert_eq!(sum, BigRational::one());
            for (s, p) in pmf.iter().enumerate() {
                let oracle = bucket.get(&(s, k)).copied().unwrap_or(0);
                let expect = BigRational::new(BigInt::from(oracle), BigInt::from(layer));
                assert_eq!(*p, expect, "k={k} s={s}");
            }
        }
    }

    #[test]
    fn generating_function_total_matches_tree_product() {
        let v = rev_vocab();
        let canonical = seq(&v, &["re", "vol", "ution"]);
        let dist = split_count_polynomials(&canonical, &v).unwrap();
        let per_token_totals: BigUint = (0..canonical.len())
            .map(|i| dist.token_poly(i).iter().sum::<BigUint>())
            .product();
        assert_eq!(dist.total(), per_token_totals);
    }

    #[test]
    fn normalised_splits_with_four_tokens() {
        let text = b"abcdefghijklmnop";
        let mut tokens = Vec::new();
        for i in 0..text.len() {
            for j in i + 1..=text.len() {
                tokens.push(text[i..j].to_vec());
            }
        }
        let v = Vocabulary::from_tokens(tokens).unwrap();
        let canonical = seq_bytes(&v, &[b"abcd", b"efgh", b"ijkl", b"mnop"]);
        // Split pattern S = (1, 0, 2, 1): total 4 over 4 canonical tokens.
        let split = seq_bytes(
            &v,
            &[b"ab", b"cd", b"efgh", b"i", b"j", b"kl", b"mn", b"op"],
        );
        let s = split_count_vector(&canonical, &split).unwrap();
        assert_eq!(s.counts(), &[1, 0, 2, 1]);
        assert_eq!(
            normalised_splits(&split, &canonical).unwrap(),
            BigRational::one()
        );
    }

    fn seq_bytes(v: &Vocabulary, parts: &[&[u8]]) -> TokenSeq {
        let ids: Vec<_> = parts.iter().map(|p| v.id_of(p).unwrap()).collect();
        TokenSeq::from_ids(&ids, v).unwrap()
    }

    #[test]
    fn canonical_histogram_is_a_point_mass() {
        let v = rev_vocab();
        let spec = crate::samplers::SamplerSpec::new(crate::samplers::Scheme::Canonical);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hist =
            empirical_histogram(&spec, b"revolution", &v, 500, false, &mut rng).unwrap();
        assert_eq!(hist.bins().len(), 1);
        let key = hist.bins().keys().next().unwrap().clone();
        let mut reference = BTreeMap::new();
        reference.insert(key, 1.0);
        assert_eq!(tv_distance(&hist, &reference), 0.0);
        assert!(matches!(
            empirical_histogram(&spec, b"revolution", &v, 0, false, &mut rng),
            Err(Error::ZeroDraws)
        ));
    }

    #[test]
    fn tv_and_chi_square_sanity() {
        let mut hist = Histogram::new();
        for _ in 0..5000 {
            hist.record("a".into());
            hist.record("b".into());
        }
        let mut reference = BTreeMap::new();
        reference.insert("a".to_string(), 0.5);
        reference.insert("b".to_string(), 0.5);
        assert!(tv_distance(&hist, &reference) < 1e-9);
        let p = chi_square_uniform_pvalue(&[5000, 5000]);
        assert!(p > 0.99);
        let p_skew = chi_square_uniform_pvalue(&[9000, 1000]);
        assert!(p_skew < 1e-3);
    }

    #[test]
    fn histogram_exports() {
        let mut hist = Histogram::new();
        hist.record("1-2".into());
        hist.record("1-2".into());
        hist.record("3".into());
        assert_eq!(hist.total(), 3);
        let json: BTreeMap<String, f64> = serde_json::from_str(&hist.to_json()).unwrap();
        assert_eq!(json.len(), 2);
        assert!(hist.to_csv().starts_with("outcome,count,probability\n"));
    }

    proptest! {
        /// d(v,u) - d(u,v) = |u| - |v| on random same-string pairs, and the
        /// DP agrees with the span-matching formula.
        #[test]
        fn distance_identities(seed in any::<u64>()) {
            use rand::Rng;
            let v = rev_vocab();
            let all = enumerate_all(b"revolution", &v, usize::MAX).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = &all[rng.gen_range(0..all.len())];
            let b = &all[rng.gen_range(0..all.len())];
            let dab = token_edit_distance(a, b, &v).unwrap();
            let dba = token_edit_distance(b, a, &v).unwrap();
            prop_assert_eq!(dab as i64 - dba as i64, b.len() as i64 - a.len() as i64);
            prop_assert_eq!(dab, span_match_distance(a, b, &v).unwrap());
        }
    }
}
