//! The stochastic tokenisation schemes: `stochastok`, `stochastok-uni`,
//! `uniform-k`, `uniform`, and `bpe-dropout`, plus the canonical baseline,
//! behind one dispatching [`Sampler`].
//!
//! Every scheme maps `(text, parameters, rng)` to a tokenisation that
//! decodes back to `text`, and is deterministic for a fixed seed.

use std::collections::{BTreeMap, HashMap};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::enumerate::{build_segment_tree, DistanceDag, SegmentTree, SegmentationDag, TreeMode};
use crate::vocab::{
    bpe_dropout_encode, build_split_map, encode_canonical, pretoken_chunks, SplitArity, SplitMap,
    TokenId, TokenSeq, Vocabulary,
};
use crate::{Error, Result};

/// Which stochastic tokenisation scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Canonical,
    StochasTok,
    StochasTokUni,
    UniformK,
    Uniform,
    BpeDropout,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Canonical => "canonical",
            Scheme::StochasTok => "stochastok",
            Scheme::StochasTokUni => "stochastok-uni",
            Scheme::UniformK => "uniform-k",
            Scheme::Uniform => "uniform",
            Scheme::BpeDropout => "bpe-dropout",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical" => Ok(Scheme::Canonical),
            "stochastok" => Ok(Scheme::StochasTok),
            "stochastok-uni" => Ok(Scheme::StochasTokUni),
            "uniform-k" => Ok(Scheme::UniformK),
            "uniform" => Ok(Scheme::Uniform),
            "bpe-dropout" => Ok(Scheme::BpeDropout),
            other => Err(Error::Config(format!("unknown scheme {other:?}"))),
        }
    }
}

/// Flat parameter bundle for [`Sampler`]; serialises to and from the
/// key-value form used by CLI flags and config files.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    pub scheme: Scheme,
    /// Expansion proportion: target splits per canonical token.
    pub alpha: f64,
    /// Target edit distance for `uniform-k`; derived from `alpha` if absent.
    pub k: Option<usize>,
    /// Dropout probability for `bpe-dropout`.
    pub p_drop: f64,
    /// Cap on total splits for `stochastok`; unbounded by default.
    pub k_max: Option<usize>,
    pub tree_mode: TreeMode,
    pub arity: SplitArity,
    /// Ablation: redraw the position instead of consuming an iteration
    /// when the selected token has no decomposition.
    pub retry_unsplittable: bool,
}

impl SamplerSpec {
    pub fn new(scheme: Scheme) -> Self {
        SamplerSpec {
            scheme,
            alpha: 0.0,
            k: None,
            p_drop: 0.0,
            k_max: None,
            tree_mode: TreeMode::AllSegmentations,
            arity: SplitArity::Two,
            retry_unsplittable: false,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_p_drop(mut self, p: f64) -> Self {
        self.p_drop = p;
        self
    }

    pub fn with_tree_mode(mut self, mode: TreeMode) -> Self {
        self.tree_mode = mode;
        self
    }

    pub fn with_arity(mut self, arity: SplitArity) -> Self {
        self.arity = arity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite and non-negative, got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.p_drop) || self.p_drop.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "p_drop must lie in [0, 1], got {}",
                self.p_drop
            )));
        }
        Ok(())
    }

    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        kv.insert("scheme".into(), self.scheme.to_string());
        kv.insert("alpha".into(), self.alpha.to_string());
        if let Some(k) = self.k {
            kv.insert("k".into(), k.to_string());
        }
        kv.insert("p_drop".into(), self.p_drop.to_string());
        if let Some(k_max) = self.k_max {
            kv.insert("k_max".into(), k_max.to_string());
        }
        kv.insert(
            "tree_mode".into(),
            match self.tree_mode {
                TreeMode::AllSegmentations => "all-segmentations".into(),
                TreeMode::MergeReachable => "merge-reachable".into(),
            },
        );
        kv.insert(
            "arity".into(),
            match self.arity {
                SplitArity::Two => "2".into(),
                SplitArity::TwoAndThree => "2&3".into(),
            },
        );
        kv.insert("retry".into(), self.retry_unsplittable.to_string());
        kv
    }

    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        let scheme: Scheme = kv
            .get("scheme")
            .ok_or_else(|| Error::Config("missing scheme".into()))?
            .parse()?;
        let mut spec = SamplerSpec::new(scheme);
        let parse_err = |key: &str, val: &str| {
            Error::Config(format!("bad value {val:?} for {key}"))
        };
        if let Some(v) = kv.get("alpha") {
            spec.alpha = v.parse().map_err(|_| parse_err("alpha", v))?;
        }
        if let Some(v) = kv.get("k") {
            spec.k = Some(v.parse().map_err(|_| parse_err("k", v))?);
        }
        if let Some(v) = kv.get("p_drop") {
            spec.p_drop = v.parse().map_err(|_| parse_err("p_drop", v))?;
        }
        if let Some(v) = kv.get("k_max") {
            spec.k_max = Some(v.parse().map_err(|_| parse_err("k_max", v))?);
        }
        if let Some(v) = kv.get("tree_mode") {
            spec.tree_mode = match v.as_str() {
                "all-segmentations" => TreeMode::AllSegmentations,
                "merge-reachable" => TreeMode::MergeReachable,
                _ => return Err(parse_err("tree_mode", v)),
            };
        }
        if let Some(v) = kv.get("arity") {
            spec.arity = match v.as_str() {
                "2" => SplitArity::Two,
                "2&3" | "2+3" => SplitArity::TwoAndThree,
                _ => return Err(parse_err("arity", v)),
            };
        }
        if let Some(v) = kv.get("retry") {
            spec.retry_unsplittable = v.parse().map_err(|_| parse_err("retry", v))?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// Per-canonical-token split counts `S = (S_1, ..., S_m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SplitCounts {
    counts: Vec<usize>,
}

impl SplitCounts {
    pub fn new(counts: Vec<usize>) -> Self {
        SplitCounts { counts }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Metadata describing how a sample was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMeta {
    pub scheme: Scheme,
    /// Aggregate splits relative to canonical, `|v| - |v^c|`.
    pub splits: usize,
    /// `splits / |v^c|` (zero for empty input).
    pub alpha_realised: f64,
    /// Total splits the scheme aimed for, where meaningful.
    pub requested_splits: Option<usize>,
    /// Whether an infeasible split-count draw had to be adjusted
    /// (`stochastok-uni`) or a distance layer fell back (`uniform-k`).
    pub adjusted: bool,
    /// Edit-distance layer actually sampled by `uniform-k`.
    pub realised_k: Option<usize>,
}

/// A sampled tokenisation plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Sampled {
    pub seq: TokenSeq,
    pub meta: SampleMeta,
}

/// Total splits StochasTok aims for: `N = ⌈α·m⌉`.
pub fn target_splits(alpha: f64, m: usize) -> usize {
    (alpha * m as f64).ceil() as usize
}

/// StochasTok: `K = min(k_max, ⌈α·m⌉)` iterations, each picking a position
/// uniformly over the current sequence and replacing that token with a
/// uniformly chosen decomposition when it has one. An iteration whose
/// token has no decomposition is still consumed unless `retry` is set.
pub fn stochastok<R: Rng>(
    canonical: &TokenSeq,
    alpha: f64,
    k_max: Option<usize>,
    split_map: &SplitMap,
    vocab: &Vocabulary,
    retry: bool,
    rng: &mut R,
) -> TokenSeq {
    let m = canonical.len();
    let n_target = target_splits(alpha, m);
    let iterations = k_max.map_or(n_target, |cap| cap.min(n_target));

    let mut ids = canonical.ids().to_vec();
    let mut spans = canonical.spans().to_vec();
    for _ in 0..iterations {
        if ids.is_empty() {
            break;
        }
        let i = if retry {
            let splittable: Vec<usize> = (0..ids.len())
                .filter(|&i| split_map.has_splits(ids[i]))
                .collect();
            match splittable.len() {
                0 => break,
                n => splittable[rng.gen_range(0..n)],
            }
        } else {
            rng.gen_range(0..ids.len())
        };
        let decomps = split_map.splits(ids[i]);
        if decomps.is_empty() {
            continue;
        }
        let decomp = &decomps[rng.gen_range(0..decomps.len())];
        let (start, _) = spans[i];
        ids.remove(i);
        spans.remove(i);
        let mut pos = start;
        for (j, &part) in decomp.iter().enumerate() {
            let len = vocab.bytes_of(part).expect("split map parts are vocab tokens").len();
            ids.insert(i + j, part);
            spans.insert(i + j, (pos, pos + len));
            pos += len;
        }
    }
    TokenSeq::new(ids, spans)
}

/// Draws the per-token split-count vector through the Polya urn that
/// StochasTok's position choice realises: start with one ball per token;
/// each of the `n` draws picks a ball proportional to current counts, puts
/// a ball back, and increments that token's split count.
pub fn sample_split_counts<R: Rng>(n: usize, m: usize, rng: &mut R) -> SplitCounts {
    if m == 0 {
        return SplitCounts::new(Vec::new());
    }
    let mut balls = vec![1usize; m];
    let mut counts = vec![0usize; m];
    for added in 0..n {
        let mut r = rng.gen_range(0..m + added);
        let mut idx = 0;
        while r >= balls[idx] {
            r -= balls[idx];
            idx += 1;
        }
        balls[idx] += 1;
        counts[idx] += 1;
    }
    SplitCounts::new(counts)
}

/// StochasTok-uni: draw `S ~ DirMult(⌈α·m⌉, 1)` via the urn, adjust it to
/// the segment counts each token's tree can actually realise, then sample
/// each token uniformly among its tokenisations with `S_i + 1` segments.
///
/// Returns the sample and whether the draw had to be adjusted.
pub fn stochastok_uni<R: Rng>(
    canonical: &TokenSeq,
    alpha: f64,
    tree_mode: TreeMode,
    split_map: &SplitMap,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<(TokenSeq, bool)> {
    let mut trees = Vec::with_capacity(canonical.len());
    for &id in canonical.ids() {
        trees.push(build_segment_tree(id, split_map, vocab, tree_mode)?);
    }
    let tree_refs: Vec<&SegmentTree> = trees.iter().collect();
    stochastok_uni_with_trees(canonical, alpha, &tree_refs, rng)
}

/// Core of [`stochastok_uni`] over caller-provided per-position trees.
pub fn stochastok_uni_with_trees<R: Rng>(
    canonical: &TokenSeq,
    alpha: f64,
    trees: &[&SegmentTree],
    rng: &mut R,
) -> Result<(TokenSeq, bool)> {
    let m = canonical.len();
    assert_eq!(trees.len(), m);
    let n = target_splits(alpha, m);

    let drawn = sample_split_counts(n, m, rng);
    let feasible: Vec<Vec<usize>> = trees
        .iter()
        .map(|t| t.feasible_segments().iter().map(|&l| l - 1).collect())
        .collect();
    let (splits, adjusted) = fit_split_counts(drawn.counts(), &feasible, n, rng);

    let mut ids = Vec::new();
    let mut spans = Vec::new();
    for (i, (&s, tree)) in splits.iter().zip(trees).enumerate() {
        let parts = tree.sample_uniform_segments(s + 1, rng)?;
        let (start, _) = canonical.spans()[i];
        for (&id, &(ps, pe)) in parts.ids().iter().zip(parts.spans()) {
            ids.push(id);
            spans.push((start + ps, start + pe));
        }
    }
    Ok((TokenSeq::new(ids, spans), adjusted))
}

/// Clamps each drawn count down to a feasible value for its token, then
/// redistributes the surplus by re-running the urn over tokens that can
/// still grow. When total capacity is below the target, every token takes
/// its maximum feasible count.
fn fit_split_counts<R: Rng>(
    drawn: &[usize],
    feasible: &[Vec<usize>],
    target: usize,
    rng: &mut R,
) -> (Vec<usize>, bool) {
    let floor_of = |i: usize, s: usize| -> usize {
        *feasible[i].iter().filter(|&&f| f <= s).max().unwrap_or(&0)
    };
    let cap: Vec<usize> = feasible
        .iter()
        .map(|f| f.iter().copied().max().unwrap_or(0))
        .collect();
    let capacity: usize = cap.iter().sum();
    if capacity < target {
        let adjusted = drawn != cap.as_slice();
        return (cap, adjusted);
    }

    let mut counts: Vec<usize> = drawn
        .iter()
        .enumerate()
        .map(|(i, &s)| floor_of(i, s))
        .collect();
    let mut surplus = target - counts.iter().sum::<usize>();
    while surplus > 0 {
        // Candidates that can reach a next feasible level within budget.
        let nexts: Vec<(usize, usize)> = counts
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| {
                feasible[i]
                    .iter()
                    .filter(|&&f| f > s && f - s <= surplus)
                    .min()
                    .map(|&f| (i, f))
            })
            .collect();
        if nexts.is_empty() {
            break;
        }
        let weights: Vec<usize> = nexts.iter().map(|&(i, _)| 1 + counts[i]).collect();
        let total: usize = weights.iter().sum();
        let mut r = rng.gen_range(0..total);
        let mut chosen = 0;
        while r >= weights[chosen] {
            r -= weights[chosen];
            chosen += 1;
        }
        let (i, next) = nexts[chosen];
        surplus -= next - counts[i];
        counts[i] = next;
    }
    let adjusted = counts != drawn;
    (counts, adjusted)
}

/// Uniform-k: exact uniform draw over the tokenisations of `text` at edit
/// distance `k` from the canonical reference. Falls back to the largest
/// non-empty layer below `k` when layer `k` is empty; the realised layer
/// is returned alongside the sample.
pub fn uniform_k<R: Rng>(
    text: &[u8],
    canonical: &TokenSeq,
    k: usize,
    vocab: &Vocabulary,
    rng: &mut R,
) -> Result<(TokenSeq, usize)> {
    let ddag = DistanceDag::build(text, canonical, k, vocab)?;
    let realised = (0..=k.min(ddag.k_max()))
        .rev()
        .find(|&layer| !ddag.count_at(layer).is_zero())
        .expect("layer 0 always holds the reference");
    Ok((ddag.sample_at(realised, rng)?, realised))
}

/// Uniform baseline: exact uniform draw over all of `T_V(text)`.
pub fn uniform_full<R: Rng>(text: &[u8], vocab: &Vocabulary, rng: &mut R) -> TokenSeq {
    SegmentationDag::build(text, vocab).sample_uniform(rng)
}

/// Per-text DP structures reused across repeated draws on the same input.
struct TextCache {
    text: Vec<u8>,
    pretokenise: bool,
    canonical: TokenSeq,
    /// Per chunk (whole text when pretokenisation is off):
    /// (chunk start, segmentation dag).
    chunk_dags: Option<Vec<(usize, SegmentationDag)>>,
    /// Distance machinery for uniform-k at the prepared target distance.
    distance: Option<DistanceLayers>,
}

/// Per-chunk distance DAGs plus suffix convolutions of their layer
/// counts: conv[c][r] = ways chunks c.. can absorb distance r.
struct DistanceLayers {
    k: usize,
    chunk_starts: Vec<usize>,
    ddags: Vec<DistanceDag>,
    conv: Vec<Vec<BigUint>>,
}

impl DistanceLayers {
    fn prepare(
        text: &[u8],
        canonical: &TokenSeq,
        chunks: &[(usize, usize)],
        k: usize,
        vocab: &Vocabulary,
        trie: &crate::trie::VocabTrie,
    ) -> Result<Self> {
        let mut ddags = Vec::with_capacity(chunks.len());
        for &(start, end) in chunks {
            let sub_canonical = slice_tokenseq(canonical, start, end)?;
            ddags.push(DistanceDag::build_with_trie(
                &text[start..end],
                &sub_canonical,
                k,
                vocab,
                trie,
            )?);
        }
        let mut conv: Vec<Vec<BigUint>> = vec![Vec::new(); chunks.len() + 1];
        conv[chunks.len()] = {
            let mut base = vec![BigUint::zero(); k + 1];
            base[0] = BigUint::one();
            base
        };
        for c in (0..chunks.len()).rev() {
            let mut acc = vec![BigUint::zero(); k + 1];
            for d in 0..=k.min(ddags[c].k_max()) {
                let cd = ddags[c].count_at(d);
                if cd.is_zero() {
                    continue;
                }
                for r in d..=k {
                    let tail = conv[c + 1][r - d].clone();
                    if !tail.is_zero() {
                        acc[r] += &cd * tail;
                    }
                }
            }
            conv[c] = acc;
        }
        Ok(DistanceLayers {
            k,
            chunk_starts: chunks.iter().map(|&(s, _)| s).collect(),
            ddags,
            conv,
        })
    }

    /// Exact uniform draw at the largest feasible total distance `<= k`.
    fn sample<R: Rng>(&self, rng: &mut R) -> Result<(TokenSeq, usize)> {
        let realised = (0..=self.k)
            .rev()
            .find(|&layer| !self.conv[0][layer].is_zero())
            .expect("distance 0 is always feasible");
        let mut ids = Vec::new();
        let mut spans = Vec::new();
        let mut remaining = realised;
        for (c, &start) in self.chunk_starts.iter().enumerate() {
            let mut weights = Vec::new();
            let mut total = BigUint::zero();
            for d in 0..=remaining.min(self.ddags[c].k_max()) {
                let w = self.ddags[c].count_at(d) * self.conv[c + 1][remaining - d].clone();
                total += &w;
                weights.push((d, w));
            }
            let r = rng.gen_biguint_below(&total);
            let mut acc = BigUint::zero();
            let mut chosen = None;
            for (d, w) in weights {
                acc += w;
                if r < acc {
                    chosen = Some(d);
                    break;
                }
            }
            let chosen = chosen.expect("convolution covers all layer weights");
            let sub = self.ddags[c].sample_at(chosen, rng)?;
            for (&id, &(s, e)) in sub.ids().iter().zip(sub.spans()) {
                ids.push(id);
                spans.push((start + s, start + e));
            }
            remaining -= chosen;
        }
        Ok((TokenSeq::new(ids, spans), realised))
    }
}

/// Scheme dispatcher with split-map, per-token tree, and per-text DP
/// caching. One sampler per thread; all shared inputs are immutable.
pub struct Sampler<'v> {
    vocab: &'v Vocabulary,
    spec: SamplerSpec,
    split_map: Option<SplitMap>,
    trees: HashMap<TokenId, SegmentTree>,
    trie: crate::trie::VocabTrie,
    cache: Option<TextCache>,
}

impl<'v> Sampler<'v> {
    pub fn new(vocab: &'v Vocabulary, spec: SamplerSpec) -> Result<Self> {
        spec.validate()?;
        let split_map = match spec.scheme {
            Scheme::StochasTok | Scheme::StochasTokUni => {
                Some(build_split_map(vocab, spec.arity))
            }
            _ => None,
        };
        Ok(Sampler {
            vocab,
            spec,
            split_map,
            trees: HashMap::new(),
            trie: crate::trie::VocabTrie::new(vocab),
            cache: None,
        })
    }

    pub fn spec(&self) -> &SamplerSpec {
        &self.spec
    }

    pub fn vocab(&self) -> &Vocabulary {
        self.vocab
    }

    fn cache_for(&mut self, text: &[u8], pretokenise: bool) -> &mut TextCache {
        let stale = self
            .cache
            .as_ref()
            .is_none_or(|c| c.text != text || c.pretokenise != pretokenise);
        if stale {
            self.cache = Some(TextCache {
                text: text.to_vec(),
                pretokenise,
                canonical: encode_canonical(text, self.vocab, pretokenise),
                chunk_dags: None,
                distance: None,
            });
        }
        self.cache.as_mut().expect("just filled")
    }

    fn chunks(text: &[u8], pretokenise: bool) -> Vec<(usize, usize)> {
        if pretokenise {
            pretoken_chunks(text)
        } else if text.is_empty() {
            Vec::new()
        } else {
            vec![(0, text.len())]
        }
    }

    /// Draws one tokenisation of `text` under the configured scheme.
    pub fn sample<R: Rng>(
        &mut self,
        text: &[u8],
        pretokenise: bool,
        rng: &mut R,
    ) -> Result<Sampled> {
        self.cache_for(text, pretokenise);
        let canonical = self.cache.as_ref().expect("cached").canonical.clone();
        let m = canonical.len();
        let mut meta = SampleMeta {
            scheme: self.spec.scheme,
            splits: 0,
            alpha_realised: 0.0,
            requested_splits: None,
            adjusted: false,
            realised_k: None,
        };

        let seq = match self.spec.scheme {
            Scheme::Canonical => canonical.clone(),
            Scheme::BpeDropout => {
                bpe_dropout_encode(text, self.vocab, self.spec.p_drop, pretokenise, rng)?
            }
            Scheme::StochasTok => {
                meta.requested_splits = Some(target_splits(self.spec.alpha, m));
                let sm = self.split_map.as_ref().expect("built in new");
                stochastok(
                    &canonical,
                    self.spec.alpha,
                    self.spec.k_max,
                    sm,
                    self.vocab,
                    self.spec.retry_unsplittable,
                    rng,
                )
            }
            Scheme::StochasTokUni => {
                meta.requested_splits = Some(target_splits(self.spec.alpha, m));
                self.ensure_trees(&canonical)?;
                let tree_refs: Vec<&SegmentTree> = canonical
                    .ids()
                    .iter()
                    .map(|id| &self.trees[id])
                    .collect();
                let (seq, adjusted) =
                    stochastok_uni_with_trees(&canonical, self.spec.alpha, &tree_refs, rng)?;
                meta.adjusted = adjusted;
                seq
            }
            Scheme::UniformK => {
                let k = self
                    .spec
                    .k
                    .unwrap_or_else(|| target_splits(self.spec.alpha, m));
                meta.requested_splits = Some(k);
                let (vocab, trie) = (self.vocab, &self.trie);
                let cache = self.cache.as_mut().expect("cached");
                if cache.distance.as_ref().is_none_or(|d| d.k != k) {
                    let chunks = Self::chunks(text, pretokenise);
                    cache.distance = Some(DistanceLayers::prepare(
                        text, &canonical, &chunks, k, vocab, trie,
                    )?);
                }
                let (seq, realised) =
                    cache.distance.as_ref().expect("prepared").sample(rng)?;
                meta.realised_k = Some(realised);
                meta.adjusted = realised != k;
                seq
            }
            Scheme::Uniform => {
                let trie = &self.trie;
                let cache = self.cache.as_mut().expect("cached");
                let dags = cache.chunk_dags.get_or_insert_with(|| {
                    Self::chunks(text, pretokenise)
                        .into_iter()
                        .map(|(s, e)| (s, SegmentationDag::build_with_trie(&text[s..e], trie)))
                        .collect()
                });
                let mut ids = Vec::new();
                let mut spans = Vec::new();
                for (start, dag) in dags.iter() {
                    let chunk = dag.sample_uniform(rng);
                    for (&id, &(s, e)) in chunk.ids().iter().zip(chunk.spans()) {
                        ids.push(id);
                        spans.push((start + s, start + e));
                    }
                }
                TokenSeq::new(ids, spans)
            }
        };

        meta.splits = seq.len().saturating_sub(m);
        meta.alpha_realised = if m == 0 { 0.0 } else { meta.splits as f64 / m as f64 };
        Ok(Sampled { seq, meta })
    }

    fn ensure_trees(&mut self, canonical: &TokenSeq) -> Result<()> {
        let sm = self.split_map.as_ref().expect("built in new");
        for &id in canonical.ids() {
            if !self.trees.contains_key(&id) {
                let tree = build_segment_tree(id, sm, self.vocab, self.spec.tree_mode)?;
                self.trees.insert(id, tree);
            }
        }
        Ok(())
    }
}

/// One-shot convenience over [`Sampler`].
pub fn sample<R: Rng>(
    text: &[u8],
    spec: &SamplerSpec,
    vocab: &Vocabulary,
    pretokenise: bool,
    rng: &mut R,
) -> Result<Sampled> {
    Sampler::new(vocab, spec.clone())?.sample(text, pretokenise, rng)
}

/// Restricts a tokenisation to one chunk, re-basing spans to the chunk.
fn slice_tokenseq(seq: &TokenSeq, start: usize, end: usize) -> Result<TokenSeq> {
    let mut ids = Vec::new();
    let mut spans = Vec::new();
    for (&id, &(s, e)) in seq.ids().iter().zip(seq.spans()) {
        if s >= start && e <= end {
            ids.push(id);
            spans.push((s - start, e - start));
        } else if s < end && e > start {
            return Err(Error::BoundaryCrossing(s, e));
        }
    }
    Ok(TokenSeq::new(ids, spans))
}
