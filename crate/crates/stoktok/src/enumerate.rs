//! Exact enumeration, counting, and uniform sampling over the set of
//! valid tokenisations of a string, including restrictions to a fixed
//! segment count (per token) and a fixed edit distance from a reference
//! tokenisation (over the whole string).
//!
//! All path counts are arbitrary-precision integers and all samplers
//! branch on exact integer ratios, so uniformity is exact rather than
//! floating-point-approximate.

use std::collections::{BTreeSet, HashMap};

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::Rng;

use crate::trie::VocabTrie;
use crate::vocab::{SplitMap, TokenId, TokenSeq, Vocabulary};
use crate::{Error, Result};

/// Inputs longer than this are rejected by [`enumerate_all`]; beyond it
/// the support is large enough that exhaustive oracles stop being useful.
pub const ENUMERATION_GUARD_BYTES: usize = 24;

/// Position-indexed DAG whose root-to-terminal paths are exactly the valid
/// tokenisations of a string.
#[derive(Debug)]
pub struct SegmentationDag {
    text: Vec<u8>,
    matches: Vec<Vec<(TokenId, usize)>>,
    counts: Vec<BigUint>,
}

impl SegmentationDag {
    /// Builds the DAG; every (position, matching token) pair is touched
    /// once via a prefix trie over the vocabulary.
    pub fn build(text: &[u8], vocab: &Vocabulary) -> Self {
        let trie = VocabTrie::new(vocab);
        Self::build_with_trie(text, &trie)
    }

    pub fn build_with_trie(text: &[u8], trie: &VocabTrie) -> Self {
        let n = text.len();
        let matches: Vec<Vec<(TokenId, usize)>> =
            (0..n).map(|pos| trie.matches_at(text, pos)).collect();
        let mut counts = vec![BigUint::zero(); n + 1];
        counts[n] = BigUint::one();
        for pos in (0..n).rev() {
            let mut total = BigUint::zero();
            for &(_, end) in &matches[pos] {
                total += &counts[end];
            }
            counts[pos] = total;
        }
        SegmentationDag { text: text.to_vec(), matches, counts }
    }

    /// `|T_V(x)|`.
    pub fn count(&self) -> &BigUint {
        &self.counts[0]
    }

    /// Exact uniform draw over all valid tokenisations.
    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> TokenSeq {
        let mut ids = Vec::new();
        let mut spans = Vec::new();
        let mut pos = 0;
        while pos < self.text.len() {
            let r = rng.gen_biguint_below(&self.counts[pos]);
            let mut acc = BigUint::zero();
            let mut chosen = None;
            for &(id, end) in &self.matches[pos] {
                acc += &self.counts[end];
                if r < acc {
                    chosen = Some((id, end));
                    break;
                }
            }
            let (id, end) = chosen.expect("counts cover all matches");
            ids.push(id);
            spans.push((pos, end));
            pos = end;
        }
        TokenSeq::new(ids, spans)
    }

    /// Depth-first enumeration of all tokenisations, capped at `limit`.
    pub fn enumerate(&self, limit: usize) -> Vec<TokenSeq> {
        let mut out = Vec::new();
        let mut ids = Vec::new();
        let mut spans = Vec::new();
        self.dfs(0, limit, &mut ids, &mut spans, &mut out);
        out
    }

    fn dfs(
        &self,
        pos: usize,
        limit: usize,
        ids: &mut Vec<TokenId>,
        spans: &mut Vec<(usize, usize)>,
        out: &mut Vec<TokenSeq>,
    ) {
        if out.len() >= limit {
            return;
        }
        if pos == self.text.len() {
            out.push(TokenSeq::new(ids.clone(), spans.clone()));
            return;
        }
        for &(id, end) in &self.matches[pos] {
            ids.push(id);
            spans.push((pos, end));
            self.dfs(end, limit, ids, spans, out);
            ids.pop();
            spans.pop();
        }
    }
}

/// Exhaustive enumeration of `T_V(text)`, the brute-force oracle behind
/// every counting and sampling operation here. Guarded against large
/// inputs; use [`enumerate_all_unbounded`] to override explicitly.
pub fn enumerate_all(text: &[u8], vocab: &Vocabulary, limit: usize) -> Result<Vec<TokenSeq>> {
    if text.len() > ENUMERATION_GUARD_BYTES {
        return Err(Error::GuardExceeded {
            len: text.len(),
            max: ENUMERATION_GUARD_BYTES,
        });
    }
    Ok(SegmentationDag::build(text, vocab).enumerate(limit))
}

/// [`enumerate_all`] without the input-length guard.
pub fn enumerate_all_unbounded(text: &[u8], vocab: &Vocabulary, limit: usize) -> Vec<TokenSeq> {
    SegmentationDag::build(text, vocab).enumerate(limit)
}

/// `|T_V(text)|` by dynamic programming, without materialising anything.
pub fn count_tokenisations(text: &[u8], vocab: &Vocabulary) -> BigUint {
    SegmentationDag::build(text, vocab).count().clone()
}

/// Which tokenisations of a token's byte string a [`SegmentTree`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeMode {
    /// Every valid tokenisation of the byte string.
    AllSegmentations,
    /// Only tokenisations reachable from the token by recursively applying
    /// split-map decompositions (a subset, strictly so in general).
    MergeReachable,
}

#[derive(Debug)]
struct TreeNode {
    /// (token, token byte length, child index)
    children: Vec<(TokenId, usize, usize)>,
    /// counts[r] = number of leaves exactly r tokens below this node.
    counts: Vec<BigUint>,
}

/// Rooted prefix tree whose root-to-leaf paths are tokenisations of one
/// token's byte string, with per-depth leaf counts for uniform sampling at
/// a fixed segment count.
#[derive(Debug)]
pub struct SegmentTree {
    mode: TreeMode,
    token_len: usize,
    nodes: Vec<TreeNode>,
}

impl SegmentTree {
    pub fn mode(&self) -> TreeMode {
        self.mode
    }

    /// Leaf counts indexed by path length (number of segments); index 0 is
    /// always zero.
    pub fn leaf_counts(&self) -> &[BigUint] {
        &self.nodes[0].counts
    }

    pub fn leaf_count(&self, segments: usize) -> BigUint {
        self.nodes[0]
            .counts
            .get(segments)
            .cloned()
            .unwrap_or_else(BigUint::zero)
    }

    /// Largest segment count with at least one leaf.
    pub fn max_segments(&self) -> usize {
        self.nodes[0]
            .counts
            .iter()
            .rposition(|c| !c.is_zero())
            .unwrap_or(0)
    }

    /// Segment counts that actually occur.
    pub fn feasible_segments(&self) -> Vec<usize> {
        self.nodes[0]
            .counts
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(l, _)| l)
            .collect()
    }

    /// Exact uniform draw over root-to-leaf paths with exactly `segments`
    /// tokens, descending with edge probabilities proportional to the
    /// number of depth-matching leaves in each subtree. The returned spans
    /// are relative to the token's own byte string.
    pub fn sample_uniform_segments<R: Rng>(
        &self,
        segments: usize,
        rng: &mut R,
    ) -> Result<TokenSeq> {
        if segments > self.token_len || self.leaf_count(segments).is_zero() {
            return Err(Error::NoPathOfLength { requested: segments });
        }
        let mut ids = Vec::with_capacity(segments);
        let mut spans = Vec::with_capacity(segments);
        let mut node = 0;
        let mut pos = 0;
        let mut remaining = segments;
        while remaining > 0 {
            let weight_of = |child: usize| {
                self.nodes[child]
                    .counts
                    .get(remaining - 1)
                    .cloned()
                    .unwrap_or_else(BigUint::zero)
            };
            let total: BigUint = self.nodes[node]
                .children
                .iter()
                .map(|&(_, _, c)| weight_of(c))
                .sum();
            let r = rng.gen_biguint_below(&total);
            let mut acc = BigUint::zero();
            let mut chosen = None;
            for &(id, len, child) in &self.nodes[node].children {
                acc += weight_of(child);
                if r < acc {
                    chosen = Some((id, len, child));
                    break;
                }
            }
            let (id, len, child) = chosen.expect("leaf counts cover all children");
            ids.push(id);
            spans.push((pos, pos + len));
            pos += len;
            node = child;
            remaining -= 1;
        }
        Ok(TokenSeq::new(ids, spans))
    }

    /// All root-to-leaf paths, in deterministic order.
    pub fn paths(&self) -> Vec<Vec<TokenId>> {
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.collect_paths(0, &mut stack, &mut out);
        out
    }

    fn collect_paths(&self, node: usize, stack: &mut Vec<TokenId>, out: &mut Vec<Vec<TokenId>>) {
        if self.nodes[node].children.is_empty() {
            out.push(stack.clone());
            return;
        }
        for &(id, _, child) in &self.nodes[node].children {
            stack.push(id);
            self.collect_paths(child, stack, out);
            stack.pop();
        }
    }

    fn from_sequences(
        sequences: &BTreeSet<Vec<TokenId>>,
        token_len: usize,
        mode: TreeMode,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        let max_len = sequences.iter().map(|s| s.len()).max().unwrap_or(0);
        let mut nodes = vec![TreeNode {
            children: Vec::new(),
            counts: vec![BigUint::zero(); max_len + 1],
        }];
        for seq in sequences {
            let mut cur = 0;
            for (depth, &id) in seq.iter().enumerate() {
                let remaining_here = seq.len() - depth;
                nodes[cur].counts[remaining_here] += BigUint::one();
                cur = match nodes[cur].children.iter().find(|&&(t, _, _)| t == id) {
                    Some(&(_, _, child)) => child,
                    None => {
                        let len = vocab.bytes_of(id)?.len();
                        nodes.push(TreeNode {
                            children: Vec::new(),
                            counts: vec![BigUint::zero(); max_len + 1],
                        });
                        let child = nodes.len() - 1;
                        let parent = cur;
                        nodes[parent].children.push((id, len, child));
                        child
                    }
                };
            }
            nodes[cur].counts[0] += BigUint::one();
        }
        Ok(SegmentTree { mode, token_len, nodes })
    }
}

/// Builds the segmentation tree for one token.
///
/// In [`TreeMode::AllSegmentations`] the leaves are all of
/// `T_V(bytes(token))`; in [`TreeMode::MergeReachable`] only the
/// tokenisations reachable from the token through recursive split-map
/// decompositions.
pub fn build_segment_tree(
    token: TokenId,
    split_map: &SplitMap,
    vocab: &Vocabulary,
    mode: TreeMode,
) -> Result<SegmentTree> {
    let bytes = vocab.bytes_of(token)?.to_vec();
    let sequences: BTreeSet<Vec<TokenId>> = match mode {
        TreeMode::AllSegmentations => SegmentationDag::build(&bytes, vocab)
            .enumerate(usize::MAX)
            .into_iter()
            .map(|s| s.ids().to_vec())
            .collect(),
        TreeMode::MergeReachable => {
            let mut memo = HashMap::new();
            reachable_sequences(token, split_map, &mut memo).clone()
        }
    };
    SegmentTree::from_sequences(&sequences, bytes.len(), mode, vocab)
}

fn reachable_sequences<'m>(
    token: TokenId,
    split_map: &SplitMap,
    memo: &'m mut HashMap<TokenId, BTreeSet<Vec<TokenId>>>,
) -> &'m BTreeSet<Vec<TokenId>> {
    if !memo.contains_key(&token) {
        let mut set = BTreeSet::new();
        set.insert(vec![token]);
        for decomp in split_map.splits(token).to_vec() {
            let mut combos: Vec<Vec<TokenId>> = vec![Vec::new()];
            for &part in &decomp {
                let part_set = reachable_sequences(part, split_map, memo).clone();
                let mut next = Vec::with_capacity(combos.len() * part_set.len());
                for prefix in &combos {
                    for suffix in &part_set {
                        let mut seq = prefix.clone();
                        seq.extend_from_slice(suffix);
                        next.push(seq);
                    }
                }
                combos = next;
            }
            set.extend(combos);
        }
        memo.insert(token, set);
    }
    &memo[&token]
}

/// Layered DP over (byte position, distance so far) relative to a
/// reference tokenisation. An edge costs 0 when the chosen token's span
/// exactly matches a span of the reference and 1 otherwise, so paths
/// ending at distance `k` are exactly `T^k_V(x, reference)` under the
/// span-matching token edit distance.
#[derive(Debug)]
pub struct DistanceDag {
    text: Vec<u8>,
    matches: Vec<Vec<(TokenId, usize)>>,
    ref_span_end: HashMap<usize, usize>,
    /// counts[pos][r] = tokenisations of text[pos..] with exactly r tokens
    /// whose spans do not match the reference.
    counts: Vec<Vec<BigUint>>,
    k_max: usize,
}

impl DistanceDag {
    pub fn build(
        text: &[u8],
        reference: &TokenSeq,
        k_max: usize,
        vocab: &Vocabulary,
    ) -> Result<Self> {
        let trie = VocabTrie::new(vocab);
        Self::build_with_trie(text, reference, k_max, vocab, &trie)
    }

    pub fn build_with_trie(
        text: &[u8],
        reference: &TokenSeq,
        k_max: usize,
        vocab: &Vocabulary,
        trie: &VocabTrie,
    ) -> Result<Self> {
        reference.validate_against(text, vocab)?;
        let n = text.len();
        let k_max = k_max.min(n);
        let matches: Vec<Vec<(TokenId, usize)>> =
            (0..n).map(|pos| trie.matches_at(text, pos)).collect();
        let ref_span_end: HashMap<usize, usize> =
            reference.spans().iter().map(|&(s, e)| (s, e)).collect();

        let mut counts = vec![vec![BigUint::zero(); k_max + 1]; n + 1];
        counts[n][0] = BigUint::one();
        for pos in (0..n).rev() {
            for &(_, end) in &matches[pos] {
                let w = usize::from(ref_span_end.get(&pos) != Some(&end));
                for r in w..=k_max {
                    let add = counts[end][r - w].clone();
                    if !add.is_zero() {
                        counts[pos][r] += add;
                    }
                }
            }
        }
        Ok(DistanceDag {
            text: text.to_vec(),
            matches,
            ref_span_end,
            counts,
            k_max,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `|T^k_V(x, reference)|`.
    pub fn count_at(&self, k: usize) -> BigUint {
        self.counts[0].get(k).cloned().unwrap_or_else(BigUint::zero)
    }

    /// Counts for every distance layer `0..=k_max`.
    pub fn counts_per_k(&self) -> &[BigUint] {
        &self.counts[0]
    }

    /// Exact uniform draw over the tokenisations at distance exactly `k`.
    pub fn sample_at<R: Rng>(&self, k: usize, rng: &mut R) -> Result<TokenSeq> {
        if k > self.k_max || self.count_at(k).is_zero() {
            return Err(Error::EmptyDistanceLayer { k });
        }
        let mut ids = Vec::new();
        let mut spans = Vec::new();
        let mut pos = 0;
        let mut remaining = k;
        while pos < self.text.len() {
            let mut total = BigUint::zero();
            for &(_, end) in &self.matches[pos] {
                let w = usize::from(self.ref_span_end.get(&pos) != Some(&end));
                if w <= remaining {
                    total += &self.counts[end][remaining - w];
                }
            }
            let r = rng.gen_biguint_below(&total);
            let mut acc = BigUint::zero();
            let mut chosen = None;
            for &(id, end) in &self.matches[pos] {
                let w = usize::from(self.ref_span_end.get(&pos) != Some(&end));
                if w <= remaining {
                    acc += &self.counts[end][remaining - w];
                    if r < acc {
                        chosen = Some((id, end, w));
                        break;
                    }
                }
            }
            let (id, end, w) = chosen.expect("layer counts cover all matches");
            ids.push(id);
            spans.push((pos, end));
            pos = end;
            remaining -= w;
        }
        Ok(TokenSeq::new(ids, spans))
    }

    /// Enumerates the full layer at distance `k` (oracle use).
    pub fn enumerate_at(&self, k: usize) -> Vec<TokenSeq> {
        let mut out = Vec::new();
        let mut ids = Vec::new();
        let mut spans = Vec::new();
        self.dfs_at(0, k, &mut ids, &mut spans, &mut out);
        out
    }

    fn dfs_at(
        &self,
        pos: usize,
        remaining: usize,
        ids: &mut Vec<TokenId>,
        spans: &mut Vec<(usize, usize)>,
        out: &mut Vec<TokenSeq>,
    ) {
        if pos == self.text.len() {
            if remaining == 0 {
                out.push(TokenSeq::new(ids.clone(), spans.clone()));
            }
            return;
        }
        for &(id, end) in &self.matches[pos] {
            let w = usize::from(self.ref_span_end.get(&pos) != Some(&end));
            if w > remaining || self.counts[end][remaining - w].is_zero() {
                continue;
            }
            ids.push(id);
            spans.push((pos, end));
            self.dfs_at(end, remaining - w, ids, spans, out);
            ids.pop();
            spans.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::{build_split_map, encode_canonical, SplitArity};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ab_vocab() -> Vocabulary {
        Vocabulary::from_tokens(vec![&b"a"[..], b"b", b"ab"]).unwrap()
    }

    /// Compact example vocabulary: all letters plus a few merged tokens.
    pub(crate) fn sec2_vocab() -> Vocabulary {
        let mut tokens: Vec<Vec<u8>> = (b'a'..=b'z').map(|c| vec![c]).collect();
        for t in ["re", "v", "ol", "ution", "revolution"] {
            let b = t.as_bytes().to_vec();
            if !tokens.contains(&b) {
                tokens.push(b);
            }
        }
        Vocabulary::from_tokens(tokens).unwrap()
    }

    #[test]
    fn two_tokenisations_of_ab() {
        let v = ab_vocab();
        let all = enumerate_all(b"ab", &v, usize::MAX).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(count_tokenisations(b"ab", &v), BigUint::from(2u32));
    }

    #[test]
    fn byte_only_vocab_has_one_tokenisation() {
        let v = Vocabulary::from_tokens(Vec::<Vec<u8>>::new()).unwrap();
        assert_eq!(count_tokenisations(b"hello", &v), BigUint::from(1u32));
        assert_eq!(enumerate_all(b"hello", &v, usize::MAX).unwrap().len(), 1);
    }

    #[test]
    fn all_substring_vocab_counts_power_of_two() {
        let text = b"abcdefgh";
        let mut tokens: Vec<Vec<u8>> = Vec::new();
        for i in 0..text.len() {
            for j in i + 1..=text.len() {
                tokens.push(text[i..j].to_vec());
            }
        }
        let v = Vocabulary::from_tokens(tokens).unwrap();
        assert_eq!(
            count_tokenisations(text, &v),
            BigUint::from(1u32) << (text.len() - 1)
        );
    }

    #[test]
    fn guard_rejects_long_inputs() {
        let v = ab_vocab();
        let long = vec![b'a'; ENUMERATION_GUARD_BYTES + 1];
        assert!(matches!(
            enumerate_all(&long, &v, usize::MAX),
            Err(Error::GuardExceeded { .. })
        ));
        assert!(!enumerate_all_unbounded(&long, &v, 10).is_empty());
    }

    #[test]
    fn revolution_count_matches_oracle() {
        let v = sec2_vocab();
        let all = enumerate_all(b"revolution", &v, usize::MAX).unwrap();
        assert_eq!(
            BigUint::from(all.len()),
            count_tokenisations(b"revolution", &v)
        );
        let char_level: Vec<TokenId> =
            b"revolution".iter().map(|&c| v.byte_token(c)).collect();
        let to_ids = |names: &[&str]| -> Vec<TokenId> {
            names.iter().map(|n| v.id_of(n.as_bytes()).unwrap()).collect()
        };
        let contains = |ids: &[TokenId]| all.iter().any(|s| s.ids() == ids);
        assert!(contains(&to_ids(&["revolution"])));
        assert!(contains(&to_ids(&["re", "v", "ol", "ution"])));
        assert!(contains(&char_level));
    }

    #[test]
    fn dag_sampler_is_uniform_on_ab() {
        let v = ab_vocab();
        let dag = SegmentationDag::build(b"ab", &v);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut hits = [0u32; 2];
        for _ in 0..10_000 {
            let s = dag.sample_uniform(&mut rng);
            hits[s.len() - 1] += 1;
        }
        for h in hits {
            let p = f64::from(h) / 10_000.0;
            assert!((p - 0.5).abs() < 0.02, "p = {p}");
        }
    }

    #[test]
    fn segment_tree_counts_match_filtered_oracle() {
        let v = sec2_vocab();
        let sm = build_split_map(&v, SplitArity::Two);
        let tok = v.id_of(b"revolution").unwrap();
        let tree = build_segment_tree(tok, &sm, &v, TreeMode::AllSegmentations).unwrap();
        let all = enumerate_all(b"revolution", &v, usize::MAX).unwrap();
        for l in 0..=10 {
            let oracle = all.iter().filter(|s| s.len() == l).count();
            assert_eq!(tree.leaf_count(l), BigUint::from(oracle), "length {l}");
        }
    }

    #[test]
    fn merge_reachable_is_strict_subset_on_fixture() {
        // re, vol, ution are all tokens but neither revol nor volution is,
        // so (re, vol, ution) is valid yet unreachable through pair splits.
        let mut tokens: Vec<Vec<u8>> = (b'a'..=b'z').map(|c| vec![c]).collect();
        for t in ["re", "v", "ol", "ution", "vol", "rev", "olution", "revolution"] {
            tokens.push(t.as_bytes().to_vec());
        }
        let v = Vocabulary::from_tokens(tokens).unwrap();
        let sm = build_split_map(&v, SplitArity::Two);
        let tok = v.id_of(b"revolution").unwrap();
        let all = build_segment_tree(tok, &sm, &v, TreeMode::AllSegmentations).unwrap();
        let reach = build_segment_tree(tok, &sm, &v, TreeMode::MergeReachable).unwrap();
        let all_set: BTreeSet<_> = all.paths().into_iter().collect();
        let reach_set: BTreeSet<_> = reach.paths().into_iter().collect();
        assert!(reach_set.is_subset(&all_set));
        let excluded = vec![
            v.id_of(b"re").unwrap(),
            v.id_of(b"vol").unwrap(),
            v.id_of(b"ution").unwrap(),
        ];
        assert!(all_set.contains(&excluded));
        assert!(!reach_set.contains(&excluded));
    }

    #[test]
    fn single_byte_token_tree_is_one_leaf() {
        let v = ab_vocab();
        let sm = build_split_map(&v, SplitArity::Two);
        let tok = v.id_of(b"a").unwrap();
        let tree = build_segment_tree(tok, &sm, &v, TreeMode::AllSegmentations).unwrap();
        assert_eq!(tree.leaf_count(1), BigUint::one());
        assert_eq!(tree.max_segments(), 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sampled = tree.sample_uniform_segments(1, &mut rng).unwrap();
        assert_eq!(sampled.ids(), &[tok]);
        assert_eq!(sampled.spans(), &[(0, 1)]);
    }

    #[test]
    fn sampling_infeasible_length_errors() {
        let v = ab_vocab();
        let sm = build_split_map(&v, SplitArity::Two);
        let tok = v.id_of(b"ab").unwrap();
        let tree = build_segment_tree(tok, &sm, &v, TreeMode::AllSegmentations).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(matches!(
            tree.sample_uniform_segments(3, &mut rng),
            Err(Error::NoPathOfLength { requested: 3 })
        ));
    }

    /// Per-outcome deviation stays within 3 sigma of the multinomial
    /// model for each exact sampler.
    #[test]
    fn samplers_are_exact_within_three_sigma() {
        let v = sec2_vocab();
        let text = b"revolution";
        let all = enumerate_all(text, &v, usize::MAX).unwrap();
        let draws = 20 * all.len().max(250) as u32;
        let check = |hits: &std::collections::BTreeMap<Vec<TokenId>, u32>,
                     support: &[Vec<TokenId>],
                     label: &str| {
            let p = 1.0 / support.len() as f64;
            let sigma = (p * (1.0 - p) / f64::from(draws)).sqrt();
            for outcome in support {
                let p_hat =
                    f64::from(hits.get(outcome).copied().unwrap_or(0)) / f64::from(draws);
                assert!(
                    (p_hat - p).abs() < 3.0 * sigma,
                    "{label}: outcome {outcome:?} at {p_hat} vs {p}"
                );
            }
        };

        let dag = SegmentationDag::build(text, &v);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut hits = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *hits.entry(dag.sample_uniform(&mut rng).ids().to_vec()).or_insert(0) += 1;
        }
        let support: Vec<Vec<TokenId>> = all.iter().map(|s| s.ids().to_vec()).collect();
        check(&hits, &support, "segmentation dag");

        let reference = encode_canonical(text, &v, false);
        let ddag = DistanceDag::build(text, &reference, text.len(), &v).unwrap();
        let layer: Vec<Vec<TokenId>> = ddag
            .enumerate_at(9)
            .iter()
            .map(|s| s.ids().to_vec())
            .collect();
        assert!(layer.len() >= 2);
        let mut hits = std::collections::BTreeMap::new();
        for _ in 0..draws {
            *hits
                .entry(ddag.sample_at(9, &mut rng).unwrap().ids().to_vec())
                .or_insert(0) += 1;
        }
        check(&hits, &layer, "distance dag layer 9");

        let sm = build_split_map(&v, SplitArity::Two);
        let tok = v.id_of(b"revolution").unwrap();
        let tree = build_segment_tree(tok, &sm, &v, TreeMode::AllSegmentations).unwrap();
        let five: Vec<Vec<TokenId>> = tree
            .paths()
            .into_iter()
            .filter(|p| p.len() == 5)
            .collect();
        assert!(five.len() >= 2);
        let mut hits = std::collections::BTreeMap::new();
        for _ in 0..draws {
            let got = tree.sample_uniform_segments(5, &mut rng).unwrap();
            *hits.entry(got.ids().to_vec()).or_insert(0) += 1;
        }
        check(&hits, &five, "segment tree depth 5");
    }

    #[test]
    fn distance_layers_partition_all_tokenisations() {
        let v = sec2_vocab();
        let text = b"revolution";
        let reference = encode_canonical(text, &v, false);
        let ddag = DistanceDag::build(text, &reference, text.len(), &v).unwrap();
        let total: BigUint = ddag.counts_per_k().iter().sum();
        assert_eq!(total, count_tokenisations(text, &v));
        assert_eq!(ddag.count_at(0), BigUint::one());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let at0 = ddag.sample_at(0, &mut rng).unwrap();
        assert_eq!(at0, reference);
    }

    #[test]
    fn distance_two_layer_on_ab() {
        let v = ab_vocab();
        let reference = encode_canonical(b"ab", &v, false);
        assert_eq!(reference.ids().len(), 1);
        let ddag = DistanceDag::build(b"ab", &reference, 4, &v).unwrap();
        assert_eq!(ddag.count_at(2), BigUint::one());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = ddag.sample_at(2, &mut rng).unwrap();
        assert_eq!(u.len(), 2);
        assert!(matches!(
            ddag.sample_at(1, &mut rng),
            Err(Error::EmptyDistanceLayer { k: 1 })
        ));
    }
}
