//! Byte-level BPE vocabulary, canonical encoding/decoding, split maps,
//! and BPE-dropout.
//!
//! The alphabet is raw bytes: every vocabulary is completed with all 256
//! single-byte tokens on construction, so every byte string has at least
//! one tokenisation and decoding never fails for sequences produced here.

use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;

use crate::{Error, Result};

/// Token identifier. Ids are dense but not required to be contiguous.
pub type TokenId = u32;

/// One merge rule: `left ∘ right → result`, priority = list position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Merge {
    pub left: TokenId,
    pub right: TokenId,
    pub result: TokenId,
}

/// An immutable byte-level BPE vocabulary.
///
/// Safe to share across threads once constructed.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_bytes: HashMap<TokenId, Vec<u8>>,
    ids: HashMap<Vec<u8>, TokenId>,
    merges: Vec<Merge>,
    merge_ranks: HashMap<(TokenId, TokenId), (u32, TokenId)>,
    byte_tokens: [TokenId; 256],
}

impl Vocabulary {
    /// Builds a vocabulary from explicit (bytes, id) pairs and merge rules
    /// given as byte-string pairs. Missing single-byte tokens are added with
    /// fresh ids.
    pub fn from_parts(
        tokens: Vec<(Vec<u8>, TokenId)>,
        merges: Vec<(Vec<u8>, Vec<u8>)>,
    ) -> Result<Self> {
        let mut token_bytes: HashMap<TokenId, Vec<u8>> = HashMap::new();
        let mut ids: HashMap<Vec<u8>, TokenId> = HashMap::new();
        for (bytes, id) in tokens {
            if bytes.is_empty() {
                return Err(Error::InvalidVocab("empty token byte-string".into()));
            }
            match token_bytes.entry(id) {
                Entry::Occupied(_) => {
                    return Err(Error::InvalidVocab(format!("duplicate token id {id}")));
                }
                Entry::Vacant(slot) => slot.insert(bytes.clone()),
            };
            if ids.insert(bytes.clone(), id).is_some() {
                return Err(Error::InvalidVocab(format!(
                    "duplicate token byte-string {:?}",
                    escape_bytes(&bytes)
                )));
            }
        }

        // Byte completion: guarantee full coverage of the byte alphabet.
        let mut next_id: TokenId = token_bytes.keys().copied().max().map_or(0, |m| m + 1);
        let mut byte_tokens = [0 as TokenId; 256];
        for b in 0..=255u8 {
            let bytes = vec![b];
            let id = match ids.get(&bytes) {
                Some(&id) => id,
                None => {
                    let id = next_id;
                    next_id += 1;
                    ids.insert(bytes.clone(), id);
                    token_bytes.insert(id, bytes);
                    id
                }
            };
            byte_tokens[b as usize] = id;
        }

        // Merge validation: operands must be known tokens that exist at the
        // time the rule applies (single byte or the result of an earlier
        // rule), and the concatenation must itself be a vocabulary token.
        let mut merge_list = Vec::with_capacity(merges.len());
        let mut merge_ranks = HashMap::new();
        let mut derived: HashMap<TokenId, ()> = HashMap::new();
        for (rank, (left_bytes, right_bytes)) in merges.into_iter().enumerate() {
            let left = *ids.get(&left_bytes).ok_or_else(|| {
                Error::InvalidVocab(format!(
                    "merge references unknown token {:?}",
                    escape_bytes(&left_bytes)
                ))
            })?;
            let right = *ids.get(&right_bytes).ok_or_else(|| {
                Error::InvalidVocab(format!(
                    "merge references unknown token {:?}",
                    escape_bytes(&right_bytes)
                ))
            })?;
            let mut concat = left_bytes.clone();
            concat.extend_from_slice(&right_bytes);
            let result = *ids.get(&concat).ok_or_else(|| {
                Error::InvalidVocab(format!(
                    "merge result {:?} is not in the vocabulary",
                    escape_bytes(&concat)
                ))
            })?;
            for (operand, bytes) in [(left, &left_bytes), (right, &right_bytes)] {
                if bytes.len() > 1 && !derived.contains_key(&operand) {
                    return Err(Error::InvalidVocab(format!(
                        "merge operand {:?} is neither a byte nor an earlier merge result",
                        escape_bytes(bytes)
                    )));
                }
            }
            if merge_ranks
                .insert((left, right), (rank as u32, result))
                .is_some()
            {
                return Err(Error::InvalidVocab(format!(
                    "duplicated merge line {:?} {:?}",
                    escape_bytes(&left_bytes),
                    escape_bytes(&right_bytes)
                )));
            }
            derived.insert(result, ());
            merge_list.push(Merge { left, right, result });
        }

        Ok(Vocabulary {
            token_bytes,
            ids,
            merges: merge_list,
            merge_ranks,
            byte_tokens,
        })
    }

    /// Builds a vocabulary from byte-strings alone (sequential ids, no
    /// merges). Handy for fixtures where only membership matters.
    pub fn from_tokens<I>(tokens: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<Vec<u8>>,
    {
        let mut seen: HashMap<Vec<u8>, ()> = HashMap::new();
        let mut pairs = Vec::new();
        let mut id: TokenId = 0;
        for t in tokens {
            let bytes: Vec<u8> = t.into();
            if seen.insert(bytes.clone(), ()).is_none() {
                pairs.push((bytes, id));
                id += 1;
            }
        }
        Self::from_parts(pairs, Vec::new())
    }

    /// Loads a vocabulary from `vocab.json` (escaped token string → id) and
    /// `merges.txt` (one `LEFT RIGHT` pair per line, priority = line order,
    /// `#`-prefixed lines ignored).
    pub fn load(vocab_path: &Path, merges_path: &Path) -> Result<Self> {
        let file = File::open(vocab_path)?;
        let raw: HashMap<String, TokenId> = serde_json::from_reader(BufReader::new(file))?;
        let mut tokens = Vec::with_capacity(raw.len());
        for (escaped, id) in raw {
            tokens.push((unescape_bytes(&escaped)?, id));
        }
        // Deterministic construction order regardless of map iteration.
        tokens.sort_by_key(|(_, id)| *id);

        let mut merges = Vec::new();
        for line in BufReader::new(File::open(merges_path)?).lines() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (left, right) = trimmed.split_once(' ').ok_or_else(|| {
                Error::InvalidVocab(format!("malformed merge line {trimmed:?}"))
            })?;
            merges.push((unescape_bytes(left)?, unescape_bytes(right.trim())?));
        }
        Self::from_parts(tokens, merges)
    }

    pub fn len(&self) -> usize {
        self.token_bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_bytes.is_empty() // never true: byte completion adds 256 tokens
    }

    /// Number of tokens longer than one byte.
    pub fn multi_byte_count(&self) -> usize {
        self.token_bytes.values().filter(|b| b.len() > 1).count()
    }

    pub fn bytes_of(&self, id: TokenId) -> Result<&[u8]> {
        self.token_bytes
            .get(&id)
            .map(|b| b.as_slice())
            .ok_or(Error::UnknownToken(id))
    }

    pub fn id_of(&self, bytes: &[u8]) -> Option<TokenId> {
        self.ids.get(bytes).copied()
    }

    pub fn contains(&self, bytes: &[u8]) -> bool {
        self.ids.contains_key(bytes)
    }

    pub fn byte_token(&self, b: u8) -> TokenId {
        self.byte_tokens[b as usize]
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Rank and result of the merge rule for an adjacent pair, if any.
    pub fn merge_rank(&self, left: TokenId, right: TokenId) -> Option<(u32, TokenId)> {
        self.merge_ranks.get(&(left, right)).copied()
    }

    /// Iterates over all (id, bytes) pairs in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (TokenId, &[u8])> {
        let mut ids: Vec<TokenId> = self.token_bytes.keys().copied().collect();
        ids.sort_unstable();
        ids.into_iter()
            .map(move |id| (id, self.token_bytes[&id].as_slice()))
    }
}

/// A tokenisation: token ids plus the half-open byte spans they cover in
/// the source string. Spans are contiguous and cover `[0, len)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    ids: Vec<TokenId>,
    spans: Vec<(usize, usize)>,
}

impl TokenSeq {
    pub fn new(ids: Vec<TokenId>, spans: Vec<(usize, usize)>) -> Self {
        debug_assert_eq!(ids.len(), spans.len());
        TokenSeq { ids, spans }
    }

    pub fn empty() -> Self {
        TokenSeq { ids: Vec::new(), spans: Vec::new() }
    }

    /// Builds a sequence from ids alone, deriving spans from token lengths.
    pub fn from_ids(ids: &[TokenId], vocab: &Vocabulary) -> Result<Self> {
        let mut spans = Vec::with_capacity(ids.len());
        let mut pos = 0;
        for &id in ids {
            let len = vocab.bytes_of(id)?.len();
            spans.push((pos, pos + len));
            pos += len;
        }
        Ok(TokenSeq { ids: ids.to_vec(), spans })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[TokenId] {
        &self.ids
    }

    pub fn spans(&self) -> &[(usize, usize)] {
        &self.spans
    }

    /// Stable histogram key: hyphen-joined decimal ids.
    pub fn id_key(&self) -> String {
        self.ids
            .iter()
            .map(|id| id.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    /// Checks the TokenSeq invariants against a source string: spans are
    /// contiguous, cover `[0, len)`, and each token's bytes equal the span.
    pub fn validate_against(&self, text: &[u8], vocab: &Vocabulary) -> Result<()> {
        let mut pos = 0;
        for (&id, &(start, end)) in self.ids.iter().zip(&self.spans) {
            if start != pos || end > text.len() || end < start {
                return Err(Error::StringMismatch);
            }
            if vocab.bytes_of(id)? != &text[start..end] {
                return Err(Error::StringMismatch);
            }
            pos = end;
        }
        if pos != text.len() {
            return Err(Error::StringMismatch);
        }
        Ok(())
    }
}

/// Decodes a token sequence back into its byte string.
pub fn decode(seq: &TokenSeq, vocab: &Vocabulary) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for &id in seq.ids() {
        out.extend_from_slice(vocab.bytes_of(id)?);
    }
    Ok(out)
}

/// Splits text into pretoken chunks at whitespace-run starts, so a run of
/// whitespace stays glued to the word that follows it (leading-space
/// tokens come out naturally).
pub fn pretoken_chunks(text: &[u8]) -> Vec<(usize, usize)> {
    let mut chunks = Vec::new();
    let mut start = 0;
    for i in 1..text.len() {
        if text[i].is_ascii_whitespace() && !text[i - 1].is_ascii_whitespace() {
            chunks.push((start, i));
            start = i;
        }
    }
    if !text.is_empty() {
        chunks.push((start, text.len()));
    }
    chunks
}

/// Canonical BPE encoding: each pretoken chunk that is itself a vocabulary
/// token is emitted directly; otherwise the highest-priority applicable
/// merge is applied repeatedly, starting from single bytes.
///
/// With `pretokenise` off the whole input is one chunk.
pub fn encode_canonical(text: &[u8], vocab: &Vocabulary, pretokenise: bool) -> TokenSeq {
    encode_chunks::<rand_chacha::ChaCha8Rng>(text, vocab, pretokenise, None)
        .expect("p_drop absent, encoding is total")
}

/// BPE-dropout encoding: identical to the canonical encoder except that
/// every merge application is independently skipped with probability
/// `p_drop`. `p_drop = 0` reproduces `encode_canonical` exactly and
/// `p_drop = 1` leaves chunks not in the vocabulary at byte level.
pub fn bpe_dropout_encode<R: Rng>(
    text: &[u8],
    vocab: &Vocabulary,
    p_drop: f64,
    pretokenise: bool,
    rng: &mut R,
) -> Result<TokenSeq> {
    if !(0.0..=1.0).contains(&p_drop) || p_drop.is_nan() {
        return Err(Error::InvalidParameter(format!(
            "p_drop must lie in [0, 1], got {p_drop}"
        )));
    }
    Ok(encode_chunks(text, vocab, pretokenise, Some((p_drop, rng)))
        .expect("validated p_drop, encoding is total"))
}

fn encode_chunks<R: Rng>(
    text: &[u8],
    vocab: &Vocabulary,
    pretokenise: bool,
    mut dropout: Option<(f64, &mut R)>,
) -> Option<TokenSeq> {
    let chunks = if pretokenise {
        pretoken_chunks(text)
    } else if text.is_empty() {
        Vec::new()
    } else {
        vec![(0, text.len())]
    };

    let mut ids = Vec::new();
    let mut spans = Vec::new();
    for (start, end) in chunks {
        let chunk = &text[start..end];
        // Vocabulary lookup before merges: tokens such as the fixture's
        // "revolution" are not derivable through the merge list, yet their
        // canonical tokenisation is the single token.
        if let Some(id) = vocab.id_of(chunk) {
            ids.push(id);
            spans.push((start, end));
            continue;
        }
        let pieces = merge_chunk(chunk, vocab, &mut dropout);
        for (id, s, e) in pieces {
            ids.push(id);
            spans.push((start + s, start + e));
        }
    }
    Some(TokenSeq::new(ids, spans))
}

/// One candidate merge application at a specific position.
#[derive(PartialEq, Eq)]
struct Candidate {
    rank: u32,
    left: usize,
    right: usize,
    left_id: TokenId,
    right_id: TokenId,
    result: TokenId,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap is a max-heap; invert so the lowest (rank, position)
        // pops first, matching left-to-right application of the best rule.
        other
            .rank
            .cmp(&self.rank)
            .then_with(|| other.left.cmp(&self.left))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn merge_chunk<R: Rng>(
    chunk: &[u8],
    vocab: &Vocabulary,
    dropout: &mut Option<(f64, &mut R)>,
) -> Vec<(TokenId, usize, usize)> {
    #[derive(Clone)]
    struct Sym {
        id: TokenId,
        start: usize,
        end: usize,
        prev: Option<usize>,
        next: Option<usize>,
        alive: bool,
    }

    let mut syms: Vec<Sym> = chunk
        .iter()
        .enumerate()
        .map(|(i, &b)| Sym {
            id: vocab.byte_token(b),
            start: i,
            end: i + 1,
            prev: if i == 0 { None } else { Some(i - 1) },
            next: if i + 1 == chunk.len() { None } else { Some(i + 1) },
            alive: true,
        })
        .collect();

    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Candidate>, syms: &[Sym], left: usize, right: usize| {
        if let Some((rank, result)) = vocab.merge_rank(syms[left].id, syms[right].id) {
            heap.push(Candidate {
                rank,
                left,
                right,
                left_id: syms[left].id,
                right_id: syms[right].id,
                result,
            });
        }
    };
    for i in 0..syms.len().saturating_sub(1) {
        push(&mut heap, &syms, i, i + 1);
    }

    while let Some(c) = heap.pop() {
        let stale = !syms[c.left].alive
            || !syms[c.right].alive
            || syms[c.left].next != Some(c.right)
            || syms[c.left].id != c.left_id
            || syms[c.right].id != c.right_id;
        if stale {
            continue;
        }
        if let Some((p, rng)) = dropout.as_mut() {
            // Each valid application gets exactly one coin; a skipped
            // application stays skipped.
            if *p > 0.0 && rng.gen::<f64>() < *p {
                continue;
            }
        }
        syms[c.left].id = c.result;
        syms[c.left].end = syms[c.right].end;
        syms[c.right].alive = false;
        let after = syms[c.right].next;
        syms[c.left].next = after;
        if let Some(a) = after {
            syms[a].prev = Some(c.left);
            push(&mut heap, &syms, c.left, a);
        }
        if let Some(b) = syms[c.left].prev {
            push(&mut heap, &syms, b, c.left);
        }
    }

    syms.iter()
        .filter(|s| s.alive)
        .map(|s| (s.id, s.start, s.end))
        .collect()
}

/// Split-map arity: pairwise decompositions only, or pairs and triples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitArity {
    Two,
    TwoAndThree,
}

/// For each token, every decomposition into 2 (optionally 3) vocabulary
/// subtokens whose concatenation reconstructs the token.
#[derive(Debug, Clone)]
pub struct SplitMap {
    arity: SplitArity,
    table: HashMap<TokenId, Vec<Vec<TokenId>>>,
    empty: Vec<Vec<TokenId>>,
}

impl SplitMap {
    pub fn arity(&self) -> SplitArity {
        self.arity
    }

    /// All decompositions of a token, in deterministic split-point order.
    pub fn splits(&self, id: TokenId) -> &[Vec<TokenId>] {
        self.table.get(&id).map_or(&self.empty, |v| v.as_slice())
    }

    pub fn has_splits(&self, id: TokenId) -> bool {
        self.table.get(&id).is_some_and(|v| !v.is_empty())
    }
}

/// Builds the complete split map by testing every internal split point of
/// every token for vocabulary membership of all parts.
pub fn build_split_map(vocab: &Vocabulary, arity: SplitArity) -> SplitMap {
    let mut table: HashMap<TokenId, Vec<Vec<TokenId>>> = HashMap::new();
    for (id, bytes) in vocab.iter() {
        let n = bytes.len();
        if n < 2 {
            continue;
        }
        let mut decomps = Vec::new();
        for p in 1..n {
            if let (Some(a), Some(b)) = (vocab.id_of(&bytes[..p]), vocab.id_of(&bytes[p..])) {
                decomps.push(vec![a, b]);
            }
        }
        if arity == SplitArity::TwoAndThree && n >= 3 {
            for p in 1..n {
                for q in (p + 1)..n {
                    if let (Some(a), Some(b), Some(c)) = (
                        vocab.id_of(&bytes[..p]),
                        vocab.id_of(&bytes[p..q]),
                        vocab.id_of(&bytes[q..]),
                    ) {
                        decomps.push(vec![a, b, c]);
                    }
                }
            }
        }
        if !decomps.is_empty() {
            table.insert(id, decomps);
        }
    }
    SplitMap { arity, table, empty: Vec::new() }
}

/// Escapes a token byte-string for display and for `vocab.json` keys:
/// printable ASCII except backslash is kept verbatim, everything else
/// becomes `\xNN`.
pub fn escape_bytes(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len());
    for &b in bytes {
        if (0x20..0x7f).contains(&b) && b != b'\\' {
            out.push(b as char);
        } else {
            out.push_str(&format!("\\x{b:02x}"));
        }
    }
    out
}

/// Inverse of [`escape_bytes`].
pub fn unescape_bytes(s: &str) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(s.len());
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\\' {
            if i + 4 <= bytes.len() && bytes[i + 1] == b'x' {
                let hex = std::str::from_utf8(&bytes[i + 2..i + 4])
                    .map_err(|_| Error::InvalidVocab(format!("bad escape in {s:?}")))?;
                let b = u8::from_str_radix(hex, 16)
                    .map_err(|_| Error::InvalidVocab(format!("bad escape in {s:?}")))?;
                out.push(b);
                i += 4;
            } else {
                return Err(Error::InvalidVocab(format!("bad escape in {s:?}")));
            }
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    Ok(out)
}
