//! Prefix trie over the vocabulary for matching all tokens starting at a
//! byte position in one forward walk.

use std::collections::HashMap;

use crate::vocab::{TokenId, Vocabulary};

#[derive(Debug, Default)]
struct Node {
    children: HashMap<u8, usize>,
    token: Option<TokenId>,
}

/// Immutable vocabulary trie; shareable across threads.
#[derive(Debug)]
pub struct VocabTrie {
    nodes: Vec<Node>,
}

impl VocabTrie {
    pub fn new(vocab: &Vocabulary) -> Self {
        let mut nodes = vec![Node::default()];
        for (id, bytes) in vocab.iter() {
            let mut cur = 0;
            for &b in bytes {
                cur = match nodes[cur].children.get(&b) {
                    Some(&next) => next,
                    None => {
                        nodes.push(Node::default());
                        let next = nodes.len() - 1;
                        nodes[cur].children.insert(b, next);
                        next
                    }
                };
            }
            nodes[cur].token = Some(id);
        }
        VocabTrie { nodes }
    }

    /// All `(token, end)` pairs for vocabulary tokens matching `text` at
    /// `pos`, ordered by ascending end position.
    pub fn matches_at(&self, text: &[u8], pos: usize) -> Vec<(TokenId, usize)> {
        let mut out = Vec::new();
        let mut cur = 0;
        for (i, &b) in text[pos..].iter().enumerate() {
            match self.nodes[cur].children.get(&b) {
                Some(&next) => cur = next,
                None => break,
            }
            if let Some(id) = self.nodes[cur].token {
                out.push((id, pos + i + 1));
            }
        }
        out
    }
}
