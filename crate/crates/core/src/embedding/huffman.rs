use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

/// Frequency-weighted Huffman coding of the vocabulary, used as the
/// hierarchical softmax tree.
///
/// Internal nodes are numbered `0..n_words-1` in merge order, so the root is
/// the last one. Each word's path lists internal nodes from the root down;
/// `codes[w][i]` is the branch taken at `paths[w][i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<u8>>,
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    /// Builds the tree from per-word counts (indexed by word id). Ties are
    /// broken by count, then by node key: leaves use their word id,
    /// internal nodes rank after all leaves in creation order.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n = counts.len();
        if n < 2 {
            return Err(Error::TooFewWords(n));
        }
        if counts.contains(&0) {
            return Err(Error::InvalidArgument("Huffman counts must be positive".into()));
        }

        // Node keys: 0..n are leaves, n.. are internal nodes.
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> =
            counts.iter().enumerate().map(|(w, &c)| Reverse((c, w))).collect();
        let mut parent = vec![0usize; 2 * n - 1];
        let mut branch = vec![0u8; 2 * n - 1];
        for internal in 0..n - 1 {
            let Reverse((c0, a)) = heap.pop().expect("heap holds at least two nodes");
            let Reverse((c1, b)) = heap.pop().expect("heap holds at least two nodes");
            let key = n + internal;
            parent[a] = key;
            parent[b] = key;
            branch[a] = 0;
            branch[b] = 1;
            heap.push(Reverse((c0 + c1, key)));
        }
        let root = 2 * n - 2;

        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for w in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = w;
            while node != root {
                code.push(branch[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(HuffmanTree { codes, paths })
    }

    /// Tree over one snapshot's counts of the vocabulary words.
    pub fn build(vocab: &Vocabulary, snapshot: usize) -> Result<Self> {
        Self::from_counts(&vocab.snapshot_counts(snapshot))
    }

    pub fn word_count(&self) -> usize {
        self.codes.len()
    }

    pub fn internal_count(&self) -> usize {
        self.codes.len() - 1
    }

    pub fn code(&self, word: u32) -> &[u8] {
        &self.codes[word as usize]
    }

    pub fn path(&self, word: u32) -> &[u32] {
        &self.paths[word as usize]
    }
}
