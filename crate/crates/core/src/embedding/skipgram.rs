use rand::Rng;

use super::huffman::HuffmanTree;
use crate::corpus::{EncodedSnapshot, OOV};
use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ln σ(x)`, stable for large |x|.
#[inline]
fn ln_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn branch_sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `ln Pr(target | input)` under the hierarchical softmax: the sum over the
/// target's path of `ln σ(±nodeᵀ·input)`, `+` for branch 0 and `−` for
/// branch 1. `nodes` holds the internal-node vectors row-major.
pub fn hs_log_prob(tree: &HuffmanTree, nodes: &[f64], input: &[f64], target: u32) -> Result<f64> {
    let dim = input.len();
    let expected = tree.internal_count() * dim;
    if nodes.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: nodes.len(),
        });
    }
    if target as usize >= tree.word_count() {
        return Err(Error::InvalidArgument(format!("word id {target} out of range")));
    }
    Ok(path_log_prob(tree, nodes, dim, input, target))
}

fn path_log_prob(tree: &HuffmanTree, nodes: &[f64], dim: usize, input: &[f64], target: u32) -> f64 {
    tree.path(target)
        .iter()
        .zip(tree.code(target))
        .map(|(&node, &bit)| {
            let n = &nodes[node as usize * dim..(node as usize + 1) * dim];
            ln_sigmoid(branch_sign(bit) * dot(n, input))
        })
        .sum()
}

/// Skipgram parameters: one input vector per word and one output vector per
/// internal node of the Huffman tree.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipGram {
    dim: usize,
    words: Vec<f64>,
    nodes: Vec<f64>,
    scratch: Vec<f64>,
}

impl SkipGram {
    /// All parameters zero.
    pub fn zeros(n_words: usize, dim: usize) -> Self {
        SkipGram {
            dim,
            words: vec![0.0; n_words * dim],
            nodes: vec![0.0; n_words.saturating_sub(1) * dim],
            scratch: vec![0.0; dim],
        }
    }

    /// Word vectors uniform in `[-0.5/d, 0.5/d]`, node vectors zero.
    pub fn init<R: Rng>(n_words: usize, dim: usize, rng: &mut R) -> Self {
        let mut model = Self::zeros(n_words, dim);
        let half = 0.5 / dim as f64;
        for x in &mut model.words {
            *x = rng.random_range(-half..=half);
        }
        model
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn word_count(&self) -> usize {
        self.words.len() / self.dim
    }

    pub fn word_vector(&self, word: u32) -> &[f64] {
        &self.words[word as usize * self.dim..(word as usize + 1) * self.dim]
    }

    pub fn word_vector_mut(&mut self, word: u32) -> &mut [f64] {
        &mut self.words[word as usize * self.dim..(word as usize + 1) * self.dim]
    }

    pub fn node_vector_mut(&mut self, node: u32) -> &mut [f64] {
        &mut self.nodes[node as usize * self.dim..(node as usize + 1) * self.dim]
    }

    pub fn word_vectors(&self) -> &[f64] {
        &self.words
    }

    pub fn node_vectors(&self) -> &[f64] {
        &self.nodes
    }

    pub fn into_word_vectors(self) -> Vec<f64> {
        self.words
    }

    /// `ln Pr(context | center)`.
    pub fn log_prob(&self, tree: &HuffmanTree, center: u32, context: u32) -> f64 {
        path_log_prob(tree, &self.nodes, self.dim, self.word_vector(center), context)
    }

    /// One gradient step on `−ln Pr(context | center)` for the center word
    /// vector and the node vectors on the context word's path. All
    /// gradients are taken at the pre-step parameters. Returns the loss
    /// before the update.
    pub fn sgd_step(&mut self, tree: &HuffmanTree, center: u32, context: u32, alpha: f64) -> Result<f64> {
        let dim = self.dim;
        let c = center as usize * dim;
        self.scratch.iter_mut().for_each(|x| *x = 0.0);
        let mut loss = 0.0;
        for (&node, &bit) in tree.path(context).iter().zip(tree.code(context)) {
            let n = node as usize * dim;
            let sign = branch_sign(bit);
            let x = dot(&self.nodes[n..n + dim], &self.words[c..c + dim]);
            loss -= ln_sigmoid(sign * x);
            // −∂loss/∂x
            let g = sign * sigmoid(-sign * x);
            if !g.is_finite() {
                return Err(Error::NonFiniteGradient);
            }
            let step = alpha * g;
            let (node_vec, input) = (&mut self.nodes[n..n + dim], &self.words[c..c + dim]);
            for ((acc, nv), &h) in self.scratch.iter_mut().zip(node_vec.iter_mut()).zip(input) {
                *acc += g * *nv;
                *nv += step * h;
            }
        }
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient);
        }
        for (w, &acc) in self.words[c..c + dim].iter_mut().zip(&self.scratch) {
            *w += alpha * acc;
        }
        Ok(loss)
    }
}

/// Calls `visit(center, context)` for every skipgram pair in `doc`: each
/// in-vocabulary token paired with the in-vocabulary tokens at most
/// `window` positions away. `OOV` entries occupy positions but never pair.
pub fn for_each_pair(doc: &[u32], window: usize, mut visit: impl FnMut(u32, u32)) {
    for (i, &center) in doc.iter().enumerate() {
        if center == OOV {
            continue;
        }
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(doc.len() - 1);
        for (j, &context) in doc.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i && context != OOV {
                visit(center, context);
            }
        }
    }
}

/// The full training objective `J` over a snapshot at fixed parameters:
/// the summed negative log-likelihood of every context word, without
/// subsampling.
pub fn objective(model: &SkipGram, tree: &HuffmanTree, snapshot: &EncodedSnapshot, window: usize) -> f64 {
    let mut total = 0.0;
    for doc in snapshot.documents() {
        for_each_pair(doc, window, |center, context| {
            total -= model.log_prob(tree, center, context);
        });
    }
    total
}
