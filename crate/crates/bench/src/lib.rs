//! Fixtures shared by the benchmarks.

use langshift::embedding::{EmbeddingSpace, HuffmanTree, SkipGram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A Huffman tree over `n` words with random counts and a model whose
/// vectors are all nonzero.
pub fn model(n: usize, dim: usize, seed: u64) -> (HuffmanTree, SkipGram) {
    let mut rng = rng(seed);
    let counts: Vec<u64> = (0..n).map(|_| rng.random_range(1..10_000)).collect();
    let tree = HuffmanTree::from_counts(&counts).expect("nonempty counts");
    let mut model = SkipGram::init(n, dim, &mut rng);
    for node in 0..tree.internal_count() as u32 {
        model.node_vector_mut(node).iter_mut().for_each(|x| *x = rng.random_range(-0.1..0.1));
    }
    (tree, model)
}

/// A normalized space of `n` random unit vectors.
pub fn space(label: &str, n: usize, dim: usize, seed: u64) -> EmbeddingSpace {
    let mut rng = rng(seed);
    let words = (0..n).map(|i| format!("w{i}")).collect();
    let data = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut space = EmbeddingSpace::new(label, words, dim, data).expect("consistent shape");
    space.normalize().expect("nonzero vectors");
    space
}

/// Noise around a unit step at the midpoint.
pub fn step_series(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n)
        .map(|t| rng.random_range(-0.5..0.5) + if t >= n / 2 { 1.0 } else { 0.0 })
        .collect()
}
