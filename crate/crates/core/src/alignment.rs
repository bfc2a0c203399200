//! Per-word linear warps between embedding spaces.
//!
//! For a word `w`, the warp from snapshot `t′` onto snapshot `t` is the
//! ridge-regularized least-squares map sending the source vectors of `w`'s
//! neighborhood (computed in the source space) onto their target vectors.
//! Vectors are rows and the map multiplies on the right.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};
use crate::fmt::significant;

/// Neighbors of a query word, most similar first.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    pub neighbors: Vec<(u32, f64)>,
}

impl NeighborSet {
    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.neighbors.iter().map(|&(w, _)| w)
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }
}

fn require_normalized(space: &EmbeddingSpace) -> Result<()> {
    if space.is_normalized() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "embedding space {:?} must be L2-normalized",
            space.label()
        )))
    }
}

/// The query word followed by its `k − 1` most cosine-similar other words.
/// Ties are broken by ascending word id.
pub fn k_nearest(space: &EmbeddingSpace, word: u32, k: usize) -> Result<NeighborSet> {
    require_normalized(space)?;
    let n = space.len();
    if word as usize >= n {
        return Err(Error::InvalidArgument(format!("word id {word} out of range")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} must lie in 1..={n}")));
    }
    let query = space.vector(word);
    let mut others: Vec<(u32, f64)> = (0..n as u32)
        .filter(|&w| w != word)
        .map(|w| {
            let sim: f64 = query.iter().zip(space.vector(w)).map(|(a, b)| a * b).sum();
            (w, sim.clamp(-1.0, 1.0))
        })
        .collect();
    let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    let take = k - 1;
    if take > 0 && take < others.len() {
        others.select_nth_unstable_by(take - 1, order);
        others.truncate(take);
    }
    others.truncate(take);
    others.sort_unstable_by(order);

    let mut neighbors = Vec::with_capacity(k);
    neighbors.push((word, 1.0));
    neighbors.extend(others);
    Ok(NeighborSet { neighbors })
}

/// Learned warp of one word from a source snapshot onto a target snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentMap {
    pub word: u32,
    pub source: String,
    pub target: String,
    dim: usize,
    /// Row-major `d × d`.
    transform: Vec<f64>,
    /// Sum of squared errors at the solution, without the ridge penalty.
    pub residual: f64,
}

impl AlignmentMap {
    pub fn identity(word: u32, label: &str, dim: usize) -> Self {
        let mut transform = vec![0.0; dim * dim];
        for i in 0..dim {
            transform[i * dim + i] = 1.0;
        }
        AlignmentMap {
            word,
            source: label.to_owned(),
            target: label.to_owned(),
            dim,
            transform,
            residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transform(&self) -> &[f64] {
        &self.transform
    }

    /// Row vector times the transform.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (i, &x) in v.iter().enumerate() {
            let row = &self.transform[i * d..(i + 1) * d];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += x * w;
            }
        }
        out
    }
}

fn check_compatible(source: &EmbeddingSpace, target: &EmbeddingSpace) -> Result<()> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    if source.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: source.len(),
            found: target.len(),
        });
    }
    Ok(())
}

/// Solves `(AᵀA + λI) W = AᵀB` for the rows of `neighbors`.
fn solve_warp(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    neighbors: &NeighborSet,
    ridge: f64,
) -> Result<(Vec<f64>, f64)> {
    let d = source.dim();
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge penalty {ridge} must be finite and >= 0")));
    }
    if ridge == 0.0 && neighbors.len() < d {
        return Err(Error::RankDeficient);
    }
    let ids: Vec<u32> = neighbors.ids().collect();
    let a = DMatrix::from_fn(ids.len(), d, |r, c| source.vector(ids[r])[c]);
    let b = DMatrix::from_fn(ids.len(), d, |r, c| target.vector(ids[r])[c]);
    let mut gram = a.tr_mul(&a);
    let cross = a.tr_mul(&b);
    let scale = gram.diagonal().max();
    for i in 0..d {
        gram[(i, i)] += ridge;
    }
    let chol = gram.cholesky().ok_or(Error::RankDeficient)?;
    if ridge == 0.0 {
        let l = chol.l_dirty();
        let min_pivot = (0..d).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::RankDeficient);
        }
    }
    let solution = chol.solve(&cross);
    if solution.iter().any(|x| !x.is_finite()) {
        return Err(Error::RankDeficient);
    }
    let residual = (&a * &solution - &b).norm_squared();
    let transform: Vec<f64> = solution.transpose().as_slice().to_vec();
    Ok((transform, residual))
}

/// Learns the warp of `word` from `source` onto `target`, using the `k`
/// nearest neighbors of `word` in the source space and ridge penalty
/// `ridge`.
pub fn learn_alignment(
    source: &EmbeddingSpace,
    target: &EmbeddingSpace,
    word: u32,
    k: usize,
    ridge: f64,
) -> Result<AlignmentMap> {
    check_compatible(source, target)?;
    let neighbors = k_nearest(source, word, k)?;
    let (transform, residual) = solve_warp(source, target, &neighbors, ridge)?;
    Ok(AlignmentMap {
        word,
        source: source.label().to_owned(),
        target: target.label().to_owned(),
        dim: source.dim(),
        transform,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignmentParams {
    pub k: usize,
    pub ridge: f64,
    /// Keep every `d × d` transform in the result (memory `|V|·n·d²`).
    pub keep_transforms: bool,
}

impl AlignmentParams {
    /// `k = min(4d, |V|)`, `λ = 1e-3`.
    pub fn for_space(dim: usize, n_words: usize) -> Self {
        AlignmentParams {
            k: (4 * dim).min(n_words),
            ridge: 1e-3,
            keep_transforms: false,
        }
    }
}

/// One snapshot warped word-by-word onto the base snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignedSnapshot {
    pub label: String,
    dim: usize,
    /// `φ_t(w) · W_{t↦0}(w)` per word, row-major.
    warped: Vec<f64>,
    pub residuals: Vec<f64>,
    pub transforms: Option<Vec<AlignmentMap>>,
}

impl AlignedSnapshot {
    pub fn warped(&self, word: u32) -> &[f64] {
        &self.warped[word as usize * self.dim..(word as usize + 1) * self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.residuals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }
}

/// Every snapshot aligned onto snapshot 0; entry 0 is the base itself
/// under the identity map.
#[derive(Clone, Debug, PartialEq)]
pub struct Alignment {
    pub snapshots: Vec<AlignedSnapshot>,
}

impl Alignment {
    pub fn base_label(&self) -> &str {
        &self.snapshots[0].label
    }

    /// CSV `word,snapshot,residual` for every word of every snapshot t > 0.
    pub fn write_residuals_csv<W: Write>(&self, words: &[String], mut out: W) -> std::io::Result<()> {
        writeln!(out, "word,snapshot,residual")?;
        for snap in &self.snapshots[1..] {
            for (word, r) in words.iter().zip(&snap.residuals) {
                writeln!(out, "{},{},{}", word, snap.label, significant(*r, 9))?;
            }
        }
        Ok(())
    }
}

/// Aligns every space onto `spaces[0]`. Words are processed in parallel;
/// the result does not depend on scheduling.
pub fn align_all_to_base(spaces: &[EmbeddingSpace], params: &AlignmentParams) -> Result<Alignment> {
    if spaces.len() < 2 {
        return Err(Error::InvalidArgument("alignment needs at least two snapshots".into()));
    }
    let base = &spaces[0];
    require_normalized(base)?;
    let dim = base.dim();
    let n = base.len();
    let mut snapshots = Vec::with_capacity(spaces.len());
    snapshots.push(AlignedSnapshot {
        label: base.label().to_owned(),
        dim,
        warped: base.data().to_vec(),
        residuals: vec![0.0; n],
        transforms: params
            .keep_transforms
            .then(|| (0..n as u32).map(|w| AlignmentMap::identity(w, base.label(), dim)).collect()),
    });
    for source in &spaces[1..] {
        check_compatible(source, base)?;
        if source.words() != base.words() {
            return Err(Error::InvalidArgument(format!(
                "snapshot {:?} does not share the base vocabulary",
                source.label()
            )));
        }
        let maps: Vec<AlignmentMap> = (0..n as u32)
            .into_par_iter()
            .map(|w| {
                learn_alignment(source, base, w, params.k, params.ridge).map_err(|e| Error::Alignment {
                    word: base.words()[w as usize].clone(),
                    snapshot: source.label().to_owned(),
                    source: Box::new(e),
                })
            })
            .collect::<Result<_>>()?;
        let mut warped = Vec::with_capacity(n * dim);
        for map in &maps {
            warped.extend(map.apply(source.vector(map.word)));
        }
        let residuals = maps.iter().map(|m| m.residual).collect();
        snapshots.push(AlignedSnapshot {
            label: source.label().to_owned(),
            dim,
            warped,
            residuals,
            transforms: params.keep_transforms.then_some(maps),
        });
    }
    Ok(Alignment { snapshots })
}
