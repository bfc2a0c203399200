//! Per-snapshot skipgram embeddings trained with hierarchical softmax.

mod huffman;
mod skipgram;
mod space;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusSnapshot, Vocabulary, OOV};
use crate::error::{Error, Result};

pub use huffman::HuffmanTree;
pub use skipgram::{for_each_pair, hs_log_prob, objective, SkipGram};
pub use space::{cosine, EmbeddingSpace};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingConfig {
    pub dim: usize,
    pub window: usize,
    /// Subsampling threshold `s`.
    pub subsample: f64,
    pub alpha: f64,
    pub min_alpha: f64,
    pub max_epochs: usize,
    /// Training stops once `1 − ρ ≤ tolerance`.
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            dim: 200,
            window: 10,
            subsample: 1e-5,
            alpha: 0.025,
            min_alpha: 0.025 * 1e-4,
            max_epochs: 5,
            tolerance: 1e-4,
            seed: 1,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_owned()));
        if self.dim == 0 {
            return bad("dim must be at least 1");
        }
        if self.window == 0 {
            return bad("window must be at least 1");
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return bad("subsample threshold must lie in (0, 1]");
        }
        if !(self.min_alpha > 0.0 && self.alpha > self.min_alpha && self.alpha.is_finite()) {
            return bad("learning rates must satisfy alpha > min_alpha > 0");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1");
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive");
        }
        Ok(())
    }
}

/// Probability of keeping one occurrence of a word with relative frequency
/// `frequency`: `min(1, sqrt(s / f))`.
pub fn subsample_keep_probability(frequency: f64, threshold: f64) -> Result<f64> {
    if !(frequency > 0.0 && frequency <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "word frequency {frequency} outside (0, 1]"
        )));
    }
    Ok((threshold / frequency).sqrt().min(1.0))
}

/// Convergence measure `ρ`: the mean over words of the cosine between
/// consecutive parameter vectors. Zero vectors contribute 0.
pub fn check_convergence(prev: &[f64], curr: &[f64], dim: usize, tolerance: f64) -> Result<(f64, bool)> {
    if prev.len() != curr.len() {
        return Err(Error::DimensionMismatch {
            expected: prev.len(),
            found: curr.len(),
        });
    }
    if dim == 0 || !prev.len().is_multiple_of(dim) || prev.is_empty() {
        return Err(Error::InvalidArgument("parameter length is not a multiple of dim".into()));
    }
    let n = prev.len() / dim;
    let mut zero_vectors = 0;
    let total: f64 = prev
        .chunks_exact(dim)
        .zip(curr.chunks_exact(dim))
        .map(|(a, b)| match cosine(a, b) {
            Some(c) => c,
            None => {
                zero_vectors += 1;
                0.0
            }
        })
        .sum();
    if zero_vectors > 0 {
        log::warn!("{zero_vectors} zero vectors while measuring convergence");
    }
    let rho = (total / n as f64).clamp(-1.0, 1.0);
    Ok((rho, 1.0 - rho <= tolerance))
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingReport {
    /// Summed pair loss per epoch (natural log), measured online.
    pub epoch_losses: Vec<f64>,
    pub epoch_pairs: Vec<u64>,
    /// `ρ` after each epoch.
    pub rho: Vec<f64>,
    pub converged: bool,
}

impl TrainingReport {
    pub fn epochs(&self) -> usize {
        self.epoch_losses.len()
    }
}

#[derive(Clone, Debug)]
pub struct TrainedSnapshot {
    /// L2-normalized word vectors.
    pub space: EmbeddingSpace,
    /// Raw parameters at the end of training.
    pub model: SkipGram,
    pub report: TrainingReport,
}

/// Trains a skipgram model on one snapshot with single-threaded SGD.
///
/// Each epoch subsamples every in-vocabulary occurrence independently, then
/// visits all (center, context) pairs within `window` positions inside a
/// document. The learning rate decays linearly from `alpha` to `min_alpha`
/// over `max_epochs` passes of the in-vocabulary tokens.
pub fn train_snapshot(
    snapshot: &CorpusSnapshot,
    vocab: &Vocabulary,
    tree: &HuffmanTree,
    config: &TrainingConfig,
) -> Result<TrainedSnapshot> {
    config.validate()?;
    let t = snapshot.label().index;
    if t >= vocab.snapshot_count() {
        return Err(Error::InvalidArgument(format!(
            "snapshot index {t} outside the vocabulary's {} snapshots",
            vocab.snapshot_count()
        )));
    }
    if tree.word_count() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: tree.word_count(),
        });
    }
    let encoded = vocab.encode(snapshot);
    let in_vocab = encoded.in_vocabulary_count();
    if in_vocab == 0 {
        return Err(Error::EmptySnapshot(snapshot.label().label.clone()));
    }

    let total_tokens = snapshot.token_count() as f64;
    let keep: Vec<f64> = (0..vocab.len() as u32)
        .map(|w| subsample_keep_probability(vocab.count(w, t) as f64 / total_tokens, config.subsample))
        .collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = SkipGram::init(vocab.len(), config.dim, &mut rng);
    let mut report = TrainingReport::default();

    let planned = (in_vocab * config.max_epochs) as f64;
    let mut processed = 0usize;
    let mut kept = Vec::new();
    for epoch in 1..=config.max_epochs {
        let previous = model.word_vectors().to_vec();
        let mut loss = 0.0;
        let mut pairs = 0u64;
        for doc in encoded.documents() {
            kept.clear();
            for &w in doc {
                if w == OOV {
                    kept.push(OOV);
                    continue;
                }
                processed += 1;
                let p = keep[w as usize];
                if p >= 1.0 || rng.random::<f64>() < p {
                    kept.push(w);
                }
            }
            let progress = processed as f64 / planned;
            let alpha = (config.alpha - (config.alpha - config.min_alpha) * progress).max(config.min_alpha);
            let mut failed = false;
            if !kept.is_empty() {
                for_each_pair(&kept, config.window, |center, context| {
                    if failed {
                        return;
                    }
                    match model.sgd_step(tree, center, context, alpha) {
                        Ok(l) => {
                            loss += l;
                            pairs += 1;
                        }
                        Err(_) => failed = true,
                    }
                });
            }
            if failed {
                return Err(Error::Divergence { epoch });
            }
        }
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        let (rho, converged) = check_convergence(&previous, model.word_vectors(), config.dim, config.tolerance)?;
        log::debug!(
            "snapshot {} epoch {epoch}: loss {loss:.4} over {pairs} pairs, rho {rho:.6}",
            snapshot.label().label
        );
        report.epoch_losses.push(loss);
        report.epoch_pairs.push(pairs);
        report.rho.push(rho);
        if converged {
            report.converged = true;
            break;
        }
    }

    let mut space = EmbeddingSpace::new(
        snapshot.label().label.clone(),
        vocab.words().to_vec(),
        config.dim,
        model.word_vectors().to_vec(),
    )?;
    space.normalize()?;
    Ok(TrainedSnapshot { space, model, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keep_probability_rule() {
        let s = 1e-5;
        assert_eq!(subsample_keep_probability(s, s).unwrap(), 1.0);
        assert!((subsample_keep_probability(100.0 * s, s).unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(subsample_keep_probability(s / 7.0, s).unwrap(), 1.0);
        assert!(subsample_keep_probability(0.0, s).is_err());
        assert!(subsample_keep_probability(-0.1, s).is_err());
    }

    #[test]
    fn convergence_extremes() {
        let a = [1.0, 2.0, -1.0, 0.5];
        let (rho, done) = check_convergence(&a, &a, 2, 1e-4).unwrap();
        assert!((rho - 1.0).abs() < 1e-12 && done);

        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let (rho, done) = check_convergence(&a, &neg, 2, 1e-4).unwrap();
        assert!((rho + 1.0).abs() < 1e-12 && !done);

        let (rho, done) = check_convergence(&[1.0, 0.0, 0.0, 1.0], &[0.0, 1.0, 1.0, 0.0], 2, 1e-4).unwrap();
        assert!(rho.abs() < 1e-12 && !done);
    }

    #[test]
    fn convergence_zero_vector_contributes_zero() {
        let (rho, _) = check_convergence(&[0.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 1.0, 0.0], 2, 1e-4).unwrap();
        assert!((rho - 0.5).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let bad = [
            TrainingConfig { dim: 0, ..Default::default() },
            TrainingConfig { window: 0, ..Default::default() },
            TrainingConfig { subsample: 0.0, ..Default::default() },
            TrainingConfig { subsample: 1.5, ..Default::default() },
            TrainingConfig { min_alpha: 0.1, ..Default::default() },
            TrainingConfig { max_epochs: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}
