//! End-to-end wiring: train every snapshot, align, build the series of each
//! method and run detection.

use rayon::prelude::*;

use crate::alignment::{align_all_to_base, Alignment, AlignmentParams};
use crate::changepoint::{detect_ensemble, normalize_ensemble, ChangePointResult, DetectorConfig};
use crate::corpus::{TemporalCorpus, Vocabulary};
use crate::embedding::{train_snapshot, EmbeddingSpace, HuffmanTree, TrainedSnapshot, TrainingConfig};
use crate::error::{Error, Result};
use crate::series::{distributional_ensemble, frequency_ensemble, syntactic_ensemble, Method, SeriesEnsemble};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// Every snapshot trains from a seed derived from the run seed and its
    /// index.
    #[default]
    PerSnapshot,
    /// Every snapshot trains from the run seed itself, so identical
    /// snapshots yield identical spaces.
    Shared,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn snapshot_seed(seed: u64, index: usize, policy: SeedPolicy) -> u64 {
    match policy {
        SeedPolicy::Shared => seed,
        SeedPolicy::PerSnapshot => splitmix64(seed ^ splitmix64(index as u64)),
    }
}

/// Trains one space per snapshot. With `parallel`, snapshots train
/// concurrently; each run is single-threaded, so the output is the same
/// either way.
pub fn train_all(
    corpus: &TemporalCorpus,
    vocab: &Vocabulary,
    config: &TrainingConfig,
    seeds: SeedPolicy,
    parallel: bool,
) -> Result<Vec<TrainedSnapshot>> {
    let run = |index: usize| -> Result<TrainedSnapshot> {
        let snapshot = corpus.snapshot(index);
        let tree = HuffmanTree::build(vocab, index)?;
        let config = TrainingConfig {
            seed: snapshot_seed(config.seed, index, seeds),
            ..config.clone()
        };
        log::info!("training snapshot {}", snapshot.label().label);
        train_snapshot(snapshot, vocab, &tree, &config).map_err(|e| Error::Training {
            snapshot: snapshot.label().label.clone(),
            source: Box::new(e),
        })
    };
    if parallel {
        (0..corpus.len()).into_par_iter().map(run).collect()
    } else {
        (0..corpus.len()).map(run).collect()
    }
}

/// Builds one method's ensemble. The distributional method needs the
/// trained spaces and returns the alignment it computed.
pub fn build_ensemble(
    method: Method,
    corpus: &TemporalCorpus,
    vocab: &Vocabulary,
    spaces: Option<&[EmbeddingSpace]>,
    alignment: &AlignmentParams,
) -> Result<(SeriesEnsemble, Option<Alignment>)> {
    match method {
        Method::Frequency => Ok((frequency_ensemble(vocab, corpus)?, None)),
        Method::Syntactic => Ok((syntactic_ensemble(vocab, corpus)?, None)),
        Method::Distributional => {
            let spaces = spaces.ok_or_else(|| {
                Error::InvalidArgument("the distributional method needs trained embeddings".into())
            })?;
            if spaces.len() != corpus.len() {
                return Err(Error::DimensionMismatch {
                    expected: corpus.len(),
                    found: spaces.len(),
                });
            }
            let aligned = align_all_to_base(spaces, alignment)?;
            let ensemble = distributional_ensemble(&aligned, &spaces[0])?;
            Ok((ensemble, Some(aligned)))
        }
    }
}

/// Normalizes an ensemble across words and tests every word.
pub fn detect_method(ensemble: &SeriesEnsemble, detector: &DetectorConfig) -> Result<Vec<ChangePointResult>> {
    let normalized = normalize_ensemble(ensemble)?;
    detect_ensemble(&normalized, detector)
}
