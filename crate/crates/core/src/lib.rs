//! Detecting statistically significant shifts in word usage across
//! time-sliced corpora.
//!
//! A [`TemporalCorpus`] is turned into one time series per word by one of
//! three [`Method`]s (frequency, part-of-speech distribution, or aligned
//! embedding displacement). The series are normalized across words and
//! tested for a mean shift with a permutation bootstrap.

pub mod alignment;
pub mod changepoint;
pub mod corpus;
pub mod embedding;
mod error;
pub mod fmt;
pub mod pipeline;
pub mod series;
pub mod synthbench;

pub use alignment::{align_all_to_base, k_nearest, learn_alignment, Alignment, AlignmentMap, AlignmentParams, NeighborSet};
pub use changepoint::{detect, detect_ensemble, normalize_ensemble, ChangePointResult, DetectorConfig, NormalizedEnsemble};
pub use corpus::{
    build_common_vocabulary, CorpusSnapshot, Format, LoadOptions, PosDistribution, SnapshotLabel, TemporalCorpus,
    Vocabulary,
};
pub use embedding::{train_snapshot, EmbeddingSpace, HuffmanTree, SkipGram, TrainingConfig};
pub use error::{Error, Result};
pub use pipeline::SeedPolicy;
pub use series::{Method, SeriesEnsemble, WordTimeSeries};
