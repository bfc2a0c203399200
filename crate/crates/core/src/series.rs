//! Per-word time series: frequency, syntactic and distributional.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::alignment::Alignment;
use crate::corpus::{pos_distribution, pos_distributions, PosDistribution, TemporalCorpus, Vocabulary};
use crate::embedding::{cosine, EmbeddingSpace};
use crate::error::{Error, Result};
use crate::fmt::significant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Frequency,
    Syntactic,
    Distributional,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Frequency, Method::Syntactic, Method::Distributional];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Frequency => "frequency",
            Method::Syntactic => "syntactic",
            Method::Distributional => "distributional",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(Method::Frequency),
            "syntactic" => Ok(Method::Syntactic),
            "distributional" => Ok(Method::Distributional),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordTimeSeries {
    pub word: String,
    pub method: Method,
    pub values: Vec<f64>,
}

/// One method's series for every vocabulary word, rows in id order.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesEnsemble {
    pub method: Method,
    pub words: Vec<String>,
    pub labels: Vec<String>,
    /// `values[word * n + t]`
    values: Vec<f64>,
}

impl SeriesEnsemble {
    pub fn new(method: Method, words: Vec<String>, labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != words.len() * labels.len() {
            return Err(Error::DimensionMismatch {
                expected: words.len() * labels.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{method} series contains non-finite values")));
        }
        Ok(SeriesEnsemble {
            method,
            words,
            labels,
            values,
        })
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, word: usize) -> &[f64] {
        let n = self.labels.len();
        &self.values[word * n..(word + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.labels.len().max(1))
    }

    pub fn series(&self, word: usize) -> WordTimeSeries {
        WordTimeSeries {
            word: self.words[word].clone(),
            method: self.method,
            values: self.row(word).to_vec(),
        }
    }

    /// Long-form CSV `word,method,snapshot,value`, 9 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "word,method,snapshot,value")?;
        for (word, row) in self.words.iter().zip(self.rows()) {
            for (label, &v) in self.labels.iter().zip(row) {
                writeln!(out, "{},{},{},{}", word, self.method, label, significant(v, 9))?;
            }
        }
        Ok(())
    }
}

fn labels(corpus: &TemporalCorpus) -> Vec<String> {
    corpus.snapshots().iter().map(|s| s.label().label.clone()).collect()
}

/// `T_t(w) = ln(#(w ∈ C_t) / |C_t|)`.
pub fn frequency_series(vocab: &Vocabulary, corpus: &TemporalCorpus, word: &str) -> Result<WordTimeSeries> {
    let id = vocab.require(word)?;
    let values = corpus
        .snapshots()
        .iter()
        .enumerate()
        .map(|(t, snap)| (vocab.count(id, t) as f64 / snap.token_count() as f64).ln())
        .collect();
    Ok(WordTimeSeries {
        word: word.to_owned(),
        method: Method::Frequency,
        values,
    })
}

pub fn frequency_ensemble(vocab: &Vocabulary, corpus: &TemporalCorpus) -> Result<SeriesEnsemble> {
    let n = corpus.len();
    let mut values = Vec::with_capacity(vocab.len() * n);
    for id in 0..vocab.len() as u32 {
        for (t, snap) in corpus.snapshots().iter().enumerate() {
            values.push((vocab.count(id, t) as f64 / snap.token_count() as f64).ln());
        }
    }
    SeriesEnsemble::new(Method::Frequency, vocab.words().to_vec(), labels(corpus), values)
}

/// `p log2(p / m)` with `0 log 0 = 0`.
fn kl_term(p: f64, m: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * (p / m).log2()
    }
}

/// Jensen–Shannon divergence in bits, over the union of both tag sets.
pub fn jsd(p: &PosDistribution, q: &PosDistribution) -> f64 {
    let mut tags: Vec<&str> = p.iter().map(|(t, _)| t).chain(q.iter().map(|(t, _)| t)).collect();
    tags.sort_unstable();
    tags.dedup();
    let mut total = 0.0;
    for tag in tags {
        let (a, b) = (p.prob(tag), q.prob(tag));
        let m = 0.5 * (a + b);
        // each term is symmetric in (a, b) only as a sum; add in a fixed
        // order of the sorted pair so jsd(p, q) == jsd(q, p) bit for bit
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        total += kl_term(lo, m) + kl_term(hi, m);
    }
    (0.5 * total).clamp(0.0, 1.0)
}

/// `T_t(w) = JSD(Q_0(w), Q_t(w))`.
pub fn syntactic_series(corpus: &TemporalCorpus, word: &str) -> Result<WordTimeSeries> {
    let dists = corpus
        .snapshots()
        .iter()
        .map(|s| pos_distribution(s, word))
        .collect::<Result<Vec<_>>>()?;
    let values = dists.iter().map(|q| jsd(&dists[0], q)).collect();
    Ok(WordTimeSeries {
        word: word.to_owned(),
        method: Method::Syntactic,
        values,
    })
}

pub fn syntactic_ensemble(vocab: &Vocabulary, corpus: &TemporalCorpus) -> Result<SeriesEnsemble> {
    let per_snapshot = corpus
        .snapshots()
        .iter()
        .map(|s| pos_distributions(s, vocab))
        .collect::<Result<Vec<_>>>()?;
    let n = corpus.len();
    let mut values = Vec::with_capacity(vocab.len() * n);
    for w in 0..vocab.len() {
        let base = &per_snapshot[0][w];
        values.extend(per_snapshot.iter().map(|d| jsd(base, &d[w])));
    }
    SeriesEnsemble::new(Method::Syntactic, vocab.words().to_vec(), labels(corpus), values)
}

/// Cosine distance `1 − cos(warped, base)`; the warped vector is normalized
/// here, `base` is expected to be unit length already but is divided by
/// its norm as well.
pub fn displacement(warped: &[f64], base: &[f64]) -> Option<f64> {
    cosine(warped, base).map(|c| (1.0 - c).clamp(0.0, 2.0))
}

/// `T_t(w) = 1 − cos(φ_t(w) W_{t↦0}(w), φ_0(w))`, with `T_0 = 0`.
pub fn distributional_series(alignment: &Alignment, base: &EmbeddingSpace, word: u32) -> Result<WordTimeSeries> {
    let name = base
        .words()
        .get(word as usize)
        .ok_or_else(|| Error::InvalidArgument(format!("word id {word} out of range")))?;
    let base_vec = base.vector(word);
    let mut values = Vec::with_capacity(alignment.snapshots.len());
    for (t, snap) in alignment.snapshots.iter().enumerate() {
        if t == 0 {
            values.push(0.0);
            continue;
        }
        let d = displacement(snap.warped(word), base_vec).ok_or_else(|| Error::ZeroNorm(name.clone()))?;
        values.push(d);
    }
    Ok(WordTimeSeries {
        word: name.clone(),
        method: Method::Distributional,
        values,
    })
}

pub fn distributional_ensemble(alignment: &Alignment, base: &EmbeddingSpace) -> Result<SeriesEnsemble> {
    let n = alignment.snapshots.len();
    let mut values = Vec::with_capacity(base.len() * n);
    for w in 0..base.len() as u32 {
        values.extend(distributional_series(alignment, base, w)?.values);
    }
    let labels = alignment.snapshots.iter().map(|s| s.label.clone()).collect();
    SeriesEnsemble::new(Method::Distributional, base.words().to_vec(), labels, values)
}
