//! Mean-shift change-point detection with a permutation bootstrap.
//!
//! A series of length `n` has pivots `j = 1..n-1`; pivot `j` splits it into
//! the first `j` points and the remaining `n − j`. A change at pivot `j`
//! therefore means the new regime starts at (0-based) time index `j`, and
//! the z-score gate looks at that same index.

use std::cmp::Ordering;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fmt::significant;
use crate::series::{Method, SeriesEnsemble};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Number of bootstrap permutations `B`.
    pub bootstrap: usize,
    /// Z-score gate `γ`; `-inf` disables it, `+inf` rejects everything.
    pub gamma: f64,
    /// A word is reported significant when its p-value is below this.
    pub significance: f64,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            bootstrap: 1000,
            gamma: 1.75,
            significance: 0.05,
            seed: 1,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bootstrap == 0 {
            return Err(Error::InvalidConfig("bootstrap count must be at least 1".into()));
        }
        if self.gamma.is_nan() {
            return Err(Error::InvalidConfig("gamma must not be NaN".into()));
        }
        if !(0.0..=1.0).contains(&self.significance) {
            return Err(Error::InvalidConfig("significance level must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Cross-word z-scores of an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedEnsemble {
    pub method: Method,
    pub words: Vec<String>,
    pub labels: Vec<String>,
    /// `z[word * n + t]`
    z: Vec<f64>,
    /// Cross-word mean per time.
    pub means: Vec<f64>,
    /// Cross-word population standard deviation per time.
    pub std_devs: Vec<f64>,
}

impl NormalizedEnsemble {
    pub fn row(&self, word: usize) -> &[f64] {
        let n = self.labels.len();
        &self.z[word * n..(word + 1) * n]
    }

    pub fn word_count(&self) -> usize {
        self.words.len()
    }
}

/// `Z_i(w) = (T_i(w) − μ_i) / σ_i` with `μ_i`, `σ_i` the mean and population
/// standard deviation over words at time `i`; columns with `σ_i = 0` are 0.
pub fn normalize_ensemble(ensemble: &SeriesEnsemble) -> Result<NormalizedEnsemble> {
    let words = ensemble.word_count();
    if words < 2 {
        return Err(Error::InvalidArgument(
            "normalization needs at least two words".into(),
        ));
    }
    let n = ensemble.len();
    let mut means = vec![0.0; n];
    let mut std_devs = vec![0.0; n];
    for t in 0..n {
        let mean = ensemble.rows().map(|r| r[t]).sum::<f64>() / words as f64;
        let var = ensemble.rows().map(|r| (r[t] - mean).powi(2)).sum::<f64>() / words as f64;
        means[t] = mean;
        std_devs[t] = var.sqrt();
    }
    let mut z = Vec::with_capacity(words * n);
    for row in ensemble.rows() {
        for t in 0..n {
            z.push(if std_devs[t] > 0.0 {
                (row[t] - means[t]) / std_devs[t]
            } else {
                0.0
            });
        }
    }
    Ok(NormalizedEnsemble {
        method: ensemble.method,
        words: ensemble.words.clone(),
        labels: ensemble.labels.clone(),
        z,
        means,
        std_devs,
    })
}

/// Mean-shift values `K_j`, stored at index `j − 1` for `j = 1..n-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanShiftSeries(pub Vec<f64>);

impl MeanShiftSeries {
    pub fn pivot(&self, j: usize) -> f64 {
        self.0[j - 1]
    }
}

/// Writes `K_j = mean(S[j..n]) − mean(S[0..j])` for every pivot into `out`.
/// Values are centred on `S[0]` first so a constant series gives exact
/// zeros.
fn mean_shift_into(series: &[f64], out: &mut [f64]) {
    let n = series.len();
    let origin = series[0];
    let total: f64 = series.iter().map(|s| s - origin).sum();
    let mut prefix = 0.0;
    for j in 1..n {
        prefix += series[j - 1] - origin;
        out[j - 1] = (total - prefix) / (n - j) as f64 - prefix / j as f64;
    }
}

pub fn mean_shift(series: &[f64]) -> Result<MeanShiftSeries> {
    if series.len() < 2 {
        return Err(Error::InvalidArgument("mean shift needs at least two points".into()));
    }
    let mut out = vec![0.0; series.len() - 1];
    mean_shift_into(series, &mut out);
    Ok(MeanShiftSeries(out))
}

/// Per-pivot bootstrap p-values: the fraction of `samples` uniform random
/// permutations whose mean shift at the pivot is strictly greater than the
/// observed one. Differences within floating-point rounding of the
/// observed value do not count as greater.
pub fn bootstrap_pvalues<R: Rng + ?Sized>(z: &[f64], samples: usize, rng: &mut R) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::InvalidArgument("bootstrap needs at least one sample".into()));
    }
    let observed = mean_shift(z)?.0;
    let scale = z.iter().map(|v| (v - z[0]).abs()).fold(0.0, f64::max);
    let tolerance = 16.0 * f64::EPSILON * scale;
    let mut exceed = vec![0u32; observed.len()];
    let mut perm = z.to_vec();
    let mut shifts = vec![0.0; observed.len()];
    for _ in 0..samples {
        perm.shuffle(rng);
        mean_shift_into(&perm, &mut shifts);
        for ((count, &k), &obs) in exceed.iter_mut().zip(&shifts).zip(&observed) {
            if k > obs + tolerance {
                *count += 1;
            }
        }
    }
    Ok(exceed.iter().map(|&c| c as f64 / samples as f64).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChangePointResult {
    pub word: String,
    pub significant: bool,
    /// Time index where the new regime starts (= the pivot).
    pub ecp: Option<usize>,
    pub ecp_label: Option<String>,
    pub p_value: f64,
    /// p-value per pivot `j = 1..n-1`, at index `j − 1`.
    pub pvalues: Vec<f64>,
    pub max_zscore: f64,
}

/// Gated detection on one normalized series. Candidate pivots are
/// `{j : z[j] ≥ γ}`; the estimated change point is the candidate with the
/// smallest p-value, earliest on ties. A constant series has no candidates.
pub fn detect<R: Rng + ?Sized>(
    word: &str,
    z: &[f64],
    labels: &[String],
    config: &DetectorConfig,
    rng: &mut R,
) -> Result<ChangePointResult> {
    config.validate()?;
    if labels.len() != z.len() {
        return Err(Error::DimensionMismatch {
            expected: z.len(),
            found: labels.len(),
        });
    }
    let pvalues = bootstrap_pvalues(z, config.bootstrap, rng)?;
    let max_zscore = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // A constant series has no shift to test; its permutation p-values are
    // all 0 only because nothing can be strictly larger than 0.
    let constant = z.iter().all(|&v| v == z[0]);
    let best = (1..z.len())
        .filter(|&j| !constant && z[j] >= config.gamma)
        .map(|j| (j, pvalues[j - 1]))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(match best {
        Some((j, p)) => ChangePointResult {
            word: word.to_owned(),
            significant: p < config.significance,
            ecp: Some(j),
            ecp_label: Some(labels[j].clone()),
            p_value: p,
            pvalues,
            max_zscore,
        },
        None => ChangePointResult {
            word: word.to_owned(),
            significant: false,
            ecp: None,
            ecp_label: None,
            p_value: 1.0,
            pvalues,
            max_zscore,
        },
    })
}

/// Random stream for one word: ChaCha8 keyed by the seed, stream = word id.
pub fn word_rng(seed: u64, word: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(word);
    rng
}

/// Runs `detect` for every word in parallel, each word with its own random
/// stream, so results are independent of scheduling.
pub fn detect_ensemble(ensemble: &NormalizedEnsemble, config: &DetectorConfig) -> Result<Vec<ChangePointResult>> {
    config.validate()?;
    (0..ensemble.word_count())
        .into_par_iter()
        .map(|w| {
            let mut rng = word_rng(config.seed, w as u64);
            detect(&ensemble.words[w], ensemble.row(w), &ensemble.labels, config, &mut rng)
        })
        .collect()
}

/// Report order: ascending p-value, then descending max z-score, then the
/// given order (word id).
pub fn report_order(a: &ChangePointResult, b: &ChangePointResult) -> Ordering {
    a.p_value
        .total_cmp(&b.p_value)
        .then_with(|| b.max_zscore.total_cmp(&a.max_zscore))
}

/// Indices of `results` sorted into report order; ties keep index order.
pub fn ranking(results: &[ChangePointResult]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..results.len()).collect();
    idx.sort_by(|&a, &b| report_order(&results[a], &results[b]).then(a.cmp(&b)));
    idx
}

/// CSV `word,method,significant,ecp_label,p_value,max_zscore` in report
/// order; ties keep word-id order.
pub fn write_report_csv<W: Write>(results: &[ChangePointResult], method: Method, mut out: W) -> std::io::Result<()> {
    let mut order: Vec<&ChangePointResult> = results.iter().collect();
    order.sort_by(|a, b| report_order(a, b));
    writeln!(out, "word,method,significant,ecp_label,p_value,max_zscore")?;
    for r in order {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.word,
            method,
            r.significant,
            r.ecp_label.as_deref().unwrap_or(""),
            significant(r.p_value, 9),
            significant(r.max_zscore, 9)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Mean-shift vectors over all `n!` arrangements, sorted.
    fn null_multiset(s: &[f64]) -> Vec<Vec<f64>> {
        fn heap(k: usize, a: &mut Vec<f64>, out: &mut Vec<Vec<f64>>) {
            if k <= 1 {
                out.push(mean_shift(a).unwrap().0);
                return;
            }
            for i in 0..k {
                heap(k - 1, a, out);
                let j = if k.is_multiple_of(2) { i } else { 0 };
                a.swap(j, k - 1);
            }
        }
        let mut out = Vec::new();
        heap(s.len(), &mut s.to_vec(), &mut out);
        for v in &mut out {
            v.iter_mut().for_each(|x| *x = (*x * 1e6).round() / 1e6);
        }
        out.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal));
        out
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn normalize_three_words() {
        let e = SeriesEnsemble::new(
            Method::Frequency,
            vec!["a".into(), "b".into(), "c".into()],
            labels(1),
            vec![1.0, 2.0, 3.0],
        )
        .unwrap();
        let n = normalize_ensemble(&e).unwrap();
        let z: Vec<f64> = (0..3).map(|w| n.row(w)[0]).collect();
        let expected = 1.5f64.sqrt(); // 1 / sqrt(2/3)
        assert!((z[0] + expected).abs() < 1e-12);
        assert!(z[1].abs() < 1e-12);
        assert!((z[2] - expected).abs() < 1e-12);
        assert!((z[2] - 1.224745).abs() < 1e-6);
    }

    #[test]
    fn normalize_degenerate_column() {
        let e = SeriesEnsemble::new(Method::Frequency, vec!["a".into(), "b".into()], labels(2), vec![4.0, 1.0, 4.0, 2.0])
            .unwrap();
        let n = normalize_ensemble(&e).unwrap();
        assert_eq!(n.row(0)[0], 0.0);
        assert_eq!(n.row(1)[0], 0.0);
        assert_eq!(n.std_devs[0], 0.0);
    }

    #[test]
    fn normalize_idempotent_on_standard_column() {
        let col = [-1.0, 1.0, -1.0, 1.0];
        let e = SeriesEnsemble::new(Method::Frequency, (0..4).map(|i| i.to_string()).collect(), labels(1), col.to_vec())
            .unwrap();
        let n = normalize_ensemble(&e).unwrap();
        for w in 0..4 {
            assert!((n.row(w)[0] - col[w]).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_single_word_rejected() {
        let e = SeriesEnsemble::new(Method::Frequency, vec!["a".into()], labels(2), vec![1.0, 2.0]).unwrap();
        assert!(normalize_ensemble(&e).is_err());
    }

    #[test]
    fn mean_shift_examples() {
        let k = mean_shift(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(k.pivot(3), 1.0);
        assert!(mean_shift(&[0.3; 7]).unwrap().0.iter().all(|&v| v == 0.0));
        assert_eq!(mean_shift(&[1.0, 2.0, 3.0, 4.0]).unwrap().pivot(1), 2.0);
        assert!(mean_shift(&[1.0]).is_err());
    }

    #[test]
    fn constant_series_pvalues_zero() {
        let mut rng = word_rng(3, 0);
        let p = bootstrap_pvalues(&[0.7; 6], 200, &mut rng).unwrap();
        assert_eq!(p, vec![0.0; 5]);
    }

    #[test]
    fn constant_series_above_gate_not_significant() {
        let mut rng = word_rng(3, 0);
        let r = detect("w", &[2.5; 6], &labels(6), &DetectorConfig::default(), &mut rng).unwrap();
        assert!(!r.significant);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.ecp, None);
        assert_eq!(r.pvalues, vec![0.0; 5]);
    }

    #[test]
    fn gate_rejects_all_zero_series() {
        let mut rng = word_rng(3, 0);
        let r = detect("w", &[0.0; 6], &labels(6), &DetectorConfig::default(), &mut rng).unwrap();
        assert!(!r.significant);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.ecp, None);
    }

    #[test]
    fn infinite_gamma_rejects_everything() {
        let config = DetectorConfig {
            gamma: f64::INFINITY,
            ..Default::default()
        };
        let mut rng = word_rng(3, 0);
        let r = detect("w", &[0.0, 0.0, 9.0, 9.0], &labels(4), &config, &mut rng).unwrap();
        assert!(!r.significant && r.p_value == 1.0);
    }

    #[test]
    fn earliest_pivot_on_ties() {
        // every candidate pivot of a perfect step has p = 0
        let z = [0.0, 0.0, 3.0, 3.0, 3.0];
        let mut rng = word_rng(1, 0);
        let r = detect("w", &z, &labels(5), &DetectorConfig::default(), &mut rng).unwrap();
        assert_eq!(r.ecp, Some(2));
        assert_eq!(r.ecp_label.as_deref(), Some("2"));
        assert_eq!(r.pvalues[1], 0.0);
        assert_eq!(r.pvalues[2], 0.0);
    }

    #[test]
    fn report_order_and_csv() {
        let mk = |w: &str, p: f64, z: f64| ChangePointResult {
            word: w.into(),
            significant: p < 0.05,
            ecp: None,
            ecp_label: None,
            p_value: p,
            pvalues: vec![],
            max_zscore: z,
        };
        let results = vec![mk("b", 0.5, 1.0), mk("a", 0.01, 1.0), mk("c", 0.5, 3.0)];
        assert_eq!(ranking(&results), [1, 2, 0]);
        let mut out = Vec::new();
        write_report_csv(&results, Method::Frequency, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let words: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(words, ["a", "c", "b"]);
        assert!(text.starts_with("word,method,significant,ecp_label,p_value,max_zscore\na,frequency,true,,0.01,1\n"));
    }

    #[test]
    fn deterministic_given_seed() {
        let z = [0.1, -0.4, 1.2, 2.2, 1.9, 2.5];
        let a = bootstrap_pvalues(&z, 300, &mut word_rng(9, 4)).unwrap();
        let b = bootstrap_pvalues(&z, 300, &mut word_rng(9, 4)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    proptest! {
        #[test]
        fn shift_and_scale_equivariance(
            s in prop::collection::vec(-100.0f64..100.0, 2..30),
            c in -50.0f64..50.0,
        ) {
            let base = mean_shift(&s).unwrap().0;
            let shifted: Vec<f64> = s.iter().map(|x| x + c).collect();
            let scaled: Vec<f64> = s.iter().map(|x| x * c).collect();
            let ks = mean_shift(&shifted).unwrap().0;
            let kc = mean_shift(&scaled).unwrap().0;
            for j in 0..base.len() {
                prop_assert!((ks[j] - base[j]).abs() <= 1e-9 * (1.0 + base[j].abs() + c.abs()));
                prop_assert!((kc[j] - c * base[j]).abs() <= 1e-9 * (1.0 + (c * base[j]).abs()));
            }
        }

        #[test]
        fn pvalues_in_unit_interval(s in prop::collection::vec(-5.0f64..5.0, 2..15), seed in 0u64..1000) {
            let p = bootstrap_pvalues(&s, 50, &mut word_rng(seed, 0)).unwrap();
            prop_assert_eq!(p.len(), s.len() - 1);
            prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        }

        #[test]
        fn null_depends_only_on_multiset(
            s in prop::collection::vec(-5.0f64..5.0, 2..6),
            rotate in 0usize..6,
        ) {
            let mut other = s.clone();
            let len = other.len();
            other.rotate_left(rotate % len);
            other.reverse();
            let (a, b) = (null_multiset(&s), null_multiset(&other));
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                for (u, v) in x.iter().zip(y) {
                    prop_assert!((u - v).abs() < 1e-9);
                }
            }
        }
    }
}
