use langshift::changepoint::{bootstrap_pvalues, detect, detect_ensemble, normalize_ensemble, word_rng, DetectorConfig};
use langshift::series::{Method, SeriesEnsemble};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn shift_at(series: &[f64], j: usize) -> f64 {
    let before = series[..j].iter().sum::<f64>() / j as f64;
    let after = series[j..].iter().sum::<f64>() / (series.len() - j) as f64;
    after - before
}

/// Exact permutation p-values by enumerating every placement of the high
/// values; each placement is equally likely under a uniform shuffle.
fn exact_pvalues(lows: usize, low: f64, highs: usize, high: f64) -> Vec<f64> {
    let n = lows + highs;
    let observed: Vec<f64> = std::iter::repeat_n(low, lows).chain(std::iter::repeat_n(high, highs)).collect();
    let mut exceed = vec![0usize; n - 1];
    let mut total = 0usize;
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != highs {
            continue;
        }
        total += 1;
        let arrangement: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { high } else { low }).collect();
        for j in 1..n {
            if shift_at(&arrangement, j) > shift_at(&observed, j) + 1e-12 {
                exceed[j - 1] += 1;
            }
        }
    }
    exceed.iter().map(|&e| e as f64 / total as f64).collect()
}

#[test]
fn bootstrap_matches_exhaustive_permutations() {
    let exact = exact_pvalues(4, 0.0, 4, 3.0);
    assert_eq!(exact[3], 0.0);
    let series = [0.0, 0.0, 0.0, 0.0, 3.0, 3.0, 3.0, 3.0];
    let samples = 20_000;
    let estimate = bootstrap_pvalues(&series, samples, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    for (j, (&e, &p)) in estimate.iter().zip(&exact).enumerate() {
        let se = (p * (1.0 - p) / samples as f64).sqrt();
        assert!((e - p).abs() <= 4.5 * se + 1e-12, "pivot {}: {e} vs {p}", j + 1);
    }
}

#[test]
fn step_series_detected_at_step() {
    let series = [0.0, 0.0, 0.0, 0.0, 3.0, 3.0, 3.0, 3.0];
    let labels: Vec<String> = (0..8).map(|i| i.to_string()).collect();
    let config = DetectorConfig::default();
    let result = detect("w", &series, &labels, &config, &mut word_rng(1, 0)).unwrap();
    assert_eq!(result.ecp, Some(4));
    assert_eq!(result.ecp_label.as_deref(), Some("4"));
    assert_eq!(result.p_value, 0.0);
    assert!(result.significant);
}

#[test]
fn fixed_pivot_pvalues_are_calibrated_under_the_null() {
    let trials = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut pvalues: Vec<f64> = (0..trials)
        .map(|_| {
            let series: Vec<f64> = (0..20).map(|_| rng.sample(StandardNormal)).collect();
            bootstrap_pvalues(&series, 500, &mut rng).unwrap()[9]
        })
        .collect();
    pvalues.sort_by(f64::total_cmp);
    let ks = pvalues
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let lo = i as f64 / trials as f64;
            let hi = (i + 1) as f64 / trials as f64;
            (p - lo).abs().max((hi - p).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.1, "KS {ks}");
    let fpr = pvalues.iter().filter(|&&p| p < 0.05).count() as f64 / trials as f64;
    assert!((0.01..=0.1).contains(&fpr), "FPR {fpr}");
}

fn ensemble(rows: &[Vec<f64>]) -> SeriesEnsemble {
    let n = rows[0].len();
    SeriesEnsemble::new(
        Method::Frequency,
        (0..rows.len()).map(|i| format!("w{i}")).collect(),
        (0..n).map(|i| i.to_string()).collect(),
        rows.concat(),
    )
    .unwrap()
}

#[test]
fn ensemble_detection_is_deterministic_and_ranks_the_shifted_word() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut rows: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..12).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.1).collect())
        .collect();
    for (t, v) in rows[17].iter_mut().enumerate() {
        *v = if t < 6 { -0.2 } else { 3.0 };
    }
    let normalized = normalize_ensemble(&ensemble(&rows)).unwrap();
    let config = DetectorConfig::default();
    let a = detect_ensemble(&normalized, &config).unwrap();
    let b = detect_ensemble(&normalized, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[17].ecp, Some(6));
    assert!(a[17].significant);
    let order = langshift::changepoint::ranking(&a);
    assert_eq!(order[0], 17);
}

#[test]
fn pvalues_depend_on_seed_only_through_the_stream() {
    let series = [0.3, -1.0, 0.2, 0.9, 1.7, 2.2, 1.9];
    let a = bootstrap_pvalues(&series, 300, &mut word_rng(4, 2)).unwrap();
    let b = bootstrap_pvalues(&series, 300, &mut word_rng(4, 2)).unwrap();
    let c = bootstrap_pvalues(&series, 300, &mut word_rng(4, 3)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn infinite_gamma_reports_nothing() {
    let rows = vec![vec![0.0, 0.0, 5.0, 5.0], vec![1.0, 1.0, 1.0, 1.0], vec![0.5, 0.2, 0.1, 0.0]];
    let normalized = normalize_ensemble(&ensemble(&rows)).unwrap();
    let config = DetectorConfig {
        gamma: f64::INFINITY,
        ..Default::default()
    };
    for r in detect_ensemble(&normalized, &config).unwrap() {
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
        assert_eq!(r.ecp, None);
    }
}
