//! Controlled-perturbation benchmark: duplicate a base corpus into
//! snapshots, replace donor words by receptor words in the later
//! snapshots, and measure how highly each method ranks the receptors.

mod generator;

use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::ops::Range;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alignment::AlignmentParams;
use crate::changepoint::{ranking, ChangePointResult, DetectorConfig};
use crate::corpus::{build_common_vocabulary, pos_distributions, CorpusSnapshot, SnapshotLabel, TemporalCorpus, Vocabulary};
use crate::embedding::TrainingConfig;
use crate::error::{Error, Result};
use crate::fmt::significant;
use crate::pipeline::{build_ensemble, detect_method, train_all, SeedPolicy};
use crate::series::Method;

pub use generator::{generate_corpus, GeneratedCorpus, GeneratorConfig};

/// `n` copies of `base`, labelled `0..n-1`.
pub fn duplicate_corpus(base: &CorpusSnapshot, n: usize) -> Result<TemporalCorpus> {
    if n < 2 {
        return Err(Error::InvalidArgument("a temporal corpus needs at least two snapshots".into()));
    }
    let snapshots = (0..n)
        .map(|i| {
            let mut s = base.clone();
            s.set_label(SnapshotLabel::new(i.to_string(), i));
            s
        })
        .collect();
    TemporalCorpus::new(snapshots)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationPlan {
    pub donor: String,
    pub receptor: String,
    pub p_replacement: f64,
    pub snapshots: Range<usize>,
    pub seed: u64,
}

impl PerturbationPlan {
    fn validate(&self, n: usize) -> Result<()> {
        if self.donor == self.receptor {
            return Err(Error::InvalidArgument("donor and receptor must differ".into()));
        }
        if !(0.0..=1.0).contains(&self.p_replacement) {
            return Err(Error::InvalidArgument(format!(
                "p_replacement {} outside [0, 1]",
                self.p_replacement
            )));
        }
        if self.snapshots.start > self.snapshots.end || self.snapshots.end > n {
            return Err(Error::InvalidArgument(format!(
                "perturbed range {:?} outside 0..{n}",
                self.snapshots
            )));
        }
        Ok(())
    }
}

/// Default perturbed range: the last half of `n` snapshots.
pub fn last_half(n: usize) -> Range<usize> {
    n - n / 2..n
}

/// Replaces each donor occurrence inside the plan's snapshot range by the
/// receptor with probability `p_replacement`. Each snapshot draws from its
/// own random stream. Tagged snapshots give replaced tokens the receptor's
/// modal tag in that snapshot.
pub fn perturb(corpus: &TemporalCorpus, plan: &PerturbationPlan) -> Result<TemporalCorpus> {
    plan.validate(corpus.len())?;
    if corpus.snapshots().iter().all(|s| s.count(&plan.donor) == 0) {
        return Err(Error::UnknownWord(plan.donor.clone()));
    }
    let mut out = corpus.clone();
    for t in plan.snapshots.clone() {
        let snapshot = out.snapshot_mut(t);
        let tag = if snapshot.is_tagged() {
            Some(modal_tag(snapshot, &plan.receptor)?)
        } else {
            None
        };
        let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
        rng.set_stream(t as u64);
        let p = plan.p_replacement;
        snapshot.replace_occurrences(&plan.donor, &plan.receptor, tag.as_deref(), || rng.random::<f64>() < p)?;
    }
    Ok(out)
}

fn modal_tag(snapshot: &CorpusSnapshot, word: &str) -> Result<String> {
    crate::corpus::pos_distribution(snapshot, word).map(|d| d.modal_tag().to_owned())
}

/// Samples `count` donor/receptor pairs of distinct, non-stopword
/// vocabulary words. With `same_pos`, both words of a pair share their
/// modal tag in `tagged`.
pub fn sample_word_pairs<R: Rng + ?Sized>(
    vocab: &Vocabulary,
    tagged: Option<&CorpusSnapshot>,
    count: usize,
    same_pos: bool,
    stopwords: &HashSet<String>,
    rng: &mut R,
) -> Result<Vec<(String, String)>> {
    let mut eligible: Vec<u32> = (0..vocab.len() as u32)
        .filter(|&w| !stopwords.contains(vocab.word(w)))
        .collect();
    eligible.shuffle(rng);
    let mut pairs = Vec::with_capacity(count);
    if same_pos {
        let snapshot = tagged.ok_or_else(|| {
            Error::InvalidArgument("same-POS sampling needs a tagged snapshot".into())
        })?;
        let dists = pos_distributions(snapshot, vocab)?;
        let mut waiting: HashMap<&str, u32> = HashMap::new();
        for &w in &eligible {
            if pairs.len() == count {
                break;
            }
            let tag = dists[w as usize].modal_tag();
            match waiting.remove(tag) {
                Some(donor) => pairs.push((vocab.word(donor).to_owned(), vocab.word(w).to_owned())),
                None => {
                    waiting.insert(tag, w);
                }
            }
        }
    } else {
        pairs.extend(
            eligible
                .chunks_exact(2)
                .take(count)
                .map(|p| (vocab.word(p[0]).to_owned(), vocab.word(p[1]).to_owned())),
        );
    }
    if pairs.len() < count {
        return Err(Error::InsufficientWords {
            needed: 2 * count,
            available: 2 * pairs.len(),
        });
    }
    Ok(pairs)
}

/// Mean reciprocal rank.
pub fn mrr(ranks: &[usize]) -> Result<f64> {
    if ranks.is_empty() {
        return Err(Error::InvalidArgument("MRR of an empty rank list".into()));
    }
    if ranks.contains(&0) {
        return Err(Error::InvalidArgument("ranks start at 1".into()));
    }
    Ok(ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / ranks.len() as f64)
}

/// Words ordered by ascending p-value, then descending max z-score, then
/// input (word id) order.
pub fn rank_words_by_pvalue(results: &[ChangePointResult]) -> Vec<String> {
    ranking(results).into_iter().map(|i| results[i].word.clone()).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub snapshots: usize,
    /// Defaults to the last half when `None`.
    pub perturbed: Option<Range<usize>>,
    pub pairs: usize,
    pub grid: Vec<f64>,
    pub same_pos: bool,
    pub methods: Vec<Method>,
    pub min_count: u64,
    pub training: TrainingConfig,
    /// Neighbourhood size; `None` uses `min(4d, |V|)`.
    pub k: Option<usize>,
    pub ridge: f64,
    pub detector: DetectorConfig,
    pub seeds: SeedPolicy,
    pub parallel: bool,
    /// Perturb and score each pair on its own corpus copy instead of
    /// injecting all pairs into one corpus per strength.
    pub independent_trials: bool,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            snapshots: 20,
            perturbed: None,
            pairs: 20,
            grid: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            same_pos: false,
            methods: vec![Method::Frequency, Method::Distributional],
            min_count: 5,
            training: TrainingConfig::default(),
            k: None,
            ridge: 1e-3,
            detector: DetectorConfig::default(),
            seeds: SeedPolicy::PerSnapshot,
            parallel: true,
            independent_trials: false,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub method: Method,
    pub p_replacement: f64,
    pub pair_id: usize,
    pub donor: String,
    pub receptor: String,
    pub rank: usize,
}

impl BenchRow {
    pub fn mrr_contrib(&self, pairs: usize) -> f64 {
        1.0 / (self.rank as f64 * pairs as f64)
    }
}

/// Ranks and MRR of one method at one perturbation strength.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub method: Method,
    pub p_replacement: f64,
    pub ranks: Vec<usize>,
    pub mrr: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub results: Vec<BenchResult>,
    pub pairs: Vec<(String, String)>,
}

impl BenchReport {
    pub fn mrr(&self, method: Method, p_replacement: f64) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.method == method && r.p_replacement == p_replacement)
            .map(|r| r.mrr)
    }

    /// CSV `method,p_replacement,pair_id,donor,receptor,rank,mrr_contrib`;
    /// after each (method, p_replacement) block a summary row with
    /// `pair_id = summary`, empty donor/receptor/rank and the MRR.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "method,p_replacement,pair_id,donor,receptor,rank,mrr_contrib")?;
        let n_pairs = self.pairs.len();
        for result in &self.results {
            for row in self
                .rows
                .iter()
                .filter(|r| r.method == result.method && r.p_replacement == result.p_replacement)
            {
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    row.method,
                    significant(row.p_replacement, 6),
                    row.pair_id,
                    row.donor,
                    row.receptor,
                    row.rank,
                    significant(row.mrr_contrib(n_pairs), 9)
                )?;
            }
            writeln!(
                out,
                "{},{},summary,,,,{}",
                result.method,
                significant(result.p_replacement, 6),
                significant(result.mrr, 9)
            )?;
        }
        Ok(())
    }
}

/// Runs the whole benchmark on `base`.
pub fn run_bench(base: &CorpusSnapshot, stopwords: &HashSet<String>, config: &BenchConfig) -> Result<BenchReport> {
    if config.methods.is_empty() {
        return Err(Error::InvalidConfig("no methods selected".into()));
    }
    if let Some(&p) = config.grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidConfig(format!("p_replacement {p} outside [0, 1]")));
    }
    if config.methods.contains(&Method::Syntactic) && !base.is_tagged() {
        return Err(Error::NotTagged(base.label().label.clone()));
    }
    let range = config.perturbed.clone().unwrap_or_else(|| last_half(config.snapshots));

    let base_corpus = TemporalCorpus::new(vec![base.clone()])?;
    let base_vocab = build_common_vocabulary(&base_corpus, config.min_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pairs = sample_word_pairs(
        &base_vocab,
        base.is_tagged().then_some(base),
        config.pairs,
        config.same_pos,
        stopwords,
        &mut rng,
    )?;
    let plan = |i: usize, p: f64| PerturbationPlan {
        donor: pairs[i].0.clone(),
        receptor: pairs[i].1.clone(),
        p_replacement: p,
        snapshots: range.clone(),
        seed: config.seed.wrapping_add(i as u64 + 1),
    };

    let duplicated = duplicate_corpus(base, config.snapshots)?;
    let mut ranks: HashMap<(Method, usize, usize), usize> = HashMap::new();
    for (g, &p) in config.grid.iter().enumerate() {
        if config.independent_trials {
            for i in 0..pairs.len() {
                let corpus = perturb(&duplicated, &plan(i, p))?;
                let found = receptor_ranks(&corpus, &pairs[i..=i], config)?;
                for (method, r) in found {
                    ranks.insert((method, g, i), r[0]);
                }
            }
        } else {
            let mut corpus = duplicated.clone();
            for i in 0..pairs.len() {
                corpus = perturb(&corpus, &plan(i, p))?;
            }
            for (method, r) in receptor_ranks(&corpus, &pairs, config)? {
                for (i, rank) in r.into_iter().enumerate() {
                    ranks.insert((method, g, i), rank);
                }
            }
        }
    }

    let mut report = BenchReport {
        pairs: pairs.clone(),
        ..Default::default()
    };
    for (g, &p) in config.grid.iter().enumerate() {
        for &method in &config.methods {
            let r: Vec<usize> = (0..pairs.len()).map(|i| ranks[&(method, g, i)]).collect();
            for (pair_id, (donor, receptor)) in pairs.iter().enumerate() {
                report.rows.push(BenchRow {
                    method,
                    p_replacement: p,
                    pair_id,
                    donor: donor.clone(),
                    receptor: receptor.clone(),
                    rank: r[pair_id],
                });
            }
            let mrr = mrr(&r)?;
            log::info!("{method} p={p}: MRR {mrr:.4} ranks {r:?}");
            report.results.push(BenchResult {
                method,
                p_replacement: p,
                ranks: r,
                mrr,
            });
        }
    }
    Ok(report)
}

/// Rank of each receptor under every configured method on one corpus.
fn receptor_ranks(
    corpus: &TemporalCorpus,
    pairs: &[(String, String)],
    config: &BenchConfig,
) -> Result<Vec<(Method, Vec<usize>)>> {
    let vocab = build_common_vocabulary(corpus, config.min_count)?;
    let spaces = if config.methods.contains(&Method::Distributional) {
        let trained = train_all(corpus, &vocab, &config.training, config.seeds, config.parallel)?;
        Some(trained.into_iter().map(|t| t.space).collect::<Vec<_>>())
    } else {
        None
    };
    let mut align = AlignmentParams::for_space(config.training.dim, vocab.len());
    if let Some(k) = config.k {
        align.k = k.min(vocab.len());
    }
    align.ridge = config.ridge;

    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let (ensemble, _) = build_ensemble(method, corpus, &vocab, spaces.as_deref(), &align)?;
        let results = detect_method(&ensemble, &config.detector)?;
        let mut position = vec![0usize; results.len()];
        for (rank, w) in ranking(&results).into_iter().enumerate() {
            position[w] = rank + 1;
        }
        let ranks = pairs
            .iter()
            .map(|(_, receptor)| vocab.require(receptor).map(|id| position[id as usize]))
            .collect::<Result<Vec<_>>>()?;
        out.push((method, ranks));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Format, LoadOptions};

    fn snapshot(text: &str, format: Format) -> CorpusSnapshot {
        CorpusSnapshot::parse(text, format, SnapshotLabel::new("base", 0), &LoadOptions::default()).unwrap()
    }

    #[test]
    fn duplicate_sizes() {
        let base = snapshot("a b c\nd e", Format::Plain);
        let c = duplicate_corpus(&base, 20).unwrap();
        assert_eq!(c.len(), 20);
        assert!(c.snapshots().iter().all(|s| s.token_count() == 5));
        assert_eq!(c.snapshot(19).label().label, "19");
        assert_eq!(duplicate_corpus(&base, 2).unwrap().len(), 2);
        assert!(duplicate_corpus(&base, 1).is_err());
    }

    fn plan(p: f64, range: Range<usize>) -> PerturbationPlan {
        PerturbationPlan {
            donor: "boat".into(),
            receptor: "car".into(),
            p_replacement: p,
            snapshots: range,
            seed: 5,
        }
    }

    #[test]
    fn perturb_extremes() {
        let base = snapshot("boat car boat sea\nboat", Format::Plain);
        let c = duplicate_corpus(&base, 4).unwrap();
        let all = perturb(&c, &plan(1.0, 2..4)).unwrap();
        assert_eq!(all.snapshot(0).count("boat"), 3);
        assert_eq!(all.snapshot(1), c.snapshot(1));
        assert_eq!(all.snapshot(2).count("boat"), 0);
        assert_eq!(all.snapshot(3).count("car"), 4);
        assert_eq!(perturb(&c, &plan(0.0, 0..4)).unwrap(), c);
    }

    #[test]
    fn perturb_errors() {
        let c = duplicate_corpus(&snapshot("sea car", Format::Plain), 2).unwrap();
        assert!(perturb(&c, &plan(0.5, 1..2)).is_err());
        let c = duplicate_corpus(&snapshot("boat car", Format::Plain), 2).unwrap();
        assert!(perturb(&c, &plan(0.5, 1..3)).is_err());
        assert!(perturb(&c, &plan(1.5, 1..2)).is_err());
        let mut same = plan(0.5, 1..2);
        same.receptor = "boat".into();
        assert!(perturb(&c, &same).is_err());
    }

    #[test]
    fn perturb_tagged_uses_receptor_modal_tag() {
        let base = snapshot("boat_NN car_NN car_NNP car_NN boat_VB", Format::Tagged);
        let c = duplicate_corpus(&base, 2).unwrap();
        let out = perturb(&c, &plan(1.0, 1..2)).unwrap();
        let tags: Vec<&str> = out.snapshot(1).tags().unwrap().collect();
        assert_eq!(tags, ["NN", "NN", "NNP", "NN", "NN"]);
    }

    #[test]
    fn perturb_binomial_fraction() {
        let text = vec!["boat"; 10_000].join(" ");
        let c = duplicate_corpus(&snapshot(&text, Format::Plain), 2).unwrap();
        for seed in 0..20 {
            let mut pl = plan(0.5, 1..2);
            pl.seed = seed;
            let out = perturb(&c, &pl).unwrap();
            let frac = out.snapshot(1).count("car") as f64 / 10_000.0;
            assert!((0.48..=0.52).contains(&frac), "seed {seed}: {frac}");
            assert_eq!(out.snapshot(1).token_count(), 10_000);
            assert_eq!(perturb(&c, &pl).unwrap(), out);
        }
    }

    fn vocab_of(s: &CorpusSnapshot) -> Vocabulary {
        build_common_vocabulary(&TemporalCorpus::new(vec![s.clone()]).unwrap(), 1).unwrap()
    }

    #[test]
    fn same_pos_pairs_share_modal_tag() {
        let base = snapshot("boat_NN car_NN running_VBG the_DT", Format::Tagged);
        let v = vocab_of(&base);
        let stop: HashSet<String> = ["the".to_owned()].into();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = sample_word_pairs(&v, Some(&base), 1, true, &stop, &mut rng).unwrap();
            let mut words = [pairs[0].0.as_str(), pairs[0].1.as_str()];
            words.sort();
            assert_eq!(words, ["boat", "car"]);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_word_pairs(&v, Some(&base), 2, true, &stop, &mut rng),
            Err(Error::InsufficientWords { .. })
        ));
    }

    #[test]
    fn stopwords_never_sampled() {
        let base = snapshot("a b c d the of", Format::Plain);
        let v = vocab_of(&base);
        let stop: HashSet<String> = ["the".to_owned(), "of".to_owned()].into();
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = sample_word_pairs(&v, None, 2, false, &stop, &mut rng).unwrap();
            let mut seen = HashSet::new();
            for (d, r) in &pairs {
                assert!(!stop.contains(d) && !stop.contains(r));
                assert!(seen.insert(d.clone()) && seen.insert(r.clone()));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_word_pairs(&v, None, 3, false, &stop, &mut rng).is_err());
    }

    #[test]
    fn mrr_examples() {
        assert!((mrr(&[1, 2, 4]).unwrap() - 7.0 / 12.0).abs() < 1e-15);
        assert_eq!(mrr(&[1, 1, 1]).unwrap(), 1.0);
        assert!((mrr(&[10]).unwrap() - 0.1).abs() < 1e-15);
        assert!(mrr(&[]).is_err());
        assert!(mrr(&[0, 1]).is_err());
        assert_eq!(mrr(&[4, 1, 2]).unwrap(), mrr(&[1, 2, 4]).unwrap());
    }

    fn result(word: &str, p: f64, z: f64) -> ChangePointResult {
        ChangePointResult {
            word: word.into(),
            significant: p < 0.05,
            ecp: None,
            ecp_label: None,
            p_value: p,
            pvalues: vec![],
            max_zscore: z,
        }
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_words_by_pvalue(&[result("b", 0.5, 0.0), result("a", 0.01, 0.0)]), ["a", "b"]);
        assert_eq!(rank_words_by_pvalue(&[result("a", 0.2, 2.0), result("b", 0.2, 3.0)]), ["b", "a"]);
        assert_eq!(rank_words_by_pvalue(&[result("x", 0.2, 1.0), result("y", 0.2, 1.0)]), ["x", "y"]);
    }
}
