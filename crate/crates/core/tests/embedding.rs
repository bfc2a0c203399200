use langshift::corpus::{build_common_vocabulary, CorpusSnapshot, SnapshotLabel, TemporalCorpus, Vocabulary};
use langshift::embedding::{cosine, hs_log_prob, objective, train_snapshot, EmbeddingSpace, HuffmanTree, SkipGram, TrainingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn corpus_of(docs: Vec<Vec<String>>) -> (TemporalCorpus, Vocabulary) {
    let snapshot = CorpusSnapshot::from_documents(SnapshotLabel::new("t0", 0), docs);
    let corpus = TemporalCorpus::new(vec![snapshot]).unwrap();
    let vocab = build_common_vocabulary(&corpus, 1).unwrap();
    (corpus, vocab)
}

fn random_model(rng: &mut ChaCha8Rng, tree: &HuffmanTree, n: usize, dim: usize) -> SkipGram {
    let mut model = SkipGram::init(n, dim, rng);
    for w in 0..n as u32 {
        model.word_vector_mut(w).iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
    for node in 0..tree.internal_count() as u32 {
        model.node_vector_mut(node).iter_mut().for_each(|x| *x = rng.random_range(-1.0..1.0));
    }
    model
}

#[test]
fn hierarchical_softmax_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(n, dim) in &[(50usize, 8usize), (2, 3), (17, 5), (300, 16)] {
        let counts: Vec<u64> = (0..n).map(|_| rng.random_range(1..1000)).collect();
        let tree = HuffmanTree::from_counts(&counts).unwrap();
        let model = random_model(&mut rng, &tree, n, dim);
        for center in [0u32, (n / 2) as u32] {
            let total: f64 = (0..n as u32)
                .map(|w| hs_log_prob(&tree, model.node_vectors(), model.word_vector(center), w).unwrap().exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "n={n} d={dim}: {total}");
        }
    }
}

#[test]
fn analytic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40;
    let dim = 12;
    let counts: Vec<u64> = (0..n).map(|_| rng.random_range(1..500)).collect();
    let tree = HuffmanTree::from_counts(&counts).unwrap();
    let h = 1e-5;
    for trial in 0..10 {
        let model = random_model(&mut rng, &tree, n, dim);
        let center = rng.random_range(0..n as u32);
        let context = rng.random_range(0..n as u32);
        let loss = |m: &SkipGram| -m.log_prob(&tree, center, context);

        let mut stepped = model.clone();
        stepped.sgd_step(&tree, center, context, 1.0).unwrap();

        let mut worst: f64 = 0.0;
        let mut check = |analytic: f64, numeric: f64| {
            let scale = analytic.abs() + numeric.abs();
            if scale > 1e-9 {
                worst = worst.max((analytic - numeric).abs() / scale);
            }
        };
        for i in 0..dim {
            let analytic = model.word_vector(center)[i] - stepped.word_vector(center)[i];
            let mut plus = model.clone();
            plus.word_vector_mut(center)[i] += h;
            let mut minus = model.clone();
            minus.word_vector_mut(center)[i] -= h;
            check(analytic, (loss(&plus) - loss(&minus)) / (2.0 * h));
        }
        for &node in tree.path(context) {
            let base = node as usize * dim;
            for i in 0..dim {
                let analytic = model.node_vectors()[base + i] - stepped.node_vectors()[base + i];
                let mut plus = model.clone();
                plus.node_vector_mut(node)[i] += h;
                let mut minus = model.clone();
                minus.node_vector_mut(node)[i] -= h;
                check(analytic, (loss(&plus) - loss(&minus)) / (2.0 * h));
            }
        }
        assert!(worst < 1e-4, "trial {trial}: relative error {worst}");
    }
}

#[test]
fn sgd_decreases_pair_loss() {
    let docs = vec!["a b a b".split(' ').map(String::from).collect()];
    let (_, vocab) = corpus_of(docs);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut model = SkipGram::init(vocab.len(), 8, &mut rng);
    let (a, b) = (vocab.id("a").unwrap(), vocab.id("b").unwrap());
    let mut last = f64::INFINITY;
    for _ in 0..50 {
        let loss = model.sgd_step(&tree, a, b, 0.5).unwrap();
        assert!(loss < last);
        last = loss;
    }
    assert!(-model.log_prob(&tree, a, b) < last);
}

fn unsubsampled(dim: usize, epochs: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim,
        window: 2,
        subsample: 1.0,
        alpha: 0.05,
        min_alpha: 0.0001,
        max_epochs: epochs,
        tolerance: 1e-12,
        seed,
    }
}

#[test]
fn training_lowers_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let words: Vec<String> = (0..30).map(|i| format!("w{i}")).collect();
    let docs: Vec<Vec<String>> = (0..40)
        .map(|_| (0..30).map(|_| words[rng.random_range(0..words.len())].clone()).collect())
        .collect();
    let (corpus, vocab) = corpus_of(docs);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    let config = unsubsampled(10, 2, 4);
    let encoded = vocab.encode(corpus.snapshot(0));

    let initial = SkipGram::init(vocab.len(), config.dim, &mut ChaCha8Rng::seed_from_u64(config.seed));
    let trained = train_snapshot(corpus.snapshot(0), &vocab, &tree, &config).unwrap();
    let losses = &trained.report.epoch_losses;
    assert_eq!(losses.len(), 2);
    assert!(losses[1] < losses[0], "{losses:?}");
    let before = objective(&initial, &tree, &encoded, config.window);
    let after = objective(&trained.model, &tree, &encoded, config.window);
    assert!(after < before, "{before} -> {after}");
}

fn two_topic_corpus(seed: u64) -> (TemporalCorpus, Vocabulary) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topics: Vec<Vec<String>> = (0..2)
        .map(|t| (0..15).map(|i| format!("t{t}w{i}")).collect())
        .collect();
    let docs = (0..600)
        .map(|d| {
            let topic = &topics[d % 2];
            (0..40).map(|_| topic[rng.random_range(0..topic.len())].clone()).collect()
        })
        .collect();
    corpus_of(docs)
}

#[test]
fn topical_clusters_separate() {
    let (corpus, vocab) = two_topic_corpus(5);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    let config = TrainingConfig {
        window: 5,
        max_epochs: 5,
        ..unsubsampled(16, 5, 2)
    };
    let space = train_snapshot(corpus.snapshot(0), &vocab, &tree, &config).unwrap().space;
    let topic = |w: u32| &vocab.word(w)[..2];
    let n = vocab.len() as u32;
    let (mut wins, mut total) = (0usize, 0usize);
    for u in 0..n {
        for v in (0..n).filter(|&v| v != u && topic(v) == topic(u)) {
            for x in (0..n).filter(|&x| topic(x) != topic(u)) {
                let within = cosine(space.vector(u), space.vector(v)).unwrap();
                let across = cosine(space.vector(u), space.vector(x)).unwrap();
                total += 1;
                wins += usize::from(within > across);
            }
        }
    }
    let rate = wins as f64 / total as f64;
    assert!(rate >= 0.9, "within > across for {rate:.3} of comparisons");
}

#[test]
fn training_is_deterministic_per_seed() {
    let (corpus, vocab) = two_topic_corpus(1);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    let config = TrainingConfig {
        subsample: 1e-3,
        ..unsubsampled(8, 2, 7)
    };
    let a = train_snapshot(corpus.snapshot(0), &vocab, &tree, &config).unwrap();
    let b = train_snapshot(corpus.snapshot(0), &vocab, &tree, &config).unwrap();
    assert_eq!(a.space, b.space);
    assert_eq!(a.report, b.report);
    let c = train_snapshot(corpus.snapshot(0), &vocab, &tree, &TrainingConfig { seed: 8, ..config }).unwrap();
    assert_ne!(a.space, c.space);
}

#[test]
fn trained_space_is_normalized_and_round_trips() {
    let (corpus, vocab) = two_topic_corpus(2);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    let space = train_snapshot(corpus.snapshot(0), &vocab, &tree, &unsubsampled(8, 1, 3)).unwrap().space;
    assert!(space.is_normalized());
    for w in 0..space.len() as u32 {
        let norm: f64 = space.vector(w).iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t0.vec");
    space.save(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with(&format!("{} 8\n", vocab.len())));
    let back = EmbeddingSpace::load("t0", &path).unwrap();
    assert_eq!(back.words(), space.words());
    assert!(back.is_normalized());
    for (x, y) in back.data().iter().zip(space.data()) {
        assert!((x - y).abs() < 1e-5);
    }
}

#[test]
fn invalid_configs_rejected() {
    let (corpus, vocab) = two_topic_corpus(3);
    let tree = HuffmanTree::build(&vocab, 0).unwrap();
    for bad in [
        TrainingConfig { dim: 0, ..Default::default() },
        TrainingConfig { window: 0, ..Default::default() },
        TrainingConfig { alpha: -1.0, ..Default::default() },
        TrainingConfig { max_epochs: 0, ..Default::default() },
    ] {
        assert!(train_snapshot(corpus.snapshot(0), &vocab, &tree, &bad).is_err());
    }
}
