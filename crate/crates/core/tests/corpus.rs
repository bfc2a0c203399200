use std::fs;

use langshift::corpus::{
    build_common_vocabulary, load_snapshot, pos_distributions, Format, LoadOptions, TemporalCorpus,
};
use langshift::Error;

fn write_manifest(dir: &std::path::Path, snapshots: &[(&str, &str)]) -> std::path::PathBuf {
    let mut manifest = String::new();
    for (label, text) in snapshots {
        let file = format!("{label}.txt");
        fs::write(dir.join(&file), text).unwrap();
        manifest.push_str(&format!("{label}\t{file}\n"));
    }
    let path = dir.join("manifest.tsv");
    fs::write(&path, manifest).unwrap();
    path
}

#[test]
fn manifest_loads_in_order_with_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        &[("1990", "the cat sat\nthe dog ran"), ("2000", "a cat ran\n\nthe cat sat")],
    );
    let corpus = TemporalCorpus::load_manifest(&manifest, Format::Plain, &LoadOptions::default()).unwrap();
    assert_eq!(corpus.len(), 2);
    let labels: Vec<String> = corpus.labels().into_iter().map(|l| l.label).collect();
    assert_eq!(labels, ["1990", "2000"]);
    assert_eq!(corpus.snapshot(1).label().index, 1);
    assert_eq!(corpus.snapshot(0).token_count(), 6);
    assert_eq!(corpus.snapshot(0).document_count(), 2);

    let again = TemporalCorpus::load_manifest(&manifest, Format::Plain, &LoadOptions::default()).unwrap();
    assert_eq!(corpus, again);
}

#[test]
fn missing_file_is_an_io_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.tsv");
    fs::write(&manifest, "a\tnope.txt\n").unwrap();
    match TemporalCorpus::load_manifest(&manifest, Format::Plain, &LoadOptions::default()) {
        Err(Error::Io { path, .. }) => assert!(path.ends_with("nope.txt")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn duplicate_labels_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.txt"), "a b").unwrap();
    let manifest = dir.path().join("m.tsv");
    fs::write(&manifest, "a\tx.txt\na\tx.txt\n").unwrap();
    assert!(matches!(
        TemporalCorpus::load_manifest(&manifest, Format::Plain, &LoadOptions::default()),
        Err(Error::DuplicateLabel(_))
    ));
}

#[test]
fn malformed_tagged_line_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    fs::write(&path, "cat_NN sat_VBD\nthe_DT dog_\n").unwrap();
    match load_snapshot(&path, Format::Tagged, &LoadOptions::default()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
}

#[test]
fn vocabulary_respects_min_count_in_every_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_manifest(
        dir.path(),
        &[
            ("a", "x x x y y z z z z"),
            ("b", "x x x y y y z"),
            ("c", "x x x x y y y y z z z"),
        ],
    );
    let corpus = TemporalCorpus::load_manifest(&manifest, Format::Plain, &LoadOptions::default()).unwrap();
    for m in 1..=4 {
        match build_common_vocabulary(&corpus, m) {
            Ok(vocab) => {
                for w in 0..vocab.len() as u32 {
                    for t in 0..corpus.len() {
                        assert!(vocab.count(w, t) >= m);
                    }
                }
            }
            Err(e) => assert!(matches!(e, Error::EmptyIntersection { .. }) && m == 4),
        }
    }
    let vocab = build_common_vocabulary(&corpus, 2).unwrap();
    assert_eq!(vocab.words(), ["x", "y"]);
}

#[test]
fn pos_distributions_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    fs::write(&path, "run_VB run_NN run_VB the_DT\nrun_VBG the_DT the_DT\n").unwrap();
    let snapshot = load_snapshot(&path, Format::Tagged, &LoadOptions::default()).unwrap();
    let corpus = TemporalCorpus::new(vec![snapshot]).unwrap();
    let vocab = build_common_vocabulary(&corpus, 1).unwrap();
    for dist in pos_distributions(corpus.snapshot(0), &vocab).unwrap() {
        let total: f64 = dist.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
    let run = &pos_distributions(corpus.snapshot(0), &vocab).unwrap()[vocab.id("run").unwrap() as usize];
    assert_eq!(run.modal_tag(), "VB");
    assert!((run.prob("VB") - 0.5).abs() < 1e-15);
}

#[test]
fn lowercasing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.txt");
    fs::write(&path, "Cat cat CAT").unwrap();
    let plain = load_snapshot(&path, Format::Plain, &LoadOptions::default()).unwrap();
    assert_eq!(plain.count("cat"), 1);
    let lower = load_snapshot(&path, Format::Plain, &LoadOptions { lowercase: true }).unwrap();
    assert_eq!(lower.count("cat"), 3);
}
