use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use langshift::changepoint::write_report_csv;
use langshift::corpus::{build_common_vocabulary, load_snapshot, Format, TemporalCorpus, Vocabulary};
use langshift::embedding::EmbeddingSpace;
use langshift::pipeline::{build_ensemble, detect_method, train_all};
use langshift::synthbench::{generate_corpus, run_bench, GeneratorConfig};
use langshift::{Method, SeedPolicy};

use crate::artifacts::{write_atomic, RunManifest};
use crate::config::RunConfig;
use crate::error::CliError;

pub fn embedding_path(label: &str) -> PathBuf {
    Path::new("embeddings").join(format!("{label}.vec"))
}

pub fn series_path(method: Method) -> PathBuf {
    Path::new("series").join(format!("{method}.csv"))
}

pub fn report_path(method: Method) -> PathBuf {
    Path::new("reports").join(format!("{method}.csv"))
}

pub const RESIDUALS_PATH: &str = "alignment/residuals.csv";
pub const BENCH_PATH: &str = "bench.csv";

fn load_corpus(config: &RunConfig) -> Result<TemporalCorpus, CliError> {
    let manifest = config
        .manifest
        .as_deref()
        .ok_or_else(|| CliError::Usage("--manifest is required".into()))?;
    let corpus = TemporalCorpus::load_manifest(manifest, config.format, &config.load)?;
    for label in corpus.labels() {
        if label.label.is_empty() || label.label.contains(['/', '\\']) || label.label.starts_with('.') {
            return Err(CliError::Input(anyhow::anyhow!(
                "snapshot label {:?} cannot be used as a file name",
                label.label
            )));
        }
    }
    log::info!("loaded {} snapshots", corpus.len());
    Ok(corpus)
}

fn train_spaces(config: &RunConfig, corpus: &TemporalCorpus, vocab: &Vocabulary) -> Result<Vec<EmbeddingSpace>, CliError> {
    let trained = train_all(corpus, vocab, &config.training, SeedPolicy::PerSnapshot, !config.deterministic)?;
    Ok(trained.into_iter().map(|t| t.space).collect())
}

fn save_spaces(config: &RunConfig, spaces: &[EmbeddingSpace], manifest: &mut RunManifest) -> Result<(), CliError> {
    for space in spaces {
        let rel = embedding_path(space.label());
        write_atomic(&config.out.join(&rel), |w| space.write_text(w))?;
        manifest.record(&config.out, format!("embedding:{}", space.label()), rel)?;
    }
    Ok(())
}

/// Trains one embedding space per snapshot and writes them under
/// `embeddings/`.
pub fn train(config: &RunConfig) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    let vocab = build_common_vocabulary(&corpus, config.min_count)?;
    log::info!("common vocabulary: {} words", vocab.len());
    let spaces = train_spaces(config, &corpus, &vocab)?;
    let mut manifest = RunManifest::load(&config.out)?;
    save_spaces(config, &spaces, &mut manifest)?;
    manifest.save(&config.out)?;
    println!("trained {} snapshots over {} words", spaces.len(), vocab.len());
    Ok(())
}

fn load_spaces(config: &RunConfig, corpus: &TemporalCorpus, vocab: &Vocabulary) -> Result<Vec<EmbeddingSpace>, CliError> {
    let paths: Vec<(String, PathBuf)> = corpus
        .labels()
        .into_iter()
        .map(|l| {
            let path = config.out.join(embedding_path(&l.label));
            (l.label, path)
        })
        .collect();
    if let Some((_, missing)) = paths.iter().find(|(_, p)| !p.is_file()) {
        return Err(CliError::MissingArtifact(missing.clone()));
    }
    paths
        .into_iter()
        .map(|(label, path)| {
            let space = EmbeddingSpace::load(label, &path)?;
            if space.words() != vocab.words() {
                return Err(CliError::Input(anyhow::anyhow!(
                    "{} was trained on a different vocabulary; retrain with the same corpus and min-count",
                    path.display()
                )));
            }
            if space.dim() != config.training.dim {
                log::warn!("{} has dimension {}, not {}", path.display(), space.dim(), config.training.dim);
            }
            Ok(space)
        })
        .collect()
}

/// Builds the series of every selected method, runs detection and writes
/// series and report CSVs.
pub fn detect(config: &RunConfig) -> Result<(), CliError> {
    let corpus = load_corpus(config)?;
    if corpus.len() < 2 {
        return Err(CliError::Input(anyhow::anyhow!("detection needs at least two snapshots")));
    }
    let vocab = build_common_vocabulary(&corpus, config.min_count)?;
    let mut manifest = RunManifest::load(&config.out)?;

    let spaces = if config.methods.contains(&Method::Distributional) {
        if config.end_to_end {
            let spaces = train_spaces(config, &corpus, &vocab)?;
            save_spaces(config, &spaces, &mut manifest)?;
            Some(spaces)
        } else {
            Some(load_spaces(config, &corpus, &vocab)?)
        }
    } else {
        None
    };

    let alignment = config.alignment(vocab.len());
    for &method in &config.methods {
        let (ensemble, aligned) = build_ensemble(method, &corpus, &vocab, spaces.as_deref(), &alignment)?;
        let rel = series_path(method);
        write_atomic(&config.out.join(&rel), |w| ensemble.write_csv(w))?;
        manifest.record(&config.out, format!("series:{method}"), rel)?;

        if let (Some(aligned), true) = (aligned, config.dump_alignment) {
            write_atomic(&config.out.join(RESIDUALS_PATH), |w| aligned.write_residuals_csv(vocab.words(), w))?;
            manifest.record(&config.out, "alignment:residuals", RESIDUALS_PATH)?;
        }

        let results = detect_method(&ensemble, &config.detector)?;
        let rel = report_path(method);
        write_atomic(&config.out.join(&rel), |w| write_report_csv(&results, method, w))?;
        manifest.record(&config.out, format!("report:{method}"), rel)?;
        let significant = results.iter().filter(|r| r.significant).count();
        println!("{method}: {significant} of {} words significant", results.len());
    }
    manifest.save(&config.out)?;
    Ok(())
}

fn read_stopwords(path: &Path) -> Result<HashSet<String>, CliError> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read stopwords {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// Runs the controlled-perturbation benchmark on a base corpus file.
pub fn bench(config: &RunConfig) -> Result<(), CliError> {
    let base_path = config
        .base
        .as_deref()
        .ok_or_else(|| CliError::Usage("--base is required (see `langshift synth-corpus`)".into()))?;
    let base = load_snapshot(base_path, config.format, &config.load)?;
    let stopwords = match &config.stopwords {
        Some(path) => read_stopwords(path)?,
        None => {
            log::warn!("no stopword list given; every vocabulary word is eligible");
            HashSet::new()
        }
    };
    let report = run_bench(&base, &stopwords, &config.bench())?;
    let mut manifest = RunManifest::load(&config.out)?;
    write_atomic(&config.out.join(BENCH_PATH), |w| report.write_csv(w))?;
    manifest.record(&config.out, "bench", BENCH_PATH)?;
    manifest.save(&config.out)?;
    for r in &report.results {
        println!("{}\tp={}\tMRR={:.4}", r.method, r.p_replacement, r.mrr);
    }
    Ok(())
}

/// Writes a generated tagged base corpus and its stopword list.
pub fn synth_corpus(config: &RunConfig) -> Result<(), CliError> {
    let generated = generate_corpus(&GeneratorConfig {
        tokens: config.tokens,
        seed: config.seed,
        ..Default::default()
    })?;
    let mut manifest = RunManifest::load(&config.out)?;
    write_atomic(&config.out.join("base.txt"), |w| generated.snapshot.write_text(w))?;
    write_atomic(&config.out.join("stopwords.txt"), |w| {
        generated.stopwords.iter().try_for_each(|s| writeln!(w, "{s}"))
    })?;
    manifest.record(&config.out, "corpus:base", "base.txt")?;
    manifest.record(&config.out, "corpus:stopwords", "stopwords.txt")?;
    manifest.save(&config.out)?;
    if config.format != Format::Tagged {
        log::info!("the generated corpus is tagged; load it with --format tagged");
    }
    println!(
        "wrote {} tokens in {} documents",
        generated.snapshot.token_count(),
        generated.snapshot.document_count()
    );
    Ok(())
}
