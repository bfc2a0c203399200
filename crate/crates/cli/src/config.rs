//! Run configuration: flat `key = value` files overridden by flags of the
//! same name.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser};
use langshift::alignment::AlignmentParams;
use langshift::changepoint::DetectorConfig;
use langshift::corpus::{Format, LoadOptions};
use langshift::embedding::TrainingConfig;
use langshift::synthbench::BenchConfig;
use langshift::{Method, SeedPolicy};

use crate::error::CliError;

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "plain" => Ok(Format::Plain),
        "tagged" => Ok(Format::Tagged),
        other => Err(format!("unknown format {other:?} (expected plain or tagged)")),
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{s:?}: {e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0, 1]"))
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: langshift::Error| e.to_string())
}

/// Every setting a run can take. All are optional here; unset values fall
/// back to the config file, then to built-in defaults.
#[derive(Args, Clone, Debug, Default)]
pub struct Options {
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Snapshot manifest: one `label<TAB>path` line per snapshot, oldest first.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Corpus format: plain or tagged (`token_TAG`).
    #[arg(long, value_parser = parse_format)]
    pub format: Option<Format>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lowercase: Option<bool>,
    /// Comma-separated subset of frequency, syntactic, distributional.
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    pub method: Option<Vec<Method>>,
    #[arg(long)]
    pub min_count: Option<u64>,

    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub min_alpha: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,

    /// Neighbourhood size for alignment; defaults to min(4·dim, |V|).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub ridge: Option<f64>,

    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub significance: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Single-threaded training; byte-identical reruns.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub deterministic: Option<bool>,

    /// Train embeddings first instead of requiring them on disk.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub end_to_end: Option<bool>,
    /// Also write per-word alignment residuals.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub dump_alignment: Option<bool>,

    /// Base corpus file for the benchmark.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    #[arg(long)]
    pub snapshots: Option<usize>,
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Comma-separated replacement probabilities.
    #[arg(long, value_delimiter = ',', value_parser = parse_probability)]
    pub grid: Option<Vec<f64>>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub same_pos: Option<bool>,
    /// Score each pair on its own corpus copy.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub independent_trials: Option<bool>,

    /// Token count of a generated corpus.
    #[arg(long)]
    pub tokens: Option<usize>,
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct FileArgs {
    #[command(flatten)]
    options: Options,
}

macro_rules! prefer {
    ($a:expr, $b:expr; $($field:ident),* $(,)?) => {
        Options {
            config: $a.config.or($b.config),
            $($field: $a.$field.or($b.$field),)*
        }
    };
}

impl Options {
    /// Fills every unset field from `other`.
    pub fn or(self, other: Options) -> Options {
        prefer!(self, other;
            manifest, format, lowercase, method, min_count, dim, window, subsample, epochs, alpha,
            min_alpha, tolerance, k, ridge, bootstrap, gamma, significance, seed, out, deterministic,
            end_to_end, dump_alignment, base, stopwords, snapshots, pairs, grid, same_pos,
            independent_trials, tokens,
        )
    }

    /// Reads a config file. Keys are flag names without the leading dashes
    /// (`min-count` or `min_count`); `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Options, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Input(anyhow::anyhow!("cannot read config {}: {e}", path.display())))?;
        let mut argv = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", path.display(), lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if key == "config" {
                return Err(CliError::Usage(format!("{}: config files cannot nest", path.display())));
            }
            argv.push(format!("--{key}"));
            argv.push(value.trim().to_owned());
        }
        let parsed = FileArgs::try_parse_from(argv)
            .map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.kind_message())))?;
        Ok(resolve_relative(parsed.options, path.parent().unwrap_or(Path::new("."))))
    }

    /// Flags first, then the config file named by `--config`, if any.
    pub fn merged(self) -> Result<Options, CliError> {
        match &self.config {
            Some(path) => {
                let file = Options::from_file(path)?;
                Ok(self.or(file))
            }
            None => Ok(self),
        }
    }
}

trait KindMessage {
    fn kind_message(&self) -> String;
}

impl KindMessage for clap::Error {
    fn kind_message(&self) -> String {
        self.to_string().lines().next().unwrap_or_default().trim_start_matches("error: ").to_owned()
    }
}

fn resolve_relative(mut o: Options, base: &Path) -> Options {
    let fix = |p: &mut Option<PathBuf>| {
        if let Some(path) = p {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    };
    fix(&mut o.manifest);
    fix(&mut o.out);
    fix(&mut o.base);
    fix(&mut o.stopwords);
    o
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub format: Format,
    pub load: LoadOptions,
    pub methods: Vec<Method>,
    pub min_count: u64,
    pub training: TrainingConfig,
    pub k: Option<usize>,
    pub ridge: f64,
    pub detector: DetectorConfig,
    pub seed: u64,
    pub out: PathBuf,
    pub deterministic: bool,
    pub end_to_end: bool,
    pub dump_alignment: bool,
    pub base: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub snapshots: usize,
    pub pairs: usize,
    pub grid: Vec<f64>,
    pub same_pos: bool,
    pub independent_trials: bool,
    pub tokens: usize,
}

impl RunConfig {
    pub fn from_options(o: Options) -> Result<RunConfig, CliError> {
        let format = o.format.unwrap_or(Format::Plain);
        let seed = o.seed.unwrap_or(1);
        let defaults = TrainingConfig::default();
        let training = TrainingConfig {
            dim: o.dim.unwrap_or(defaults.dim),
            window: o.window.unwrap_or(defaults.window),
            subsample: o.subsample.unwrap_or(defaults.subsample),
            alpha: o.alpha.unwrap_or(defaults.alpha),
            min_alpha: o.min_alpha.unwrap_or(defaults.min_alpha),
            max_epochs: o.epochs.unwrap_or(defaults.max_epochs),
            tolerance: o.tolerance.unwrap_or(defaults.tolerance),
            seed,
        };
        let detector_defaults = DetectorConfig::default();
        let detector = DetectorConfig {
            bootstrap: o.bootstrap.unwrap_or(detector_defaults.bootstrap),
            gamma: o.gamma.unwrap_or(detector_defaults.gamma),
            significance: o.significance.unwrap_or(detector_defaults.significance),
            seed,
        };
        let methods = o.method.unwrap_or_else(|| match format {
            Format::Plain => vec![Method::Frequency, Method::Distributional],
            Format::Tagged => Method::ALL.to_vec(),
        });
        let bench_defaults = BenchConfig::default();
        let config = RunConfig {
            manifest: o.manifest,
            format,
            load: LoadOptions {
                lowercase: o.lowercase.unwrap_or(false),
            },
            methods,
            min_count: o.min_count.unwrap_or(5),
            training,
            k: o.k,
            ridge: o.ridge.unwrap_or(1e-3),
            detector,
            seed,
            out: o.out.unwrap_or_else(|| PathBuf::from("out")),
            deterministic: o.deterministic.unwrap_or(false),
            end_to_end: o.end_to_end.unwrap_or(false),
            dump_alignment: o.dump_alignment.unwrap_or(false),
            base: o.base,
            stopwords: o.stopwords,
            snapshots: o.snapshots.unwrap_or(bench_defaults.snapshots),
            pairs: o.pairs.unwrap_or(bench_defaults.pairs),
            grid: o.grid.unwrap_or(bench_defaults.grid),
            same_pos: o.same_pos.unwrap_or(false),
            independent_trials: o.independent_trials.unwrap_or(false),
            tokens: o.tokens.unwrap_or(1_000_000),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |e: langshift::Error| CliError::Usage(e.to_string());
        self.training.validate().map_err(usage)?;
        self.detector.validate().map_err(usage)?;
        if self.methods.is_empty() {
            return Err(CliError::Usage("at least one method must be selected".into()));
        }
        if self.methods.contains(&Method::Syntactic) && self.format != Format::Tagged {
            return Err(CliError::Usage("the syntactic method needs --format tagged".into()));
        }
        if self.min_count == 0 {
            return Err(CliError::Usage("min-count must be at least 1".into()));
        }
        if self.k == Some(0) {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(CliError::Usage("ridge must be a finite non-negative number".into()));
        }
        if let Some(p) = self.grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(CliError::Usage(format!("grid value {p} is outside [0, 1]")));
        }
        if self.snapshots < 2 {
            return Err(CliError::Usage("snapshots must be at least 2".into()));
        }
        if self.pairs == 0 {
            return Err(CliError::Usage("pairs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn alignment(&self, n_words: usize) -> AlignmentParams {
        let mut params = AlignmentParams::for_space(self.training.dim, n_words);
        if let Some(k) = self.k {
            params.k = k.min(n_words);
        }
        params.ridge = self.ridge;
        params
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            snapshots: self.snapshots,
            perturbed: None,
            pairs: self.pairs,
            grid: self.grid.clone(),
            same_pos: self.same_pos,
            methods: self.methods.clone(),
            min_count: self.min_count,
            training: self.training.clone(),
            k: self.k,
            ridge: self.ridge,
            detector: self.detector.clone(),
            seeds: SeedPolicy::PerSnapshot,
            parallel: !self.deterministic,
            independent_trials: self.independent_trials,
            seed: self.seed,
        }
    }
}
