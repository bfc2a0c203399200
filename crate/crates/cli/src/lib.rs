//! Command-line front-end: ingest, train, align, build series, detect and
//! benchmark, driven by a flat configuration file and flags.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

use clap::{Parser, Subcommand};

pub use config::{Options, RunConfig};
pub use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "langshift", version, about = "Detect statistically significant shifts in word usage over time")]
pub struct Cli {
    /// Log progress (-v) or debugging detail (-vv) to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one embedding space per snapshot.
    Train(Options),
    /// Build per-word series and report significant change points.
    Detect(Options),
    /// Run the donor/receptor perturbation benchmark.
    Bench(Options),
    /// Write a synthetic tagged base corpus and stopword list.
    SynthCorpus(Options),
}

type CommandFn = fn(&RunConfig) -> Result<(), CliError>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            CliError::Usage(String::new())
        }
        _ => CliError::Usage(e.to_string().trim_end().to_owned()),
    })?;
    let _ = env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .parse_default_env()
        .try_init();
    let (options, command): (Options, CommandFn) = match cli.command {
        Command::Train(o) => (o, commands::train),
        Command::Detect(o) => (o, commands::detect),
        Command::Bench(o) => (o, commands::bench),
        Command::SynthCorpus(o) => (o, commands::synth_corpus),
    };
    let config = RunConfig::from_options(options.merged()?)?;
    if config.deterministic {
        // one worker keeps scheduling out of the picture entirely
        let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    }
    command(&config)
}
