//! `nmt`: prepare a parallel email corpus, train the attention translator,
//! translate text and score it against the baseline column.
//!
//! Settings resolve as flag, then `--config` file, then built-in default.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};
use serde::Deserialize;

use nmt_core::corpus::{CorpusFormat, Direction};
use nmt_core::eval::{BleuConfig, EvalOptions};
use nmt_core::pipeline::{
    cmd_evaluate, cmd_prepare, cmd_train, cmd_translate, EvaluateOptions, PrepareOptions, TrainOptions,
};
use nmt_core::training::{Regime, TrainConfig};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "nmt", version, about = "Attention-based GRU translator for parallel email corpora")]
struct Cli {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split, tokenize and encode a corpus into training pairs.
    Prepare(PrepareArgs),
    /// Train a model on a prepared dataset.
    Train(TrainArgs),
    /// Translate text (from --text or standard input) with a checkpoint.
    Translate(TranslateArgs),
    /// Score model and baseline translations against the human reference.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct PrepareArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// paragraph or email
    #[arg(long)]
    regime: Option<Regime>,
    /// m2e or e2m
    #[arg(long)]
    direction: Option<Direction>,
    #[arg(long)]
    max_length: Option<usize>,
    /// Field delimiter: `tab`, `comma` or a single character.
    #[arg(long)]
    delimiter: Option<String>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Directory written by `prepare`.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    teacher_forcing: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    log_interval: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Save `checkpoint-<iteration>.bin` at this cadence; 0 disables.
    #[arg(long)]
    checkpoint_every: Option<usize>,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Text to translate; standard input when absent.
    #[arg(long)]
    text: Option<String>,
    /// Decoding length cap per paragraph.
    #[arg(long)]
    max_length: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    direction: Option<Direction>,
    #[arg(long)]
    sample_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Add-one smoothing for n-gram orders above one.
    #[arg(long)]
    smoothing: bool,
    #[arg(long)]
    max_length: Option<usize>,
    #[arg(long)]
    delimiter: Option<String>,
}

/// Optional settings read from `--config`. Keys mirror the flag names.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    direction: Option<String>,
    regime: Option<String>,
    hidden: Option<usize>,
    lr: Option<f64>,
    teacher_forcing: Option<f64>,
    iterations: Option<usize>,
    max_length: Option<usize>,
    log_interval: Option<usize>,
    seed: Option<u64>,
    sample_size: Option<usize>,
    smoothing: Option<bool>,
    checkpoint_every: Option<usize>,
    delimiter: Option<String>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(nmt_core::Error),
}

impl From<nmt_core::Error> for Failure {
    fn from(e: nmt_core::Error) -> Self {
        Failure::Core(e)
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, Failure> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_setting<T: std::str::FromStr>(flag: Option<T>, file: Option<&str>, default: T) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    match (flag, file) {
        (Some(v), _) => Ok(v),
        (None, Some(s)) => s.parse().map_err(|e| Failure::Usage(format!("config: {e}"))),
        (None, None) => Ok(default),
    }
}

fn parse_delimiter(text: &str) -> Result<u8, Failure> {
    match text {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        s if s.len() == 1 && s.is_ascii() => Ok(s.as_bytes()[0]),
        s => Err(Failure::Usage(format!("delimiter `{s}` is not a single ASCII character"))),
    }
}

fn corpus_format(flag: Option<String>, file: &FileConfig) -> Result<CorpusFormat, Failure> {
    match flag.or_else(|| file.delimiter.clone()) {
        Some(d) => Ok(CorpusFormat {
            delimiter: parse_delimiter(&d)?,
        }),
        None => Ok(CorpusFormat::default()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let file = load_file_config(cli.config.as_deref())?;
    let defaults = TrainConfig::default();
    match cli.command {
        Command::Prepare(args) => {
            let options = PrepareOptions {
                format: corpus_format(args.delimiter, &file)?,
                corpus: args.corpus,
                out_dir: args.out,
                regime: parse_setting(args.regime, file.regime.as_deref(), Regime::ParagraphLevel)?,
                direction: parse_setting(args.direction, file.direction.as_deref(), Direction::MalayToEnglish)?,
                max_length: args.max_length.or(file.max_length).unwrap_or(defaults.max_length),
            };
            let stats = cmd_prepare(&options)?;
            println!(
                "emails={} pairs={} over_length={} source_vocab={} target_vocab={}",
                stats.emails, stats.pairs, stats.over_length, stats.source_vocab_size, stats.target_vocab_size
            );
        }
        Command::Train(args) => {
            let config = TrainConfig {
                hidden_size: args.hidden.or(file.hidden).unwrap_or(defaults.hidden_size),
                learning_rate: args.lr.or(file.lr).unwrap_or(defaults.learning_rate),
                teacher_forcing_prob: args
                    .teacher_forcing
                    .or(file.teacher_forcing)
                    .unwrap_or(defaults.teacher_forcing_prob),
                iterations: args.iterations.or(file.iterations).unwrap_or(defaults.iterations),
                max_length: args.max_length.or(file.max_length).unwrap_or(defaults.max_length),
                log_interval: args.log_interval.or(file.log_interval).unwrap_or(defaults.log_interval),
                rng_seed: args.seed.or(file.seed).unwrap_or(defaults.rng_seed),
            };
            config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
            let options = TrainOptions {
                dataset_dir: args.dataset,
                out_dir: args.out,
                config,
                checkpoint_every: args.checkpoint_every.or(file.checkpoint_every).unwrap_or(0),
            };
            let report = cmd_train(&options)?;
            match (report.loss_log.last(), report.context_log.last()) {
                (Some(&(iteration, loss)), Some(&(_, concentration))) => println!(
                    "iterations={iteration} final_mean_loss={loss} final_context_concentration={concentration}"
                ),
                _ => println!("iterations=0"),
            }
            info!("{} over-length samples skipped", report.skipped);
        }
        Command::Translate(args) => {
            let input = match args.text {
                Some(t) => t,
                None => {
                    let mut buf = String::new();
                    io::stdin()
                        .read_to_string(&mut buf)
                        .map_err(|e| Failure::Usage(format!("reading standard input: {e}")))?;
                    buf
                }
            };
            let max_len = args.max_length.or(file.max_length).unwrap_or(defaults.max_length);
            let output = cmd_translate(&args.checkpoint, &input, max_len)?;
            if !output.is_empty() {
                println!("{output}");
            }
        }
        Command::Evaluate(args) => {
            let direction = parse_setting(args.direction, file.direction.as_deref(), Direction::MalayToEnglish)?;
            let mut eval = EvalOptions::new(direction);
            eval.sample_size = args.sample_size.or(file.sample_size).unwrap_or(eval.sample_size);
            eval.rng_seed = args.seed.or(file.seed).unwrap_or(eval.rng_seed);
            eval.max_len = args.max_length.or(file.max_length).unwrap_or(eval.max_len);
            eval.bleu = BleuConfig {
                smoothing: args.smoothing || file.smoothing.unwrap_or(false),
                ..BleuConfig::default()
            };
            let options = EvaluateOptions {
                format: corpus_format(args.delimiter, &file)?,
                checkpoint: args.checkpoint,
                corpus: args.corpus,
                out_dir: args.out,
                eval,
            };
            let report = cmd_evaluate(&options)?;
            for row in &report.rows {
                println!(
                    "{}\t{}\tcorpus_bleu={:.6}\tsample_size={}",
                    row.direction, row.system, row.corpus_bleu, row.sample_size
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            error!("{msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Core(e)) => {
            error!("{e}");
            ExitCode::from(if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_DATA })
        }
    }
}
