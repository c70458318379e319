//! Multi-command CLI: train models, perturb text, detect single documents,
//! and run the full strategy × detector evaluation matrix.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data/format error,
//! 3 network/remote error, 4 internal error.

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use gauntlet_core::config::{build_detector, ConfigError, DetectorSpec, RunConfig};
use gauntlet_core::corpus::load_corpus;
use gauntlet_core::detect::{train_classifier, ClassifierConfig, DetectError};
use gauntlet_core::gateway::GatewayError;
use gauntlet_core::harness::report::{emit_report, render_markdown, ReportFormat};
use gauntlet_core::harness::{load_benchmark, run_matrix, HarnessError, RunOptions};
use gauntlet_core::hashing::fnv1a64;
use gauntlet_core::ngram::{NgramError, NgramModel};
use gauntlet_core::perturb::{period_insert, plural_flip, space_infi, Strategy};
use gauntlet_core::text::{Document, Origin, TokenizeMode};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NETWORK: u8 = 3;
const EXIT_INTERNAL: u8 = 4;

#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_USAGE,
        }
    }
    fn data(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_DATA,
        }
    }
    fn network(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_NETWORK,
        }
    }
    fn internal(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            code: EXIT_INTERNAL,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gauntlet",
    version,
    about = "Evasion test bench for AI-generated-text detectors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Char,
    Wordws,
}

impl From<ModeArg> for TokenizeMode {
    fn from(mode: ModeArg) -> Self {
        match mode {
            ModeArg::Char => TokenizeMode::Char,
            ModeArg::Wordws => TokenizeMode::WordWs,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an n-gram language model on one or more corpus files
    TrainLm {
        /// Corpus file(s): plain text (one document per line), .json or .jsonl
        #[arg(long = "corpus", required = true, num_args = 1..)]
        corpus: Vec<PathBuf>,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        #[arg(long, value_enum, default_value = "char")]
        mode: ModeArg,
        /// Output model path
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the hashed n-gram logistic classifier on labeled corpora
    TrainClf {
        /// Corpus of AI-generated documents
        #[arg(long)]
        ai: PathBuf,
        /// Corpus of human-written documents
        #[arg(long)]
        human: PathBuf,
        /// Output model path
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 4.0)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1500)]
        epochs: usize,
        #[arg(long, default_value_t = 1)]
        ngram_min: usize,
        #[arg(long, default_value_t = 4)]
        ngram_max: usize,
        #[arg(long, default_value_t = 1 << 18)]
        feature_dim: u32,
        #[arg(long, default_value_t = 0.0)]
        tie_band: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply an edit strategy to text from stdin; result goes to stdout
    Perturb {
        /// Strategy name: noprompt, spaceinfi, period-insert or plural-flip
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run one detector over one document and print the result as JSON
    Detect {
        /// Path to a detector spec JSON file
        #[arg(long)]
        detector: PathBuf,
        /// Document text file; stdin when omitted
        #[arg(long)]
        text_file: Option<PathBuf>,
    },
    /// Run the full strategy × detector matrix from a run config
    Eval {
        /// Run configuration JSON
        #[arg(long)]
        config: PathBuf,
        /// Fail on cache misses instead of calling the LLM endpoint
        #[arg(long)]
        offline: bool,
        /// Worker thread cap (overrides the config)
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::TrainLm {
            corpus,
            order,
            alpha,
            mode,
            out,
        } => cmd_train_lm(&corpus, order, alpha, mode.into(), &out),
        Command::TrainClf {
            ai,
            human,
            out,
            learning_rate,
            epochs,
            ngram_min,
            ngram_max,
            feature_dim,
            tie_band,
            seed,
        } => {
            let config = ClassifierConfig {
                learning_rate,
                epochs,
                ngram_range: (ngram_min, ngram_max),
                feature_dim,
                tie_band,
                seed,
            };
            cmd_train_clf(&ai, &human, &out, &config)
        }
        Command::Perturb { strategy, seed } => cmd_perturb(&strategy, seed),
        Command::Detect {
            detector,
            text_file,
        } => cmd_detect(&detector, text_file.as_deref()),
        Command::Eval {
            config,
            offline,
            jobs,
        } => cmd_eval(&config, offline, jobs),
    }
}

fn cmd_train_lm(
    corpus: &[PathBuf],
    order: usize,
    alpha: f64,
    mode: TokenizeMode,
    out: &std::path::Path,
) -> Result<(), CliError> {
    let mut docs = Vec::new();
    for path in corpus {
        docs.extend(load_corpus(path).map_err(|e| CliError::data(e.to_string()))?);
    }
    let model = NgramModel::train(&docs, order, alpha, mode).map_err(|e| match e {
        NgramError::InvalidOrder | NgramError::InvalidAlpha => CliError::usage(e.to_string()),
        other => CliError::data(other.to_string()),
    })?;
    model
        .save(out)
        .map_err(|e| CliError::internal(format!("writing {}: {e}", out.display())))?;
    println!("vocab size: {}", model.vocab_size());
    println!("corpus tokens: {}", model.trained_tokens());
    println!("model written to {}", out.display());
    Ok(())
}

fn cmd_train_clf(
    ai: &std::path::Path,
    human: &std::path::Path,
    out: &std::path::Path,
    config: &ClassifierConfig,
) -> Result<(), CliError> {
    let ai_docs = load_corpus(ai).map_err(|e| CliError::data(e.to_string()))?;
    let human_docs = load_corpus(human).map_err(|e| CliError::data(e.to_string()))?;

    let mut all = Vec::new();
    for (i, text) in ai_docs.into_iter().enumerate() {
        all.push(Document::new(
            format!("ai:{i}"),
            "",
            text,
            Origin::AiGenerated,
        ));
    }
    for (i, text) in human_docs.into_iter().enumerate() {
        all.push(Document::new(
            format!("human:{i}"),
            "",
            text,
            Origin::HumanWritten,
        ));
    }

    // deterministic 90/10 split by id hash
    let (mut train, mut held_out) = (Vec::new(), Vec::new());
    for doc in all {
        if fnv1a64(doc.id.as_bytes()) % 10 == 9 {
            held_out.push(doc);
        } else {
            train.push(doc);
        }
    }

    let report = train_classifier(&train, config).map_err(|e| match e {
        DetectError::MissingClass => CliError::data(e.to_string()),
        DetectError::InvalidConfig(_) => CliError::usage(e.to_string()),
        other => CliError::internal(other.to_string()),
    })?;

    let (eval_set, label) = if held_out.is_empty() {
        (&train, "training")
    } else {
        (&held_out, "held-out")
    };
    let mut correct = 0usize;
    for doc in eval_set {
        let p = report.model.ai_probability(&doc.text);
        let predicted = report.model.verdict_for(p);
        let expected = match doc.origin {
            Origin::AiGenerated => gauntlet_core::Verdict::Ai,
            _ => gauntlet_core::Verdict::Human,
        };
        if predicted == expected {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / eval_set.len() as f64;

    report
        .model
        .save(out)
        .map_err(|e| CliError::internal(format!("writing {}: {e}", out.display())))?;
    println!("{label} accuracy: {accuracy:.4}");
    println!("model written to {}", out.display());
    Ok(())
}

fn cmd_perturb(strategy_name: &str, seed: u64) -> Result<(), CliError> {
    let strategy =
        Strategy::from_id(strategy_name, seed).map_err(|e| CliError::usage(e.to_string()))?;
    if !strategy.is_edit() {
        return Err(CliError::usage(format!(
            "`{strategy_name}` is a prompt strategy; it acts at generation time (see `gauntlet eval`)"
        )));
    }
    let mut text = String::new();
    std::io::stdin()
        .read_to_string(&mut text)
        .map_err(|e| CliError::data(format!("reading stdin: {e}")))?;

    // raw operation with the literal seed: no per-document mixing here
    let outcome = match strategy {
        Strategy::NoPrompt => gauntlet_core::perturb::PerturbationOutcome {
            text: text.clone(),
            applied: true,
            edit_offset: None,
        },
        Strategy::SpaceInfi { seed } => space_infi(&text, seed),
        Strategy::PeriodInsert { seed } => period_insert(&text, seed),
        Strategy::PluralFlip { seed } => plural_flip(&text, seed),
        _ => unreachable!("prompt strategies rejected above"),
    };
    print!("{}", outcome.text);
    match outcome.edit_offset {
        Some(offset) => eprintln!("applied={} offset={offset}", outcome.applied),
        None => eprintln!("applied={}", outcome.applied),
    }
    Ok(())
}

fn cmd_detect(
    spec_path: &std::path::Path,
    text_file: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let raw = std::fs::read_to_string(spec_path)
        .map_err(|e| CliError::usage(format!("reading {}: {e}", spec_path.display())))?;
    let spec: DetectorSpec =
        serde_json::from_str(&raw).map_err(|e| CliError::usage(format!("detector spec: {e}")))?;
    let detector = build_detector(&spec).map_err(map_config_error)?;

    let text = match text_file {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("reading {}: {e}", path.display())))?,
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| CliError::data(format!("reading stdin: {e}")))?;
            buf
        }
    };

    let doc = Document::new("cli-input", "", text, Origin::Unknown);
    let result = detector.detect(&doc).map_err(|e| match e {
        DetectError::Remote(remote) => CliError::network(remote.to_string()),
        other => CliError::data(other.to_string()),
    })?;
    println!(
        "{}",
        serde_json::to_string(&result).expect("detection result serializes")
    );
    Ok(())
}

fn cmd_eval(
    config_path: &std::path::Path,
    offline: bool,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let (config, digest) = RunConfig::load(config_path).map_err(map_config_error)?;
    let strategies = config.strategies().map_err(map_config_error)?;
    let detectors = config.build_detectors().map_err(map_config_error)?;
    let detector_refs: Vec<&dyn gauntlet_core::Detector> =
        detectors.iter().map(|d| d.as_ref()).collect();
    let gateway = config.build_gateway(offline).map_err(map_config_error)?;

    std::fs::create_dir_all(&config.output_dir)
        .map_err(|e| CliError::internal(format!("creating output dir: {e}")))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.or(config.jobs).unwrap_or(0))
        .build()
        .map_err(|e| CliError::internal(e.to_string()))?;

    let options = RunOptions {
        seed: config.seed,
        defense: config.defense,
        config_digest: Some(digest),
    };

    for spec in &config.benchmarks {
        let mut benchmark = load_benchmark(&spec.path, spec.format).map_err(map_harness_error)?;
        if let Some(name) = &spec.name {
            benchmark.name = name.clone();
        }
        let matrix = pool
            .install(|| {
                run_matrix(
                    &benchmark,
                    &strategies,
                    &detector_refs,
                    gateway.as_ref(),
                    &options,
                )
            })
            .map_err(map_harness_error)?;

        let base = config.output_dir.join(&benchmark.name);
        emit_report(&matrix, ReportFormat::Csv, &base.with_extension("csv"))
            .map_err(|e| CliError::internal(e.to_string()))?;
        emit_report(&matrix, ReportFormat::Json, &base.with_extension("json"))
            .map_err(|e| CliError::internal(e.to_string()))?;
        emit_report(
            &matrix,
            ReportFormat::MarkdownTable,
            &base.with_extension("md"),
        )
        .map_err(|e| CliError::internal(e.to_string()))?;
        print!("{}", render_markdown(&matrix));
        println!();
    }
    Ok(())
}

fn map_config_error(e: ConfigError) -> CliError {
    match e {
        ConfigError::Gateway(g) => map_gateway_error(g),
        ConfigError::Calibration(c) => CliError::data(c.to_string()),
        other => CliError::usage(other.to_string()),
    }
}

fn map_gateway_error(e: GatewayError) -> CliError {
    match e {
        GatewayError::MissingApiKey(_) | GatewayError::InvalidConfig(_) => {
            CliError::usage(e.to_string())
        }
        GatewayError::CacheIo(_) => CliError::internal(e.to_string()),
        _ => CliError::network(e.to_string()),
    }
}

fn map_harness_error(e: HarnessError) -> CliError {
    match e {
        HarnessError::Gateway(g) => map_gateway_error(g),
        HarnessError::MissingResponse { .. } | HarnessError::MissingGateway { .. } => {
            CliError::usage(e.to_string())
        }
        HarnessError::EmptyVerdicts => CliError::internal(e.to_string()),
        HarnessError::Perturb(p) => CliError::usage(p.to_string()),
        other => CliError::data(other.to_string()),
    }
}
