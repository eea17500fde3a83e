//! Thin command-line front end over [`cosy::pipeline::Pipeline`].
//!
//! Exit codes: 0 on success (including help/version), 1 on validation
//! errors (bad flags, malformed config or inputs), 2 on runtime failures
//! (backend, cache, or store faults).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use cosy::activation::ActivationError;
use cosy::concepts::{ingest_explanations, load_config, ConceptsError};
use cosy::explainers::{export_explanations, ExplainerError};
use cosy::imagegen::ImageGenError;
use cosy::metaeval::MetaEvalError;
use cosy::pipeline::{ExplainOptions, MetaEvalOptions, Pipeline};
use cosy::report::{ReportError, ReportFormat};
use cosy::scoring::ScoringError;
use cosy::CosyError;

#[derive(Parser)]
#[command(name = "cosy", version, about = "Concept synthesis evaluation for latent neurons")]
struct Cli {
    /// Run configuration JSON file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pre-generate synthetic image batches for control concepts and explanations.
    Generate {
        /// Explanations CSV whose texts should also be generated.
        #[arg(long)]
        explanations: Option<PathBuf>,
    },
    /// Build and persist the control activation store for the configured layer.
    Collect,
    /// Score explanations against the control activation distribution.
    Score {
        #[arg(long)]
        explanations: PathBuf,
        /// Directory for the output document (default: the configured output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score explanations and aggregate per (layer, method) benchmark cells.
    Benchmark {
        #[arg(long)]
        explanations: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a meta-evaluation suite: similarity, response, sanity, stability, or broadness.
    Metaeval {
        #[arg(long)]
        suite: String,
        /// Taxonomy CSV (broadness suite).
        #[arg(long)]
        taxonomy: Option<PathBuf>,
        /// Concept to focus on (stability and broadness suites).
        #[arg(long)]
        concept: Option<String>,
        /// Neuron to track (stability suite; default: argmax for the concept).
        #[arg(long)]
        neuron: Option<usize>,
        /// Number of seeds (stability suite; default 10).
        #[arg(long)]
        seeds: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate explanations from a persisted activation store.
    Explain {
        /// Explainer to run: invert or softwpmi.
        #[arg(long)]
        method: String,
        /// Activation store directory.
        #[arg(long)]
        source: PathBuf,
        /// Binary concept labels CSV (invert).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Image-concept similarity CSV (softwpmi).
        #[arg(long)]
        sim: Option<PathBuf>,
        /// Explain a single neuron instead of every neuron in the store.
        #[arg(long)]
        neuron: Option<usize>,
        /// Maximum formula length in concept leaves (invert).
        #[arg(long, default_value_t = 3)]
        length: usize,
        /// Beam width (invert).
        #[arg(long, default_value_t = 16)]
        beam: usize,
        /// Marginal penalty weight (softwpmi).
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Number of most-activating rows to weight (softwpmi; default all).
        #[arg(long)]
        top_k: Option<usize>,
        /// Softmax temperature (softwpmi).
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        /// Output CSV (default: <output_dir>/explanations_<method>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a previously written document as json, csv, or md.
    Report {
        #[arg(long)]
        document: PathBuf,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn execute(cli: Cli) -> Result<(), CosyError> {
    let config_path = cli
        .config
        .ok_or_else(|| CosyError::invalid_argument("--config <file> is required"))?;
    let config = load_config(&config_path)?;
    let pipeline = Pipeline::new(config)?;

    match cli.command {
        Command::Generate { explanations } => {
            let records = match explanations {
                Some(path) => ingest_explanations(&path)?,
                None => Vec::new(),
            };
            let summary = pipeline.run_generate(&records)?;
            println!(
                "generated {} concepts x {} images under {}",
                summary.concepts.len(),
                summary.images_per_concept,
                summary.cache_root.display()
            );
        }
        Command::Collect => {
            let (store, path) = pipeline.run_collect()?;
            println!(
                "collected {} control rows x {} neurons into {}",
                store.row_count(),
                store.neuron_count(),
                path.display()
            );
        }
        Command::Score { explanations, out } => {
            let records = ingest_explanations(&explanations)?;
            let doc = pipeline.run_score(&records)?;
            let path = pipeline.write_document(&doc, out.as_deref())?;
            println!("scored {} explanations -> {}", doc.scores.len(), path.display());
        }
        Command::Benchmark { explanations, out } => {
            let records = ingest_explanations(&explanations)?;
            let doc = pipeline.run_benchmark(&records)?;
            let cells = doc.benchmark.as_ref().map_or(0, |t| t.rows.len());
            let path = pipeline.write_document(&doc, out.as_deref())?;
            println!(
                "benchmarked {} explanations into {} cells -> {}",
                doc.scores.len(),
                cells,
                path.display()
            );
        }
        Command::Metaeval { suite, taxonomy, concept, neuron, seeds, out } => {
            let opts =
                MetaEvalOptions { taxonomy, concept, neuron_index: neuron, seed_count: seeds };
            let doc = pipeline.run_metaeval(&suite, &opts)?;
            let path = pipeline.write_document(&doc, out.as_deref())?;
            println!("metaeval {suite} -> {}", path.display());
        }
        Command::Explain {
            method,
            source,
            dataset,
            sim,
            neuron,
            length,
            beam,
            lambda,
            top_k,
            temperature,
            out,
        } => {
            let mut opts = ExplainOptions::new(source);
            opts.dataset = dataset;
            opts.sim = sim;
            opts.neuron_index = neuron;
            opts.max_length = length;
            opts.beam_width = beam;
            opts.lambda = lambda;
            opts.top_k = top_k;
            opts.temperature = temperature;
            let records = pipeline.run_explain(&method, &opts)?;
            let out_path = out.unwrap_or_else(|| {
                PathBuf::from(&pipeline.config().output_dir)
                    .join(format!("explanations_{method}.csv"))
            });
            if let Some(parent) = out_path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            export_explanations(&records, &out_path)?;
            println!("explained {} neurons -> {}", records.len(), out_path.display());
        }
        Command::Report { document, format, out } => {
            let format: ReportFormat = format.parse()?;
            let files = pipeline.run_report(&document, format, out.as_deref())?;
            for file in &files {
                println!("wrote {}", file.display());
            }
        }
    }
    Ok(())
}

// ===== Exit code classification =====

/// 1 for validation errors in user-supplied inputs, 2 for runtime faults.
fn exit_code(err: &CosyError) -> u8 {
    match err {
        CosyError::InvalidArgument { .. } => 1,
        CosyError::Io(_) => 2,
        CosyError::Concepts(e) => match e {
            ConceptsError::Io(_) => 2,
            _ => 1,
        },
        CosyError::ImageGen(e) => imagegen_code(e),
        CosyError::Activation(e) => activation_code(e),
        CosyError::Scoring(e) => scoring_code(e),
        CosyError::Explainer(e) => explainer_code(e),
        CosyError::MetaEval(e) => metaeval_code(e),
        CosyError::Report(e) => match e {
            ReportError::Io { .. } => 2,
            _ => 1,
        },
    }
}

fn imagegen_code(e: &ImageGenError) -> u8 {
    match e {
        ImageGenError::MissingPlaceholder { .. } | ImageGenError::InvalidSpec { .. } => 1,
        ImageGenError::BackendUnavailable { .. }
        | ImageGenError::GenerationRefused { .. }
        | ImageGenError::CacheCorrupt { .. }
        | ImageGenError::Io { .. } => 2,
    }
}

fn activation_code(e: &ActivationError) -> u8 {
    match e {
        ActivationError::ShapeMismatch { .. }
        | ActivationError::IndexOutOfRange { .. }
        | ActivationError::UnknownLayer { .. }
        | ActivationError::EmptyBatch
        | ActivationError::LengthMismatch { .. } => 1,
        ActivationError::AdapterFailure { .. }
        | ActivationError::NonFiniteActivation { .. }
        | ActivationError::VersionMismatch { .. }
        | ActivationError::CorruptManifest { .. }
        | ActivationError::Io { .. } => 2,
    }
}

fn scoring_code(e: &ScoringError) -> u8 {
    match e {
        ScoringError::NonFiniteValue { .. } => 2,
        _ => 1,
    }
}

fn explainer_code(e: &ExplainerError) -> u8 {
    match e {
        ExplainerError::UnknownConcept { .. }
        | ExplainerError::UnknownName { .. }
        | ExplainerError::MalformedFormula { .. }
        | ExplainerError::InvalidConfig { .. }
        | ExplainerError::InputMismatch { .. } => 1,
        ExplainerError::DegenerateMembership
        | ExplainerError::EmptyBeam
        | ExplainerError::AllZeroActivations => 2,
        ExplainerError::Scoring(inner) => scoring_code(inner),
    }
}

fn metaeval_code(e: &MetaEvalError) -> u8 {
    match e {
        MetaEvalError::ImageGen(inner) => imagegen_code(inner),
        MetaEvalError::Activation(inner) => activation_code(inner),
        MetaEvalError::Scoring(inner) => scoring_code(inner),
        _ => 1,
    }
}
