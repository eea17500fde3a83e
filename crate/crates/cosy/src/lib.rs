//! Activation-based scoring for textual neuron explanations.
//!
//! An explanation such as "white stork" is judged by what it predicts: images
//! matching the text should drive the neuron harder than generic natural
//! images. The pipeline turns the text into a batch of synthetic images,
//! records the neuron's activations on both that batch and a control set, and
//! summarizes the separation between the two distributions.
//!
//! Module map:
//!
//! * [`concepts`] - explanation records, concept datasets, run configuration
//! * [`imagegen`] - prompt templates, generation backends, on-disk image cache
//! * [`activation`] - model adapters, spatial pooling, the activation store
//! * [`scoring`] - AUC / MAD scores and multi-method benchmarking
//! * [`metaeval`] - embedding similarity, sanity checks, seed stability,
//!   concept broadness
//! * [`explainers`] - compositional formula search and soft-WPMI labeling
//! * [`pipeline`] - config-driven orchestration used by the CLI and examples
//! * [`report`] - deterministic JSON / CSV / Markdown report rendering
//!
//! The `examples/` directory holds one runnable program per capability; start
//! with `examples/score_explanation.rs`.

pub mod activation;
pub mod concepts;
pub mod explainers;
pub mod hash;
pub mod imagegen;
pub mod metaeval;
pub mod pipeline;
pub mod report;
pub mod scoring;
pub mod stats;

mod error;

pub use error::CosyError;
