//! Checks on the scoring procedure itself: does a neuron's score behave the
//! way a trustworthy score should?
//!
//! Four probes, each usable on its own: synthetic images must drive class
//! neurons like natural images do (`response`), a neuron's true label must
//! outscore a random distractor (`sanity`), scores must hold up across
//! generation seeds (`stability`), and image diversity must track concept
//! breadth in a taxonomy (`broadness`). Shared plumbing lives in
//! [`EvalContext`]; similarity arithmetic over image embeddings lives in
//! [`similarity`] and [`embedding`].

mod broadness;
mod context;
mod embedding;
mod response;
mod sanity;
mod similarity;
mod stability;

pub use broadness::{concept_broadness, BroadnessLevel, BroadnessReport};
pub use context::EvalContext;
pub use embedding::{cosine_similarity, euclidean_distance, EmbeddingProvider, MockEmbedder};
pub use response::{natural_vs_synthetic_response, ResponseReport, ResponseRow};
pub use sanity::{random_distractor, sanity_check, true_labels_by_argmax, SanityReport, SanityRow};
pub use similarity::{
    cross_set_similarity, cross_set_stats, embed_all, intraclass_similarity, intraclass_stats,
    SimilarityStats,
};
pub use stability::{seed_stability, StabilityReport};

use crate::activation::ActivationError;
use crate::imagegen::ImageGenError;
use crate::scoring::ScoringError;

#[derive(Debug, thiserror::Error)]
pub enum MetaEvalError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,
    #[error("cannot draw a distractor for {concept:?}: it is the only candidate")]
    SingleConceptUniverse { concept: String },
    #[error("seed stability needs at least 2 seeds, got {count}")]
    NotEnoughSeeds { count: usize },
    #[error("image set {side:?} is empty")]
    EmptyImageSet { side: String },
    #[error("intraclass similarity needs at least 2 images, got {count}")]
    NotEnoughImages { count: usize },
    #[error("no activation rows tagged with class {class:?}")]
    MissingClass { class: String },
    #[error(transparent)]
    ImageGen(#[from] ImageGenError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}
