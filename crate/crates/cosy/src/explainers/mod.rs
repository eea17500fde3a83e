//! Explanation generators that feed the evaluator: compositional formula
//! search over labeled concepts and soft-WPMI concept labeling. Every other
//! method's output arrives as an explanations CSV instead.

mod formula;
mod invert;
mod softwpmi;

pub use formula::{formula_eval, membership, parse_formula, CompositionFormula};
pub use invert::{delta_auc, invert_explain, InvertResult};
pub use softwpmi::{softwpmi_label, softwpmi_scores, SimilarityMatrix, SoftWpmiConfig};

use std::path::Path;

use crate::concepts::{write_explanations, ConceptsError, ExplanationRecord};

#[derive(Debug, thiserror::Error)]
pub enum ExplainerError {
    #[error("concept index {index} out of range for {count} concepts")]
    UnknownConcept { index: usize, count: usize },
    #[error("unknown concept name {name:?}")]
    UnknownName { name: String },
    #[error("malformed formula: {detail}")]
    MalformedFormula { detail: String },
    #[error("membership is degenerate: every image is on one side")]
    DegenerateMembership,
    #[error("beam search start produced no valid candidate")]
    EmptyBeam,
    #[error("activations are all zero or negative; soft memberships are undefined")]
    AllZeroActivations,
    #[error("invalid config: {detail}")]
    InvalidConfig { detail: String },
    #[error("input mismatch: {detail}")]
    InputMismatch { detail: String },
    #[error(transparent)]
    Scoring(#[from] crate::scoring::ScoringError),
}

/// Writes generated explanations in the standard CSV format, round-trippable
/// by `ingest_explanations`.
pub fn export_explanations(records: &[ExplanationRecord], path: &Path) -> Result<(), ConceptsError> {
    write_explanations(records, path)
}
