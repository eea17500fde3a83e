//! Crate-wide error type: a transparent union of the per-module errors, so
//! pipeline-level code can bubble any of them with `?`.

use crate::activation::ActivationError;
use crate::concepts::ConceptsError;
use crate::explainers::ExplainerError;
use crate::imagegen::ImageGenError;
use crate::metaeval::MetaEvalError;
use crate::report::ReportError;
use crate::scoring::ScoringError;

#[derive(Debug, thiserror::Error)]
pub enum CosyError {
    #[error(transparent)]
    Concepts(#[from] ConceptsError),
    #[error(transparent)]
    ImageGen(#[from] ImageGenError),
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Explainer(#[from] ExplainerError),
    #[error(transparent)]
    MetaEval(#[from] MetaEvalError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("invalid argument: {detail}")]
    InvalidArgument { detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CosyError {
    pub fn invalid_argument(detail: impl Into<String>) -> Self {
        Self::InvalidArgument { detail: detail.into() }
    }
}
