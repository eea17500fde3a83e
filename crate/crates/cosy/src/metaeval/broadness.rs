//! Broadness probe: walking a concept's hypernym chain toward the root
//! should produce ever more diverse image sets. The probe quantifies that
//! as rank correlation between chain depth and intraclass similarity.

use serde::{Deserialize, Serialize};

use crate::activation::ModelAdapter;
use crate::concepts::TaxonomyChain;
use crate::stats::spearman;

use super::context::EvalContext;
use super::embedding::EmbeddingProvider;
use super::MetaEvalError;

/// One chain entry, root first. `hypernym_count` is the inclusive depth
/// from the root, so the root scores 1 and the leaf concept scores the
/// chain length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadnessLevel {
    pub concept: String,
    pub hypernym_count: usize,
    pub cs_mean: f64,
    pub cs_std: f64,
    pub ed_mean: f64,
    pub ed_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BroadnessReport {
    pub concept: String,
    pub levels: Vec<BroadnessLevel>,
    /// Rank correlation of depth against cosine-similarity mean; `None`
    /// when either side is constant. Positive means deeper (more specific)
    /// concepts yield more self-similar image sets.
    pub spearman_cs: Option<f64>,
    /// Rank correlation of depth against distance mean.
    pub spearman_ed: Option<f64>,
}

/// Generates one image set per chain level at the context's global seed and
/// measures each set's intraclass similarity.
pub fn concept_broadness<A: ModelAdapter, P: EmbeddingProvider>(
    chain: &TaxonomyChain,
    ctx: &EvalContext<'_, A, P>,
) -> Result<BroadnessReport, MetaEvalError> {
    let mut levels = Vec::new();
    for (name, depth) in chain.levels_from_root() {
        let batch = ctx.generate(&name, ctx.global_seed)?;
        let stats = super::similarity::intraclass_stats(&ctx.embed_batch(&batch))?;
        levels.push(BroadnessLevel {
            concept: name,
            hypernym_count: depth,
            cs_mean: stats.cs_mean,
            cs_std: stats.cs_std,
            ed_mean: stats.ed_mean,
            ed_std: stats.ed_std,
        });
    }
    let depths: Vec<f64> = levels.iter().map(|l| l.hypernym_count as f64).collect();
    let cs: Vec<f64> = levels.iter().map(|l| l.cs_mean).collect();
    let ed: Vec<f64> = levels.iter().map(|l| l.ed_mean).collect();
    Ok(BroadnessReport {
        concept: chain.concept.clone(),
        levels,
        spearman_cs: spearman(&depths, &cs),
        spearman_ed: spearman(&depths, &ed),
    })
}
