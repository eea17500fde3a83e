//! Sanity probe: a neuron scored under its true concept must beat the same
//! neuron scored under a randomly drawn distractor concept.

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationStore, ModelAdapter, SourceTag};
use crate::hash::SplitMix64;
use crate::stats::{mean, population_std};

use super::context::EvalContext;
use super::embedding::EmbeddingProvider;
use super::MetaEvalError;

/// One neuron's true-vs-random comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityRow {
    pub neuron_index: usize,
    pub true_concept: String,
    pub random_concept: String,
    pub true_auc: f64,
    pub random_auc: f64,
    pub true_mad: f64,
    pub random_mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityReport {
    pub rows: Vec<SanityRow>,
    pub true_auc_mean: f64,
    pub true_auc_std: f64,
    pub random_auc_mean: f64,
    pub random_auc_std: f64,
}

/// Draws the distractor for one neuron: a uniform pick over `candidates`
/// minus the true concept, in input order, seeded by `global_seed` plus the
/// neuron index so every neuron draws independently but reproducibly.
pub fn random_distractor(
    global_seed: u64,
    neuron_index: usize,
    candidates: &[String],
    true_concept: &str,
) -> Result<String, MetaEvalError> {
    let pool: Vec<&String> = candidates.iter().filter(|c| c.as_str() != true_concept).collect();
    if pool.is_empty() {
        return Err(MetaEvalError::SingleConceptUniverse { concept: true_concept.to_string() });
    }
    let mut rng = SplitMix64::new(global_seed.wrapping_add(neuron_index as u64));
    let pick = rng.next_below(pool.len() as u64) as usize;
    Ok(pool[pick].clone())
}

/// Reads true labels off a control store: each neuron is labeled with the
/// candidate whose control rows activate it most on average, ties to the
/// earlier candidate.
pub fn true_labels_by_argmax(
    control: &ActivationStore,
    candidates: &[String],
    neuron_indices: &[usize],
) -> Result<Vec<(usize, String)>, MetaEvalError> {
    let mut labels = Vec::with_capacity(neuron_indices.len());
    for &neuron in neuron_indices {
        let mut best: Option<(f64, &String)> = None;
        for candidate in candidates {
            let values = control.column_where(neuron, |prov| {
                prov.source == SourceTag::Control
                    && prov.concept_text.as_deref() == Some(candidate.as_str())
            })?;
            if values.is_empty() {
                continue;
            }
            let m = mean(&values);
            let beats = match best {
                Some((current, _)) => m > current,
                None => true,
            };
            if beats {
                best = Some((m, candidate));
            }
        }
        let (_, label) = best.ok_or_else(|| MetaEvalError::MissingClass {
            class: format!("any of {} candidates on neuron {neuron}", candidates.len()),
        })?;
        labels.push((neuron, label.clone()));
    }
    Ok(labels)
}

/// Runs the probe for every labeled neuron. A healthy scoring procedure
/// gives the true concept a near-ceiling rank score and leaves the random
/// distractor near chance.
pub fn sanity_check<A: ModelAdapter, P: EmbeddingProvider>(
    true_labels: &[(usize, String)],
    candidates: &[String],
    control: &ActivationStore,
    ctx: &EvalContext<'_, A, P>,
) -> Result<SanityReport, MetaEvalError> {
    if true_labels.is_empty() {
        return Err(MetaEvalError::EmptyImageSet { side: "true labels".to_string() });
    }
    let mut rows = Vec::with_capacity(true_labels.len());
    for (neuron_index, true_concept) in true_labels {
        let random_concept =
            random_distractor(ctx.global_seed, *neuron_index, candidates, true_concept)?;
        let true_synthetic = ctx.synthetic_store(true_concept, ctx.global_seed)?;
        let random_synthetic = ctx.synthetic_store(&random_concept, ctx.global_seed)?;
        let (true_auc, true_mad) =
            ctx.score_against_control(control, true_concept, *neuron_index, &true_synthetic)?;
        let (random_auc, random_mad) =
            ctx.score_against_control(control, &random_concept, *neuron_index, &random_synthetic)?;
        rows.push(SanityRow {
            neuron_index: *neuron_index,
            true_concept: true_concept.clone(),
            random_concept,
            true_auc,
            random_auc,
            true_mad,
            random_mad,
        });
    }
    let true_aucs: Vec<f64> = rows.iter().map(|r| r.true_auc).collect();
    let random_aucs: Vec<f64> = rows.iter().map(|r| r.random_auc).collect();
    Ok(SanityReport {
        true_auc_mean: mean(&true_aucs),
        true_auc_std: population_std(&true_aucs),
        random_auc_mean: mean(&random_aucs),
        random_auc_std: population_std(&random_aucs),
        rows,
    })
}
