//! Stability probe: the same concept generated under different seeds must
//! keep its rank score, and each seed's image set must stay equally
//! self-similar.

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationStore, ModelAdapter, SourceTag};
use crate::stats::{mean, population_std};

use super::context::EvalContext;
use super::embedding::EmbeddingProvider;
use super::similarity::intraclass_stats;
use super::MetaEvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub concept: String,
    pub neuron_index: usize,
    pub seeds: Vec<u64>,
    pub auc_per_seed: Vec<f64>,
    pub auc_mean: f64,
    pub auc_std: f64,
    /// Per-seed intraclass cosine means, aligned with `seeds`.
    pub cs_per_seed: Vec<f64>,
    pub cs_mean: f64,
    pub cs_std: f64,
    /// Per-seed intraclass distance means, aligned with `seeds`.
    pub ed_per_seed: Vec<f64>,
    pub ed_mean: f64,
    pub ed_std: f64,
}

/// Re-generates and re-scores `concept` once per seed, and measures each
/// seed's image set's intraclass similarity. The report gives first and
/// second moments over seeds for all three series.
pub fn seed_stability<A: ModelAdapter, P: EmbeddingProvider>(
    concept: &str,
    neuron_index: usize,
    seeds: &[u64],
    control: &ActivationStore,
    ctx: &EvalContext<'_, A, P>,
) -> Result<StabilityReport, MetaEvalError> {
    if seeds.len() < 2 {
        return Err(MetaEvalError::NotEnoughSeeds { count: seeds.len() });
    }
    let mut auc_per_seed = Vec::with_capacity(seeds.len());
    let mut cs_per_seed = Vec::with_capacity(seeds.len());
    let mut ed_per_seed = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let batch = ctx.generate(concept, seed)?;
        let store = ctx.collect(&batch, SourceTag::Synthetic, concept)?;
        let (auc, _mad) = ctx.score_against_control(control, concept, neuron_index, &store)?;
        auc_per_seed.push(auc);
        let stats = intraclass_stats(&ctx.embed_batch(&batch))?;
        cs_per_seed.push(stats.cs_mean);
        ed_per_seed.push(stats.ed_mean);
    }

    Ok(StabilityReport {
        concept: concept.to_string(),
        neuron_index,
        seeds: seeds.to_vec(),
        auc_mean: mean(&auc_per_seed),
        auc_std: population_std(&auc_per_seed),
        auc_per_seed,
        cs_mean: mean(&cs_per_seed),
        cs_std: population_std(&cs_per_seed),
        cs_per_seed,
        ed_mean: mean(&ed_per_seed),
        ed_std: population_std(&ed_per_seed),
        ed_per_seed,
    })
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use tempfile::TempDir;

    use crate::activation::ToyColorModel;
    use crate::imagegen::{MockBackend, PromptTemplate};
    use crate::metaeval::MockEmbedder;
    use crate::scoring::TiePolicy;

    use super::*;

    fn context<'a>(
        cache: &'a Path,
        adapter: &'a ToyColorModel,
        embedder: &'a MockEmbedder,
    ) -> EvalContext<'a, ToyColorModel, MockEmbedder> {
        EvalContext {
            backend: &MockBackend,
            cache_root: cache,
            adapter,
            embedder,
            layer_id: "color".to_string(),
            template: PromptTemplate::builtin(5).unwrap(),
            images_per_concept: 5,
            tie_policy: TiePolicy::Strict,
            global_seed: 3,
        }
    }

    #[test]
    fn stable_mock_concept_scores_identically_across_seeds() {
        let tmp = TempDir::new().unwrap();
        let adapter = ToyColorModel;
        let embedder = MockEmbedder;
        let ctx = context(tmp.path(), &adapter, &embedder);
        let control = ctx.control_store(&["rope".to_string(), "lagoon".to_string()]).unwrap();
        let report = seed_stability("rope", 0, &[10, 11, 12], &control, &ctx).unwrap();

        assert_eq!(report.auc_per_seed, vec![1.0, 1.0, 1.0]);
        assert_eq!(report.auc_mean, 1.0);
        assert_eq!(report.auc_std, 0.0);
        assert_eq!(report.seeds, vec![10, 11, 12]);
        // Mock noise is a few byte levels around a fixed base color, so
        // every seed's set is nearly self-parallel in embedding space.
        assert_eq!(report.cs_per_seed.len(), 3);
        assert!(report.cs_mean > 0.999, "cs_mean = {}", report.cs_mean);
        assert!(report.cs_std < 0.01);
        assert!(report.ed_mean < 0.1);
    }

    #[test]
    fn one_seed_is_not_enough() {
        let tmp = TempDir::new().unwrap();
        let adapter = ToyColorModel;
        let embedder = MockEmbedder;
        let ctx = context(tmp.path(), &adapter, &embedder);
        let control = ctx.control_store(&["rope".to_string(), "lagoon".to_string()]).unwrap();
        assert!(matches!(
            seed_stability("rope", 0, &[1], &control, &ctx),
            Err(MetaEvalError::NotEnoughSeeds { count: 1 })
        ));
    }
}
