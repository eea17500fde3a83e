//! Shared plumbing for the meta-evaluation probes: one struct that can turn
//! a concept into images, images into activations, and activations into
//! scores, with every knob pinned.

use std::path::Path;

use crate::activation::{collect_activations, ActivationStore, ModelAdapter, SourceTag};
use crate::imagegen::{generate_images, GenerationBackend, GenerationSpec, ImageBatch, PromptTemplate};
use crate::scoring::{auc_score, mad_score, TiePolicy};

use super::embedding::EmbeddingProvider;
use super::MetaEvalError;

/// Everything a probe needs to produce and score synthetic evidence.
pub struct EvalContext<'a, A: ModelAdapter, P: EmbeddingProvider> {
    pub backend: &'a dyn GenerationBackend,
    pub cache_root: &'a Path,
    pub adapter: &'a A,
    pub embedder: &'a P,
    pub layer_id: String,
    pub template: PromptTemplate,
    pub images_per_concept: u32,
    pub tie_policy: TiePolicy,
    pub global_seed: u64,
}

impl<A: ModelAdapter, P: EmbeddingProvider> EvalContext<'_, A, P> {
    /// Generates (or loads from cache) this context's image batch for one
    /// concept under an explicit seed.
    pub fn generate(&self, concept_text: &str, seed: u64) -> Result<ImageBatch, MetaEvalError> {
        let spec = GenerationSpec {
            concept_text: concept_text.to_string(),
            template: self.template.clone(),
            count: self.images_per_concept,
            seed,
            backend_id: self.backend.backend_id().to_string(),
        };
        Ok(generate_images(&spec, self.backend, self.cache_root)?)
    }

    /// Pools the batch through this context's adapter layer.
    pub fn collect(
        &self,
        batch: &ImageBatch,
        source_tag: SourceTag,
        concept_text: &str,
    ) -> Result<ActivationStore, MetaEvalError> {
        Ok(collect_activations(self.adapter, &self.layer_id, batch, source_tag, Some(concept_text))?)
    }

    /// Generate-and-collect for one concept's synthetic evidence.
    pub fn synthetic_store(&self, concept_text: &str, seed: u64) -> Result<ActivationStore, MetaEvalError> {
        let batch = self.generate(concept_text, seed)?;
        self.collect(&batch, SourceTag::Synthetic, concept_text)
    }

    /// Builds a control store by generating every listed concept at the
    /// global seed and tagging its rows with the concept.
    pub fn control_store(&self, concepts: &[String]) -> Result<ActivationStore, MetaEvalError> {
        let mut merged: Option<ActivationStore> = None;
        for concept in concepts {
            let batch = self.generate(concept, self.global_seed)?;
            let store = self.collect(&batch, SourceTag::Control, concept)?;
            match merged.as_mut() {
                Some(m) => m.merge(&store)?,
                None => merged = Some(store),
            }
        }
        merged.ok_or(MetaEvalError::EmptyImageSet { side: "control".to_string() })
    }

    /// Scores one neuron's synthetic evidence for `concept_text` against the
    /// control store, returning (rank score, mean difference).
    ///
    /// Control rows tagged with the scored concept are excluded: when the
    /// control set itself contains that class, leaving those rows in A0
    /// would cap the achievable rank score below 1 for a correct label.
    /// Untagged rows always stay.
    pub fn score_against_control(
        &self,
        control: &ActivationStore,
        concept_text: &str,
        neuron_index: usize,
        synthetic: &ActivationStore,
    ) -> Result<(f64, f64), MetaEvalError> {
        let a0 = control
            .column_where(neuron_index, |prov| prov.concept_text.as_deref() != Some(concept_text))?;
        let a1 = synthetic.column(neuron_index)?;
        let auc = auc_score(&a0, &a1, self.tie_policy)?;
        let mad = mad_score(&a0, &a1)?;
        Ok((auc, mad))
    }

    /// Embeds every image in the batch, in batch order.
    pub fn embed_batch(&self, batch: &ImageBatch) -> Vec<Vec<f64>> {
        batch.images.iter().map(|img| self.embedder.embed(img)).collect()
    }
}
