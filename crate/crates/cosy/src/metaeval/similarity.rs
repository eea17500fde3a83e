//! Pairwise similarity summaries over image sets in embedding space.

use serde::{Deserialize, Serialize};

use crate::imagegen::ImageBatch;
use crate::stats::{mean, population_std};

use super::embedding::{cosine_similarity, euclidean_distance, EmbeddingProvider};
use super::MetaEvalError;

/// Moments of cosine similarity and euclidean distance over a pair set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub cs_mean: f64,
    pub cs_std: f64,
    pub ed_mean: f64,
    pub ed_std: f64,
    pub pair_count: usize,
}

fn summarize(cs: Vec<f64>, ed: Vec<f64>) -> SimilarityStats {
    SimilarityStats {
        cs_mean: mean(&cs),
        cs_std: population_std(&cs),
        ed_mean: mean(&ed),
        ed_std: population_std(&ed),
        pair_count: cs.len(),
    }
}

/// Embeds every image of a batch, in batch order.
pub fn embed_all<P: EmbeddingProvider>(batch: &ImageBatch, provider: &P) -> Vec<Vec<f64>> {
    batch.images.iter().map(|img| provider.embed(img)).collect()
}

/// Similarity over every cross pair (a, b) with `a` from one set and `b`
/// from the other. Both sets must be non-empty.
pub fn cross_set_similarity<P: EmbeddingProvider>(
    natural: &ImageBatch,
    synthetic: &ImageBatch,
    provider: &P,
) -> Result<SimilarityStats, MetaEvalError> {
    cross_set_stats(&embed_all(natural, provider), &embed_all(synthetic, provider))
}

/// Similarity over every unordered pair within one set. Low cosine mean
/// (high distance mean) reads as a visually diverse set.
pub fn intraclass_similarity<P: EmbeddingProvider>(
    images: &ImageBatch,
    provider: &P,
) -> Result<SimilarityStats, MetaEvalError> {
    intraclass_stats(&embed_all(images, provider))
}

/// [`cross_set_similarity`] on pre-computed embeddings.
pub fn cross_set_stats(
    left: &[Vec<f64>],
    right: &[Vec<f64>],
) -> Result<SimilarityStats, MetaEvalError> {
    for (side, set) in [("left", left), ("right", right)] {
        if set.is_empty() {
            return Err(MetaEvalError::EmptyImageSet { side: side.to_string() });
        }
    }
    let mut cs = Vec::with_capacity(left.len() * right.len());
    let mut ed = Vec::with_capacity(left.len() * right.len());
    for a in left {
        for b in right {
            cs.push(cosine_similarity(a, b)?);
            ed.push(euclidean_distance(a, b)?);
        }
    }
    Ok(summarize(cs, ed))
}

/// [`intraclass_similarity`] on pre-computed embeddings.
pub fn intraclass_stats(set: &[Vec<f64>]) -> Result<SimilarityStats, MetaEvalError> {
    if set.len() < 2 {
        return Err(MetaEvalError::NotEnoughImages { count: set.len() });
    }
    let mut cs = Vec::with_capacity(set.len() * (set.len() - 1) / 2);
    let mut ed = Vec::with_capacity(cs.capacity());
    for i in 0..set.len() {
        for j in i + 1..set.len() {
            cs.push(cosine_similarity(&set[i], &set[j])?);
            ed.push(euclidean_distance(&set[i], &set[j])?);
        }
    }
    Ok(summarize(cs, ed))
}
