//! Image embeddings and the two vector measures the meta-evaluation uses.

use image::RgbImage;

use super::MetaEvalError;

/// Maps images into a fixed-dimensional vector space where visually similar
/// images land close together.
pub trait EmbeddingProvider {
    fn embedding_id(&self) -> &str;
    fn dimension(&self) -> usize;
    fn embed(&self, image: &RgbImage) -> Vec<f64>;
}

/// Hand-rolled 8-dimensional embedding: per-channel means, luminance mean,
/// per-channel variances, luminance variance, all over [0, 1] pixel values.
/// Means separate hues; variances separate flat color fields from textured
/// ones, which is what the diversity probes need.
#[derive(Debug, Default, Clone, Copy)]
pub struct MockEmbedder;

impl EmbeddingProvider for MockEmbedder {
    fn embedding_id(&self) -> &str {
        "mock-moments-8"
    }

    fn dimension(&self) -> usize {
        8
    }

    fn embed(&self, image: &RgbImage) -> Vec<f64> {
        let n = (image.width() * image.height()) as f64;
        let mut sum = [0.0f64; 4]; // r, g, b, luminance
        let mut sum_sq = [0.0f64; 4];
        for px in image.pixels() {
            let r = f64::from(px.0[0]) / 255.0;
            let g = f64::from(px.0[1]) / 255.0;
            let b = f64::from(px.0[2]) / 255.0;
            let lum = (r + g + b) / 3.0;
            for (i, v) in [r, g, b, lum].into_iter().enumerate() {
                sum[i] += v;
                sum_sq[i] += v * v;
            }
        }
        let mean = sum.map(|s| s / n);
        // Population variance; clamped because the difference of squares can
        // dip a hair below zero on constant channels.
        let var: Vec<f64> = (0..4).map(|i| (sum_sq[i] / n - mean[i] * mean[i]).max(0.0)).collect();
        vec![mean[0], mean[1], mean[2], mean[3], var[0], var[1], var[2], var[3]]
    }
}

fn check_dims(a: &[f64], b: &[f64]) -> Result<(), MetaEvalError> {
    if a.len() != b.len() || a.is_empty() {
        return Err(MetaEvalError::DimensionMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// Cosine of the angle between two embeddings, in [-1, 1].
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, MetaEvalError> {
    check_dims(a, b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm_a: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let norm_b: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(MetaEvalError::ZeroVector);
    }
    // Rounding can push the ratio epsilon past the unit interval.
    Ok((dot / (norm_a * norm_b)).clamp(-1.0, 1.0))
}

/// Straight-line distance between two embeddings.
pub fn euclidean_distance(a: &[f64], b: &[f64]) -> Result<f64, MetaEvalError> {
    check_dims(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}
