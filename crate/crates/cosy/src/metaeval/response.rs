//! Response probe: for neurons with known class selectivity, synthetic
//! images of the class must move the neuron the way held-out natural images
//! of the class do.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activation::{collect_activations, ModelAdapter, SourceTag};
use crate::imagegen::ImageBatch;
use crate::stats::{mean, population_std};

use super::MetaEvalError;

/// Distribution summary of one class neuron under both image sources. The
/// raw value lists ride along so histograms can be rendered downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub class_label: String,
    pub neuron_index: usize,
    pub natural_mean: f64,
    pub natural_std: f64,
    pub natural_values: Vec<f64>,
    pub synthetic_mean: f64,
    pub synthetic_std: f64,
    pub synthetic_values: Vec<f64>,
    /// Synthetic mean minus natural mean, in activation units.
    pub mad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseReport {
    pub model_id: String,
    pub layer_id: String,
    pub rows: Vec<ResponseRow>,
}

/// Compares each mapped class neuron's activation distribution under
/// natural versus synthetic images of that class. Both maps must supply a
/// non-empty batch per mapped class.
pub fn natural_vs_synthetic_response<A: ModelAdapter>(
    adapter: &A,
    layer_id: &str,
    class_neuron_map: &[(String, usize)],
    natural: &BTreeMap<String, ImageBatch>,
    synthetic: &BTreeMap<String, ImageBatch>,
) -> Result<ResponseReport, MetaEvalError> {
    if class_neuron_map.is_empty() {
        return Err(MetaEvalError::EmptyImageSet { side: "class map".to_string() });
    }
    let mut rows = Vec::with_capacity(class_neuron_map.len());
    for (class_label, neuron_index) in class_neuron_map {
        let lookup = |map: &BTreeMap<String, ImageBatch>| -> Result<ImageBatch, MetaEvalError> {
            map.get(class_label)
                .cloned()
                .ok_or_else(|| MetaEvalError::MissingClass { class: class_label.clone() })
        };
        let natural_batch = lookup(natural)?;
        let synthetic_batch = lookup(synthetic)?;

        let natural_store = collect_activations(
            adapter,
            layer_id,
            &natural_batch,
            SourceTag::Control,
            Some(class_label),
        )?;
        let synthetic_store = collect_activations(
            adapter,
            layer_id,
            &synthetic_batch,
            SourceTag::Synthetic,
            Some(class_label),
        )?;
        let natural_values = natural_store.column(*neuron_index)?;
        let synthetic_values = synthetic_store.column(*neuron_index)?;
        let natural_mean = mean(&natural_values);
        let synthetic_mean = mean(&synthetic_values);
        rows.push(ResponseRow {
            class_label: class_label.clone(),
            neuron_index: *neuron_index,
            natural_mean,
            natural_std: population_std(&natural_values),
            natural_values,
            synthetic_mean,
            synthetic_std: population_std(&synthetic_values),
            synthetic_values,
            mad: synthetic_mean - natural_mean,
        });
    }
    Ok(ResponseReport {
        model_id: adapter.model_id().to_string(),
        layer_id: layer_id.to_string(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use image::RgbImage;

    use crate::activation::ToyColorModel;
    use crate::imagegen::{CacheKey, GenerationSpec, PromptTemplate};

    use super::*;

    fn batch_of(images: Vec<RgbImage>, concept: &str, seed: u64) -> ImageBatch {
        let spec = GenerationSpec {
            concept_text: concept.to_string(),
            template: PromptTemplate::builtin(1).unwrap(),
            count: images.len() as u32,
            seed,
            backend_id: "mock".to_string(),
        };
        let provenance = (0..images.len() as u32).map(|i| CacheKey::new(&spec, i)).collect();
        ImageBatch { images, provenance }
    }

    fn solid_batch(r: u8, g: u8, b: u8, count: usize, concept: &str) -> ImageBatch {
        let images =
            (0..count).map(|_| RgbImage::from_pixel(8, 8, image::Rgb([r, g, b]))).collect();
        batch_of(images, concept, 0)
    }

    #[test]
    fn matched_sources_give_near_zero_mad() {
        let natural = BTreeMap::from([("red".to_string(), solid_batch(200, 10, 10, 3, "red"))]);
        let synthetic = BTreeMap::from([("red".to_string(), solid_batch(200, 10, 10, 4, "red"))]);
        let report = natural_vs_synthetic_response(
            &ToyColorModel,
            "color",
            &[("red".to_string(), 0)],
            &natural,
            &synthetic,
        )
        .unwrap();
        assert_eq!(report.rows.len(), 1);
        let row = &report.rows[0];
        // Export row counts equal input image counts.
        assert_eq!((row.natural_values.len(), row.synthetic_values.len()), (3, 4));
        assert!(row.mad.abs() < 1e-12);
        // Stores hold f32 rows, so the comparison is at f32 precision.
        assert!((row.natural_mean - 200.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn shifted_synthetic_source_shows_up_in_mad() {
        let natural = BTreeMap::from([("red".to_string(), solid_batch(200, 0, 0, 3, "red"))]);
        let synthetic = BTreeMap::from([("red".to_string(), solid_batch(100, 0, 0, 3, "red"))]);
        let report = natural_vs_synthetic_response(
            &ToyColorModel,
            "color",
            &[("red".to_string(), 0)],
            &natural,
            &synthetic,
        )
        .unwrap();
        assert!((report.rows[0].mad - (100.0 - 200.0) / 255.0).abs() < 1e-6);
    }

    #[test]
    fn missing_class_batch_is_an_error() {
        let natural = BTreeMap::from([("red".to_string(), solid_batch(1, 2, 3, 2, "red"))]);
        let synthetic = BTreeMap::new();
        let result = natural_vs_synthetic_response(
            &ToyColorModel,
            "color",
            &[("red".to_string(), 0)],
            &natural,
            &synthetic,
        );
        assert!(matches!(result, Err(MetaEvalError::MissingClass { class }) if class == "red"));
    }
}
