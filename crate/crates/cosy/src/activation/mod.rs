//! Neuron activation collection behind a model-adapter interface.
//!
//! Adapters own preprocessing and expose per-layer feature maps; this module
//! pools each map over its spatial plane and records one row per image, so
//! scalar neurons (1x1 planes) and convolutional channels flow through the
//! same path.

mod store;
mod toy;

pub use store::{read_store, write_store, ActivationStore, RowProvenance};
pub use toy::ToyColorModel;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::imagegen::ImageBatch;

#[derive(Debug, thiserror::Error)]
pub enum ActivationError {
    #[error("neuron index {index} out of range for {count} neurons")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("layer {layer_id:?} unknown; adapter exposes {available:?}")]
    UnknownLayer { layer_id: String, available: Vec<String> },
    #[error("adapter failure{}: {detail}", image_index.map(|i| format!(" at image {i}")).unwrap_or_default())]
    AdapterFailure { image_index: Option<usize>, detail: String },
    #[error("non-finite activation at row {row}, neuron {neuron}")]
    NonFiniteActivation { row: usize, neuron: usize },
    #[error("cannot collect activations for an empty batch")]
    EmptyBatch,
    #[error("store version {found} unsupported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("store length mismatch: {detail}")]
    LengthMismatch { detail: String },
    #[error("corrupt store manifest: {detail}")]
    CorruptManifest { detail: String },
    #[error("store shape mismatch: {detail}")]
    ShapeMismatch { detail: String },
    #[error("i/o failure at {path:?}: {detail}")]
    Io { path: std::path::PathBuf, detail: String },
}

// ===== Feature maps and pooling =====

/// Activations of one image at one layer: `neurons` spatial planes of
/// `height x width` values. Scalar neurons use 1x1 planes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    neurons: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(neurons: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self, ActivationError> {
        if neurons == 0 || height == 0 || width == 0 {
            return Err(ActivationError::ShapeMismatch {
                detail: format!("degenerate feature map shape ({neurons}, {height}, {width})"),
            });
        }
        if data.len() != neurons * height * width {
            return Err(ActivationError::ShapeMismatch {
                detail: format!(
                    "feature map holds {} values, shape ({neurons}, {height}, {width}) needs {}",
                    data.len(),
                    neurons * height * width
                ),
            });
        }
        Ok(Self { neurons, height, width, data })
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// The spatial plane of one neuron, row-major.
    pub fn plane(&self, neuron_index: usize) -> Result<&[f64], ActivationError> {
        if neuron_index >= self.neurons {
            return Err(ActivationError::IndexOutOfRange { index: neuron_index, count: self.neurons });
        }
        let size = self.height * self.width;
        Ok(&self.data[neuron_index * size..(neuron_index + 1) * size])
    }
}

/// Average pooling over one neuron's spatial plane. Degenerates to the
/// identity for 1x1 maps.
pub fn pool_spatial(map: &FeatureMap, neuron_index: usize) -> Result<f64, ActivationError> {
    let plane = map.plane(neuron_index)?;
    Ok(plane.iter().sum::<f64>() / plane.len() as f64)
}

// ===== Adapters =====

/// Access to a model's internals. Implementations own their preprocessing
/// (each pretrained model has its own normalization) and must be
/// deterministic for fixed inputs.
pub trait ModelAdapter {
    type Input;

    fn model_id(&self) -> &str;
    fn list_layers(&self) -> Vec<String>;
    fn preprocess(&self, image: &RgbImage) -> Self::Input;

    /// Feature maps for a batch, one per input, all with identical shape.
    fn activations(&self, inputs: &[Self::Input], layer_id: &str) -> Result<Vec<FeatureMap>, ActivationError>;
}

/// Which side of the comparison a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    Control,
    Synthetic,
}

impl std::fmt::Display for SourceTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SourceTag::Control => write!(f, "control"),
            SourceTag::Synthetic => write!(f, "synthetic"),
        }
    }
}

/// Pooled activations of one neuron over a tagged image set.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    pub neuron_index: usize,
    pub values: Vec<f64>,
    pub source_tag: SourceTag,
    pub concept_text: Option<String>,
}

/// Runs a batch through an adapter layer and pools every neuron, producing
/// one provenance-tagged store row per image in batch order.
pub fn collect_activations<A: ModelAdapter>(
    adapter: &A,
    layer_id: &str,
    batch: &ImageBatch,
    source_tag: SourceTag,
    concept_text: Option<&str>,
) -> Result<ActivationStore, ActivationError> {
    if batch.is_empty() {
        return Err(ActivationError::EmptyBatch);
    }
    let available = adapter.list_layers();
    if !available.iter().any(|l| l == layer_id) {
        return Err(ActivationError::UnknownLayer { layer_id: layer_id.to_string(), available });
    }

    let inputs: Vec<A::Input> = batch.images.iter().map(|img| adapter.preprocess(img)).collect();
    let maps = adapter.activations(&inputs, layer_id)?;
    if maps.len() != batch.len() {
        return Err(ActivationError::AdapterFailure {
            image_index: None,
            detail: format!("adapter returned {} maps for {} images", maps.len(), batch.len()),
        });
    }
    let shape = (maps[0].neurons, maps[0].height, maps[0].width);
    let mut store = ActivationStore::new(adapter.model_id(), layer_id, shape.0);
    for (row, map) in maps.iter().enumerate() {
        if (map.neurons, map.height, map.width) != shape {
            return Err(ActivationError::AdapterFailure {
                image_index: Some(row),
                detail: format!(
                    "feature map shape {:?} differs from the batch shape {shape:?}",
                    (map.neurons, map.height, map.width)
                ),
            });
        }
        let mut values = Vec::with_capacity(shape.0);
        for neuron in 0..shape.0 {
            let pooled = pool_spatial(map, neuron)?;
            if !pooled.is_finite() {
                return Err(ActivationError::NonFiniteActivation { row, neuron });
            }
            values.push(pooled as f32);
        }
        let key = &batch.provenance[row];
        store.push_row(
            &values,
            RowProvenance {
                source: source_tag,
                concept_text: concept_text.map(str::to_string),
                image_ref: key.reference(),
                seed: Some(key.seed),
            },
        )?;
    }
    Ok(store)
}
