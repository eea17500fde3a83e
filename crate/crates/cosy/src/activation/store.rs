//! Persisted activation matrices: `manifest.json` plus `activations.bin`.
//!
//! The matrix is row-major 32-bit little-endian floats, rows = images,
//! columns = neurons. Round-trips are bit-exact; every row carries the
//! provenance needed to reconstruct which image produced it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActivationError, ActivationSet, SourceTag};

const STORE_VERSION: u32 = 1;
const DTYPE: &str = "f32le";

/// Where one matrix row came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowProvenance {
    pub source: SourceTag,
    pub concept_text: Option<String>,
    pub image_ref: String,
    pub seed: Option<u64>,
}

/// In-memory images-by-neurons activation matrix with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStore {
    model_id: String,
    layer_id: String,
    neuron_count: usize,
    rows: Vec<RowProvenance>,
    data: Vec<f32>,
}

#[derive(Serialize, Deserialize)]
struct ManifestFile {
    version: u32,
    model_id: String,
    layer_id: String,
    neuron_count: usize,
    row_count: usize,
    dtype: String,
    rows: Vec<RowProvenance>,
}

impl ActivationStore {
    pub fn new(model_id: &str, layer_id: &str, neuron_count: usize) -> Self {
        Self {
            model_id: model_id.to_string(),
            layer_id: layer_id.to_string(),
            neuron_count,
            rows: Vec::new(),
            data: Vec::new(),
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn layer_id(&self) -> &str {
        &self.layer_id
    }

    pub fn neuron_count(&self) -> usize {
        self.neuron_count
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[RowProvenance] {
        &self.rows
    }

    pub fn push_row(&mut self, values: &[f32], provenance: RowProvenance) -> Result<(), ActivationError> {
        if values.len() != self.neuron_count {
            return Err(ActivationError::ShapeMismatch {
                detail: format!("row of {} values pushed into a {}-neuron store", values.len(), self.neuron_count),
            });
        }
        self.data.extend_from_slice(values);
        self.rows.push(provenance);
        Ok(())
    }

    pub fn value(&self, row: usize, neuron: usize) -> f32 {
        self.data[row * self.neuron_count + neuron]
    }

    /// One neuron's column, widened losslessly to f64 for scoring.
    pub fn column(&self, neuron: usize) -> Result<Vec<f64>, ActivationError> {
        self.column_where(neuron, |_| true)
    }

    /// One neuron's column restricted to rows whose provenance passes the
    /// predicate, in row order.
    pub fn column_where(
        &self,
        neuron: usize,
        predicate: impl Fn(&RowProvenance) -> bool,
    ) -> Result<Vec<f64>, ActivationError> {
        if neuron >= self.neuron_count {
            return Err(ActivationError::IndexOutOfRange { index: neuron, count: self.neuron_count });
        }
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(_, prov)| predicate(prov))
            .map(|(r, _)| f64::from(self.value(r, neuron)))
            .collect())
    }

    /// Extracts one neuron's values over rows with the given tag (and
    /// concept, when given) as a typed activation set.
    pub fn activation_set(
        &self,
        neuron: usize,
        source_tag: SourceTag,
        concept_text: Option<&str>,
    ) -> Result<ActivationSet, ActivationError> {
        let values = self.column_where(neuron, |prov| {
            prov.source == source_tag
                && concept_text.is_none_or(|c| prov.concept_text.as_deref() == Some(c))
        })?;
        Ok(ActivationSet {
            neuron_index: neuron,
            values,
            source_tag,
            concept_text: concept_text.map(str::to_string),
        })
    }

    /// Appends all rows of `other`; both stores must describe the same
    /// model, layer, and neuron count.
    pub fn merge(&mut self, other: &ActivationStore) -> Result<(), ActivationError> {
        if (self.model_id.as_str(), self.layer_id.as_str(), self.neuron_count)
            != (other.model_id.as_str(), other.layer_id.as_str(), other.neuron_count)
        {
            return Err(ActivationError::ShapeMismatch {
                detail: format!(
                    "cannot merge ({}, {}, {}) into ({}, {}, {})",
                    other.model_id, other.layer_id, other.neuron_count,
                    self.model_id, self.layer_id, self.neuron_count
                ),
            });
        }
        self.data.extend_from_slice(&other.data);
        self.rows.extend_from_slice(&other.rows);
        Ok(())
    }

    /// A new store holding only the rows whose provenance passes the
    /// predicate, in the original order.
    pub fn filter_rows(&self, predicate: impl Fn(&RowProvenance) -> bool) -> ActivationStore {
        let mut filtered = ActivationStore::new(&self.model_id, &self.layer_id, self.neuron_count);
        for (r, prov) in self.rows.iter().enumerate() {
            if predicate(prov) {
                let start = r * self.neuron_count;
                filtered.data.extend_from_slice(&self.data[start..start + self.neuron_count]);
                filtered.rows.push(prov.clone());
            }
        }
        filtered
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ActivationError {
    ActivationError::Io { path: path.to_path_buf(), detail: e.to_string() }
}

/// Writes `manifest.json` and `activations.bin` under `dir`.
pub fn write_store(store: &ActivationStore, dir: &Path) -> Result<(), ActivationError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let manifest = ManifestFile {
        version: STORE_VERSION,
        model_id: store.model_id.clone(),
        layer_id: store.layer_id.clone(),
        neuron_count: store.neuron_count,
        row_count: store.rows.len(),
        dtype: DTYPE.to_string(),
        rows: store.rows.clone(),
    };
    let manifest_path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serialization cannot fail");
    std::fs::write(&manifest_path, json).map_err(|e| io_err(&manifest_path, e))?;

    let mut bytes = Vec::with_capacity(store.data.len() * 4);
    for v in &store.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let bin_path = dir.join("activations.bin");
    std::fs::write(&bin_path, bytes).map_err(|e| io_err(&bin_path, e))?;
    Ok(())
}

/// Reads a store directory, cross-checking version, dtype, and lengths.
pub fn read_store(dir: &Path) -> Result<ActivationStore, ActivationError> {
    let manifest_path = dir.join("manifest.json");
    let manifest_bytes = std::fs::read(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    let manifest: ManifestFile = serde_json::from_slice(&manifest_bytes)
        .map_err(|e| ActivationError::CorruptManifest { detail: e.to_string() })?;
    if manifest.version != STORE_VERSION {
        return Err(ActivationError::VersionMismatch { found: manifest.version, expected: STORE_VERSION });
    }
    if manifest.dtype != DTYPE {
        return Err(ActivationError::CorruptManifest {
            detail: format!("dtype {:?} unsupported (expected {DTYPE:?})", manifest.dtype),
        });
    }
    if manifest.rows.len() != manifest.row_count {
        return Err(ActivationError::LengthMismatch {
            detail: format!(
                "manifest declares {} rows but lists provenance for {}",
                manifest.row_count,
                manifest.rows.len()
            ),
        });
    }

    let bin_path = dir.join("activations.bin");
    let bytes = std::fs::read(&bin_path).map_err(|e| io_err(&bin_path, e))?;
    let expected = manifest.row_count * manifest.neuron_count * 4;
    if bytes.len() != expected {
        return Err(ActivationError::LengthMismatch {
            detail: format!(
                "activations.bin holds {} bytes, manifest shape {}x{} needs {expected}",
                bytes.len(),
                manifest.row_count,
                manifest.neuron_count
            ),
        });
    }
    let data = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(ActivationStore {
        model_id: manifest.model_id,
        layer_id: manifest.layer_id,
        neuron_count: manifest.neuron_count,
        rows: manifest.rows,
        data,
    })
}
