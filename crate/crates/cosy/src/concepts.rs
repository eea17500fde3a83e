//! Explanation records, labeled concept data, taxonomies, and run
//! configuration: the on-disk formats every other module consumes.
//!
//! Ingestion is strict. Anything structurally surprising (an unknown config
//! key, a non-binary label cell, a duplicate record key) is an error naming
//! the offending location, because silently patched inputs would make
//! evaluation numbers incomparable across runs.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;
use crate::imagegen::PromptTemplate;
use crate::scoring::TiePolicy;

#[derive(Debug, thiserror::Error)]
pub enum ConceptsError {
    #[error("line {line}: malformed row: {detail}")]
    MalformedRow { line: u64, detail: String },
    #[error("line {line}: duplicate key ({method_id}, {layer_id}, {neuron_index})")]
    DuplicateKey { line: u64, method_id: String, layer_id: String, neuron_index: usize },
    #[error("line {line}: empty explanation text")]
    EmptyExplanation { line: u64 },
    #[error("line {line}: non-binary cell {value:?} in concept column {concept:?}")]
    NonBinaryCell { line: u64, concept: String, value: String },
    #[error("concept column {concept:?} is constant; scores over it are undefined")]
    ConstantConceptColumn { concept: String },
    #[error("dataset has no usable rows or concept columns")]
    EmptyDataset,
    #[error("config key {key:?} is missing")]
    MissingKey { key: String },
    #[error("config key {key:?} is invalid: {detail}")]
    InvalidValue { key: String, detail: String },
    #[error("unknown config key {key:?}")]
    UnknownKey { key: String },
    #[error("config is not a JSON object: {detail}")]
    MalformedJson { detail: String },
    #[error("taxonomy entry {concept:?} is invalid: {detail}")]
    InvalidTaxonomy { concept: String, detail: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
}

// ===== Explanation records =====

/// One (method, layer, neuron, text) claim to be scored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub method_id: String,
    pub layer_id: String,
    pub neuron_index: usize,
    pub text: String,
}

const EXPLANATION_HEADER: [&str; 4] = ["method", "layer", "neuron", "explanation"];

/// Reads an explanations CSV (header `method,layer,neuron,explanation`,
/// RFC 4180 quoting) in file order.
pub fn ingest_explanations(path: &Path) -> Result<Vec<ExplanationRecord>, ConceptsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != EXPLANATION_HEADER {
        return Err(ConceptsError::MalformedRow {
            line: 1,
            detail: format!(
                "expected header {:?}, found {:?}",
                EXPLANATION_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != 4 {
            return Err(ConceptsError::MalformedRow {
                line,
                detail: format!("expected 4 fields, found {}", row.len()),
            });
        }
        let neuron_index: usize = row[2].trim().parse().map_err(|_| ConceptsError::MalformedRow {
            line,
            detail: format!("neuron index {:?} is not a non-negative integer", &row[2]),
        })?;
        let text = row[3].to_string();
        if text.trim().is_empty() {
            return Err(ConceptsError::EmptyExplanation { line });
        }
        let record = ExplanationRecord {
            method_id: row[0].to_string(),
            layer_id: row[1].to_string(),
            neuron_index,
            text,
        };
        let key = (record.method_id.clone(), record.layer_id.clone(), record.neuron_index);
        if !seen.insert(key) {
            return Err(ConceptsError::DuplicateKey {
                line,
                method_id: record.method_id,
                layer_id: record.layer_id,
                neuron_index,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Writes records in the same CSV format `ingest_explanations` reads.
pub fn write_explanations(records: &[ExplanationRecord], path: &Path) -> Result<(), ConceptsError> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(EXPLANATION_HEADER)?;
    for r in records {
        writer.write_record([
            r.method_id.as_str(),
            r.layer_id.as_str(),
            &r.neuron_index.to_string(),
            r.text.as_str(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

// ===== Concept datasets =====

/// Binary image-by-concept label matrix with its row and column names.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptDataset {
    pub concept_names: Vec<String>,
    pub image_refs: Vec<String>,
    labels: Vec<bool>, // row-major, rows = images
}

impl ConceptDataset {
    /// Builds a dataset, enforcing shape and the mixed-column invariant
    /// (a constant concept column makes rank scores over it undefined).
    pub fn new(
        concept_names: Vec<String>,
        image_refs: Vec<String>,
        labels: Vec<bool>,
    ) -> Result<Self, ConceptsError> {
        if concept_names.is_empty() || image_refs.is_empty() {
            return Err(ConceptsError::EmptyDataset);
        }
        if labels.len() != concept_names.len() * image_refs.len() {
            return Err(ConceptsError::MalformedRow {
                line: 0,
                detail: format!(
                    "label matrix has {} entries, expected {}x{}",
                    labels.len(),
                    image_refs.len(),
                    concept_names.len()
                ),
            });
        }
        let dataset = Self { concept_names, image_refs, labels };
        for (c, name) in dataset.concept_names.iter().enumerate() {
            let mut ones = false;
            let mut zeros = false;
            for r in 0..dataset.image_refs.len() {
                if dataset.label(r, c) {
                    ones = true;
                } else {
                    zeros = true;
                }
            }
            if !(ones && zeros) {
                return Err(ConceptsError::ConstantConceptColumn { concept: name.clone() });
            }
        }
        Ok(dataset)
    }

    pub fn n_images(&self) -> usize {
        self.image_refs.len()
    }

    pub fn n_concepts(&self) -> usize {
        self.concept_names.len()
    }

    pub fn label(&self, image: usize, concept: usize) -> bool {
        self.labels[image * self.concept_names.len() + concept]
    }

    pub fn column(&self, concept: usize) -> Vec<bool> {
        (0..self.n_images()).map(|r| self.label(r, concept)).collect()
    }
}

/// Reads a concept-label CSV (header `image_ref,<concept1>,...`; cells 0/1).
pub fn ingest_concept_dataset(path: &Path) -> Result<ConceptDataset, ConceptsError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || &headers[0] != "image_ref" {
        return Err(ConceptsError::MalformedRow {
            line: 1,
            detail: "expected header `image_ref,<concept1>,...` with at least one concept".into(),
        });
    }
    let concept_names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    {
        let mut unique = BTreeSet::new();
        for name in &concept_names {
            if name.trim().is_empty() || !unique.insert(name) {
                return Err(ConceptsError::MalformedRow {
                    line: 1,
                    detail: format!("concept column name {name:?} is empty or repeated"),
                });
            }
        }
    }
    let mut image_refs = Vec::new();
    let mut labels = Vec::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != headers.len() {
            return Err(ConceptsError::MalformedRow {
                line,
                detail: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
        }
        image_refs.push(row[0].to_string());
        for (c, cell) in row.iter().skip(1).enumerate() {
            match cell.trim() {
                "0" => labels.push(false),
                "1" => labels.push(true),
                other => {
                    return Err(ConceptsError::NonBinaryCell {
                        line,
                        concept: concept_names[c].clone(),
                        value: other.to_string(),
                    })
                }
            }
        }
    }
    if image_refs.is_empty() {
        return Err(ConceptsError::EmptyDataset);
    }
    ConceptDataset::new(concept_names, image_refs, labels)
}

// ===== Taxonomies =====

/// A concept with its hypernym chain, most specific parent first, root last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyChain {
    pub concept: String,
    pub hypernyms: Vec<String>,
}

impl TaxonomyChain {
    pub fn new(concept: String, hypernyms: Vec<String>) -> Result<Self, ConceptsError> {
        let invalid = |detail: &str| ConceptsError::InvalidTaxonomy {
            concept: concept.clone(),
            detail: detail.to_string(),
        };
        if concept.trim().is_empty() {
            return Err(invalid("empty concept name"));
        }
        let mut seen = BTreeSet::new();
        seen.insert(concept.as_str());
        for h in &hypernyms {
            if h.trim().is_empty() {
                return Err(invalid("empty hypernym name"));
            }
            if !seen.insert(h.as_str()) {
                return Err(invalid(&format!("duplicate entry {h:?}")));
            }
        }
        Ok(Self { concept, hypernyms })
    }

    /// Levels from root down to the concept, with 1-based inclusive depth.
    /// The root counts 1; the concept itself counts the full chain length,
    /// so more specific levels carry larger counts.
    pub fn levels_from_root(&self) -> Vec<(String, usize)> {
        let mut names: Vec<&String> = self.hypernyms.iter().rev().collect();
        names.push(&self.concept);
        names.into_iter().enumerate().map(|(i, n)| (n.clone(), i + 1)).collect()
    }
}

/// Reads a taxonomy JSON file `{"concept": ["parent1", ..., "root"]}`.
/// Chains are returned sorted by concept name.
pub fn load_taxonomy(path: &Path) -> Result<Vec<TaxonomyChain>, ConceptsError> {
    let bytes = std::fs::read(path)?;
    let value: serde_json::Value = serde_json::from_slice(&bytes)
        .map_err(|e| ConceptsError::MalformedJson { detail: e.to_string() })?;
    let map = value.as_object().ok_or_else(|| ConceptsError::MalformedJson {
        detail: "taxonomy root must be a JSON object".into(),
    })?;
    let mut chains = Vec::new();
    for (concept, parents) in map {
        let list = parents.as_array().ok_or_else(|| ConceptsError::InvalidTaxonomy {
            concept: concept.clone(),
            detail: "hypernym list must be a JSON array of strings".into(),
        })?;
        let mut hypernyms = Vec::new();
        for p in list {
            let s = p.as_str().ok_or_else(|| ConceptsError::InvalidTaxonomy {
                concept: concept.clone(),
                detail: format!("non-string hypernym {p}"),
            })?;
            hypernyms.push(s.to_string());
        }
        chains.push(TaxonomyChain::new(concept.clone(), hypernyms)?);
    }
    chains.sort_by(|a, b| a.concept.cmp(&b.concept));
    Ok(chains)
}

// ===== Run configuration =====

/// Image-generation backend selection with its backend-specific settings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BackendConfig {
    Mock,
    Directory { path: String },
    Http { endpoint: String, timeout_secs: u64, retries: u32 },
}

/// Everything a run needs: inputs, backend, template, sampling, and output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub control_dataset_path: String,
    pub generator_backend: BackendConfig,
    pub prompt_template: PromptTemplate,
    pub images_per_concept: u32,
    pub global_seed: u64,
    pub tie_policy: TiePolicy,
    pub model_id: String,
    pub layer_id: String,
    pub output_dir: String,
}

impl RunConfig {
    /// Canonical JSON used for hashing: re-serialized from the parsed struct
    /// so formatting and key order in the source file do not matter.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("RunConfig serialization cannot fail")
    }

    /// 16-hex-digit FNV-1a of the canonical JSON. Reports embed this so a
    /// document can be matched to the exact configuration that produced it.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical_json().as_bytes()))
    }
}

const CONFIG_KEYS: [&str; 9] = [
    "control_dataset_path",
    "generator_backend",
    "prompt_template",
    "images_per_concept",
    "global_seed",
    "tie_policy",
    "model_id",
    "layer_id",
    "output_dir",
];

fn require_str(
    map: &serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<String, ConceptsError> {
    match map.get(key) {
        None => Err(ConceptsError::MissingKey { key: key.into() }),
        Some(serde_json::Value::String(s)) if !s.trim().is_empty() => Ok(s.clone()),
        Some(other) => Err(ConceptsError::InvalidValue {
            key: key.into(),
            detail: format!("expected a non-empty string, found {other}"),
        }),
    }
}

fn require_u64(value: &serde_json::Value, key: &str) -> Result<u64, ConceptsError> {
    value.as_u64().ok_or_else(|| ConceptsError::InvalidValue {
        key: key.into(),
        detail: format!("expected an unsigned integer, found {value}"),
    })
}

fn parse_backend(value: &serde_json::Value) -> Result<BackendConfig, ConceptsError> {
    let key = "generator_backend";
    let map = match value {
        serde_json::Value::String(name) if name == "mock" => return Ok(BackendConfig::Mock),
        serde_json::Value::Object(map) => map,
        other => {
            return Err(ConceptsError::InvalidValue {
                key: key.into(),
                detail: format!("expected \"mock\" or an object with a `type` field, found {other}"),
            })
        }
    };
    let kind = map
        .get("type")
        .and_then(|v| v.as_str())
        .ok_or_else(|| ConceptsError::MissingKey { key: format!("{key}.type") })?;
    let allowed: &[&str] = match kind {
        "mock" => &["type"],
        "directory" => &["type", "path"],
        "http" => &["type", "endpoint", "timeout_secs", "retries"],
        other => {
            return Err(ConceptsError::InvalidValue {
                key: format!("{key}.type"),
                detail: format!("unknown backend {other:?}; expected mock, directory, or http"),
            })
        }
    };
    for k in map.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(ConceptsError::UnknownKey { key: format!("{key}.{k}") });
        }
    }
    match kind {
        "mock" => Ok(BackendConfig::Mock),
        "directory" => Ok(BackendConfig::Directory { path: require_str(map, "path")? }),
        _ => {
            let endpoint = require_str(map, "endpoint")?;
            let timeout_secs = match map.get("timeout_secs") {
                None => 30,
                Some(v) => require_u64(v, &format!("{key}.timeout_secs"))?,
            };
            let retries = match map.get("retries") {
                None => 2,
                Some(v) => u32::try_from(require_u64(v, &format!("{key}.retries"))?).map_err(
                    |_| ConceptsError::InvalidValue {
                        key: format!("{key}.retries"),
                        detail: "retry count does not fit in 32 bits".into(),
                    },
                )?,
            };
            Ok(BackendConfig::Http { endpoint, timeout_secs, retries })
        }
    }
}

fn parse_template(value: Option<&serde_json::Value>) -> Result<PromptTemplate, ConceptsError> {
    let key = "prompt_template";
    let invalid = |detail: String| ConceptsError::InvalidValue { key: key.into(), detail };
    match value {
        None => Ok(PromptTemplate::builtin(5).expect("template 5 exists")),
        Some(serde_json::Value::Number(n)) => {
            let id = n.as_u64().ok_or_else(|| invalid(format!("template id {n} is not 1-5")))?;
            let id = u8::try_from(id).map_err(|_| invalid(format!("template id {id} is not 1-5")))?;
            PromptTemplate::builtin(id).map_err(|e| invalid(e.to_string()))
        }
        Some(serde_json::Value::String(pattern)) => {
            PromptTemplate::custom(pattern).map_err(|e| invalid(e.to_string()))
        }
        Some(other) => Err(invalid(format!("expected a template id 1-5 or a pattern string, found {other}"))),
    }
}

/// Loads and validates a run configuration. Unknown keys are rejected so a
/// typo cannot silently fall back to a default.
pub fn load_config(path: &Path) -> Result<RunConfig, ConceptsError> {
    let bytes = std::fs::read(path)?;
    parse_config(&bytes)
}

/// `load_config` over in-memory bytes; identical bytes yield an identical
/// RunConfig.
pub fn parse_config(bytes: &[u8]) -> Result<RunConfig, ConceptsError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)
        .map_err(|e| ConceptsError::MalformedJson { detail: e.to_string() })?;
    let map = value.as_object().ok_or_else(|| ConceptsError::MalformedJson {
        detail: "config root must be a JSON object".into(),
    })?;
    for key in map.keys() {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(ConceptsError::UnknownKey { key: key.clone() });
        }
    }

    let images_per_concept = match map.get("images_per_concept") {
        None => 50,
        Some(v) => {
            let n = require_u64(v, "images_per_concept")?;
            if n < 2 {
                return Err(ConceptsError::InvalidValue {
                    key: "images_per_concept".into(),
                    detail: format!("{n} is below the minimum of 2; scores need a distribution"),
                });
            }
            u32::try_from(n).map_err(|_| ConceptsError::InvalidValue {
                key: "images_per_concept".into(),
                detail: format!("{n} does not fit in 32 bits"),
            })?
        }
    };
    let tie_policy = match map.get("tie_policy") {
        None => TiePolicy::Strict,
        Some(serde_json::Value::String(s)) if s == "strict" => TiePolicy::Strict,
        Some(serde_json::Value::String(s)) if s == "midrank" => TiePolicy::Midrank,
        Some(other) => {
            return Err(ConceptsError::InvalidValue {
                key: "tie_policy".into(),
                detail: format!("expected \"strict\" or \"midrank\", found {other}"),
            })
        }
    };
    let global_seed = match map.get("global_seed") {
        None => return Err(ConceptsError::MissingKey { key: "global_seed".into() }),
        Some(v) => require_u64(v, "global_seed")?,
    };
    let backend_value = map
        .get("generator_backend")
        .ok_or_else(|| ConceptsError::MissingKey { key: "generator_backend".into() })?;

    Ok(RunConfig {
        control_dataset_path: require_str(map, "control_dataset_path")?,
        generator_backend: parse_backend(backend_value)?,
        prompt_template: parse_template(map.get("prompt_template"))?,
        images_per_concept,
        global_seed,
        tie_policy,
        model_id: require_str(map, "model_id")?,
        layer_id: require_str(map, "layer_id")?,
        output_dir: require_str(map, "output_dir")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingests_explanations_in_file_order() {
        let f = write_temp(
            "method,layer,neuron,explanation\n\
             INVERT,avgpool,80,\"fire engine\"\n\
             CLIP-Dissect,avgpool,80,truck\n",
        );
        let records = ingest_explanations(f.path()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].method_id, "INVERT");
        assert_eq!(records[0].layer_id, "avgpool");
        assert_eq!(records[0].neuron_index, 80);
        assert_eq!(records[0].text, "fire engine");
        assert_eq!(records[1].method_id, "CLIP-Dissect");
    }

    #[test]
    fn rejects_duplicate_record_keys() {
        let f = write_temp(
            "method,layer,neuron,explanation\n\
             INVERT,avgpool,80,dog\n\
             INVERT,avgpool,80,cat\n",
        );
        match ingest_explanations(f.path()) {
            Err(ConceptsError::DuplicateKey { line, neuron_index, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(neuron_index, 80);
            }
            other => panic!("expected DuplicateKey, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_explanation_text() {
        let f = write_temp("method,layer,neuron,explanation\nINVERT,avgpool,80,\"  \"\n");
        assert!(matches!(
            ingest_explanations(f.path()),
            Err(ConceptsError::EmptyExplanation { line: 2 })
        ));
    }

    #[test]
    fn rejects_bad_header_and_bad_neuron() {
        let f = write_temp("method,layer,unit,explanation\nINVERT,avgpool,80,dog\n");
        assert!(matches!(ingest_explanations(f.path()), Err(ConceptsError::MalformedRow { line: 1, .. })));
        let f = write_temp("method,layer,neuron,explanation\nINVERT,avgpool,-3,dog\n");
        assert!(matches!(ingest_explanations(f.path()), Err(ConceptsError::MalformedRow { line: 2, .. })));
    }

    #[test]
    fn explanations_round_trip_through_csv() {
        let records = vec![
            ExplanationRecord {
                method_id: "INVERT".into(),
                layer_id: "avgpool".into(),
                neuron_index: 80,
                text: "fire engine, ladder".into(),
            },
            ExplanationRecord {
                method_id: "MILAN".into(),
                layer_id: "layer4".into(),
                neuron_index: 7,
                text: "a \"quoted\" phrase".into(),
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("explanations.csv");
        write_explanations(&records, &path).unwrap();
        let back = ingest_explanations(&path).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn ingests_concept_dataset() {
        let f = write_temp(
            "image_ref,dog,cat\n\
             img0.png,1,0\n\
             img1.png,0,1\n\
             img2.png,1,1\n",
        );
        let ds = ingest_concept_dataset(f.path()).unwrap();
        assert_eq!(ds.concept_names, vec!["dog", "cat"]);
        assert_eq!(ds.n_images(), 3);
        assert_eq!(ds.column(0), vec![true, false, true]);
        assert_eq!(ds.column(1), vec![false, true, true]);
    }

    #[test]
    fn rejects_constant_column_and_non_binary_cells() {
        let f = write_temp("image_ref,dog\nimg0.png,1\nimg1.png,1\n");
        assert!(matches!(
            ingest_concept_dataset(f.path()),
            Err(ConceptsError::ConstantConceptColumn { concept }) if concept == "dog"
        ));
        let f = write_temp("image_ref,dog\nimg0.png,2\nimg1.png,0\n");
        match ingest_concept_dataset(f.path()) {
            Err(ConceptsError::NonBinaryCell { line, concept, value }) => {
                assert_eq!((line, concept.as_str(), value.as_str()), (2, "dog", "2"));
            }
            other => panic!("expected NonBinaryCell, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_dataset() {
        let f = write_temp("image_ref,dog\n");
        assert!(matches!(ingest_concept_dataset(f.path()), Err(ConceptsError::EmptyDataset)));
    }

    #[test]
    fn taxonomy_loads_sorted_and_validated() {
        let f = write_temp(r#"{"pug": ["dog", "animal", "entity"], "ladybug": ["insect", "entity"]}"#);
        let chains = load_taxonomy(f.path()).unwrap();
        assert_eq!(chains.len(), 2);
        assert_eq!(chains[0].concept, "ladybug");
        assert_eq!(chains[1].hypernyms, vec!["dog", "animal", "entity"]);
        assert_eq!(
            chains[0].levels_from_root(),
            vec![("entity".to_string(), 1), ("insect".to_string(), 2), ("ladybug".to_string(), 3)]
        );

        let f = write_temp(r#"{"pug": ["dog", "dog"]}"#);
        assert!(matches!(load_taxonomy(f.path()), Err(ConceptsError::InvalidTaxonomy { .. })));
    }

    fn minimal_config() -> String {
        r#"{
            "control_dataset_path": "control.txt",
            "generator_backend": "mock",
            "global_seed": 7,
            "model_id": "toy-color",
            "layer_id": "color",
            "output_dir": "out"
        }"#
        .to_string()
    }

    #[test]
    fn config_defaults_applied() {
        let cfg = parse_config(minimal_config().as_bytes()).unwrap();
        assert_eq!(cfg.images_per_concept, 50);
        assert_eq!(cfg.tie_policy, TiePolicy::Strict);
        assert_eq!(cfg.prompt_template.pattern(), "realistic photo of a close up of [concept]");
        assert_eq!(cfg.global_seed, 7);
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_values() {
        let with_extra = minimal_config().replace("\"global_seed\": 7,", "\"global_seed\": 7, \"imagez\": 1,");
        assert!(matches!(
            parse_config(with_extra.as_bytes()),
            Err(ConceptsError::UnknownKey { key }) if key == "imagez"
        ));

        let below_min = minimal_config()
            .replace("\"global_seed\": 7,", "\"global_seed\": 7, \"images_per_concept\": 1,");
        assert!(matches!(
            parse_config(below_min.as_bytes()),
            Err(ConceptsError::InvalidValue { key, .. }) if key == "images_per_concept"
        ));

        let missing = minimal_config().replace("\"global_seed\": 7,", "");
        assert!(matches!(
            parse_config(missing.as_bytes()),
            Err(ConceptsError::MissingKey { key }) if key == "global_seed"
        ));
    }

    #[test]
    fn config_backend_objects_parse() {
        let http = minimal_config().replace(
            "\"mock\"",
            r#"{"type": "http", "endpoint": "http://localhost:9", "retries": 5}"#,
        );
        let cfg = parse_config(http.as_bytes()).unwrap();
        assert_eq!(
            cfg.generator_backend,
            BackendConfig::Http {
                endpoint: "http://localhost:9".into(),
                timeout_secs: 30,
                retries: 5
            }
        );

        let bad = minimal_config().replace(
            "\"mock\"",
            r#"{"type": "http", "endpoint": "http://localhost:9", "port": 9}"#,
        );
        assert!(matches!(
            parse_config(bad.as_bytes()),
            Err(ConceptsError::UnknownKey { key }) if key == "generator_backend.port"
        ));
    }

    #[test]
    fn config_template_choices() {
        let by_id = minimal_config().replace("\"global_seed\": 7,", "\"global_seed\": 7, \"prompt_template\": 1,");
        assert_eq!(parse_config(by_id.as_bytes()).unwrap().prompt_template.pattern(), "a [concept]");

        let custom = minimal_config()
            .replace("\"global_seed\": 7,", "\"global_seed\": 7, \"prompt_template\": \"sketch of [concept]\",");
        let cfg = parse_config(custom.as_bytes()).unwrap();
        assert_eq!(cfg.prompt_template.id(), 0);
        assert_eq!(cfg.prompt_template.pattern(), "sketch of [concept]");

        let no_placeholder = minimal_config()
            .replace("\"global_seed\": 7,", "\"global_seed\": 7, \"prompt_template\": \"no slot here\",");
        assert!(matches!(
            parse_config(no_placeholder.as_bytes()),
            Err(ConceptsError::InvalidValue { key, .. }) if key == "prompt_template"
        ));
    }

    #[test]
    fn config_hash_is_stable_across_formatting() {
        let spaced = minimal_config().replace('\n', "\n\n");
        let a = parse_config(minimal_config().as_bytes()).unwrap();
        let b = parse_config(spaced.as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
    }
}
