//! End-to-end orchestration: a [`Pipeline`] owns a validated run
//! configuration plus the backend and cache it implies, and exposes one
//! method per batch command (generate, collect, score, benchmark, metaeval,
//! explain, report).
//!
//! Every method is a pure function of the configuration and the referenced
//! input files: repeating a command with unchanged inputs hits the image
//! cache and the persisted activation stores instead of the backend, and
//! reproduces byte-identical documents.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use crate::activation::{
    collect_activations, read_store, write_store, ActivationError, ActivationStore, ModelAdapter,
    SourceTag, ToyColorModel,
};
use crate::concepts::{
    ingest_concept_dataset, load_taxonomy, BackendConfig, ConceptsError, ExplanationRecord,
    RunConfig,
};
use crate::error::CosyError;
use crate::explainers::{invert_explain, softwpmi_label, SimilarityMatrix, SoftWpmiConfig};
use crate::imagegen::{
    generate_images, CacheKey, DirectoryBackend, GenerationBackend, GenerationSpec, HttpBackend,
    ImageBatch, ImageGenError, MockBackend,
};
use crate::metaeval::{
    concept_broadness, intraclass_stats, natural_vs_synthetic_response, sanity_check,
    seed_stability, true_labels_by_argmax, EvalContext, MockEmbedder,
};
use crate::report::{render_report, DistributionPoint, ReportDocument, ReportFormat};
use crate::scoring::{benchmark, evaluate_explanation, ScoredExplanation, ScoringError};
use crate::stats::mean;

/// Environment variable overriding the image cache root.
pub const CACHE_ENV: &str = "COSY_CACHE";

// ===== Pipeline =====

/// A run configuration bound to its generation backend and cache root.
pub struct Pipeline {
    config: RunConfig,
    backend: Box<dyn GenerationBackend>,
    cache_root: PathBuf,
}

impl Pipeline {
    /// Builds the backend named by the config, resolves the cache root
    /// (`COSY_CACHE` beats `<output_dir>/cache`), and validates that the
    /// configured model and layer exist.
    pub fn new(config: RunConfig) -> Result<Self, CosyError> {
        let backend: Box<dyn GenerationBackend> = match &config.generator_backend {
            BackendConfig::Mock => Box::new(MockBackend),
            BackendConfig::Directory { path } => Box::new(DirectoryBackend::new(path)),
            BackendConfig::Http { endpoint, timeout_secs, retries } => {
                Box::new(HttpBackend::new(endpoint.clone(), *timeout_secs, *retries)?)
            }
        };
        let cache_root = match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => Path::new(&config.output_dir).join("cache"),
        };
        let pipeline = Self { config, backend, cache_root };

        let adapter = pipeline.adapter()?;
        let layers = adapter.list_layers();
        if !layers.iter().any(|l| l == &pipeline.config.layer_id) {
            return Err(ActivationError::UnknownLayer {
                layer_id: pipeline.config.layer_id.clone(),
                available: layers,
            }
            .into());
        }
        Ok(pipeline)
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn cache_root(&self) -> &Path {
        &self.cache_root
    }

    pub fn config_hash(&self) -> String {
        self.config.config_hash()
    }

    fn adapter(&self) -> Result<ToyColorModel, CosyError> {
        match self.config.model_id.as_str() {
            "toy-color" => Ok(ToyColorModel),
            other => Err(CosyError::invalid_argument(format!(
                "unknown model {other:?}; registered models: toy-color"
            ))),
        }
    }

    fn output_dir(&self) -> &Path {
        Path::new(&self.config.output_dir)
    }

    /// Dataset identifier used in scored rows: the control path's file stem.
    fn dataset_id(&self) -> String {
        Path::new(&self.config.control_dataset_path)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "control".to_string())
    }

    // ===== Control dataset =====

    /// `Some(concepts)` when the control dataset is a concept-list text file,
    /// `None` when it is a directory of images.
    fn control_concepts(&self) -> Result<Option<Vec<String>>, CosyError> {
        let path = Path::new(&self.config.control_dataset_path);
        if path.is_dir() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(path)?;
        let concepts: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect();
        if concepts.is_empty() {
            return Err(CosyError::invalid_argument(format!(
                "control concept list {path:?} holds no concepts"
            )));
        }
        Ok(Some(concepts))
    }

    fn require_control_concepts(&self, what: &str) -> Result<Vec<String>, CosyError> {
        self.control_concepts()?.ok_or_else(|| {
            CosyError::invalid_argument(format!(
                "{what} needs a concept-list control dataset, but {:?} is an image directory",
                self.config.control_dataset_path
            ))
        })
    }

    fn generate_batch(&self, concept: &str, seed: u64) -> Result<ImageBatch, CosyError> {
        let spec = GenerationSpec {
            concept_text: concept.to_string(),
            template: self.config.prompt_template.clone(),
            count: self.config.images_per_concept,
            seed,
            backend_id: self.backend.backend_id().to_string(),
        };
        Ok(generate_images(&spec, self.backend.as_ref(), &self.cache_root)?)
    }

    fn build_control_store(&self, layer_id: &str) -> Result<ActivationStore, CosyError> {
        let adapter = self.adapter()?;
        match self.control_concepts()? {
            Some(concepts) => {
                let mut merged: Option<ActivationStore> = None;
                for concept in &concepts {
                    let batch = self.generate_batch(concept, self.config.global_seed)?;
                    let store = collect_activations(
                        &adapter,
                        layer_id,
                        &batch,
                        SourceTag::Control,
                        Some(concept),
                    )?;
                    match merged.as_mut() {
                        Some(m) => m.merge(&store)?,
                        None => merged = Some(store),
                    }
                }
                Ok(merged.expect("concept list is non-empty"))
            }
            None => {
                let batch = load_directory_batch(Path::new(&self.config.control_dataset_path))?;
                Ok(collect_activations(&adapter, layer_id, &batch, SourceTag::Control, None)?)
            }
        }
    }

    // ===== Store persistence =====

    fn stores_dir(&self) -> PathBuf {
        self.output_dir().join("stores").join(self.config_hash())
    }

    fn control_store_dir(&self, layer_id: &str) -> PathBuf {
        self.stores_dir().join(format!("control_{}", sanitize(layer_id)))
    }

    fn synthetic_store_dir(&self, record: &ExplanationRecord) -> PathBuf {
        self.stores_dir().join(format!(
            "synthetic_{}_{}_{}",
            sanitize(&record.method_id),
            sanitize(&record.layer_id),
            record.neuron_index
        ))
    }

    /// Loads the persisted control store for a layer, building and
    /// persisting it on first use.
    fn control_store_cached(&self, layer_id: &str) -> Result<ActivationStore, CosyError> {
        let dir = self.control_store_dir(layer_id);
        if dir.join("manifest.json").is_file() {
            let store = read_store(&dir)?;
            if store.layer_id() == layer_id {
                return Ok(store);
            }
        }
        let store = self.build_control_store(layer_id)?;
        write_store(&store, &dir)?;
        Ok(store)
    }

    /// Loads or builds the synthetic store for one explanation record. A
    /// persisted store is reused only if its rows still describe the same
    /// explanation text; otherwise it is rebuilt in place.
    fn synthetic_store_for(&self, record: &ExplanationRecord) -> Result<ActivationStore, CosyError> {
        let dir = self.synthetic_store_dir(record);
        if dir.join("manifest.json").is_file() {
            let store = read_store(&dir)?;
            let matches = store.layer_id() == record.layer_id
                && store.rows().iter().all(|p| {
                    p.source == SourceTag::Synthetic
                        && p.concept_text.as_deref() == Some(record.text.as_str())
                });
            if matches {
                return Ok(store);
            }
        }
        let adapter = self.adapter()?;
        let batch = self.generate_batch(&record.text, self.config.global_seed)?;
        let store = collect_activations(
            &adapter,
            &record.layer_id,
            &batch,
            SourceTag::Synthetic,
            Some(&record.text),
        )?;
        write_store(&store, &dir)?;
        Ok(store)
    }

    // ===== Commands =====

    /// Pre-generates every batch a scoring run would need: one per control
    /// concept plus one per distinct explanation text.
    pub fn run_generate(
        &self,
        records: &[ExplanationRecord],
    ) -> Result<GenerateSummary, CosyError> {
        let mut concepts: Vec<String> = self.control_concepts()?.unwrap_or_default();
        concepts.extend(records.iter().map(|r| r.text.clone()));
        let mut seen = BTreeSet::new();
        concepts.retain(|c| seen.insert(c.clone()));
        if concepts.is_empty() {
            return Err(CosyError::invalid_argument(
                "nothing to generate: the control dataset is a directory and no explanations were given",
            ));
        }
        for concept in &concepts {
            self.generate_batch(concept, self.config.global_seed)?;
        }
        Ok(GenerateSummary {
            concepts,
            images_per_concept: self.config.images_per_concept,
            cache_root: self.cache_root.clone(),
        })
    }

    /// Builds (or reloads) the control activation store for the configured
    /// layer and returns it with its on-disk location.
    pub fn run_collect(&self) -> Result<(ActivationStore, PathBuf), CosyError> {
        let layer_id = self.config.layer_id.clone();
        let store = self.control_store_cached(&layer_id)?;
        Ok((store, self.control_store_dir(&layer_id)))
    }

    /// Scores each explanation against the control distribution and returns
    /// a document holding per-neuron results plus raw activation values for
    /// distribution plots.
    pub fn run_score(&self, records: &[ExplanationRecord]) -> Result<ReportDocument, CosyError> {
        if records.is_empty() {
            return Err(CosyError::invalid_argument("no explanation records to score"));
        }
        let mut doc =
            ReportDocument::new("score", &self.config_hash(), self.config.global_seed);
        let dataset_id = self.dataset_id();
        let mut control_neurons_exported: BTreeSet<(String, usize)> = BTreeSet::new();

        for record in records {
            let control = self.control_store_cached(&record.layer_id)?;
            let synthetic = self.synthetic_store_for(record)?;
            let result =
                evaluate_explanation(record, &control, &synthetic, self.config.tie_policy)?;

            if control_neurons_exported
                .insert((record.layer_id.clone(), record.neuron_index))
            {
                for value in control.column(record.neuron_index)? {
                    doc.distributions.push(DistributionPoint {
                        neuron_index: record.neuron_index,
                        source_tag: SourceTag::Control,
                        value,
                    });
                }
            }
            for value in synthetic.column(record.neuron_index)? {
                doc.distributions.push(DistributionPoint {
                    neuron_index: record.neuron_index,
                    source_tag: SourceTag::Synthetic,
                    value,
                });
            }

            doc.scores.push(ScoredExplanation {
                dataset_id: dataset_id.clone(),
                model_id: control.model_id().to_string(),
                layer_id: record.layer_id.clone(),
                result,
            });
        }
        Ok(doc)
    }

    /// Scores every record and aggregates per (layer, method) benchmark
    /// cells.
    pub fn run_benchmark(
        &self,
        records: &[ExplanationRecord],
    ) -> Result<ReportDocument, CosyError> {
        if records.is_empty() {
            return Err(CosyError::invalid_argument("no explanation records to benchmark"));
        }
        let mut controls: BTreeMap<String, ActivationStore> = BTreeMap::new();
        for record in records {
            if !controls.contains_key(&record.layer_id) {
                controls
                    .insert(record.layer_id.clone(), self.control_store_cached(&record.layer_id)?);
            }
        }
        let mut synthetics: BTreeMap<(String, String, usize), ActivationStore> = BTreeMap::new();
        for record in records {
            let key = (record.method_id.clone(), record.layer_id.clone(), record.neuron_index);
            if !synthetics.contains_key(&key) {
                synthetics.insert(key, self.synthetic_store_for(record)?);
            }
        }
        let (table, scored) = benchmark(
            &self.dataset_id(),
            records,
            &controls,
            &synthetics,
            self.config.tie_policy,
        )?;
        let mut doc =
            ReportDocument::new("benchmark", &self.config_hash(), self.config.global_seed);
        doc.benchmark = Some(table);
        doc.scores = scored;
        Ok(doc)
    }

    /// Runs one meta-evaluation suite. Suites needing named concepts
    /// (everything except a directory-control `response`) require the
    /// control dataset to be a concept list.
    pub fn run_metaeval(
        &self,
        suite: &str,
        opts: &MetaEvalOptions,
    ) -> Result<ReportDocument, CosyError> {
        let adapter = self.adapter()?;
        let embedder = MockEmbedder;
        let ctx = EvalContext {
            backend: self.backend.as_ref(),
            cache_root: &self.cache_root,
            adapter: &adapter,
            embedder: &embedder,
            layer_id: self.config.layer_id.clone(),
            template: self.config.prompt_template.clone(),
            images_per_concept: self.config.images_per_concept,
            tie_policy: self.config.tie_policy,
            global_seed: self.config.global_seed,
        };
        let mut doc = ReportDocument::new(
            &format!("metaeval:{suite}"),
            &self.config_hash(),
            self.config.global_seed,
        );

        match suite {
            "similarity" => {
                let concepts = self.require_control_concepts("the similarity suite")?;
                let mut per_concept = BTreeMap::new();
                for concept in &concepts {
                    let batch = ctx.generate(concept, self.config.global_seed)?;
                    let stats = intraclass_stats(&ctx.embed_batch(&batch))?;
                    per_concept.insert(concept.clone(), stats);
                }
                doc.similarity = Some(per_concept);
            }
            "response" => {
                let concepts = self.require_control_concepts("the response suite")?;
                let control = self.control_store_cached(&self.config.layer_id)?;
                let neurons: Vec<usize> = (0..control.neuron_count()).collect();
                let labels = true_labels_by_argmax(&control, &concepts, &neurons)?;
                let class_neuron_map: Vec<(String, usize)> =
                    labels.iter().map(|(n, c)| (c.clone(), *n)).collect();

                let mut natural = BTreeMap::new();
                let mut synthetic = BTreeMap::new();
                for (class, _) in &class_neuron_map {
                    if natural.contains_key(class) {
                        continue;
                    }
                    natural.insert(class.clone(), ctx.generate(class, self.config.global_seed)?);
                    synthetic.insert(
                        class.clone(),
                        ctx.generate(class, self.config.global_seed.wrapping_add(1))?,
                    );
                }
                let response = natural_vs_synthetic_response(
                    &adapter,
                    &self.config.layer_id,
                    &class_neuron_map,
                    &natural,
                    &synthetic,
                )?;
                for row in &response.rows {
                    for &value in &row.natural_values {
                        doc.distributions.push(DistributionPoint {
                            neuron_index: row.neuron_index,
                            source_tag: SourceTag::Control,
                            value,
                        });
                    }
                    for &value in &row.synthetic_values {
                        doc.distributions.push(DistributionPoint {
                            neuron_index: row.neuron_index,
                            source_tag: SourceTag::Synthetic,
                            value,
                        });
                    }
                }
                doc.response = Some(response);
            }
            "sanity" => {
                let concepts = self.require_control_concepts("the sanity suite")?;
                let control = self.control_store_cached(&self.config.layer_id)?;
                let neurons: Vec<usize> = (0..control.neuron_count()).collect();
                let labels = true_labels_by_argmax(&control, &concepts, &neurons)?;
                doc.sanity = Some(sanity_check(&labels, &concepts, &control, &ctx)?);
            }
            "stability" => {
                let concepts = self.require_control_concepts("the stability suite")?;
                let control = self.control_store_cached(&self.config.layer_id)?;
                let concept = match &opts.concept {
                    Some(c) => {
                        if !concepts.contains(c) {
                            return Err(CosyError::invalid_argument(format!(
                                "concept {c:?} is not in the control concept list"
                            )));
                        }
                        c.clone()
                    }
                    None => concepts[0].clone(),
                };
                let neuron_index = match opts.neuron_index {
                    Some(n) => n,
                    None => argmax_neuron(&control, &concept)?,
                };
                let count = opts.seed_count.unwrap_or(10);
                let seeds: Vec<u64> = (0..count)
                    .map(|i| self.config.global_seed.wrapping_add(u64::from(i)))
                    .collect();
                let report = seed_stability(&concept, neuron_index, &seeds, &control, &ctx)?;
                doc.seeds = seeds;
                doc.stability = Some(report);
            }
            "broadness" => {
                let taxonomy_path = opts.taxonomy.as_ref().ok_or_else(|| {
                    CosyError::invalid_argument("the broadness suite needs --taxonomy <file>")
                })?;
                let chains = load_taxonomy(taxonomy_path)?;
                let chain = match &opts.concept {
                    Some(c) => chains.into_iter().find(|ch| &ch.concept == c).ok_or_else(|| {
                        CosyError::invalid_argument(format!(
                            "concept {c:?} is not present in the taxonomy"
                        ))
                    })?,
                    None => chains.into_iter().next().ok_or_else(|| {
                        CosyError::invalid_argument("taxonomy file holds no chains")
                    })?,
                };
                doc.broadness = Some(concept_broadness(&chain, &ctx)?);
            }
            other => {
                return Err(CosyError::invalid_argument(format!(
                    "unknown metaeval suite {other:?}; expected one of similarity, response, sanity, stability, broadness"
                )))
            }
        }
        Ok(doc)
    }

    /// Runs a built-in explanation generator over a persisted activation
    /// store and returns the produced records.
    pub fn run_explain(
        &self,
        method: &str,
        opts: &ExplainOptions,
    ) -> Result<Vec<ExplanationRecord>, CosyError> {
        let store = read_store(&opts.source)?;
        let neurons: Vec<usize> = match opts.neuron_index {
            Some(n) => {
                if n >= store.neuron_count() {
                    return Err(ScoringError::NeuronOutOfRange {
                        index: n,
                        count: store.neuron_count(),
                    }
                    .into());
                }
                vec![n]
            }
            None => (0..store.neuron_count()).collect(),
        };

        let mut records = Vec::new();
        match method {
            "invert" => {
                let dataset_path = opts.dataset.as_ref().ok_or_else(|| {
                    CosyError::invalid_argument("invert needs --dataset <labels.csv>")
                })?;
                let dataset = ingest_concept_dataset(dataset_path)?;
                if dataset.n_images() != store.row_count() {
                    return Err(CosyError::invalid_argument(format!(
                        "dataset labels {} images but the store holds {} rows",
                        dataset.n_images(),
                        store.row_count()
                    )));
                }
                for &neuron in &neurons {
                    let values = store.column(neuron)?;
                    let result =
                        invert_explain(&values, &dataset, opts.max_length, opts.beam_width)?;
                    records.push(ExplanationRecord {
                        method_id: "invert".to_string(),
                        layer_id: store.layer_id().to_string(),
                        neuron_index: neuron,
                        text: result.text,
                    });
                }
            }
            "softwpmi" => {
                let sim_path = opts.sim.as_ref().ok_or_else(|| {
                    CosyError::invalid_argument("softwpmi needs --sim <similarity.csv>")
                })?;
                let (concepts, matrix) = read_similarity_csv(sim_path)?;
                if matrix.rows() != store.row_count() {
                    return Err(CosyError::invalid_argument(format!(
                        "similarity matrix has {} rows but the store holds {}",
                        matrix.rows(),
                        store.row_count()
                    )));
                }
                let config = SoftWpmiConfig {
                    lambda: opts.lambda,
                    top_k: opts.top_k.unwrap_or_else(|| matrix.rows()),
                    temperature: opts.temperature,
                };
                for &neuron in &neurons {
                    let values = store.column(neuron)?;
                    let best = softwpmi_label(&values, &matrix, &config)?;
                    records.push(ExplanationRecord {
                        method_id: "softwpmi".to_string(),
                        layer_id: store.layer_id().to_string(),
                        neuron_index: neuron,
                        text: concepts[best].clone(),
                    });
                }
            }
            other => {
                return Err(CosyError::invalid_argument(format!(
                    "unknown explainer {other:?}; expected invert or softwpmi"
                )))
            }
        }
        Ok(records)
    }

    /// Renders a previously written document after checking that it was
    /// produced under this configuration.
    pub fn run_report(
        &self,
        document: &Path,
        format: ReportFormat,
        out: Option<&Path>,
    ) -> Result<Vec<PathBuf>, CosyError> {
        let bytes = std::fs::read(document)?;
        let doc = ReportDocument::from_json(&bytes)?;
        doc.verify_config_hash(&self.config_hash())?;
        let out_dir = match out {
            Some(dir) => dir.to_path_buf(),
            None => self.output_dir().join("report"),
        };
        Ok(render_report(&doc, format, &out_dir)?)
    }

    /// Writes a document as `report.json` under `out` (default: the
    /// configured output directory) and returns the file path.
    pub fn write_document(
        &self,
        doc: &ReportDocument,
        out: Option<&Path>,
    ) -> Result<PathBuf, CosyError> {
        let dir = match out {
            Some(dir) => dir.to_path_buf(),
            None => self.output_dir().to_path_buf(),
        };
        let files = render_report(doc, ReportFormat::Json, &dir)?;
        Ok(files.into_iter().next().expect("json rendering emits exactly one file"))
    }
}

// ===== Command options =====

/// What `run_generate` touched.
#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub concepts: Vec<String>,
    pub images_per_concept: u32,
    pub cache_root: PathBuf,
}

/// Optional knobs for `run_metaeval`.
#[derive(Debug, Clone, Default)]
pub struct MetaEvalOptions {
    pub taxonomy: Option<PathBuf>,
    pub concept: Option<String>,
    pub neuron_index: Option<usize>,
    pub seed_count: Option<u32>,
}

/// Inputs for `run_explain`.
#[derive(Debug, Clone)]
pub struct ExplainOptions {
    /// Activation store directory to explain.
    pub source: PathBuf,
    /// Binary concept labels (invert).
    pub dataset: Option<PathBuf>,
    /// Image-concept similarity matrix (softwpmi).
    pub sim: Option<PathBuf>,
    /// Restrict to one neuron; default explains every neuron in the store.
    pub neuron_index: Option<usize>,
    pub max_length: usize,
    pub beam_width: usize,
    pub lambda: f64,
    pub top_k: Option<usize>,
    pub temperature: f64,
}

impl ExplainOptions {
    pub fn new(source: impl Into<PathBuf>) -> Self {
        Self {
            source: source.into(),
            dataset: None,
            sim: None,
            neuron_index: None,
            max_length: 3,
            beam_width: 16,
            lambda: 1.0,
            top_k: None,
            temperature: 1.0,
        }
    }
}

// ===== Helpers =====

/// File-system safe rendering of an identifier for store directory names.
fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Neuron with the highest mean control activation over rows tagged with
/// `concept`. Ties keep the lower index.
fn argmax_neuron(control: &ActivationStore, concept: &str) -> Result<usize, CosyError> {
    let mut best: Option<(f64, usize)> = None;
    for neuron in 0..control.neuron_count() {
        let values =
            control.column_where(neuron, |p| p.concept_text.as_deref() == Some(concept))?;
        if values.is_empty() {
            return Err(CosyError::invalid_argument(format!(
                "no control rows are tagged with concept {concept:?}"
            )));
        }
        let m = mean(&values);
        if best.map_or(true, |(bm, _)| m > bm) {
            best = Some((m, neuron));
        }
    }
    Ok(best.expect("store has at least one neuron").1)
}

/// Loads a directory of PNG files, sorted by filename, as a control batch.
/// Provenance uses the `file` backend id with the filename as concept slot.
fn load_directory_batch(dir: &Path) -> Result<ImageBatch, CosyError> {
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let is_png = path
            .extension()
            .map_or(false, |e| e.eq_ignore_ascii_case("png"));
        if path.is_file() && is_png {
            files.push(path);
        }
    }
    files.sort();
    if files.len() < 2 {
        return Err(CosyError::invalid_argument(format!(
            "control directory {dir:?} holds {} png files; scoring needs at least 2",
            files.len()
        )));
    }

    let mut images = Vec::with_capacity(files.len());
    let mut provenance = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let img = image::open(path)
            .map_err(|e| ImageGenError::CacheCorrupt { path: path.clone(), detail: e.to_string() })?
            .to_rgb8();
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        images.push(img);
        provenance.push(CacheKey {
            backend_id: "file".to_string(),
            pattern: String::new(),
            concept_text: name,
            seed: 0,
            index: index as u32,
        });
    }
    Ok(ImageBatch { images, provenance })
}

/// Parses an image-concept similarity CSV: header `image_ref` followed by
/// one column per concept, one row per image, float cells.
fn read_similarity_csv(path: &Path) -> Result<(Vec<String>, SimilarityMatrix), CosyError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CosyError::Concepts(ConceptsError::Csv(e)))?;

    let headers = reader
        .headers()
        .map_err(|e| CosyError::Concepts(ConceptsError::Csv(e)))?
        .clone();
    if headers.len() < 2 {
        return Err(CosyError::invalid_argument(
            "similarity CSV needs an image_ref column plus at least one concept column",
        ));
    }
    let concepts: Vec<String> = headers.iter().skip(1).map(String::from).collect();

    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| CosyError::Concepts(ConceptsError::Csv(e)))?;
        if record.len() != headers.len() {
            return Err(CosyError::invalid_argument(format!(
                "similarity CSV row {} has {} cells, header has {}",
                rows + 1,
                record.len(),
                headers.len()
            )));
        }
        for cell in record.iter().skip(1) {
            let value: f64 = cell.trim().parse().map_err(|_| {
                CosyError::invalid_argument(format!(
                    "similarity CSV row {} holds a non-numeric cell {cell:?}",
                    rows + 1
                ))
            })?;
            data.push(value);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CosyError::invalid_argument("similarity CSV holds no data rows"));
    }
    let matrix = SimilarityMatrix::new(rows, concepts.len(), data)?;
    Ok((concepts, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::concepts::parse_config;
    use crate::imagegen::mock_generate;

    fn config_json(control: &Path, out: &Path) -> String {
        format!(
            concat!(
                "{{\"control_dataset_path\":{},",
                "\"generator_backend\":{{\"type\":\"mock\"}},",
                "\"prompt_template\":3,",
                "\"images_per_concept\":6,",
                "\"global_seed\":11,",
                "\"tie_policy\":\"strict\",",
                "\"model_id\":\"toy-color\",",
                "\"layer_id\":\"color\",",
                "\"output_dir\":{}}}"
            ),
            serde_json::to_string(control).unwrap(),
            serde_json::to_string(out).unwrap(),
        )
    }

    fn test_pipeline(dir: &Path, concepts: &[&str]) -> Pipeline {
        let control = dir.join("control.txt");
        std::fs::write(&control, concepts.join("\n")).unwrap();
        let out = dir.join("out");
        let config = parse_config(config_json(&control, &out).as_bytes()).unwrap();
        Pipeline::new(config).unwrap()
    }

    #[test]
    fn collect_builds_and_reuses_control_store() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);

        let (store, path) = p.run_collect().unwrap();
        assert_eq!(store.row_count(), 12);
        assert_eq!(store.neuron_count(), 4);
        assert!(path.join("manifest.json").is_file());
        assert!(store.rows().iter().all(|r| r.source == SourceTag::Control));

        let (again, _) = p.run_collect().unwrap();
        assert_eq!(again.row_count(), 12);
        assert_eq!(again.column(0).unwrap(), store.column(0).unwrap());
    }

    #[test]
    fn score_produces_scores_and_distributions() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["lagoon", "forest"]);
        let records = vec![ExplanationRecord {
            method_id: "manual".into(),
            layer_id: "color".into(),
            neuron_index: 0,
            text: "rope".into(),
        }];

        let doc = p.run_score(&records).unwrap();
        assert_eq!(doc.kind, "score");
        assert_eq!(doc.scores.len(), 1);
        let result = &doc.scores[0].result;
        // Rope images are far redder than lagoon or forest ones, so the red
        // neuron separates them perfectly.
        assert_eq!(result.auc, 1.0);
        assert!(result.mad > 0.0);
        assert_eq!(result.n, 12);
        assert_eq!(result.m, 6);
        let controls =
            doc.distributions.iter().filter(|d| d.source_tag == SourceTag::Control).count();
        let synthetics =
            doc.distributions.iter().filter(|d| d.source_tag == SourceTag::Synthetic).count();
        assert_eq!((controls, synthetics), (12, 6));
    }

    #[test]
    fn benchmark_documents_are_byte_identical_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["lantern", "wrench"]);
        let records = vec![
            ExplanationRecord {
                method_id: "a".into(),
                layer_id: "color".into(),
                neuron_index: 1,
                text: "lagoon".into(),
            },
            ExplanationRecord {
                method_id: "a".into(),
                layer_id: "color".into(),
                neuron_index: 2,
                text: "reef".into(),
            },
        ];

        let first = p.run_benchmark(&records).unwrap().to_json();
        let second = p.run_benchmark(&records).unwrap().to_json();
        assert_eq!(first, second);
        assert!(first.contains("benchmark"));
    }

    #[test]
    fn directory_control_loads_sorted_pngs() {
        let dir = tempfile::tempdir().unwrap();
        let control_dir = dir.path().join("naturals");
        std::fs::create_dir_all(&control_dir).unwrap();
        for (i, concept) in ["rope", "lagoon", "forest"].iter().enumerate() {
            let img = mock_generate(concept, 5, i as u32);
            img.save(control_dir.join(format!("img_{i}.png"))).unwrap();
        }
        let out = dir.path().join("out");
        let config = parse_config(config_json(&control_dir, &out).as_bytes()).unwrap();
        let p = Pipeline::new(config).unwrap();

        let (store, _) = p.run_collect().unwrap();
        assert_eq!(store.row_count(), 3);
        assert!(store.rows().iter().all(|r| r.concept_text.is_none()));
        assert!(store.rows()[0].image_ref.starts_with("file:img_0.png"));
    }

    #[test]
    fn metaeval_rejects_unknown_suite_and_missing_taxonomy() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);
        let opts = MetaEvalOptions::default();

        let err = p.run_metaeval("nonsense", &opts).unwrap_err();
        assert!(matches!(err, CosyError::InvalidArgument { .. }));
        let err = p.run_metaeval("broadness", &opts).unwrap_err();
        assert!(matches!(err, CosyError::InvalidArgument { .. }));
    }

    #[test]
    fn metaeval_similarity_covers_every_control_concept() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);

        let doc = p.run_metaeval("similarity", &MetaEvalOptions::default()).unwrap();
        let similarity = doc.similarity.unwrap();
        assert_eq!(
            similarity.keys().cloned().collect::<Vec<_>>(),
            vec!["lagoon".to_string(), "rope".to_string()]
        );
        for stats in similarity.values() {
            assert!(stats.cs_mean > 0.9);
            assert_eq!(stats.pair_count, 15);
        }
    }

    #[test]
    fn metaeval_sanity_labels_toy_neurons() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon", "reef"]);

        let doc = p.run_metaeval("sanity", &MetaEvalOptions::default()).unwrap();
        let sanity = doc.sanity.unwrap();
        assert_eq!(sanity.rows.len(), 4);
        assert!(sanity.rows.iter().all(|r| r.true_concept != r.random_concept));
        assert!(sanity.true_auc_mean >= sanity.random_auc_mean);
    }

    #[test]
    fn explain_invert_recovers_planted_concept() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);

        // Store with one neuron active exactly on "sky" rows.
        let mut store = ActivationStore::new("toy-color", "color", 1);
        let mut csv_text = String::from("image_ref,sky,grass\n");
        for i in 0..8 {
            // "grass" is uncorrelated with the activations so that no
            // negation of it ties with the planted "sky" explanation.
            let sky = usize::from(i < 4);
            let grass = usize::from(i % 2 == 0);
            csv_text.push_str(&format!("img{i},{sky},{grass}\n"));
            store
                .push_row(
                    &[if sky == 1 { 5.0 } else { 0.5 }],
                    crate::activation::RowProvenance {
                        source: SourceTag::Control,
                        concept_text: None,
                        image_ref: format!("img{i}"),
                        seed: None,
                    },
                )
                .unwrap();
        }
        let store_dir = dir.path().join("probe_store");
        write_store(&store, &store_dir).unwrap();
        let labels_path = dir.path().join("labels.csv");
        std::fs::write(&labels_path, csv_text).unwrap();

        let mut opts = ExplainOptions::new(&store_dir);
        opts.dataset = Some(labels_path);
        opts.max_length = 2;
        let records = p.run_explain("invert", &opts).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].text, "sky");
        assert_eq!(records[0].method_id, "invert");
        assert_eq!(records[0].layer_id, "color");
    }

    #[test]
    fn explain_softwpmi_reads_similarity_csv() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);

        let mut store = ActivationStore::new("toy-color", "color", 1);
        for (i, v) in [9.0, 0.1, 0.2].iter().enumerate() {
            store
                .push_row(
                    &[*v as f32],
                    crate::activation::RowProvenance {
                        source: SourceTag::Control,
                        concept_text: None,
                        image_ref: format!("img{i}"),
                        seed: None,
                    },
                )
                .unwrap();
        }
        let store_dir = dir.path().join("wpmi_store");
        write_store(&store, &store_dir).unwrap();
        let sim_path = dir.path().join("sim.csv");
        // The most active image (row 0) is much more similar to "sea".
        std::fs::write(&sim_path, "image_ref,sea,sand\nimg0,4.0,0.0\nimg1,0.0,3.0\nimg2,0.0,2.0\n")
            .unwrap();

        let mut opts = ExplainOptions::new(&store_dir);
        opts.sim = Some(sim_path);
        opts.top_k = Some(1);
        let records = p.run_explain("softwpmi", &opts).unwrap();
        assert_eq!(records[0].text, "sea");
        assert_eq!(records[0].method_id, "softwpmi");
    }

    #[test]
    fn report_round_trip_enforces_config_hash() {
        let dir = tempfile::tempdir().unwrap();
        let p = test_pipeline(dir.path(), &["rope", "lagoon"]);
        let records = vec![ExplanationRecord {
            method_id: "manual".into(),
            layer_id: "color".into(),
            neuron_index: 0,
            text: "rope".into(),
        }];
        let doc = p.run_score(&records).unwrap();
        let json_path = p.write_document(&doc, None).unwrap();

        let rendered = p
            .run_report(&json_path, ReportFormat::Csv, Some(&dir.path().join("render")))
            .unwrap();
        assert!(rendered.iter().any(|f| f.file_name().unwrap() == "report.csv"));

        // A document from a different configuration must be refused.
        let foreign = ReportDocument::new("score", "0000000000000000", 11);
        let foreign_path = dir.path().join("foreign.json");
        std::fs::write(&foreign_path, foreign.to_json()).unwrap();
        let err = p.run_report(&foreign_path, ReportFormat::Json, None).unwrap_err();
        assert!(matches!(err, CosyError::Report(_)));
    }

    #[test]
    fn similarity_csv_rejects_ragged_and_non_numeric_rows() {
        let dir = tempfile::tempdir().unwrap();
        let bad_cell = dir.path().join("bad.csv");
        std::fs::write(&bad_cell, "image_ref,a\nimg0,oops\n").unwrap();
        assert!(read_similarity_csv(&bad_cell).is_err());

        let no_rows = dir.path().join("empty.csv");
        std::fs::write(&no_rows, "image_ref,a\n").unwrap();
        assert!(read_similarity_csv(&no_rows).is_err());
    }

    #[test]
    fn unknown_model_and_layer_are_rejected_at_construction() {
        let dir = tempfile::tempdir().unwrap();
        let control = dir.path().join("control.txt");
        std::fs::write(&control, "rope\n").unwrap();
        let out = dir.path().join("out");

        let good = config_json(&control, &out);
        let bad_model = good.replace("toy-color", "resnet18");
        let config = parse_config(bad_model.as_bytes()).unwrap();
        assert!(matches!(Pipeline::new(config), Err(CosyError::InvalidArgument { .. })));

        let bad_layer = good.replace("\"layer_id\":\"color\"", "\"layer_id\":\"fc\"");
        let config = parse_config(bad_layer.as_bytes()).unwrap();
        assert!(matches!(Pipeline::new(config), Err(CosyError::Activation(_))));
    }
}
