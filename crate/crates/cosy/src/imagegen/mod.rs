//! Explanation text to concept images: prompt templates, pluggable
//! generation backends, and a content-addressed on-disk cache.
//!
//! Image generation is the expensive step of the pipeline, so everything
//! here is built around two guarantees. First, a batch is a pure function of
//! its [`GenerationSpec`] (the mock backend makes this literal; real backends
//! are expected to honor their seed). Second, a batch is generated at most
//! once: `generate_images` consults the cache before invoking any backend and
//! persists results atomically.

mod backend;
mod cache;

pub use backend::{CountingBackend, DirectoryBackend, GenerationBackend, HttpBackend, MockBackend};

use std::path::PathBuf;

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use crate::hash::{fnv1a64, SplitMix64};

#[derive(Debug, thiserror::Error)]
pub enum ImageGenError {
    #[error("prompt pattern {pattern:?} must contain \"[concept]\" exactly once")]
    MissingPlaceholder { pattern: String },
    #[error("invalid generation spec: {detail}")]
    InvalidSpec { detail: String },
    #[error("backend {backend_id:?} unavailable: {detail}")]
    BackendUnavailable { backend_id: String, detail: String },
    #[error("backend {backend_id:?} refused generation: {detail}")]
    GenerationRefused { backend_id: String, detail: String },
    #[error("stored image {path:?} failed to decode: {detail}")]
    CacheCorrupt { path: PathBuf, detail: String },
    #[error("i/o failure at {path:?}: {detail}")]
    Io { path: PathBuf, detail: String },
}

// ===== Prompt templates =====

/// A generation prompt with a single `[concept]` slot. Ids 1-5 are the five
/// stock templates; id 0 marks a user-supplied pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    id: u8,
    pattern: String,
}

pub const PLACEHOLDER: &str = "[concept]";

const BUILTIN_PATTERNS: [&str; 5] = [
    "a [concept]",
    "a painting of [concept]",
    "photo of [concept]",
    "realistic photo of [concept]",
    "realistic photo of a close up of [concept]",
];

impl PromptTemplate {
    pub fn builtin(id: u8) -> Result<Self, ImageGenError> {
        match id {
            1..=5 => Ok(Self { id, pattern: BUILTIN_PATTERNS[usize::from(id) - 1].to_string() }),
            _ => Err(ImageGenError::InvalidSpec {
                detail: format!("template id {id} is out of range 1-5"),
            }),
        }
    }

    pub fn custom(pattern: &str) -> Result<Self, ImageGenError> {
        if pattern.matches(PLACEHOLDER).count() != 1 {
            return Err(ImageGenError::MissingPlaceholder { pattern: pattern.to_string() });
        }
        Ok(Self { id: 0, pattern: pattern.to_string() })
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }
}

/// Substitutes the concept into the template. The placeholder count is
/// re-checked here so templates coming from deserialized data are still safe.
pub fn render_prompt(template: &PromptTemplate, concept_text: &str) -> Result<String, ImageGenError> {
    if template.pattern.matches(PLACEHOLDER).count() != 1 {
        return Err(ImageGenError::MissingPlaceholder { pattern: template.pattern.clone() });
    }
    Ok(template.pattern.replace(PLACEHOLDER, concept_text))
}

// ===== Specs, keys, batches =====

/// Everything that determines a batch: concept, template, count, seed, and
/// which backend renders it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationSpec {
    pub concept_text: String,
    pub template: PromptTemplate,
    pub count: u32,
    pub seed: u64,
    pub backend_id: String,
}

impl GenerationSpec {
    fn validate(&self) -> Result<(), ImageGenError> {
        if self.concept_text.trim().is_empty() {
            return Err(ImageGenError::InvalidSpec { detail: "empty concept text".into() });
        }
        if self.count < 2 {
            return Err(ImageGenError::InvalidSpec {
                detail: format!("count {} is below the minimum of 2", self.count),
            });
        }
        Ok(())
    }
}

/// Identity of one generated image. Equal tuples hash equally on every
/// platform: the canonical byte serialization is length-prefixed UTF-8 plus
/// little-endian integers, hashed with 64-bit FNV-1a.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheKey {
    pub backend_id: String,
    pub pattern: String,
    pub concept_text: String,
    pub seed: u64,
    pub index: u32,
}

impl CacheKey {
    pub fn new(spec: &GenerationSpec, index: u32) -> Self {
        Self {
            backend_id: spec.backend_id.clone(),
            pattern: spec.template.pattern.clone(),
            concept_text: spec.concept_text.clone(),
            seed: spec.seed,
            index,
        }
    }

    fn prefix_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::new();
        for field in [&self.backend_id, &self.pattern, &self.concept_text] {
            bytes.extend_from_slice(&(field.len() as u64).to_le_bytes());
            bytes.extend_from_slice(field.as_bytes());
        }
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        bytes
    }

    /// Hash of every field except the index; all images of one batch share
    /// it, and it names the batch's cache directory.
    pub fn prefix_hash(&self) -> u64 {
        fnv1a64(&self.prefix_bytes())
    }

    /// Full-key hash, including the index.
    pub fn hash(&self) -> u64 {
        let mut bytes = self.prefix_bytes();
        bytes.extend_from_slice(&self.index.to_le_bytes());
        fnv1a64(&bytes)
    }

    /// Stable human-readable reference recorded in activation provenance.
    pub fn reference(&self) -> String {
        format!("{}:{}:{}:{}", self.backend_id, self.concept_text, self.seed, self.index)
    }
}

/// A generated image set plus the keys identifying each member.
#[derive(Debug, Clone)]
pub struct ImageBatch {
    pub images: Vec<RgbImage>,
    pub provenance: Vec<CacheKey>,
}

impl ImageBatch {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }
}

// ===== Mock generation =====

/// Deterministic stand-in for a text-to-image model. The base color is the
/// low three bytes of FNV-1a(concept text); per-pixel noise comes from a
/// SplitMix64 stream seeded with seed XOR hash XOR index, each channel
/// drawing `z mod 33 - 16` in [-16, 16]. Pixels are visited row-major,
/// channels in RGB order, so independent implementations agree byte-for-byte.
pub fn mock_generate(concept_text: &str, seed: u64, index: u32) -> RgbImage {
    let hash = fnv1a64(concept_text.as_bytes());
    let base = [(hash & 0xff) as i32, ((hash >> 8) & 0xff) as i32, ((hash >> 16) & 0xff) as i32];
    let mut rng = SplitMix64::new(seed ^ hash ^ u64::from(index));
    let mut img = RgbImage::new(64, 64);
    for y in 0..64 {
        for x in 0..64 {
            let mut px = [0u8; 3];
            for c in 0..3 {
                let noise = (rng.next_u64() % 33) as i32 - 16;
                px[c] = (base[c] + noise).clamp(0, 255) as u8;
            }
            img.put_pixel(x, y, Rgb(px));
        }
    }
    img
}

// ===== Cached generation =====

/// Produces the batch for `spec`, reading the cache when every member is
/// present and otherwise regenerating the whole batch through the backend and
/// persisting it atomically. Backends that already own persistent images
/// (the directory backend) bypass the cache.
pub fn generate_images(
    spec: &GenerationSpec,
    backend: &dyn GenerationBackend,
    cache_root: &std::path::Path,
) -> Result<ImageBatch, ImageGenError> {
    spec.validate()?;
    if spec.backend_id != backend.backend_id() {
        return Err(ImageGenError::InvalidSpec {
            detail: format!(
                "spec names backend {:?} but {:?} was supplied",
                spec.backend_id,
                backend.backend_id()
            ),
        });
    }
    let prompt = render_prompt(&spec.template, &spec.concept_text)?;
    let provenance: Vec<CacheKey> = (0..spec.count).map(|i| CacheKey::new(spec, i)).collect();

    if backend.bypasses_cache() {
        let images = backend.generate(&prompt, &spec.concept_text, spec.seed, spec.count)?;
        let batch = ImageBatch { images, provenance };
        return check_batch(batch, backend.backend_id(), spec.count);
    }

    let paths: Vec<PathBuf> =
        provenance.iter().map(|key| cache::entry_path(cache_root, key)).collect();
    if paths.iter().all(|p| p.exists()) {
        let mut images = Vec::with_capacity(paths.len());
        for path in &paths {
            images.push(cache::load_png(path)?);
        }
        let batch = ImageBatch { images, provenance };
        return check_batch(batch, backend.backend_id(), spec.count);
    }

    // Any missing member invalidates the whole batch: real backends sample
    // the full batch from one seed, so per-index regeneration would not
    // reproduce the original draw.
    let images = backend.generate(&prompt, &spec.concept_text, spec.seed, spec.count)?;
    let batch = check_batch(ImageBatch { images, provenance }, backend.backend_id(), spec.count)?;
    for (image, path) in batch.images.iter().zip(&paths) {
        cache::write_png_atomic(path, image)?;
    }
    Ok(batch)
}

fn check_batch(batch: ImageBatch, backend_id: &str, count: u32) -> Result<ImageBatch, ImageGenError> {
    let refused = |detail: String| ImageGenError::GenerationRefused {
        backend_id: backend_id.to_string(),
        detail,
    };
    if batch.images.len() != count as usize {
        return Err(refused(format!("returned {} images, expected {count}", batch.images.len())));
    }
    let dims = batch.images[0].dimensions();
    for (i, img) in batch.images.iter().enumerate() {
        if img.dimensions() != dims {
            return Err(refused(format!(
                "image {i} has dimensions {:?}, batch started with {dims:?}",
                img.dimensions()
            )));
        }
    }
    Ok(batch)
}
