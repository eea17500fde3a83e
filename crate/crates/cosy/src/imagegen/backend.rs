//! Generation backends: deterministic mock, pre-rendered directory, and a
//! remote HTTP service, plus a call-counting wrapper for cache verification.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use base64::Engine;
use image::RgbImage;

use super::{cache, mock_generate, ImageGenError};

pub trait GenerationBackend {
    fn backend_id(&self) -> &str;

    /// Backends whose images already live on disk skip the cache entirely.
    fn bypasses_cache(&self) -> bool {
        false
    }

    /// Renders the full batch for one prompt and seed. Implementations must
    /// return exactly `count` images, ordered by index.
    fn generate(
        &self,
        prompt: &str,
        concept_text: &str,
        seed: u64,
        count: u32,
    ) -> Result<Vec<RgbImage>, ImageGenError>;
}

// ===== Mock =====

/// Pure-function backend over [`mock_generate`]; the workhorse for tests and
/// desk-scale evaluation runs.
#[derive(Debug, Default)]
pub struct MockBackend;

impl GenerationBackend for MockBackend {
    fn backend_id(&self) -> &str {
        "mock"
    }

    fn generate(
        &self,
        _prompt: &str,
        concept_text: &str,
        seed: u64,
        count: u32,
    ) -> Result<Vec<RgbImage>, ImageGenError> {
        Ok((0..count).map(|i| mock_generate(concept_text, seed, i)).collect())
    }
}

// ===== Directory =====

/// Serves pre-rendered images from a directory in filename order. Supports
/// paper-scale runs where generation happened offline on other hardware.
#[derive(Debug)]
pub struct DirectoryBackend {
    root: PathBuf,
}

impl DirectoryBackend {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn list_images(&self) -> Result<Vec<PathBuf>, ImageGenError> {
        let entries = std::fs::read_dir(&self.root).map_err(|e| ImageGenError::BackendUnavailable {
            backend_id: "directory".into(),
            detail: format!("cannot read {:?}: {e}", self.root),
        })?;
        let mut files = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| ImageGenError::Io {
                path: self.root.clone(),
                detail: e.to_string(),
            })?;
            let path = entry.path();
            let is_image = path
                .extension()
                .and_then(|e| e.to_str())
                .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg" | "bmp"))
                .unwrap_or(false);
            if path.is_file() && is_image {
                files.push(path);
            }
        }
        files.sort();
        Ok(files)
    }
}

impl GenerationBackend for DirectoryBackend {
    fn backend_id(&self) -> &str {
        "directory"
    }

    fn bypasses_cache(&self) -> bool {
        true
    }

    fn generate(
        &self,
        _prompt: &str,
        _concept_text: &str,
        _seed: u64,
        count: u32,
    ) -> Result<Vec<RgbImage>, ImageGenError> {
        let files = self.list_images()?;
        if files.len() < count as usize {
            return Err(ImageGenError::GenerationRefused {
                backend_id: "directory".into(),
                detail: format!("{:?} holds {} images, {count} requested", self.root, files.len()),
            });
        }
        files[..count as usize]
            .iter()
            .map(|path| {
                let bytes = std::fs::read(path).map_err(|e| ImageGenError::Io {
                    path: path.clone(),
                    detail: e.to_string(),
                })?;
                cache::decode_image(&bytes, path)
            })
            .collect()
    }
}

// ===== HTTP =====

/// Remote generation service. Sends `{"prompt", "seed", "count"}` as JSON and
/// expects a JSON array of base64-encoded PNGs in index order. Transport
/// failures are retried; HTTP error statuses are treated as refusals and are
/// not retried, since resubmitting a rejected prompt cannot succeed.
pub struct HttpBackend {
    endpoint: String,
    retries: u32,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, timeout_secs: u64, retries: u32) -> Result<Self, ImageGenError> {
        let endpoint = endpoint.into();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| ImageGenError::BackendUnavailable {
                backend_id: "http".into(),
                detail: e.to_string(),
            })?;
        Ok(Self { endpoint, retries, client })
    }
}

impl GenerationBackend for HttpBackend {
    fn backend_id(&self) -> &str {
        "http"
    }

    fn generate(
        &self,
        prompt: &str,
        _concept_text: &str,
        seed: u64,
        count: u32,
    ) -> Result<Vec<RgbImage>, ImageGenError> {
        let body = serde_json::json!({ "prompt": prompt, "seed": seed, "count": count });
        let refused = |detail: String| ImageGenError::GenerationRefused {
            backend_id: "http".into(),
            detail,
        };

        let mut attempt = 0;
        let response = loop {
            match self.client.post(&self.endpoint).json(&body).send() {
                Ok(response) => break response,
                Err(e) if attempt < self.retries => {
                    attempt += 1;
                    let _ = e;
                }
                Err(e) => {
                    return Err(ImageGenError::BackendUnavailable {
                        backend_id: "http".into(),
                        detail: format!("{} after {} attempts: {e}", self.endpoint, attempt + 1),
                    })
                }
            }
        };

        let status = response.status();
        let text = response.text().map_err(|e| ImageGenError::BackendUnavailable {
            backend_id: "http".into(),
            detail: format!("reading response body: {e}"),
        })?;
        if !status.is_success() {
            return Err(refused(format!("status {status}: {text}")));
        }
        let encoded: Vec<String> = serde_json::from_str(&text)
            .map_err(|e| refused(format!("response is not a JSON array of base64 PNGs: {e}")))?;
        if encoded.len() != count as usize {
            return Err(refused(format!("returned {} images, expected {count}", encoded.len())));
        }
        encoded
            .iter()
            .enumerate()
            .map(|(i, b64)| {
                let bytes = base64::engine::general_purpose::STANDARD
                    .decode(b64)
                    .map_err(|e| refused(format!("image {i} is not valid base64: {e}")))?;
                cache::decode_image(&bytes, Path::new(&format!("{}#{i}", self.endpoint)))
            })
            .collect()
    }
}

// ===== Counting wrapper =====

/// Delegating wrapper that counts `generate` invocations. Lets tests and
/// operators verify cache idempotence: a warm second run must report zero
/// additional calls.
pub struct CountingBackend<B: GenerationBackend> {
    inner: B,
    calls: AtomicU64,
}

impl<B: GenerationBackend> CountingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, calls: AtomicU64::new(0) }
    }

    pub fn call_count(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<B: GenerationBackend> GenerationBackend for CountingBackend<B> {
    fn backend_id(&self) -> &str {
        self.inner.backend_id()
    }

    fn bypasses_cache(&self) -> bool {
        self.inner.bypasses_cache()
    }

    fn generate(
        &self,
        prompt: &str,
        concept_text: &str,
        seed: u64,
        count: u32,
    ) -> Result<Vec<RgbImage>, ImageGenError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.generate(prompt, concept_text, seed, count)
    }
}
