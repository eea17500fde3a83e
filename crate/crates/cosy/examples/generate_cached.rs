//! Deterministic image generation with an on-disk cache.
//!
//! Generates one batch twice through a call-counting wrapper: the first pass
//! renders and caches PNGs, the second is served entirely from disk. The
//! cache key folds in backend, prompt pattern, concept, and seed, so any
//! change to those regenerates instead of serving stale images.
//!
//! Run with: cargo run --example generate_cached

use cosy::imagegen::{
    generate_images, CountingBackend, GenerationSpec, MockBackend, PromptTemplate,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cache = tempfile::tempdir()?;
    let backend = CountingBackend::new(MockBackend);
    let spec = GenerationSpec {
        concept_text: "checkered flag".into(),
        template: PromptTemplate::builtin(3)?,
        count: 8,
        seed: 42,
        backend_id: "mock".into(),
    };

    let first = generate_images(&spec, &backend, cache.path())?;
    println!(
        "cold run : {} images, backend called {} time(s)",
        first.len(),
        backend.call_count()
    );

    let second = generate_images(&spec, &backend, cache.path())?;
    println!(
        "warm run : {} images, backend called {} time(s) total",
        second.len(),
        backend.call_count()
    );
    assert_eq!(backend.call_count(), 1, "warm run must not re-render");

    // Batches carry provenance: every image knows the cache key it came from.
    let key = &first.provenance[0];
    println!(
        "\nfirst image: backend={} concept={:?} seed={} index={}",
        key.backend_id, key.concept_text, key.seed, key.index
    );
    println!("reference  : {}", key.reference());

    // Cache layout: <root>/<prefix-hash>/<index>.png
    let prefix_dir = cache.path().join(format!("{:016x}", key.prefix_hash()));
    let mut files: Vec<_> = std::fs::read_dir(&prefix_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    files.sort();
    println!("cache dir  : {}", prefix_dir.display());
    println!("cache files: {}", files.join(", "));
    Ok(())
}
