//! Collecting pooled activations into a persistent store.
//!
//! Runs one generated batch through the toy color model at both of its
//! layers, shows how spatial maps pool to one scalar per neuron, and round
//! trips the store through its on-disk format (manifest.json sidecar plus a
//! little-endian f32 payload).
//!
//! Run with: cargo run --example collect_activations

use cosy::activation::{collect_activations, read_store, write_store, SourceTag, ToyColorModel};
use cosy::imagegen::{generate_images, GenerationSpec, MockBackend, PromptTemplate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cache = tempfile::tempdir()?;
    let spec = GenerationSpec {
        concept_text: "rust-red barn".into(),
        template: PromptTemplate::builtin(1)?,
        count: 4,
        seed: 7,
        backend_id: "mock".into(),
    };
    let batch = generate_images(&spec, &MockBackend, cache.path())?;
    let adapter = ToyColorModel;

    // The toy model exposes two layers: "color" holds 1x1 maps (scalar
    // neurons), "color_quadrants" holds 2x2 maps that average-pool to the
    // same values, since the four neurons are global channel means.
    for layer in ["color", "color_quadrants"] {
        let store = collect_activations(&adapter, layer, &batch, SourceTag::Synthetic, Some("rust-red barn"))?;
        let row: Vec<f32> = (0..store.neuron_count()).map(|n| store.value(0, n)).collect();
        println!("{layer:<16} first row: {row:?}");
    }

    let store =
        collect_activations(&adapter, "color", &batch, SourceTag::Synthetic, Some("rust-red barn"))?;
    println!(
        "\nstore: {} rows x {} neurons, model {:?}, layer {:?}",
        store.row_count(),
        store.neuron_count(),
        store.model_id(),
        store.layer_id()
    );
    let prov = &store.rows()[0];
    println!(
        "row 0 provenance: source={:?} concept={:?} ref={}",
        prov.source, prov.concept_text, prov.image_ref
    );

    let dir = tempfile::tempdir()?;
    write_store(&store, dir.path())?;
    let loaded = read_store(dir.path())?;
    assert_eq!(loaded.row_count(), store.row_count());
    assert_eq!(loaded.value(0, 0).to_bits(), store.value(0, 0).to_bits());
    println!("\nround trip through {} is bit-exact", dir.path().display());
    Ok(())
}
