//! Compositional explanation search over labeled images.
//!
//! Given per-image activations and binary concept labels, beam search over
//! AND/OR/NOT formulas finds the composition whose member images best
//! dominate the rest by rank (midrank AUC). The planted neuron below fires
//! exactly on "striped AND NOT metallic" images, and the search recovers
//! that from the raw values.
//!
//! Run with: cargo run --example invert_explain

use cosy::concepts::ConceptDataset;
use cosy::explainers::invert_explain;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let concepts: Vec<String> =
        ["striped", "metallic", "round"].iter().map(|s| s.to_string()).collect();
    let refs: Vec<String> = (0..24).map(|i| format!("img_{i:02}.png")).collect();

    // Label matrix, one row per image: striped on the first half, metallic on
    // every third image, round on every other image.
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for i in 0..24usize {
        let striped = i < 12;
        let metallic = i % 3 == 0;
        let round = i % 2 == 0;
        labels.extend([striped, metallic, round]);
        // The planted response: high iff striped and not metallic, with a
        // small scrambled jitter so no simpler formula is perfect.
        let jitter = f64::from(((i * 7) % 24) as u32) * 0.01;
        values.push(if striped && !metallic { 5.0 + jitter } else { jitter });
    }
    let dataset = ConceptDataset::new(concepts, refs, labels)?;

    for max_length in [1, 2] {
        let result = invert_explain(&values, &dataset, max_length, 16)?;
        println!(
            "max length {max_length}: {:<26} delta AUC {:.4}",
            format!("{:?}", result.text),
            result.delta_auc
        );
    }
    Ok(())
}
