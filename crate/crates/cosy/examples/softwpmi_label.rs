//! Probabilistic labeling from image-concept similarities.
//!
//! Each exemplar image carries similarity logits against a concept
//! vocabulary. Row-wise softmax turns those into per-image concept
//! posteriors; the label score contrasts the posterior mass on the top
//! activating images against the marginal over all images, discounting
//! concepts that are likely everywhere.
//!
//! Run with: cargo run --example softwpmi_label

use cosy::explainers::{softwpmi_label, softwpmi_scores, SimilarityMatrix, SoftWpmiConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let concepts = ["harbor", "meadow", "glacier"];
    // Six exemplar images x three concepts: rows 0-2 lean harbor, row 3
    // leans meadow, rows 4-5 lean glacier.
    let sim = SimilarityMatrix::new(
        6,
        3,
        vec![
            2.1, 0.3, -0.5, // image 0
            1.8, 0.1, -0.2, // image 1
            1.4, 0.6, 0.0, // image 2
            -0.3, 1.9, 0.2, // image 3
            -0.8, 0.4, 2.2, // image 4
            -0.5, 0.0, 1.7, // image 5
        ],
    )?;
    // The neuron activates on the first three images.
    let activations = [0.9, 0.7, 0.8, 0.05, 0.0, 0.1];

    let config = SoftWpmiConfig { lambda: 1.0, top_k: 3, temperature: 1.0 };
    let scores = softwpmi_scores(&activations, &sim, &config)?;
    let best = softwpmi_label(&activations, &sim, &config)?;

    println!("{:<10} {:>9}", "concept", "score");
    for (name, score) in concepts.iter().zip(&scores) {
        let marker = if concepts[best] == *name { "  <- label" } else { "" };
        println!("{name:<10} {score:>9.4}{marker}");
    }

    // A higher lambda punishes concepts that score well marginally.
    let strict = SoftWpmiConfig { lambda: 1.5, top_k: 3, temperature: 1.0 };
    let strict_scores = softwpmi_scores(&activations, &sim, &strict)?;
    println!("\nwith lambda 1.5: {strict_scores:.4?}");
    Ok(())
}
