//! Benchmarking explanation methods across layers.
//!
//! Scores a batch of explanation records attributed to two different methods
//! on both toy-model layers, then prints the method x layer summary table:
//! per cell, the mean and standard deviation of AUC and MAD over the neurons
//! that method explained at that layer.
//!
//! Run with: cargo run --example benchmark_methods

use cosy::concepts::{BackendConfig, ExplanationRecord, RunConfig};
use cosy::imagegen::PromptTemplate;
use cosy::pipeline::Pipeline;
use cosy::scoring::TiePolicy;

fn record(method: &str, layer: &str, neuron: usize, text: &str) -> ExplanationRecord {
    ExplanationRecord {
        method_id: method.into(),
        layer_id: layer.into(),
        neuron_index: neuron,
        text: text.into(),
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workdir = tempfile::tempdir()?;
    let control_path = workdir.path().join("control.txt");
    std::fs::write(&control_path, "brook\nbasket\nclay lagoon\nstone wharf\n")?;

    let config = RunConfig {
        control_dataset_path: control_path.display().to_string(),
        generator_backend: BackendConfig::Mock,
        prompt_template: PromptTemplate::builtin(2)?,
        images_per_concept: 12,
        global_seed: 5,
        tie_policy: TiePolicy::Midrank,
        model_id: "toy-color".into(),
        layer_id: "color".into(),
        output_dir: workdir.path().join("out").display().to_string(),
    };
    let pipeline = Pipeline::new(config)?;

    // Pretend two methods labeled overlapping neuron sets on both layers.
    let records = vec![
        record("hand-labels", "color", 0, "basket"),
        record("hand-labels", "color", 1, "stone wharf"),
        record("hand-labels", "color_quadrants", 2, "hollow canoe"),
        record("guesses", "color", 0, "brook"),
        record("guesses", "color", 1, "big pond"),
        record("guesses", "color_quadrants", 2, "brook"),
    ];

    let doc = pipeline.run_benchmark(&records)?;
    let table = doc.benchmark.as_ref().expect("benchmark documents carry a table");

    println!(
        "{:<16} {:<16} {:>7} {:>8} {:>8} {:>8} {:>8}",
        "layer", "method", "neurons", "auc", "auc sd", "mad", "mad sd"
    );
    for row in &table.rows {
        println!(
            "{:<16} {:<16} {:>7} {:>8.3} {:>8.3} {:>8.4} {:>8.4}",
            row.layer_id,
            row.method_id,
            row.neuron_count,
            row.auc_mean,
            row.auc_std,
            row.mad_mean,
            row.mad_std
        );
    }

    let path = pipeline.write_document(&doc, None)?;
    println!("\nfull report: {}", path.display());
    Ok(())
}
