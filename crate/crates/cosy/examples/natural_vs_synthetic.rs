//! Natural versus synthetic response comparison.
//!
//! For each neuron's argmax class, compares activations on natural control
//! images of that class with activations on freshly synthesized images of
//! the same concept. Synthetic batches that reproduce the natural response
//! (small gap, similar spread) justify substituting them for missing
//! datasets; large gaps flag a generator mismatch.
//!
//! Run with: cargo run --example natural_vs_synthetic

use cosy::concepts::{BackendConfig, ExplanationRecord, RunConfig};
use cosy::imagegen::PromptTemplate;
use cosy::pipeline::{MetaEvalOptions, Pipeline};
use cosy::scoring::TiePolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workdir = tempfile::tempdir()?;
    let control_path = workdir.path().join("control.txt");
    std::fs::write(&control_path, "basket\nbrook\nhollow canoe\nstone wharf\n")?;

    let config = RunConfig {
        control_dataset_path: control_path.display().to_string(),
        generator_backend: BackendConfig::Mock,
        prompt_template: PromptTemplate::builtin(4)?,
        images_per_concept: 18,
        global_seed: 21,
        tie_policy: TiePolicy::Midrank,
        model_id: "toy-color".into(),
        layer_id: "color".into(),
        output_dir: workdir.path().join("out").display().to_string(),
    };
    let pipeline = Pipeline::new(config)?;

    let doc = pipeline.run_metaeval("response", &MetaEvalOptions::default())?;
    let report = doc.response.as_ref().expect("response suite fills the response section");

    println!(
        "{:<14} {:<8} {:>13} {:>15} {:>9}",
        "class", "neuron", "natural mean", "synthetic mean", "gap"
    );
    for row in &report.rows {
        println!(
            "{:<14} {:<8} {:>13.5} {:>15.5} {:>+9.5}",
            row.class_label, row.neuron_index, row.natural_mean, row.synthetic_mean, row.mad
        );
    }

    // The document also carries the raw per-image values for histograms.
    let path = pipeline.write_document(&doc, None)?;
    println!("\nraw distributions and the full report: {}", path.display());

    // `ExplanationRecord` is what the score/benchmark commands would consume
    // if these classes were promoted to explanations afterwards.
    let follow_up = ExplanationRecord {
        method_id: "argmax-class".into(),
        layer_id: "color".into(),
        neuron_index: report.rows[0].neuron_index,
        text: report.rows[0].class_label.clone(),
    };
    let scored = pipeline.run_score(std::slice::from_ref(&follow_up))?;
    println!(
        "re-scored {:?} on neuron {}: AUC {:.3}",
        follow_up.text, follow_up.neuron_index, scored.scores[0].result.auc
    );
    Ok(())
}
