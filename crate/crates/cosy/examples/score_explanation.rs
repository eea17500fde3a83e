//! End-to-end scoring of textual neuron explanations.
//!
//! Builds a run configuration in code, scores two candidate explanations for
//! the same neuron against a natural control set, and prints the resulting
//! AUC / MAD pairs. An explanation whose synthetic images drive the neuron
//! harder than the control images earns an AUC near 1.0; an explanation the
//! neuron is indifferent to hovers near 0.5.
//!
//! Run with: cargo run --example score_explanation

use cosy::concepts::{BackendConfig, ExplanationRecord, RunConfig};
use cosy::imagegen::PromptTemplate;
use cosy::pipeline::Pipeline;
use cosy::scoring::TiePolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workdir = tempfile::tempdir()?;
    let control_path = workdir.path().join("control.txt");
    // The natural control dataset: one concept per line. With the mock
    // backend each concept maps to a fixed base color plus pixel noise.
    std::fs::write(&control_path, "brook\nclay lagoon\nbig pond\n")?;

    let config = RunConfig {
        control_dataset_path: control_path.display().to_string(),
        generator_backend: BackendConfig::Mock,
        prompt_template: PromptTemplate::builtin(4)?,
        images_per_concept: 24,
        global_seed: 97,
        tie_policy: TiePolicy::Midrank,
        model_id: "toy-color".into(),
        layer_id: "color".into(),
        output_dir: workdir.path().join("out").display().to_string(),
    };
    let pipeline = Pipeline::new(config)?;

    // Two candidate explanations for neuron 0 (mean red channel in the toy
    // model). "basket" renders with a hot red base; "bitter sail" shares the
    // control palette's red level, so the neuron cannot tell it apart.
    let records = vec![
        ExplanationRecord {
            method_id: "manual".into(),
            layer_id: "color".into(),
            neuron_index: 0,
            text: "basket".into(),
        },
        ExplanationRecord {
            method_id: "manual".into(),
            layer_id: "color".into(),
            neuron_index: 0,
            text: "bitter sail".into(),
        },
    ];

    let doc = pipeline.run_score(&records)?;
    println!("scored {} explanations against 3 control concepts\n", doc.scores.len());
    println!("{:<14} {:>7} {:>9} {:>5} {:>5}", "explanation", "AUC", "MAD", "n", "m");
    // Scores come back in record order.
    for (rec, scored) in records.iter().zip(&doc.scores) {
        let r = &scored.result;
        println!("{:<14} {:>7.3} {:>9.5} {:>5} {:>5}", rec.text, r.auc, r.mad, r.n, r.m);
    }

    let path = pipeline.write_document(&doc, None)?;
    println!("\nfull report: {}", path.display());
    Ok(())
}
