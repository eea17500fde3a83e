//! Rendering one scoring document in every output format.
//!
//! Scores a tiny run, then renders the resulting document as JSON (the full
//! machine-readable form, byte-stable across reruns), CSV (score table plus
//! per-neuron distribution files), and Markdown (a human digest). Documents
//! embed the config hash, so a report can always be traced to the exact run
//! configuration that produced it.
//!
//! Run with: cargo run --example render_reports

use cosy::concepts::{BackendConfig, ExplanationRecord, RunConfig};
use cosy::imagegen::PromptTemplate;
use cosy::pipeline::Pipeline;
use cosy::report::{render_report, ReportFormat};
use cosy::scoring::TiePolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let workdir = tempfile::tempdir()?;
    let control_path = workdir.path().join("control.txt");
    std::fs::write(&control_path, "brook\nclay lagoon\n")?;

    let config = RunConfig {
        control_dataset_path: control_path.display().to_string(),
        generator_backend: BackendConfig::Mock,
        prompt_template: PromptTemplate::builtin(3)?,
        images_per_concept: 10,
        global_seed: 3,
        tie_policy: TiePolicy::Strict,
        model_id: "toy-color".into(),
        layer_id: "color".into(),
        output_dir: workdir.path().join("out").display().to_string(),
    };
    let pipeline = Pipeline::new(config)?;

    let records = vec![ExplanationRecord {
        method_id: "manual".into(),
        layer_id: "color".into(),
        neuron_index: 2,
        text: "hollow canoe".into(),
    }];
    let doc = pipeline.run_score(&records)?;
    println!("document kind {:?}, config hash {}", doc.kind, doc.config_hash);

    for format in [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Md] {
        let dir = workdir.path().join(format!("{format:?}").to_lowercase());
        let files = render_report(&doc, format, &dir)?;
        println!("\n{format:?} rendering:");
        for file in &files {
            println!("  {}", file.display());
        }
    }

    let md = std::fs::read_to_string(
        workdir.path().join("md").join("report.md"),
    )?;
    println!("\n--- markdown digest ---\n{md}");
    Ok(())
}
