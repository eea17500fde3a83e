//! Sanity probe: true labels must beat random distractors.
//!
//! Assigns each toy-model neuron a "true" concept by argmax over control
//! activations, then scores that concept and a seeded random distractor for
//! every neuron. A healthy scoring setup shows a wide gap between the two
//! AUC columns; a broken one shows none.
//!
//! Run with: cargo run --example sanity_check

use cosy::activation::ToyColorModel;
use cosy::imagegen::{MockBackend, PromptTemplate};
use cosy::metaeval::{sanity_check, true_labels_by_argmax, EvalContext, MockEmbedder};
use cosy::scoring::TiePolicy;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cache = tempfile::tempdir()?;
    let backend = MockBackend;
    let adapter = ToyColorModel;
    let embedder = MockEmbedder;
    let ctx = EvalContext {
        backend: &backend,
        cache_root: cache.path(),
        adapter: &adapter,
        embedder: &embedder,
        layer_id: "color".into(),
        template: PromptTemplate::builtin(4)?,
        images_per_concept: 30,
        tie_policy: TiePolicy::Strict,
        global_seed: 0x5EED,
    };

    let candidates: Vec<String> = [
        "amber arch",
        "basket",
        "big pond",
        "bitter sail",
        "brook",
        "cedar canyon",
        "clay lagoon",
        "copper fork",
        "hollow canoe",
        "stone wharf",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();

    let control = ctx.control_store(&candidates)?;
    let labels = true_labels_by_argmax(&control, &candidates, &[0, 1, 2, 3])?;
    println!("argmax labels over the control set:");
    for (neuron, concept) in &labels {
        println!("  neuron {neuron} -> {concept:?}");
    }

    let report = sanity_check(&labels, &candidates, &control, &ctx)?;
    println!(
        "\n{:<8} {:<14} {:>9} {:<14} {:>11}",
        "neuron", "true concept", "true AUC", "distractor", "random AUC"
    );
    for row in &report.rows {
        println!(
            "{:<8} {:<14} {:>9.3} {:<14} {:>11.3}",
            row.neuron_index, row.true_concept, row.true_auc, row.random_concept, row.random_auc
        );
    }
    println!(
        "\ntrue AUC mean {:.3} (std {:.3})   random AUC mean {:.3} (std {:.3})",
        report.true_auc_mean, report.true_auc_std, report.random_auc_mean, report.random_auc_std
    );
    Ok(())
}
