//! Stability of scores across generation seeds.
//!
//! A score is only trustworthy when it does not hinge on the exact batch of
//! synthetic images. This regenerates one concept's batch under several
//! seeds, re-scores it each time, and summarizes the spread of AUC and of
//! the batch's intraclass similarity.
//!
//! Run with: cargo run --example seed_stability

use cosy::activation::ToyColorModel;
use cosy::imagegen::{MockBackend, PromptTemplate};
use cosy::metaeval::{seed_stability, EvalContext, MockEmbedder};
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
        template: PromptTemplate::builtin(5)?,
        images_per_concept: 16,
        tie_policy: TiePolicy::Midrank,
        global_seed: 1000,
    };

    let concepts: Vec<String> =
        ["basket", "brook", "clay lagoon"].iter().map(|s| s.to_string()).collect();
    let control = ctx.control_store(&concepts)?;

    // Probe "basket" on neuron 0 (mean red); its control rows are excluded
    // from the comparison, so each seed scores fresh images against the rest.
    let seeds: Vec<u64> = (0..8).map(|i| 1000 + i).collect();
    let report = seed_stability("basket", 0, &seeds, &control, &ctx)?;

    println!("{:<8} {:>7} {:>9} {:>9}", "seed", "AUC", "intra cs", "intra ed");
    for (((seed, auc), cs), ed) in report
        .seeds
        .iter()
        .zip(&report.auc_per_seed)
        .zip(&report.cs_per_seed)
        .zip(&report.ed_per_seed)
    {
        println!("{seed:<8} {auc:>7.3} {cs:>9.4} {ed:>9.4}");
    }
    println!(
        "\nAUC mean {:.3} std {:.4} | cs mean {:.4} std {:.5} | ed mean {:.4} std {:.5}",
        report.auc_mean, report.auc_std, report.cs_mean, report.cs_std, report.ed_mean,
        report.ed_std
    );
    Ok(())
}
