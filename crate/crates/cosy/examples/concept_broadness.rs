//! Broadness probe: does specificity show up in the image sets?
//!
//! Walks a hypernym chain from its root down to the concept, generates one
//! image set per level, and measures each set's intraclass similarity.
//! Specific concepts should produce tighter sets than broad ones, which the
//! report condenses into rank correlations of depth versus similarity.
//!
//! Run with: cargo run --example concept_broadness

use cosy::activation::ToyColorModel;
use cosy::concepts::TaxonomyChain;
use cosy::imagegen::{MockBackend, PromptTemplate};
use cosy::metaeval::{concept_broadness, EvalContext, MockEmbedder};
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
        template: PromptTemplate::builtin(3)?,
        images_per_concept: 20,
        tie_policy: TiePolicy::Midrank,
        global_seed: 13,
    };

    // Hypernyms are listed nearest-first, ending at the root.
    let chain = TaxonomyChain::new(
        "ladybug".into(),
        vec!["beetle".into(), "insect".into(), "animal".into(), "entity".into()],
    )?;
    let report = concept_broadness(&chain, &ctx)?;

    println!("chain for {:?}, root first:\n", report.concept);
    println!("{:<10} {:<10} {:>9} {:>9} {:>9} {:>9}", "depth", "concept", "cs mean", "cs std", "ed mean", "ed std");
    for level in &report.levels {
        println!(
            "{:<10} {:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            level.hypernym_count, level.concept, level.cs_mean, level.cs_std, level.ed_mean,
            level.ed_std
        );
    }
    match (report.spearman_cs, report.spearman_ed) {
        (Some(cs), Some(ed)) => {
            println!("\nSpearman depth vs cs mean: {cs:+.3}   depth vs ed mean: {ed:+.3}")
        }
        _ => println!("\nrank correlation undefined (constant column)"),
    }
    Ok(())
}
