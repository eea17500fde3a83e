//! Intraclass similarity of generated image sets.
//!
//! Embeds every image of a concept's batch and reports pairwise cosine
//! similarity and Euclidean distance statistics. High cosine / low distance
//! means the generator renders the concept consistently, which is a
//! precondition for trusting scores computed on those images.
//!
//! Run with: cargo run --example intraclass_similarity

use cosy::activation::ToyColorModel;
use cosy::imagegen::{MockBackend, PromptTemplate};
use cosy::metaeval::{intraclass_stats, EvalContext, MockEmbedder};
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
        template: PromptTemplate::builtin(1)?,
        images_per_concept: 25,
        tie_policy: TiePolicy::Midrank,
        global_seed: 404,
    };

    println!(
        "{:<14} {:>9} {:>9} {:>9} {:>9} {:>7}",
        "concept", "cs mean", "cs std", "ed mean", "ed std", "pairs"
    );
    for concept in ["copper fork", "hollow canoe", "stone wharf"] {
        let batch = ctx.generate(concept, ctx.global_seed)?;
        let stats = intraclass_stats(&ctx.embed_batch(&batch))?;
        println!(
            "{:<14} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>7}",
            concept, stats.cs_mean, stats.cs_std, stats.ed_mean, stats.ed_std, stats.pair_count
        );
    }
    println!("\n(25 images per concept -> 300 unordered pairs each)");
    Ok(())
}
