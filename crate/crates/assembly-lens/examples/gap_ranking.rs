//! Rank suggestions by semantic distance from the recommendations, then
//! report near-duplicate groups.
//!
//! ```sh
//! cargo run --example gap_ranking
//! ```

use assembly_lens::corpus::load_corpus;
use assembly_lens::gateway::{BackendConfig, Gateway};
use assembly_lens::space::{rank_gaps, EmbeddingMatrix};
use assembly_lens::suggest::{dedup_candidates, extract_suggestions_corpus, ExtractOptions};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;
    let gateway = Gateway::from_config(&BackendConfig::mock_heuristic())?;

    let set = extract_suggestions_corpus(&corpus, &gateway, &ExtractOptions::default())?;
    let ids: Vec<String> = set.records.iter().map(|r| r.suggestion_id.clone()).collect();
    let texts: Vec<String> = set.records.iter().map(|r| r.suggestion.clone()).collect();
    let suggestions = EmbeddingMatrix::new(
        ids.clone(),
        gateway.embed_texts(&texts)?,
        gateway.embed_model_id(),
    )?;

    let rec_ids: Vec<String> = corpus
        .statements()
        .iter()
        .map(|s| s.statement_id.clone())
        .collect();
    let rec_texts: Vec<String> = corpus.statements().iter().map(|s| s.text.clone()).collect();
    let recommendations = EmbeddingMatrix::new(
        rec_ids,
        gateway.embed_texts(&rec_texts)?,
        gateway.embed_model_id(),
    )?;

    // The suggestions most distant from any recommendation are candidate
    // gaps: ideas voiced during deliberation that no recommendation covers.
    let ranking = rank_gaps(&suggestions, &recommendations, 100)?;
    println!("gap ranking (most distant first):");
    for entry in &ranking.entries {
        println!(
            "  {}  distance {:.4}  (nearest: {}, cosine {:.4})",
            entry.suggestion_id,
            entry.distance,
            entry.nearest_recommendation_id,
            entry.max_similarity
        );
    }

    // Near-duplicate grouping is report-only; merging stayed a human call.
    let groups = dedup_candidates(&ids, &suggestions, 0.95)?;
    if groups.is_empty() {
        println!("\nno near-duplicate groups at threshold 0.95");
    } else {
        println!("\nnear-duplicate groups at threshold 0.95:");
        for group in groups {
            println!("  {}", group.join(", "));
        }
    }
    Ok(())
}
