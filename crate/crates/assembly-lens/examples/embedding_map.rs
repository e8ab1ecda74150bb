//! Embed suggestions and recommendations, project them to 2-D with t-SNE,
//! and write an SVG scatter map.
//!
//! ```sh
//! cargo run --example embedding_map
//! ```

use assembly_lens::corpus::{load_corpus, Round};
use assembly_lens::gateway::{BackendConfig, Gateway};
use assembly_lens::space::{
    apply_overlay, emit_map, tsne_embed, EmbeddingMatrix, MapFormat, PointKind, TsneConfig,
};
use assembly_lens::stance::support_rate;
use assembly_lens::suggest::{extract_suggestions_corpus, ExtractOptions};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;
    let gateway = Gateway::from_config(&BackendConfig::mock_heuristic())?;

    let set = extract_suggestions_corpus(&corpus, &gateway, &ExtractOptions::default())?;
    let texts: Vec<String> = set.records.iter().map(|r| r.suggestion.clone()).collect();
    let ids: Vec<String> = set.records.iter().map(|r| r.suggestion_id.clone()).collect();
    let suggestions =
        EmbeddingMatrix::new(ids, gateway.embed_texts(&texts)?, gateway.embed_model_id())?;

    let rec_texts: Vec<String> = corpus.statements().iter().map(|s| s.text.clone()).collect();
    let rec_ids: Vec<String> = corpus
        .statements()
        .iter()
        .map(|s| s.statement_id.clone())
        .collect();
    let recommendations =
        EmbeddingMatrix::new(rec_ids, gateway.embed_texts(&rec_texts)?, gateway.embed_model_id())?;

    // Project the joint space. Low perplexity: the fixture has 8 points.
    let stacked = suggestions.stacked(&recommendations)?;
    let config = TsneConfig::default().with_seed(7);
    let map = tsne_embed(&stacked, &config)?;
    println!(
        "t-SNE: {} points, KL {:.4} -> {:.4} over {} iterations",
        map.len(),
        map.kl_trace.first().unwrap(),
        map.kl_trace.last().unwrap(),
        map.kl_trace.len()
    );

    // Recommendation glyphs reflect the final-round supermajority.
    let mut kinds = vec![PointKind::Suggestion; suggestions.len()];
    for id in recommendations.ids() {
        let rate = support_rate(id, Round::Day3Final, corpus.votes())?;
        kinds.push(if rate.passed {
            PointKind::RecPassed
        } else {
            PointKind::RecFailed
        });
        println!(
            "  {id}: {}/{} agree in the final round -> {}",
            rate.agrees,
            rate.total,
            if rate.passed { "passed" } else { "failed" }
        );
    }
    let map = apply_overlay(map.with_kinds(kinds), corpus.labels())?;

    let out = std::env::temp_dir().join("assembly_lens_map.svg");
    std::fs::write(&out, emit_map(&map, MapFormat::Svg))?;
    println!("wrote {}", out.display());
    Ok(())
}
