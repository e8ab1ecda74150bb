//! Extract voiced suggestions from every transcript with the offline
//! heuristic mock backend.
//!
//! ```sh
//! cargo run --example extract_suggestions
//! ```

use assembly_lens::corpus::load_corpus;
use assembly_lens::gateway::{BackendConfig, Gateway};
use assembly_lens::suggest::{extract_suggestions_corpus, ExtractOptions};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;
    let gateway = Gateway::from_config(&BackendConfig::mock_heuristic())?;

    let set = extract_suggestions_corpus(&corpus, &gateway, &ExtractOptions::default())?;
    println!(
        "extracted {} suggestions from {} batches (template {}, model {})",
        set.records.len(),
        set.metadata.batches,
        set.metadata.template_id,
        set.metadata.chat_model
    );
    for record in &set.records {
        println!(
            "\n{} ({} on day {}, turn {})",
            record.suggestion_id, record.user_id, record.day, record.turn_index
        );
        println!("  quote:      \"{}\"", record.quote);
        println!("  paraphrase: {}", record.suggestion);
        if !record.quote_matches_source {
            println!("  WARNING: quote not found verbatim in the source turn");
        }
    }
    Ok(())
}
