//! Load the bundled mini-assembly corpus and poke at its structure.
//!
//! ```sh
//! cargo run --example ingest_corpus
//! ```

use assembly_lens::corpus::{load_corpus, window_turns};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;

    println!("corpus: {}", corpus.stats());
    for transcript in corpus.transcripts() {
        println!(
            "  {} (day {}, {}): {} turns",
            transcript.conversation_id,
            transcript.day,
            transcript.phase,
            transcript.turns.len()
        );
    }

    // The batching the LLM stages use: 10 turns per window, with the 10
    // preceding turns as context.
    let transcript = &corpus.transcripts()[0];
    let windows = window_turns(transcript, 10, 10);
    println!(
        "\n{} windows over {} (current sizes: {:?})",
        windows.len(),
        transcript.conversation_id,
        windows.iter().map(|w| w.current.len()).collect::<Vec<_>>()
    );
    let last = windows.last().expect("transcript is non-empty");
    println!(
        "last window starts at turn {} with {} context turns",
        last.start_index,
        last.context.len()
    );
    Ok(())
}
