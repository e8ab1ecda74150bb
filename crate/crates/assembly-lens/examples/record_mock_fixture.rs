//! Freeze a heuristic mock run into a replayable scripted fixture.
//!
//! The scripted mock answers by exact request digest, so end-to-end runs
//! replay byte-identically. This regenerates the bundled
//! `fixtures/mini/mock_script.jsonl`:
//!
//! ```sh
//! cargo run --example record_mock_fixture
//! ```

use assembly_lens::pipeline::{record_heuristic_script, ToolConfig};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let config = ToolConfig::from_path(&root.join("fixtures/mini/config.heuristic.json"))?;
    let script = record_heuristic_script(&config)?;
    let out = root.join("fixtures/mini/mock_script.jsonl");
    std::fs::write(&out, script.to_jsonl())?;
    println!(
        "recorded {} scripted responses into {}",
        script.entries().len(),
        out.display()
    );
    Ok(())
}
