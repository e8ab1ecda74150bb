//! Run the whole pipeline against the bundled fixture with the scripted
//! mock: ingest, extract, embed, map, gaps, dedup, profile reports, votes.
//! Every artifact lands in a temp directory together with per-stage run
//! manifests; the run is byte-reproducible.
//!
//! ```sh
//! cargo run --example end_to_end
//! ```

use assembly_lens::pipeline::{run_end_to_end, ToolConfig};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let mut config = ToolConfig::from_path(&root.join("fixtures/mini/config.mock.json"))?;
    config.out_dir = std::env::temp_dir().join("assembly_lens_e2e");
    let _ = std::fs::remove_dir_all(&config.out_dir);

    let outputs = run_end_to_end(&config, Some(7))?;
    println!("\n{} artifacts under {}:", outputs.len(), config.out_dir.display());
    let mut sorted: Vec<_> = outputs
        .iter()
        .filter_map(|p| p.strip_prefix(&config.out_dir).ok())
        .collect();
    sorted.sort();
    for path in sorted {
        println!("  {}", path.display());
    }
    Ok(())
}
