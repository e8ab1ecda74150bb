//! Reconstruct one delegate's stance evolution on one statement: classify
//! every turn for evidence, assemble the chronological profile, render the
//! report.
//!
//! ```sh
//! cargo run --example delegate_profile
//! ```

use assembly_lens::corpus::load_corpus;
use assembly_lens::gateway::{BackendConfig, Gateway};
use assembly_lens::stance::{
    build_profile, classify_evidence_corpus, render_profile_report, ClassifyOptions,
};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;
    let gateway = Gateway::from_config(&BackendConfig::mock_heuristic())?;

    // One classification per turn, all categories, across every transcript.
    let records =
        classify_evidence_corpus(&corpus, "s_divest", &gateway, &ClassifyOptions::default())?;
    let relevant = records
        .iter()
        .filter(|r| r.matched.category.is_relevant())
        .count();
    println!(
        "classified {} turns against s_divest; {} relevant (category 1 or 2)",
        records.len(),
        relevant
    );

    // The profile keeps the delegate's own category-1/2 evidence above the
    // confidence floor, in chronological order, with their ballots attached.
    let profile = build_profile("d01", "s_divest", &corpus, &records, 0.5)?;
    println!(
        "profile d01 x s_divest: {} evidence records, {} votes\n",
        profile.evidence.len(),
        profile.votes.len()
    );
    print!("{}", render_profile_report(&profile, &corpus));
    Ok(())
}
