//! Supermajority math and round-to-round vote movement for every statement.
//!
//! ```sh
//! cargo run --example vote_dynamics
//! ```

use assembly_lens::corpus::{load_corpus, Round};
use assembly_lens::stance::{detect_vote_changes, support_rate, ChangeKind};
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;

    for statement in corpus.statements() {
        println!("{}: \"{}\"", statement.statement_id, statement.text);
        for round in [Round::Day2Draft, Round::Day3Final] {
            let rate = support_rate(&statement.statement_id, round, corpus.votes())?;
            println!(
                "  {}: {}/{} agree = {:.4} -> {}",
                round.as_str(),
                rate.agrees,
                rate.total,
                rate.rate,
                if rate.passed {
                    "PASSED (>= 80%)"
                } else {
                    "not passed"
                }
            );
        }
        let report = detect_vote_changes(&statement.statement_id, corpus.votes())?;
        for change in &report.changes {
            if change.kind != ChangeKind::Unchanged {
                println!(
                    "  {}: {} -> {} ({:?})",
                    change.delegate_id, change.from_choice, change.to_choice, change.kind
                );
            }
        }
        for incomplete in &report.incomplete {
            println!(
                "  {}: voted only in {} ({})",
                incomplete.delegate_id,
                incomplete.round.as_str(),
                incomplete.choice
            );
        }
        println!();
    }
    Ok(())
}
