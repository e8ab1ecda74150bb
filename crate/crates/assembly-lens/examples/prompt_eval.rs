//! Compare two suggestion-prompt versions against gold labels, then ask a
//! judge backend from a different model family for a narrative verdict.
//!
//! The earliest prompt version never demanded *explicit* suggestions, so the
//! heuristic mock reproduces its looseness: questions, bare facts, and
//! procedural remarks leak through as false positives.
//!
//! ```sh
//! cargo run --example prompt_eval
//! ```

use assembly_lens::corpus::load_corpus;
use assembly_lens::eval::{compare_runs, judge_runs, score_run, GoldLabels, GoldTask, RunOutput};
use assembly_lens::gateway::{
    BackendConfig, Gateway, MockChatBackend, MockEmbedBackend, ResponseCache,
};
use assembly_lens::suggest::{extract_suggestions_corpus, ExtractOptions};
use assembly_lens::util::Clock;
use std::path::Path;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let corpus = load_corpus(&root.join("fixtures/mini/manifest.json"))?;
    let gateway = Gateway::from_config(&BackendConfig::mock_heuristic())?;

    let run_with = |template_id: &str| {
        extract_suggestions_corpus(
            &corpus,
            &gateway,
            &ExtractOptions {
                template_id: template_id.into(),
                ..ExtractOptions::default()
            },
        )
    };
    let baseline = run_with("suggestions-v0")?;
    let final_run = run_with("suggestions-v2-final")?;
    println!(
        "suggestions-v0 extracted {} records; suggestions-v2-final extracted {}",
        baseline.records.len(),
        final_run.records.len()
    );

    let gold_bytes = std::fs::read(root.join("fixtures/mini/gold_suggestions.csv"))?;
    let gold = GoldLabels::parse_csv(&gold_bytes, GoldTask::Suggestions, "gold_suggestions.csv")?;

    let baseline_out = RunOutput::Suggestions(&baseline.records);
    let final_out = RunOutput::Suggestions(&final_run.records);
    let baseline_metrics = score_run(&baseline_out, &gold)?;
    let final_metrics = score_run(&final_out, &gold)?;
    println!("\nv0:       {baseline_metrics:?}");
    println!("v2-final: {final_metrics:?}");

    let comparison = compare_runs(&baseline_out, &final_out, &gold)?;
    println!(
        "\nfalse positives {} -> {}: reduction {:.0}%",
        comparison.run_a.fp,
        comparison.run_b.fp,
        comparison.fp_reduction * 100.0
    );

    // Judge from a different (simulated) model family.
    let judge = Gateway::new(
        Box::new(MockChatBackend::heuristic().with_model_id("judge-sim")),
        Box::new(MockEmbedBackend),
        ResponseCache::ephemeral(),
        4,
        Clock::Fixed(0),
    );
    let report = judge_runs(
        &baseline_out,
        &final_out,
        &judge,
        "judge-v1",
        gateway.chat_model_id(),
    )?;
    println!(
        "\njudge {} vs extraction {} (same family: {})",
        report.judge_model, report.extraction_model, report.same_family_warning
    );
    println!(
        "judge estimates: run A ~{:?} fp, run B ~{:?} fp",
        report.estimated_fp_a, report.estimated_fp_b
    );
    println!("\n{}", report.analysis);
    Ok(())
}
