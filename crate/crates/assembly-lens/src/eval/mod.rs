//! Prompt-iteration evaluation: gold-label scoring, run comparison, and an
//! optional cross-family judge.

use crate::gateway::{ChatRequest, Gateway, GatewayError};
use crate::stance::{EvidenceCategory, EvidenceRecord};
use crate::suggest::SuggestionRecord;
use crate::util;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("run references turn {conversation_id}:{turn_index} not covered by gold labels")]
    UncoveredTurn {
        conversation_id: String,
        turn_index: usize,
    },
    #[error("baseline run has zero false positives; reduction undefined")]
    ZeroBaselineFp,
    #[error("gold labels are for the {gold} task, run is {run}")]
    TaskMismatch { gold: String, run: String },
    #[error("{file}:{line}: {message}")]
    BadGold {
        file: String,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
}

/// Which task a gold file labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldTask {
    Suggestions,
    Evidence,
}

impl GoldTask {
    fn as_str(&self) -> &'static str {
        match self {
            GoldTask::Suggestions => "suggestions",
            GoldTask::Evidence => "evidence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GoldValue {
    Flag(bool),
    Category(EvidenceCategory),
}

/// Per-turn gold labels for one task.
#[derive(Debug, Clone)]
pub struct GoldLabels {
    pub task: GoldTask,
    labels: HashMap<(String, usize), GoldValue>,
}

impl GoldLabels {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Parse a `conversation_id,turn_index,label` CSV. Suggestion labels are
    /// `0`/`1` (or `false`/`true`); evidence labels are categories `1`-`3`.
    pub fn parse_csv(bytes: &[u8], task: GoldTask, file: &str) -> Result<GoldLabels, EvalError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(bytes);
        let mut labels = HashMap::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let bad = |message: String| EvalError::BadGold {
                file: file.to_string(),
                line,
                message,
            };
            let row = row.map_err(|e| bad(e.to_string()))?;
            if row.len() != 3 {
                return Err(bad(format!("expected 3 columns, got {}", row.len())));
            }
            let turn_index: usize = row[1]
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad turn_index {:?}", &row[1])))?;
            let value = match task {
                GoldTask::Suggestions => match row[2].trim() {
                    "1" | "true" => GoldValue::Flag(true),
                    "0" | "false" => GoldValue::Flag(false),
                    other => return Err(bad(format!("bad suggestion label {other:?}"))),
                },
                GoldTask::Evidence => match row[2].trim() {
                    "1" => GoldValue::Category(EvidenceCategory::Direct),
                    "2" => GoldValue::Category(EvidenceCategory::Contextual),
                    "3" => GoldValue::Category(EvidenceCategory::NotRelevant),
                    other => return Err(bad(format!("bad evidence label {other:?}"))),
                },
            };
            let key = (row[0].to_string(), turn_index);
            if labels.insert(key, value).is_some() {
                return Err(bad(format!(
                    "duplicate label for {}:{}",
                    &row[0], turn_index
                )));
            }
        }
        Ok(GoldLabels { task, labels })
    }
}

/// A scored run's outputs.
#[derive(Debug, Clone, Copy)]
pub enum RunOutput<'a> {
    Suggestions(&'a [SuggestionRecord]),
    Evidence(&'a [EvidenceRecord]),
}

impl RunOutput<'_> {
    fn task(&self) -> GoldTask {
        match self {
            RunOutput::Suggestions(_) => GoldTask::Suggestions,
            RunOutput::Evidence(_) => GoldTask::Evidence,
        }
    }

    /// Stable digest of the run's serialized records.
    pub fn digest(&self) -> String {
        match self {
            RunOutput::Suggestions(records) => {
                util::digest_parts(&["suggestions", &crate::suggest::records_to_jsonl(records)])
            }
            RunOutput::Evidence(records) => {
                util::digest_parts(&["evidence", &crate::stance::evidence_to_jsonl(records)])
            }
        }
    }
}

/// Turn-level counts. Precision and recall are `None` when their
/// denominators are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

impl Metrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Metrics {
        let ratio = |num: usize, den: usize| {
            if den == 0 {
                None
            } else {
                Some(num as f64 / den as f64)
            }
        };
        Metrics {
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
        }
    }
}

/// Score a run against gold labels, turn by turn.
///
/// Suggestions: a turn is positive when the run extracted a suggestion from
/// it. Evidence: a relevant turn (category 1 or 2) counts as a true positive
/// only when the predicted category matches gold exactly; a relevant
/// prediction with the wrong category is both a false positive and a miss.
pub fn score_run(run: &RunOutput<'_>, gold: &GoldLabels) -> Result<Metrics, EvalError> {
    if run.task() != gold.task {
        return Err(EvalError::TaskMismatch {
            gold: gold.task.as_str().into(),
            run: run.task().as_str().into(),
        });
    }

    let mut predicted: HashMap<(String, usize), GoldValue> = HashMap::new();
    match run {
        RunOutput::Suggestions(records) => {
            for r in *records {
                predicted.insert(
                    (r.conversation_id.clone(), r.turn_index),
                    GoldValue::Flag(true),
                );
            }
        }
        RunOutput::Evidence(records) => {
            for r in *records {
                predicted.insert(
                    (r.conversation_id.clone(), r.turn_index),
                    GoldValue::Category(r.matched.category),
                );
            }
        }
    }
    for (conversation_id, turn_index) in predicted.keys() {
        if !gold.labels.contains_key(&(conversation_id.clone(), *turn_index)) {
            return Err(EvalError::UncoveredTurn {
                conversation_id: conversation_id.clone(),
                turn_index: *turn_index,
            });
        }
    }

    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (key, gold_value) in &gold.labels {
        let predicted_value = predicted.get(key);
        match (gold_value, gold.task) {
            (GoldValue::Flag(gold_positive), GoldTask::Suggestions) => {
                let run_positive = predicted_value.is_some();
                match (run_positive, gold_positive) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fn_ += 1,
                    (false, false) => {}
                }
            }
            (GoldValue::Category(gold_cat), GoldTask::Evidence) => {
                let predicted_cat = match predicted_value {
                    Some(GoldValue::Category(c)) => *c,
                    _ => EvidenceCategory::NotRelevant,
                };
                let gold_relevant = gold_cat.is_relevant();
                let run_relevant = predicted_cat.is_relevant();
                if gold_relevant {
                    if run_relevant && predicted_cat == *gold_cat {
                        tp += 1;
                    } else {
                        fn_ += 1;
                        if run_relevant {
                            fp += 1;
                        }
                    }
                } else if run_relevant {
                    fp += 1;
                }
            }
            // Task is checked above; values always match it.
            _ => unreachable!("gold value inconsistent with task"),
        }
    }
    Ok(Metrics::from_counts(tp, fp, fn_))
}

/// Side-by-side metrics for two runs with the false-positive reduction of B
/// relative to A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub run_a: Metrics,
    pub run_b: Metrics,
    pub fp_reduction: f64,
}

/// Compare two runs against the same gold labels.
/// `fp_reduction = (fp_a - fp_b) / fp_a`, defined only for `fp_a > 0`.
pub fn compare_runs(
    run_a: &RunOutput<'_>,
    run_b: &RunOutput<'_>,
    gold: &GoldLabels,
) -> Result<RunComparison, EvalError> {
    let metrics_a = score_run(run_a, gold)?;
    let metrics_b = score_run(run_b, gold)?;
    if metrics_a.fp == 0 {
        return Err(EvalError::ZeroBaselineFp);
    }
    let fp_reduction = (metrics_a.fp as f64 - metrics_b.fp as f64) / metrics_a.fp as f64;
    Ok(RunComparison {
        run_a: metrics_a,
        run_b: metrics_b,
        fp_reduction,
    })
}

/// A judge model's free-text verdict on two runs. Judge counts are
/// estimates, stored apart from gold-based metrics and never treated as
/// ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeReport {
    pub analysis: String,
    pub run_a_digest: String,
    pub run_b_digest: String,
    pub extraction_model: String,
    pub judge_model: String,
    pub estimated_fp_a: Option<u64>,
    pub estimated_fp_b: Option<u64>,
    /// Set when the judge and extraction models share a family, which risks
    /// self-preference bias.
    pub same_family_warning: bool,
}

/// Model family: the id segment before the first `-`.
pub fn model_family(model_id: &str) -> String {
    model_id
        .split('-')
        .next()
        .unwrap_or(model_id)
        .to_lowercase()
}

fn format_run_block(run: &RunOutput<'_>) -> String {
    let mut out = String::new();
    match run {
        RunOutput::Suggestions(records) => {
            for r in *records {
                out.push_str(&format!(
                    "- [{}:{}] \"{}\" => {}\n",
                    r.conversation_id, r.turn_index, r.quote, r.suggestion
                ));
            }
        }
        RunOutput::Evidence(records) => {
            for r in records.iter().filter(|r| r.matched.category.is_relevant()) {
                out.push_str(&format!(
                    "- [{}:{}] category {} (confidence {:.2})\n",
                    r.conversation_id,
                    r.turn_index,
                    r.matched.category.as_str(),
                    r.matched.confidence
                ));
            }
        }
    }
    if out.is_empty() {
        out.push_str("(no items)\n");
    }
    out
}

fn estimate_re(run: char) -> Regex {
    Regex::new(&format!(
        r"(?i)run {run} false positives:?\s*~?(\d+)"
    ))
    .expect("valid regex")
}

fn parse_estimates(analysis: &str) -> (Option<u64>, Option<u64>) {
    static RES: OnceLock<(Regex, Regex)> = OnceLock::new();
    let (re_a, re_b) = RES.get_or_init(|| (estimate_re('a'), estimate_re('b')));
    let grab = |re: &Regex| {
        re.captures(analysis)
            .and_then(|c| c.get(1))
            .and_then(|m| m.as_str().parse().ok())
    };
    (grab(re_a), grab(re_b))
}

/// Ask a judge model to analyze two runs. The judge backend is configured
/// separately from the extraction backend; a shared model family raises a
/// non-fatal warning recorded in the report.
pub fn judge_runs(
    run_a: &RunOutput<'_>,
    run_b: &RunOutput<'_>,
    judge: &Gateway,
    template_id: &str,
    extraction_model: &str,
) -> Result<JudgeReport, EvalError> {
    let template = judge.templates().get(template_id)?;
    let mut bindings = std::collections::BTreeMap::new();
    bindings.insert("run_a_id".to_string(), "A".to_string());
    bindings.insert("run_b_id".to_string(), "B".to_string());
    bindings.insert("run_a".to_string(), format_run_block(run_a));
    bindings.insert("run_b".to_string(), format_run_block(run_b));
    let user = template.render(&bindings)?;
    let request = ChatRequest {
        system: template.system_text.clone(),
        user,
        schema_id: "raw".to_string(),
    };
    let completion = judge.complete_text(&request)?;
    let (estimated_fp_a, estimated_fp_b) = parse_estimates(&completion.text);
    Ok(JudgeReport {
        analysis: completion.text,
        run_a_digest: run_a.digest(),
        run_b_digest: run_b.digest(),
        extraction_model: extraction_model.to_string(),
        judge_model: judge.chat_model_id().to_string(),
        estimated_fp_a,
        estimated_fp_b,
        same_family_warning: model_family(extraction_model)
            == model_family(judge.chat_model_id()),
    })
}

/// Human-readable comparison table.
pub fn comparison_text(comparison: &RunComparison) -> String {
    let fmt = |m: &Metrics| {
        let show = |v: Option<f64>| match v {
            Some(v) => format!("{v:.4}"),
            None => "undefined".to_string(),
        };
        format!(
            "tp={} fp={} fn={} precision={} recall={}",
            m.tp,
            m.fp,
            m.fn_,
            show(m.precision),
            show(m.recall)
        )
    };
    format!(
        "run A: {}\nrun B: {}\nfalse-positive reduction: {:.2}%\n",
        fmt(&comparison.run_a),
        fmt(&comparison.run_b),
        comparison.fp_reduction * 100.0
    )
}

/// Conversations named by a gold label set, sorted.
pub fn gold_conversations(gold: &GoldLabels) -> Vec<String> {
    let set: BTreeSet<&str> = gold.labels.keys().map(|(c, _)| c.as_str()).collect();
    set.into_iter().map(str::to_string).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn suggestion_record(conversation: &str, turn: usize) -> SuggestionRecord {
        SuggestionRecord {
            suggestion_id: format!("sug-{conversation}-{turn:04}"),
            user_id: "d01".into(),
            quote: "quote".into(),
            suggestion: "I suggest it.".into(),
            conversation_id: conversation.into(),
            turn_index: turn,
            day: 2,
            phase: "Draft".into(),
            quote_matches_source: true,
        }
    }

    fn gold_for(positives: &[usize], total: usize) -> GoldLabels {
        let mut csv = String::from("conversation_id,turn_index,label\n");
        for i in 0..total {
            let flag = if positives.contains(&i) { 1 } else { 0 };
            csv.push_str(&format!("c,{i},{flag}\n"));
        }
        GoldLabels::parse_csv(csv.as_bytes(), GoldTask::Suggestions, "gold.csv").unwrap()
    }

    #[test]
    fn scores_mixed_run() {
        // 9 gold positives; run finds 8 of them plus 2 spurious ones.
        let gold = gold_for(&[0, 1, 2, 3, 4, 5, 6, 7, 8], 20);
        let records: Vec<SuggestionRecord> = (0..8)
            .chain([15, 16])
            .map(|i| suggestion_record("c", i))
            .collect();
        let metrics = score_run(&RunOutput::Suggestions(&records), &gold).unwrap();
        assert_eq!((metrics.tp, metrics.fp, metrics.fn_), (8, 2, 1));
        assert_eq!(metrics.precision, Some(0.8));
        assert_eq!(metrics.recall, Some(8.0 / 9.0));
    }

    #[test]
    fn perfect_run_scores_ones() {
        let gold = gold_for(&[1, 3], 5);
        let records = vec![suggestion_record("c", 1), suggestion_record("c", 3)];
        let metrics = score_run(&RunOutput::Suggestions(&records), &gold).unwrap();
        assert_eq!(metrics.precision, Some(1.0));
        assert_eq!(metrics.recall, Some(1.0));
    }

    #[test]
    fn degenerate_run_yields_undefined_markers() {
        let gold = gold_for(&[], 5);
        let records: Vec<SuggestionRecord> = vec![];
        let metrics = score_run(&RunOutput::Suggestions(&records), &gold).unwrap();
        assert_eq!(metrics.fp, 0);
        assert_eq!(metrics.precision, None);
        assert_eq!(metrics.recall, None);
    }

    #[test]
    fn uncovered_turn_is_an_error() {
        let gold = gold_for(&[0], 2);
        let records = vec![suggestion_record("c", 7)];
        assert!(matches!(
            score_run(&RunOutput::Suggestions(&records), &gold),
            Err(EvalError::UncoveredTurn { turn_index: 7, .. })
        ));
    }

    #[test]
    fn tp_plus_fn_equals_gold_positives() {
        let gold = gold_for(&[0, 2, 4, 6, 8, 10], 12);
        let records: Vec<SuggestionRecord> =
            [0, 2, 5, 7].iter().map(|&i| suggestion_record("c", i)).collect();
        let metrics = score_run(&RunOutput::Suggestions(&records), &gold).unwrap();
        assert_eq!(metrics.tp + metrics.fn_, 6);
    }

    #[test]
    fn ninety_percent_fp_reduction() {
        // Run A: 20 false positives. Run B: 2. Reduction exactly 0.90.
        let gold = gold_for(&[], 25);
        let a: Vec<SuggestionRecord> = (0..20).map(|i| suggestion_record("c", i)).collect();
        let b: Vec<SuggestionRecord> = (0..2).map(|i| suggestion_record("c", i)).collect();
        let comparison = compare_runs(
            &RunOutput::Suggestions(&a),
            &RunOutput::Suggestions(&b),
            &gold,
        )
        .unwrap();
        assert_eq!(comparison.run_a.fp, 20);
        assert_eq!(comparison.run_b.fp, 2);
        assert_eq!(comparison.fp_reduction, 0.90);
    }

    #[test]
    fn identical_runs_reduce_nothing() {
        let gold = gold_for(&[], 5);
        let a: Vec<SuggestionRecord> = (0..3).map(|i| suggestion_record("c", i)).collect();
        let comparison = compare_runs(
            &RunOutput::Suggestions(&a),
            &RunOutput::Suggestions(&a),
            &gold,
        )
        .unwrap();
        assert_eq!(comparison.fp_reduction, 0.0);
    }

    #[test]
    fn zero_baseline_fp_is_an_error() {
        let gold = gold_for(&[0], 3);
        let a = vec![suggestion_record("c", 0)];
        assert!(matches!(
            compare_runs(
                &RunOutput::Suggestions(&a),
                &RunOutput::Suggestions(&a),
                &gold
            ),
            Err(EvalError::ZeroBaselineFp)
        ));
    }

    #[test]
    fn fp_reduction_is_antisymmetric_in_sign() {
        let gold = gold_for(&[], 30);
        let a: Vec<SuggestionRecord> = (0..10).map(|i| suggestion_record("c", i)).collect();
        let b: Vec<SuggestionRecord> = (0..4).map(|i| suggestion_record("c", i)).collect();
        let ab = compare_runs(
            &RunOutput::Suggestions(&a),
            &RunOutput::Suggestions(&b),
            &gold,
        )
        .unwrap();
        let ba = compare_runs(
            &RunOutput::Suggestions(&b),
            &RunOutput::Suggestions(&a),
            &gold,
        )
        .unwrap();
        assert!(ab.fp_reduction > 0.0);
        assert!(ba.fp_reduction < 0.0);
    }

    #[test]
    fn model_families_split_on_first_dash() {
        assert_eq!(model_family("o3-mini"), "o3");
        assert_eq!(model_family("claude-3-7-sonnet"), "claude");
        assert_eq!(model_family("mock-chat"), "mock");
    }

    #[test]
    fn estimates_parse_leniently() {
        let (a, b) = parse_estimates("Run A false positives: 20\nRun B false positives: ~2\n");
        assert_eq!((a, b), (Some(20), Some(2)));
        let (a, b) = parse_estimates("no numbers to be found here");
        assert_eq!((a, b), (None, None));
    }

    #[test]
    fn evidence_scoring_requires_category_match() {
        let mut csv = String::from("conversation_id,turn_index,label\n");
        csv.push_str("c,0,1\nc,1,2\nc,2,3\nc,3,1\n");
        let gold = GoldLabels::parse_csv(csv.as_bytes(), GoldTask::Evidence, "g.csv").unwrap();

        let record = |turn: usize, category: EvidenceCategory| EvidenceRecord {
            matched: crate::stance::EvidenceMatch {
                category,
                topic_mentioned: false,
                rationale: if category == EvidenceCategory::Direct {
                    "r".into()
                } else {
                    String::new()
                },
                response_quote: if category == EvidenceCategory::Contextual {
                    "q".into()
                } else {
                    String::new()
                },
                response_rationale: if category == EvidenceCategory::Contextual {
                    "rr".into()
                } else {
                    String::new()
                },
                irrelevance_reason: if category == EvidenceCategory::NotRelevant {
                    "ir".into()
                } else {
                    String::new()
                },
                confidence: 0.8,
            },
            statement_id: "s".into(),
            conversation_id: "c".into(),
            turn_index: turn,
            speaker_id: "d01".into(),
            day: 2,
            phase: "p".into(),
            response_quote_matched: true,
        };
        // turn 0: exact match (tp). turn 1: wrong relevant category (fp+fn).
        // turn 2: spurious relevance (fp). turn 3: missed (fn).
        let records = vec![
            record(0, EvidenceCategory::Direct),
            record(1, EvidenceCategory::Direct),
            record(2, EvidenceCategory::Contextual),
            record(3, EvidenceCategory::NotRelevant),
        ];
        let metrics = score_run(&RunOutput::Evidence(&records), &gold).unwrap();
        assert_eq!((metrics.tp, metrics.fp, metrics.fn_), (1, 2, 2));
        // tp + fn equals gold positives (three relevant labels).
        assert_eq!(metrics.tp + metrics.fn_, 3);
    }
}
