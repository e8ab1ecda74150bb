//! Suggestion extraction and near-duplicate grouping.
//!
//! Every transcript is processed in 10-turn batches (no separate context
//! block; the suggestion prompts evaluate utterances standalone). The
//! backend must return exactly one classification per input utterance, in
//! order — enforced by the schema length validator — after which empty
//! matches are dropped and the rest become provenance-carrying records.

use crate::corpus::{window_turns, AssemblyCorpus, Role, Transcript};
use crate::gateway::{format_current_block, ChatRequest, Gateway, GatewayError, ValidationPolicy};
use crate::space::EmbeddingMatrix;
use crate::util;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SuggestError {
    #[error("{conversation_id} turns {batch_start}..{batch_end}: {source}")]
    Batch {
        conversation_id: String,
        batch_start: usize,
        batch_end: usize,
        source: GatewayError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("no embedding for suggestion {0:?}")]
    MissingEmbedding(String),
    #[error("dedup threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("malformed suggestion response: {0}")]
    Response(String),
}

/// What the model returned for one utterance: both fields empty (no
/// suggestion) or both non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionMatch {
    pub user_id: String,
    pub quote: String,
    pub suggestion: String,
}

impl SuggestionMatch {
    pub fn is_empty(&self) -> bool {
        self.quote.trim().is_empty() && self.suggestion.trim().is_empty()
    }
}

/// A voiced suggestion with full transcript provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionRecord {
    pub suggestion_id: String,
    pub user_id: String,
    pub quote: String,
    pub suggestion: String,
    pub conversation_id: String,
    pub turn_index: usize,
    pub day: u32,
    pub phase: String,
    /// False when the quote is not a (whitespace-collapsed) substring of the
    /// source turn; such records are kept but flagged.
    pub quote_matches_source: bool,
}

/// Extraction run metadata, enough to reproduce the run against the same
/// cache or fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionMetadata {
    pub template_id: String,
    pub schema_id: String,
    pub chat_model: String,
    pub batch_size: usize,
    pub include_nondelegate: bool,
    pub transcripts: usize,
    pub batches: usize,
    pub attempts_total: u64,
}

/// All records from one extraction run plus its metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub records: Vec<SuggestionRecord>,
    pub metadata: ExtractionMetadata,
}

/// Extraction knobs.
#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub template_id: String,
    pub batch_size: usize,
    pub max_retries: u32,
    /// Keep suggestions voiced by moderators/experts. Off by default:
    /// non-delegate turns stay in context but are not attributed.
    pub include_nondelegate: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            template_id: "suggestions-v2-final".into(),
            batch_size: 10,
            max_retries: 2,
            include_nondelegate: false,
        }
    }
}

pub fn suggestion_id_for(conversation_id: &str, turn_index: usize) -> String {
    format!("sug-{conversation_id}-{turn_index:04}")
}

struct PlannedBatch<'a> {
    transcript: &'a Transcript,
    start: usize,
    len: usize,
}

fn plan_requests<'a>(
    transcripts: &[&'a Transcript],
    gateway: &Gateway,
    options: &ExtractOptions,
) -> Result<(Vec<(ChatRequest, ValidationPolicy)>, Vec<PlannedBatch<'a>>), SuggestError> {
    let template = gateway.templates().get(&options.template_id)?;
    let schema_id = crate::gateway::schema_for_template(&options.template_id).ok_or_else(|| {
        SuggestError::Response(format!(
            "template {:?} has no associated schema",
            options.template_id
        ))
    })?;
    let descriptor = gateway
        .schemas()
        .get(schema_id)
        .ok_or_else(|| GatewayError::UnknownSchema(schema_id.to_string()))?;

    let mut requests = Vec::new();
    let mut plans = Vec::new();
    for transcript in transcripts {
        // The suggestion prompt takes no separate context block.
        for window in window_turns(transcript, options.batch_size, 0) {
            let mut bindings = BTreeMap::new();
            bindings.insert("batch".to_string(), format_current_block(&window.current));
            bindings.insert("schema_string".to_string(), descriptor.schema_string());
            let user = template.render(&bindings)?;
            requests.push((
                ChatRequest {
                    system: template.system_text.clone(),
                    user,
                    schema_id: schema_id.to_string(),
                },
                ValidationPolicy {
                    max_retries: options.max_retries,
                    expected_length: Some(window.current.len()),
                },
            ));
            plans.push(PlannedBatch {
                transcript,
                start: window.start_index,
                len: window.current.len(),
            });
        }
    }
    Ok((requests, plans))
}

fn records_from_batch(
    plan: &PlannedBatch<'_>,
    value: &serde_json::Value,
    include_nondelegate: bool,
) -> Result<Vec<SuggestionRecord>, SuggestError> {
    let matches: Vec<SuggestionMatch> =
        serde_json::from_value(value["suggestions"].clone())
            .map_err(|e| SuggestError::Response(e.to_string()))?;
    let mut records = Vec::new();
    for (offset, matched) in matches.iter().enumerate() {
        if matched.is_empty() {
            continue;
        }
        let turn = &plan.transcript.turns[plan.start + offset];
        if !include_nondelegate && turn.role != Role::Delegate {
            continue;
        }
        let quote_matches_source = util::is_loose_substring(&matched.quote, &turn.text);
        records.push(SuggestionRecord {
            suggestion_id: suggestion_id_for(&plan.transcript.conversation_id, turn.turn_index),
            user_id: turn.speaker_id.clone(),
            quote: matched.quote.clone(),
            suggestion: matched.suggestion.clone(),
            conversation_id: plan.transcript.conversation_id.clone(),
            turn_index: turn.turn_index,
            day: plan.transcript.day,
            phase: plan.transcript.phase.clone(),
            quote_matches_source,
        });
    }
    Ok(records)
}

/// Extract suggestions from one transcript.
pub fn extract_suggestions(
    transcript: &Transcript,
    gateway: &Gateway,
    options: &ExtractOptions,
) -> Result<Vec<SuggestionRecord>, SuggestError> {
    let transcripts = [transcript];
    let (requests, plans) = plan_requests(&transcripts, gateway, options)?;
    let schema_id = crate::gateway::schema_for_template(&options.template_id)
        .expect("checked in plan_requests");
    let descriptor = gateway.schemas().get(schema_id).expect("builtin schema");
    let results = gateway.complete_structured_batch(&requests, descriptor);

    let mut records = Vec::new();
    for (plan, result) in plans.iter().zip(results) {
        let completion = result.map_err(|source| SuggestError::Batch {
            conversation_id: plan.transcript.conversation_id.clone(),
            batch_start: plan.start,
            batch_end: plan.start + plan.len,
            source,
        })?;
        records.extend(records_from_batch(plan, &completion.value, options.include_nondelegate)?);
    }
    Ok(records)
}

/// Extract suggestions from every transcript in the corpus. Batches may be
/// processed concurrently; records come back in corpus order regardless of
/// completion order.
pub fn extract_suggestions_corpus(
    corpus: &AssemblyCorpus,
    gateway: &Gateway,
    options: &ExtractOptions,
) -> Result<SuggestionSet, SuggestError> {
    let transcripts: Vec<&Transcript> = corpus.transcripts().iter().collect();
    let (requests, plans) = plan_requests(&transcripts, gateway, options)?;
    let schema_id = crate::gateway::schema_for_template(&options.template_id)
        .expect("checked in plan_requests");
    let descriptor = gateway.schemas().get(schema_id).expect("builtin schema");
    let batches = requests.len();
    let results = gateway.complete_structured_batch(&requests, descriptor);

    let mut records = Vec::new();
    for (plan, result) in plans.iter().zip(results) {
        let completion = result.map_err(|source| SuggestError::Batch {
            conversation_id: plan.transcript.conversation_id.clone(),
            batch_start: plan.start,
            batch_end: plan.start + plan.len,
            source,
        })?;
        records.extend(records_from_batch(plan, &completion.value, options.include_nondelegate)?);
    }

    Ok(SuggestionSet {
        records,
        metadata: ExtractionMetadata {
            template_id: options.template_id.clone(),
            schema_id: schema_id.to_string(),
            chat_model: gateway.chat_model_id().to_string(),
            batch_size: options.batch_size,
            include_nondelegate: options.include_nondelegate,
            transcripts: transcripts.len(),
            batches,
            attempts_total: gateway.stats().attempts_total,
        },
    })
}

/// Serialize records as JSONL, one record per line.
pub fn records_to_jsonl(records: &[SuggestionRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn records_from_jsonl(jsonl: &str) -> Result<Vec<SuggestionRecord>, SuggestError> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| SuggestError::Response(e.to_string())))
        .collect()
}

/// Groups of near-duplicate suggestions: connected components of the
/// `cosine >= threshold` similarity graph, singletons omitted. Report-only;
/// nothing is merged automatically.
pub fn dedup_candidates(
    ids: &[String],
    embeddings: &EmbeddingMatrix,
    threshold: f64,
) -> Result<Vec<Vec<String>>, SuggestError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(SuggestError::BadThreshold(threshold));
    }
    let indices: Vec<usize> = ids
        .iter()
        .map(|id| {
            embeddings
                .ids()
                .iter()
                .position(|x| x == id)
                .ok_or_else(|| SuggestError::MissingEmbedding(id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let n = ids.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let sim = crate::space::cosine(embeddings.row(indices[a]), embeddings.row(indices[b]))
                .map_err(|e| SuggestError::Response(e.to_string()))?;
            if sim >= threshold {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[rb] = ra;
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(ids[i].clone());
    }
    let mut out: Vec<Vec<String>> = groups
        .into_values()
        .filter(|g| g.len() >= 2)
        .map(|mut g| {
            g.sort();
            g
        })
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SessionKind, SpeakerTurn};
    use crate::gateway::BackendConfig;

    fn transcript(lines: &[(&str, Role, &str)]) -> Transcript {
        Transcript {
            conversation_id: "conv".into(),
            day: 2,
            phase: "DraftInitialRecs".into(),
            session_kind: SessionKind::Breakout,
            turns: lines
                .iter()
                .enumerate()
                .map(|(i, (speaker, role, text))| SpeakerTurn {
                    turn_index: i,
                    speaker_id: speaker.to_string(),
                    role: *role,
                    text: text.to_string(),
                })
                .collect(),
        }
    }

    #[test]
    fn heuristic_mock_extracts_proposal_and_skips_chitchat() {
        let gateway = Gateway::from_config(&BackendConfig::mock_heuristic()).unwrap();
        let t = transcript(&[
            (
                "d01",
                Role::Delegate,
                "I propose MIT should add solar panels to dorm roofs",
            ),
            ("d02", Role::Delegate, "What time is lunch?"),
        ]);
        let records = extract_suggestions(&t, &gateway, &ExtractOptions::default()).unwrap();
        assert_eq!(records.len(), 1);
        let r = &records[0];
        assert_eq!(r.quote, "I propose MIT should add solar panels to dorm roofs");
        assert_eq!(r.turn_index, 0);
        assert_eq!(r.user_id, "d01");
        assert!(r.quote_matches_source);
        assert_eq!(r.suggestion_id, "sug-conv-0000");
    }

    #[test]
    fn nondelegate_suggestions_excluded_by_default() {
        let gateway = Gateway::from_config(&BackendConfig::mock_heuristic()).unwrap();
        let t = transcript(&[
            ("m01", Role::Moderator, "You should all introduce yourselves"),
            ("d01", Role::Delegate, "I propose we should compost more"),
        ]);
        let records = extract_suggestions(&t, &gateway, &ExtractOptions::default()).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].user_id, "d01");

        let options = ExtractOptions {
            include_nondelegate: true,
            ..ExtractOptions::default()
        };
        let records = extract_suggestions(&t, &gateway, &options).unwrap();
        assert_eq!(records.len(), 2);
    }

    #[test]
    fn records_stay_in_transcript_order() {
        let gateway = Gateway::from_config(&BackendConfig::mock_heuristic()).unwrap();
        let lines: Vec<(String, Role, String)> = (0..23)
            .map(|i| {
                (
                    format!("d{:02}", i % 3 + 1),
                    Role::Delegate,
                    format!("I propose plan number {i} should happen"),
                )
            })
            .collect();
        let refs: Vec<(&str, Role, &str)> = lines
            .iter()
            .map(|(s, r, t)| (s.as_str(), *r, t.as_str()))
            .collect();
        let t = transcript(&refs);
        let records = extract_suggestions(&t, &gateway, &ExtractOptions::default()).unwrap();
        assert_eq!(records.len(), 23);
        let indices: Vec<usize> = records.iter().map(|r| r.turn_index).collect();
        let mut sorted = indices.clone();
        sorted.sort_unstable();
        assert_eq!(indices, sorted);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = vec![SuggestionRecord {
            suggestion_id: "sug-a-0001".into(),
            user_id: "d01".into(),
            quote: "add solar".into(),
            suggestion: "I suggest that MIT add solar.".into(),
            conversation_id: "a".into(),
            turn_index: 1,
            day: 2,
            phase: "Draft".into(),
            quote_matches_source: true,
        }];
        let jsonl = records_to_jsonl(&records);
        assert_eq!(records_from_jsonl(&jsonl).unwrap(), records);
    }

    fn matrix_from(rows: Vec<(&str, Vec<f64>)>) -> EmbeddingMatrix {
        let (ids, vectors): (Vec<String>, Vec<Vec<f64>>) = rows
            .into_iter()
            .map(|(id, v)| (id.to_string(), v))
            .unzip();
        EmbeddingMatrix::new(ids, vectors, "m").unwrap()
    }

    #[test]
    fn identical_vectors_group_at_any_threshold() {
        let m = matrix_from(vec![
            ("a", vec![1.0, 0.0]),
            ("b", vec![1.0, 0.0]),
            ("c", vec![0.0, 1.0]),
        ]);
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let groups = dedup_candidates(&ids, &m, 1.0).unwrap();
        assert_eq!(groups, vec![vec!["a".to_string(), "b".to_string()]]);
    }

    #[test]
    fn orthogonal_vectors_do_not_group() {
        let m = matrix_from(vec![("a", vec![1.0, 0.0]), ("b", vec![0.0, 1.0])]);
        let ids: Vec<String> = vec!["a".into(), "b".into()];
        assert!(dedup_candidates(&ids, &m, 0.95).unwrap().is_empty());
    }

    #[test]
    fn chained_similarity_forms_one_component() {
        // b sits between a and c: cos(a,b) = cos(b,c) ~ 0.96, cos(a,c) lower
        // and below threshold, yet all three join one component transitively.
        let theta: f64 = 0.96f64.acos();
        let a = vec![1.0, 0.0];
        let b = vec![theta.cos(), theta.sin()];
        let c = vec![(2.0 * theta).cos(), (2.0 * theta).sin()];
        let m = matrix_from(vec![("a", a), ("b", b), ("c", c)]);
        let ids: Vec<String> = vec!["a".into(), "b".into(), "c".into()];
        let groups = dedup_candidates(&ids, &m, 0.95).unwrap();
        assert_eq!(
            groups,
            vec![vec!["a".to_string(), "b".to_string(), "c".to_string()]]
        );
        // The a-c link itself is below threshold.
        let sim_ac = crate::space::cosine(m.row(0), m.row(2)).unwrap();
        assert!(sim_ac < 0.95);
    }

    #[test]
    fn missing_embedding_and_bad_threshold_error() {
        let m = matrix_from(vec![("a", vec![1.0, 0.0])]);
        let ids: Vec<String> = vec!["a".into(), "zz".into()];
        assert!(matches!(
            dedup_candidates(&ids, &m, 0.9),
            Err(SuggestError::MissingEmbedding(id)) if id == "zz"
        ));
        let ids: Vec<String> = vec!["a".into()];
        assert!(matches!(
            dedup_candidates(&ids, &m, 0.0),
            Err(SuggestError::BadThreshold(_))
        ));
    }
}
