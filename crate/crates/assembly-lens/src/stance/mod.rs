//! Per-delegate stance evidence, chronological profiles, and vote dynamics.

mod profile;
mod votes;

pub use profile::{build_profile, render_profile_report, DelegateProfile};
pub use votes::{
    detect_vote_changes, support_rate, ChangeKind, IncompleteVote, SupportRate, VoteChange,
    VoteChangeReport,
};

use crate::corpus::{window_turns, AssemblyCorpus, Statement, Transcript};
use crate::gateway::{
    format_context_block, format_current_block, render_text, schema_for_template, ChatRequest,
    Gateway, GatewayError, ValidationPolicy,
};
use crate::util;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StanceError {
    #[error("{conversation_id} turns {batch_start}..{batch_end}: {source}")]
    Batch {
        conversation_id: String,
        batch_start: usize,
        batch_end: usize,
        source: GatewayError,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("unknown delegate {0:?}")]
    UnknownDelegate(String),
    #[error("unknown statement {0:?}")]
    UnknownStatement(String),
    #[error("no votes for statement {statement_id:?} in round {round}")]
    NoVotes { statement_id: String, round: String },
    #[error("statement {0:?} has votes in only one round")]
    SingleRoundOnly(String),
    #[error("malformed evidence response: {0}")]
    Response(String),
}

/// Relevance category of one utterance with respect to a statement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvidenceCategory {
    /// Direct evidence of the speaker's stance on the statement.
    #[serde(rename = "1")]
    Direct,
    /// Substantive response to a direct-relevance utterance.
    #[serde(rename = "2")]
    Contextual,
    /// Not relevant to the statement.
    #[serde(rename = "3")]
    NotRelevant,
}

impl EvidenceCategory {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvidenceCategory::Direct => "1",
            EvidenceCategory::Contextual => "2",
            EvidenceCategory::NotRelevant => "3",
        }
    }

    pub fn is_relevant(&self) -> bool {
        !matches!(self, EvidenceCategory::NotRelevant)
    }
}

/// One classified utterance as returned by the backend.
///
/// Field emptiness is category-conditional: the rationale accompanies
/// category 1, the response quote and its rationale accompany category 2,
/// and the irrelevance reason accompanies category 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceMatch {
    pub category: EvidenceCategory,
    #[serde(default)]
    pub topic_mentioned: bool,
    #[serde(rename = "llm_rationale")]
    pub rationale: String,
    pub response_quote: String,
    #[serde(rename = "llm_response_rationale")]
    pub response_rationale: String,
    #[serde(default)]
    pub irrelevance_reason: String,
    #[serde(rename = "confidence_score")]
    pub confidence: f64,
}

impl EvidenceMatch {
    /// Check the category-conditional field constraints directly.
    pub fn check_coherence(&self) -> Result<(), String> {
        let expect = |name: &str, value: &str, want_filled: bool| -> Result<(), String> {
            let filled = !value.trim().is_empty();
            if filled != want_filled {
                Err(format!(
                    "{name} must be {} for category {}",
                    if want_filled { "non-empty" } else { "empty" },
                    self.category.as_str()
                ))
            } else {
                Ok(())
            }
        };
        let c = self.category;
        expect("rationale", &self.rationale, c == EvidenceCategory::Direct)?;
        expect(
            "response_quote",
            &self.response_quote,
            c == EvidenceCategory::Contextual,
        )?;
        expect(
            "response_rationale",
            &self.response_rationale,
            c == EvidenceCategory::Contextual,
        )?;
        expect(
            "irrelevance_reason",
            &self.irrelevance_reason,
            c == EvidenceCategory::NotRelevant,
        )?;
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} out of [0, 1]", self.confidence));
        }
        Ok(())
    }
}

/// An [`EvidenceMatch`] anchored to its transcript position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRecord {
    #[serde(flatten)]
    pub matched: EvidenceMatch,
    pub statement_id: String,
    pub conversation_id: String,
    pub turn_index: usize,
    pub speaker_id: String,
    pub day: u32,
    pub phase: String,
    /// False when a category-2 response quote is not found (whitespace
    /// collapsed) in the preceding turns; kept but flagged.
    pub response_quote_matched: bool,
}

/// Evidence-classification knobs.
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub template_id: String,
    pub batch_size: usize,
    pub context_size: usize,
    pub max_retries: u32,
    /// Broad conversation topic; only interpolated by prompt versions that
    /// ask for it.
    pub topic: String,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            template_id: "evidence-v4-final".into(),
            batch_size: 10,
            context_size: 10,
            max_retries: 2,
            topic: "MIT campus sustainability".into(),
        }
    }
}

/// Classify every turn of a transcript against one statement. Returns one
/// record per turn, all categories, unfiltered.
pub fn classify_evidence(
    statement: &Statement,
    transcript: &Transcript,
    gateway: &Gateway,
    options: &ClassifyOptions,
) -> Result<Vec<EvidenceRecord>, StanceError> {
    classify_many(statement, &[transcript], gateway, options)
}

/// Classify every transcript in the corpus against one statement. Batches
/// run concurrently through the gateway; records come back in corpus order.
pub fn classify_evidence_corpus(
    corpus: &AssemblyCorpus,
    statement_id: &str,
    gateway: &Gateway,
    options: &ClassifyOptions,
) -> Result<Vec<EvidenceRecord>, StanceError> {
    let statement = corpus
        .statement(statement_id)
        .ok_or_else(|| StanceError::UnknownStatement(statement_id.to_string()))?;
    let transcripts: Vec<&Transcript> = corpus.transcripts().iter().collect();
    classify_many(statement, &transcripts, gateway, options)
}

struct PlannedWindow<'a> {
    transcript: &'a Transcript,
    start: usize,
    len: usize,
    batch_mode: bool,
}

fn classify_many(
    statement: &Statement,
    transcripts: &[&Transcript],
    gateway: &Gateway,
    options: &ClassifyOptions,
) -> Result<Vec<EvidenceRecord>, StanceError> {
    let template = gateway.templates().get(&options.template_id)?;
    let schema_id = schema_for_template(&options.template_id).ok_or_else(|| {
        StanceError::Response(format!(
            "template {:?} has no associated schema",
            options.template_id
        ))
    })?;
    let descriptor = gateway
        .schemas()
        .get(schema_id)
        .ok_or_else(|| GatewayError::UnknownSchema(schema_id.to_string()))?;
    let batch_mode = template
        .placeholders()
        .iter()
        .any(|p| p == "curr_utterances");

    let mut requests: Vec<(ChatRequest, ValidationPolicy)> = Vec::new();
    let mut plans: Vec<PlannedWindow<'_>> = Vec::new();
    for transcript in transcripts {
        let batch = if batch_mode { options.batch_size } else { 1 };
        for window in window_turns(transcript, batch, options.context_size) {
            let mut bindings = BTreeMap::new();
            bindings.insert("statement".to_string(), statement.text.clone());
            bindings.insert("topic".to_string(), options.topic.clone());
            bindings.insert(
                "context".to_string(),
                format_context_block(&window.context),
            );
            bindings.insert(
                "curr_utterances".to_string(),
                format_current_block(&window.current),
            );
            let current = &window.current[0];
            bindings.insert(
                "curr_utterance".to_string(),
                util::collapse_whitespace(&current.text),
            );
            bindings.insert("curr_speaker".to_string(), current.speaker_id.clone());
            bindings.insert("schema_string".to_string(), descriptor.schema_string());

            let system = render_text(&template.system_text, &bindings)?;
            let user = template.render(&bindings)?;
            requests.push((
                ChatRequest {
                    system,
                    user,
                    schema_id: schema_id.to_string(),
                },
                ValidationPolicy {
                    max_retries: options.max_retries,
                    expected_length: batch_mode.then_some(window.current.len()),
                },
            ));
            plans.push(PlannedWindow {
                transcript,
                start: window.start_index,
                len: window.current.len(),
                batch_mode,
            });
        }
    }

    let results = gateway.complete_structured_batch(&requests, descriptor);
    let mut records = Vec::new();
    for (plan, result) in plans.iter().zip(results) {
        let completion = result.map_err(|source| StanceError::Batch {
            conversation_id: plan.transcript.conversation_id.clone(),
            batch_start: plan.start,
            batch_end: plan.start + plan.len,
            source,
        })?;
        let matches: Vec<EvidenceMatch> = if plan.batch_mode {
            serde_json::from_value(completion.value["utterance_classifications"].clone())
                .map_err(|e| StanceError::Response(e.to_string()))?
        } else {
            vec![serde_json::from_value(completion.value.clone())
                .map_err(|e| StanceError::Response(e.to_string()))?]
        };
        for (offset, matched) in matches.into_iter().enumerate() {
            let turn = &plan.transcript.turns[plan.start + offset];
            let response_quote_matched = if matched.category == EvidenceCategory::Contextual {
                quote_found_before(plan.transcript, turn.turn_index, &matched.response_quote)
            } else {
                true
            };
            records.push(EvidenceRecord {
                matched,
                statement_id: statement.statement_id.clone(),
                conversation_id: plan.transcript.conversation_id.clone(),
                turn_index: turn.turn_index,
                speaker_id: turn.speaker_id.clone(),
                day: plan.transcript.day,
                phase: plan.transcript.phase.clone(),
                response_quote_matched,
            });
        }
    }
    Ok(records)
}

/// Is `quote` a whitespace-collapsed substring of any turn before
/// `turn_index` in the same transcript?
fn quote_found_before(transcript: &Transcript, turn_index: usize, quote: &str) -> bool {
    if quote.trim().is_empty() {
        return false;
    }
    transcript.turns[..turn_index]
        .iter()
        .any(|t| util::is_loose_substring(quote, &t.text))
}

/// Serialize evidence records as JSONL.
pub fn evidence_to_jsonl(records: &[EvidenceRecord]) -> String {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn evidence_from_jsonl(jsonl: &str) -> Result<Vec<EvidenceRecord>, StanceError> {
    jsonl
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| StanceError::Response(e.to_string())))
        .collect()
}
