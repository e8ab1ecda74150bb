//! Delegate profiles: chronological evidence assembly and report rendering.

use super::{EvidenceCategory, EvidenceRecord, StanceError};
use crate::corpus::{AssemblyCorpus, Round, VoteRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// The chronologically ordered category-1/2 evidence for one delegate on one
/// statement, plus their ballots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelegateProfile {
    pub delegate_id: String,
    pub statement_id: String,
    pub min_confidence: f64,
    pub evidence: Vec<EvidenceRecord>,
    pub votes: Vec<VoteRecord>,
}

/// Filter classification records down to one delegate's relevant evidence
/// (categories 1 and 2 at or above the confidence floor), sorted by
/// (day, conversation order, turn index), with that delegate's votes
/// attached.
pub fn build_profile(
    delegate_id: &str,
    statement_id: &str,
    corpus: &AssemblyCorpus,
    records: &[EvidenceRecord],
    min_confidence: f64,
) -> Result<DelegateProfile, StanceError> {
    if !corpus.is_delegate(delegate_id) {
        return Err(StanceError::UnknownDelegate(delegate_id.to_string()));
    }
    if corpus.statement(statement_id).is_none() {
        return Err(StanceError::UnknownStatement(statement_id.to_string()));
    }

    let mut evidence: Vec<EvidenceRecord> = records
        .iter()
        .filter(|r| {
            r.statement_id == statement_id
                && r.speaker_id == delegate_id
                && r.matched.category.is_relevant()
                && r.matched.confidence >= min_confidence
        })
        .cloned()
        .collect();
    evidence.sort_by_key(|r| {
        (
            r.day,
            corpus.conversation_position(&r.conversation_id).unwrap_or(usize::MAX),
            r.turn_index,
        )
    });

    let mut votes: Vec<VoteRecord> = corpus
        .votes()
        .iter()
        .filter(|v| v.delegate_id == delegate_id && v.statement_id == statement_id)
        .cloned()
        .collect();
    votes.sort_by_key(|v| v.round);

    Ok(DelegateProfile {
        delegate_id: delegate_id.to_string(),
        statement_id: statement_id.to_string(),
        min_confidence,
        evidence,
        votes,
    })
}

fn day_title(day: u32) -> String {
    if day == 0 {
        "Pre-Assembly".to_string()
    } else {
        format!("Assembly Day {day}")
    }
}

/// Render a profile as deterministic markdown: one section per assembly day
/// with session names and bulleted quotes (category-2 entries show the quoted
/// predecessor), each day closed by its vote line.
pub fn render_profile_report(profile: &DelegateProfile, corpus: &AssemblyCorpus) -> String {
    let statement_text = corpus
        .statement(&profile.statement_id)
        .map(|s| s.text.clone())
        .unwrap_or_default();

    let mut out = String::new();
    let _ = writeln!(out, "# Delegate profile: {}", profile.delegate_id);
    let _ = writeln!(out, "Statement {}: \"{}\"", profile.statement_id, statement_text);
    let _ = writeln!(
        out,
        "Evidence filter: categories 1-2, confidence >= {:.2}",
        profile.min_confidence
    );
    out.push('\n');

    // Evidence grouped by day, then conversation in corpus order.
    let mut by_day: BTreeMap<u32, Vec<&EvidenceRecord>> = BTreeMap::new();
    for record in &profile.evidence {
        by_day.entry(record.day).or_default().push(record);
    }
    let vote_for = |round: Round| {
        profile
            .votes
            .iter()
            .find(|v| v.round == round)
            .map(|v| v.choice)
    };
    // Vote lines belong to the day their round was held on, even when that
    // day produced no evidence.
    let mut days: Vec<u32> = by_day.keys().copied().collect();
    for round in [Round::Day2Draft, Round::Day3Final] {
        if vote_for(round).is_some() && !days.contains(&round.day()) {
            days.push(round.day());
        }
    }
    days.sort_unstable();

    if profile.evidence.is_empty() {
        let _ = writeln!(out, "No evidence found in the transcripts.");
        out.push('\n');
    }

    for day in days {
        let _ = writeln!(out, "## {}", day_title(day));
        if let Some(records) = by_day.get(&day) {
            let mut last_conversation: Option<&str> = None;
            for record in records {
                if last_conversation != Some(record.conversation_id.as_str()) {
                    let _ = writeln!(out, "Session: {} ({})", record.phase, record.conversation_id);
                    last_conversation = Some(record.conversation_id.as_str());
                }
                let turn_text = corpus
                    .resolve_turn(&record.conversation_id, record.turn_index)
                    .map(|t| t.text.as_str())
                    .unwrap_or("");
                let _ = writeln!(
                    out,
                    "- [category {}, confidence {:.2}] \"{}\"",
                    record.matched.category.as_str(),
                    record.matched.confidence,
                    crate::util::collapse_whitespace(turn_text)
                );
                if record.matched.category == EvidenceCategory::Contextual {
                    let _ = writeln!(
                        out,
                        "    responding to: \"{}\"{}",
                        crate::util::collapse_whitespace(&record.matched.response_quote),
                        if record.response_quote_matched {
                            ""
                        } else {
                            " [quote not found in preceding turns]"
                        }
                    );
                }
            }
        }
        let round = match day {
            2 => Some(Round::Day2Draft),
            3 => Some(Round::Day3Final),
            _ => None,
        };
        if let Some(choice) = round.and_then(vote_for) {
            let _ = writeln!(out, "Voting: {choice}");
        }
        out.push('\n');
    }
    out
}
