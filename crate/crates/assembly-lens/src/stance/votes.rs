//! Supermajority math and vote-change analysis.

use super::StanceError;
use crate::corpus::{Round, VoteChoice, VoteRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Support for a statement in one round. `passed` is computed on the exact
/// rational `agrees / total >= 4/5`, not on the rounded float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRate {
    pub rate: f64,
    pub passed: bool,
    pub agrees: usize,
    pub total: usize,
}

/// Supermajority support: Agree count over all votes, passing at >= 80%.
pub fn support_rate(
    statement_id: &str,
    round: Round,
    votes: &[VoteRecord],
) -> Result<SupportRate, StanceError> {
    let in_round: Vec<&VoteRecord> = votes
        .iter()
        .filter(|v| v.statement_id == statement_id && v.round == round)
        .collect();
    if in_round.is_empty() {
        return Err(StanceError::NoVotes {
            statement_id: statement_id.to_string(),
            round: round.as_str().to_string(),
        });
    }
    let agrees = in_round
        .iter()
        .filter(|v| v.choice == VoteChoice::Agree)
        .count();
    let total = in_round.len();
    Ok(SupportRate {
        rate: agrees as f64 / total as f64,
        // agrees/total >= 4/5, exactly.
        passed: agrees * 5 >= total * 4,
        agrees,
        total,
    })
}

/// How a delegate's ballot moved between rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeKind {
    SupportWithdrawn,
    SupportGained,
    Unchanged,
    OtherShift,
}

impl ChangeKind {
    /// Deterministic over the full 3x3 choice grid: leaving Agree withdraws
    /// support, reaching Agree gains it, staying put is unchanged, and
    /// Neutral/Disagree swaps are other shifts.
    pub fn from_pair(from: VoteChoice, to: VoteChoice) -> ChangeKind {
        if from == to {
            ChangeKind::Unchanged
        } else if from == VoteChoice::Agree {
            ChangeKind::SupportWithdrawn
        } else if to == VoteChoice::Agree {
            ChangeKind::SupportGained
        } else {
            ChangeKind::OtherShift
        }
    }
}

/// One delegate's movement between the two rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteChange {
    pub delegate_id: String,
    pub statement_id: String,
    pub from_choice: VoteChoice,
    pub to_choice: VoteChoice,
    pub kind: ChangeKind,
}

/// A delegate who voted in only one round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteVote {
    pub delegate_id: String,
    pub round: Round,
    pub choice: VoteChoice,
}

/// Vote-change analysis for one statement across both rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteChangeReport {
    pub statement_id: String,
    pub changes: Vec<VoteChange>,
    pub incomplete: Vec<IncompleteVote>,
}

/// Pair each delegate's draft-round and final-round ballots for a statement.
/// Delegates voting in only one round are reported separately as incomplete.
pub fn detect_vote_changes(
    statement_id: &str,
    votes: &[VoteRecord],
) -> Result<VoteChangeReport, StanceError> {
    let mut by_delegate: BTreeMap<&str, (Option<VoteChoice>, Option<VoteChoice>)> =
        BTreeMap::new();
    for vote in votes.iter().filter(|v| v.statement_id == statement_id) {
        let slot = by_delegate.entry(&vote.delegate_id).or_default();
        match vote.round {
            Round::Day2Draft => slot.0 = Some(vote.choice),
            Round::Day3Final => slot.1 = Some(vote.choice),
        }
    }
    let has_draft = by_delegate.values().any(|(d, _)| d.is_some());
    let has_final = by_delegate.values().any(|(_, f)| f.is_some());
    if !has_draft || !has_final {
        return Err(StanceError::SingleRoundOnly(statement_id.to_string()));
    }

    let mut changes = Vec::new();
    let mut incomplete = Vec::new();
    for (delegate_id, rounds) in by_delegate {
        match rounds {
            (Some(from), Some(to)) => changes.push(VoteChange {
                delegate_id: delegate_id.to_string(),
                statement_id: statement_id.to_string(),
                from_choice: from,
                to_choice: to,
                kind: ChangeKind::from_pair(from, to),
            }),
            (Some(choice), None) => incomplete.push(IncompleteVote {
                delegate_id: delegate_id.to_string(),
                round: Round::Day2Draft,
                choice,
            }),
            (None, Some(choice)) => incomplete.push(IncompleteVote {
                delegate_id: delegate_id.to_string(),
                round: Round::Day3Final,
                choice,
            }),
            (None, None) => unreachable!("entry created only when a vote exists"),
        }
    }
    Ok(VoteChangeReport {
        statement_id: statement_id.to_string(),
        changes,
        incomplete,
    })
}
