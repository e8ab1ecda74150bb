//! Assembly corpus: transcripts, roster, statements, and vote ledgers.
//!
//! Transcripts are 4-column CSVs (`turn_index,speaker_id,role,text`); a JSON
//! manifest ties them together with the roster, the statement list, and vote
//! ledger CSVs. Loading cross-validates every reference, after which the
//! corpus is immutable and safe to share across threads.

mod manifest;
mod transcript;
mod window;

pub use manifest::{
    load_corpus, load_corpus_from_manifest, parse_label_file, parse_vote_ledger, CorpusManifest,
    CorpusStats, LabelEntry, ManifestTranscript, Overlay, StatementEntry,
};
pub use transcript::{parse_transcript, transcript_to_csv, TranscriptMeta};
pub use window::{window_turns, TurnWindow};

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// Speaker role within the assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Delegate,
    Moderator,
    Expert,
}

impl Role {
    pub fn parse(s: &str) -> Option<Role> {
        match s {
            "delegate" => Some(Role::Delegate),
            "moderator" => Some(Role::Moderator),
            "expert" => Some(Role::Expert),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Delegate => "delegate",
            Role::Moderator => "moderator",
            Role::Expert => "expert",
        }
    }
}

/// Kind of assembly session a conversation was recorded in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionKind {
    Plenary,
    Breakout,
    InfoFair,
    Other,
}

/// One diarized utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeakerTurn {
    pub turn_index: usize,
    pub speaker_id: String,
    pub role: Role,
    pub text: String,
}

/// An ordered conversation with day/phase provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub conversation_id: String,
    /// Assembly day; 0 means a pre-assembly conversation.
    pub day: u32,
    pub phase: String,
    pub session_kind: SessionKind,
    pub turns: Vec<SpeakerTurn>,
}

impl Transcript {
    pub fn turn(&self, turn_index: usize) -> Option<&SpeakerTurn> {
        self.turns.get(turn_index)
    }
}

/// Voting round a statement text belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    Day2Draft,
    Day3Final,
}

impl Round {
    pub fn parse(s: &str) -> Option<Round> {
        match s {
            "day2_draft" => Some(Round::Day2Draft),
            "day3_final" => Some(Round::Day3Final),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Round::Day2Draft => "day2_draft",
            Round::Day3Final => "day3_final",
        }
    }

    /// Assembly day the round was voted on.
    pub fn day(&self) -> u32 {
        match self {
            Round::Day2Draft => 2,
            Round::Day3Final => 3,
        }
    }
}

/// A drafted or revised recommendation text put to a vote.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub statement_id: String,
    pub text: String,
    pub round: Round,
    /// Links a revision to the earlier-round statement it rewrites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predecessor_id: Option<String>,
}

/// Ballot choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VoteChoice {
    Agree,
    Neutral,
    Disagree,
}

impl VoteChoice {
    pub fn parse(s: &str) -> Option<VoteChoice> {
        match s {
            "Agree" => Some(VoteChoice::Agree),
            "Neutral" => Some(VoteChoice::Neutral),
            "Disagree" => Some(VoteChoice::Disagree),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            VoteChoice::Agree => "Agree",
            VoteChoice::Neutral => "Neutral",
            VoteChoice::Disagree => "Disagree",
        }
    }
}

impl fmt::Display for VoteChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ballot entry. At most one record per (delegate, statement, round).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteRecord {
    pub delegate_id: String,
    pub statement_id: String,
    pub round: Round,
    pub choice: VoteChoice,
}

/// Fully cross-validated assembly corpus. Immutable after load.
#[derive(Debug, Clone)]
pub struct AssemblyCorpus {
    transcripts: Vec<Transcript>,
    conversation_order: HashMap<String, usize>,
    delegates: Vec<String>,
    statements: Vec<Statement>,
    statement_index: HashMap<String, usize>,
    votes: Vec<VoteRecord>,
    labels: Vec<LabelEntry>,
}

impl AssemblyCorpus {
    pub fn transcripts(&self) -> &[Transcript] {
        &self.transcripts
    }

    pub fn transcript(&self, conversation_id: &str) -> Option<&Transcript> {
        self.conversation_order
            .get(conversation_id)
            .map(|&i| &self.transcripts[i])
    }

    /// Position of a conversation in manifest order. Chronological sorting
    /// within a day follows this ordering.
    pub fn conversation_position(&self, conversation_id: &str) -> Option<usize> {
        self.conversation_order.get(conversation_id).copied()
    }

    pub fn delegates(&self) -> &[String] {
        &self.delegates
    }

    pub fn is_delegate(&self, id: &str) -> bool {
        self.delegates.iter().any(|d| d == id)
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn statement(&self, statement_id: &str) -> Option<&Statement> {
        self.statement_index
            .get(statement_id)
            .map(|&i| &self.statements[i])
    }

    pub fn votes(&self) -> &[VoteRecord] {
        &self.votes
    }

    pub fn labels(&self) -> &[LabelEntry] {
        &self.labels
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            transcripts: self.transcripts.len(),
            turns: self.transcripts.iter().map(|t| t.turns.len()).sum(),
            delegates: self.delegates.len(),
            statements: self.statements.len(),
            votes: self.votes.len(),
        }
    }

    /// Resolve a turn reference, checking the speaker matches.
    pub fn resolve_turn(&self, conversation_id: &str, turn_index: usize) -> Option<&SpeakerTurn> {
        self.transcript(conversation_id)
            .and_then(|t| t.turn(turn_index))
    }
}

/// Ingestion and integrity failures.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: malformed row: expected 4 columns, got {got}")]
    MalformedRow {
        file: String,
        line: usize,
        got: usize,
    },
    #[error("{file}:{line}: empty utterance text")]
    EmptyText { file: String, line: usize },
    #[error("{file}:{line}: non-contiguous turn_index: expected {expected}, got {got}")]
    NonContiguousIndex {
        file: String,
        line: usize,
        expected: usize,
        got: String,
    },
    #[error("{file}:{line}: unknown role {role:?} (expected delegate, moderator, or expert)")]
    UnknownRole {
        file: String,
        line: usize,
        role: String,
    },
    #[error("missing file {path}: {source}")]
    MissingFile {
        path: String,
        source: std::io::Error,
    },
    #[error("{location}: dangling reference: {what}")]
    DanglingReference { location: String, what: String },
    #[error("duplicate conversation_id {0:?}")]
    DuplicateConversationId(String),
    #[error("duplicate statement_id {0:?}")]
    DuplicateStatementId(String),
    #[error("{location}: duplicate vote for (delegate {delegate_id}, statement {statement_id}, round {round})")]
    DuplicateVote {
        location: String,
        delegate_id: String,
        statement_id: String,
        round: String,
    },
    #[error("{file}:{line}: {message}")]
    BadField {
        file: String,
        line: usize,
        message: String,
    },
    #[error("manifest parse error in {path}: {message}")]
    BadManifest { path: String, message: String },
}
