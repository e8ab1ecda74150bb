//! Corpus manifest loading and cross-validation.

use super::{
    parse_transcript, AssemblyCorpus, CorpusError, Round, SessionKind, Statement, TranscriptMeta,
    VoteChoice, VoteRecord,
};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

/// Human overlay category for a suggestion on the planar map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Overlay {
    Approach,
    Concrete,
    ConcreteViable,
    #[default]
    None,
}

impl Overlay {
    pub fn parse(s: &str) -> Option<Overlay> {
        match s {
            "approach" => Some(Overlay::Approach),
            "concrete" => Some(Overlay::Concrete),
            "concrete_viable" => Some(Overlay::ConcreteViable),
            "none" => Some(Overlay::None),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Overlay::Approach => "approach",
            Overlay::Concrete => "concrete",
            Overlay::ConcreteViable => "concrete_viable",
            Overlay::None => "none",
        }
    }
}

/// A human-authored category label for one suggestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub suggestion_id: String,
    pub overlay: Overlay,
}

/// Transcript reference inside the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestTranscript {
    pub path: String,
    pub conversation_id: String,
    pub day: u32,
    pub phase: String,
    pub kind: SessionKind,
}

/// Statement entry inside the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatementEntry {
    pub statement_id: String,
    pub text: String,
    pub round: Round,
    #[serde(default)]
    pub predecessor_id: Option<String>,
}

/// The corpus manifest document.
///
/// `votes` and `labels` are paths to CSV files (`delegate_id,statement_id,
/// round,choice` and `suggestion_id,overlay` respectively), resolved relative
/// to the manifest's directory like transcript paths.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusManifest {
    pub transcripts: Vec<ManifestTranscript>,
    pub roster: Vec<String>,
    #[serde(default)]
    pub statements: Vec<StatementEntry>,
    #[serde(default)]
    pub votes: Vec<String>,
    #[serde(default)]
    pub labels: Vec<String>,
}

/// Headline corpus counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub transcripts: usize,
    pub turns: usize,
    pub delegates: usize,
    pub statements: usize,
    pub votes: usize,
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} transcripts, {} turns, {} delegates, {} statements, {} votes",
            self.transcripts, self.turns, self.delegates, self.statements, self.votes
        )
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CorpusError> {
    std::fs::read(path).map_err(|source| CorpusError::MissingFile {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a `delegate_id,statement_id,round,choice` vote ledger.
pub fn parse_vote_ledger(bytes: &[u8], file: &str) -> Result<Vec<VoteRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let mut votes = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CorpusError::BadField {
            file: file.to_string(),
            line,
            message: e.to_string(),
        })?;
        if row.len() != 4 {
            return Err(CorpusError::MalformedRow {
                file: file.to_string(),
                line,
                got: row.len(),
            });
        }
        let round = Round::parse(row[2].trim()).ok_or_else(|| CorpusError::BadField {
            file: file.to_string(),
            line,
            message: format!("unknown round {:?}", &row[2]),
        })?;
        let choice = VoteChoice::parse(row[3].trim()).ok_or_else(|| CorpusError::BadField {
            file: file.to_string(),
            line,
            message: format!("unknown choice {:?}", &row[3]),
        })?;
        votes.push(VoteRecord {
            delegate_id: row[0].to_string(),
            statement_id: row[1].to_string(),
            round,
            choice,
        });
    }
    Ok(votes)
}

/// Parse a `suggestion_id,overlay` label file.
pub fn parse_label_file(bytes: &[u8], file: &str) -> Result<Vec<LabelEntry>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(bytes);
    let mut labels = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CorpusError::BadField {
            file: file.to_string(),
            line,
            message: e.to_string(),
        })?;
        if row.len() != 2 {
            return Err(CorpusError::MalformedRow {
                file: file.to_string(),
                line,
                got: row.len(),
            });
        }
        let overlay = Overlay::parse(row[1].trim()).ok_or_else(|| CorpusError::BadField {
            file: file.to_string(),
            line,
            message: format!("unknown overlay {:?}", &row[1]),
        })?;
        labels.push(LabelEntry {
            suggestion_id: row[0].to_string(),
            overlay,
        });
    }
    Ok(labels)
}

impl CorpusManifest {
    pub fn from_path(path: &Path) -> Result<CorpusManifest, CorpusError> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CorpusError::BadManifest {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

/// Load and cross-validate a corpus from its manifest file.
///
/// Relative paths inside the manifest resolve against the manifest's
/// directory. Every vote must reference a rostered delegate and a known
/// statement; every transcript speaker with role `delegate` must be rostered.
pub fn load_corpus(manifest_path: &Path) -> Result<AssemblyCorpus, CorpusError> {
    let manifest = CorpusManifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    load_corpus_from_manifest(&manifest, base)
}

/// Same as [`load_corpus`] but with an already-parsed manifest and an
/// explicit base directory for relative paths.
pub fn load_corpus_from_manifest(
    manifest: &CorpusManifest,
    base: &Path,
) -> Result<AssemblyCorpus, CorpusError> {
    let resolve = |p: &str| -> PathBuf {
        let path = Path::new(p);
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        }
    };

    let mut transcripts = Vec::new();
    let mut conversation_order = HashMap::new();
    for entry in &manifest.transcripts {
        if conversation_order.contains_key(&entry.conversation_id) {
            return Err(CorpusError::DuplicateConversationId(
                entry.conversation_id.clone(),
            ));
        }
        let bytes = read_file(&resolve(&entry.path))?;
        let meta = TranscriptMeta {
            conversation_id: entry.conversation_id.clone(),
            day: entry.day,
            phase: entry.phase.clone(),
            session_kind: entry.kind,
        };
        let transcript = parse_transcript(&bytes, &meta)?;
        conversation_order.insert(entry.conversation_id.clone(), transcripts.len());
        transcripts.push(transcript);
    }

    let roster: HashSet<&String> = manifest.roster.iter().collect();

    // Every speaker with role delegate must be on the roster.
    for transcript in &transcripts {
        for turn in &transcript.turns {
            if turn.role == super::Role::Delegate && !roster.contains(&turn.speaker_id) {
                return Err(CorpusError::DanglingReference {
                    location: format!("{}:{}", transcript.conversation_id, turn.turn_index + 2),
                    what: format!("delegate speaker {:?} not in roster", turn.speaker_id),
                });
            }
        }
    }

    let mut statements = Vec::new();
    let mut statement_index: HashMap<String, usize> = HashMap::new();
    for entry in &manifest.statements {
        if statement_index.contains_key(&entry.statement_id) {
            return Err(CorpusError::DuplicateStatementId(entry.statement_id.clone()));
        }
        statement_index.insert(entry.statement_id.clone(), statements.len());
        statements.push(Statement {
            statement_id: entry.statement_id.clone(),
            text: entry.text.clone(),
            round: entry.round,
            predecessor_id: entry.predecessor_id.clone(),
        });
    }
    for statement in &statements {
        if let Some(pred_id) = &statement.predecessor_id {
            let pred = statement_index
                .get(pred_id)
                .map(|&i| &statements[i])
                .ok_or_else(|| CorpusError::DanglingReference {
                    location: format!("statement {}", statement.statement_id),
                    what: format!("predecessor {pred_id:?} not found"),
                })?;
            if pred.round >= statement.round {
                return Err(CorpusError::DanglingReference {
                    location: format!("statement {}", statement.statement_id),
                    what: format!(
                        "predecessor {pred_id:?} is not from an earlier round ({} >= {})",
                        pred.round.as_str(),
                        statement.round.as_str()
                    ),
                });
            }
        }
    }

    let mut votes = Vec::new();
    let mut seen_votes = HashSet::new();
    for path in &manifest.votes {
        let bytes = read_file(&resolve(path))?;
        for (i, vote) in parse_vote_ledger(&bytes, path)?.into_iter().enumerate() {
            let line = i + 2;
            if !roster.contains(&vote.delegate_id) {
                return Err(CorpusError::DanglingReference {
                    location: format!("{path}:{line}"),
                    what: format!("vote for unknown delegate {:?}", vote.delegate_id),
                });
            }
            if !statement_index.contains_key(&vote.statement_id) {
                return Err(CorpusError::DanglingReference {
                    location: format!("{path}:{line}"),
                    what: format!("vote for unknown statement {:?}", vote.statement_id),
                });
            }
            let key = (
                vote.delegate_id.clone(),
                vote.statement_id.clone(),
                vote.round,
            );
            if !seen_votes.insert(key) {
                return Err(CorpusError::DuplicateVote {
                    location: format!("{path}:{line}"),
                    delegate_id: vote.delegate_id,
                    statement_id: vote.statement_id,
                    round: vote.round.as_str().to_string(),
                });
            }
            votes.push(vote);
        }
    }

    let mut labels = Vec::new();
    for path in &manifest.labels {
        let bytes = read_file(&resolve(path))?;
        labels.extend(parse_label_file(&bytes, path)?);
    }

    Ok(AssemblyCorpus {
        transcripts,
        conversation_order,
        delegates: manifest.roster.clone(),
        statements,
        statement_index,
        votes,
        labels,
    })
}
