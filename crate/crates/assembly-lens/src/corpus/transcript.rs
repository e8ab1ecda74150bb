//! Transcript CSV parsing and serialization.

use super::{CorpusError, Role, SessionKind, SpeakerTurn, Transcript};

/// Metadata accompanying a transcript file; comes from the corpus manifest.
#[derive(Debug, Clone)]
pub struct TranscriptMeta {
    pub conversation_id: String,
    pub day: u32,
    pub phase: String,
    pub session_kind: SessionKind,
}

/// Parse a `turn_index,speaker_id,role,text` CSV into a [`Transcript`].
///
/// Turn indices must be contiguous from 0 — evidence provenance depends on
/// stable indices, so gaps are an error rather than being silently reindexed.
pub fn parse_transcript(bytes: &[u8], meta: &TranscriptMeta) -> Result<Transcript, CorpusError> {
    let file = meta.conversation_id.clone();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);

    let mut turns = Vec::new();
    for (i, row) in reader.records().enumerate() {
        // Header is line 1; first record is line 2.
        let line = i + 2;
        let row = row.map_err(|e| CorpusError::BadField {
            file: file.clone(),
            line,
            message: e.to_string(),
        })?;
        if row.len() != 4 {
            return Err(CorpusError::MalformedRow {
                file,
                line,
                got: row.len(),
            });
        }
        let index_field = &row[0];
        let turn_index: usize =
            index_field
                .trim()
                .parse()
                .map_err(|_| CorpusError::NonContiguousIndex {
                    file: file.clone(),
                    line,
                    expected: i,
                    got: index_field.to_string(),
                })?;
        if turn_index != i {
            return Err(CorpusError::NonContiguousIndex {
                file,
                line,
                expected: i,
                got: index_field.to_string(),
            });
        }
        let role = Role::parse(row[2].trim()).ok_or_else(|| CorpusError::UnknownRole {
            file: file.clone(),
            line,
            role: row[2].to_string(),
        })?;
        let text = row[3].to_string();
        if text.trim().is_empty() {
            return Err(CorpusError::EmptyText { file, line });
        }
        turns.push(SpeakerTurn {
            turn_index,
            speaker_id: row[1].to_string(),
            role,
            text,
        });
    }

    Ok(Transcript {
        conversation_id: meta.conversation_id.clone(),
        day: meta.day,
        phase: meta.phase.clone(),
        session_kind: meta.session_kind,
        turns,
    })
}

/// Serialize a transcript back to its CSV form. Re-parsing the output with
/// the same metadata yields an identical value.
pub fn transcript_to_csv(transcript: &Transcript) -> Vec<u8> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["turn_index", "speaker_id", "role", "text"])
        .expect("write to Vec cannot fail");
    for turn in &transcript.turns {
        writer
            .write_record([
                turn.turn_index.to_string().as_str(),
                &turn.speaker_id,
                turn.role.as_str(),
                &turn.text,
            ])
            .expect("write to Vec cannot fail");
    }
    writer.into_inner().expect("flush to Vec cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> TranscriptMeta {
        TranscriptMeta {
            conversation_id: "conv1".into(),
            day: 2,
            phase: "DraftInitialRecs".into(),
            session_kind: SessionKind::Breakout,
        }
    }

    #[test]
    fn parses_well_formed_rows() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,delegate,Hello there\n1,m01,moderator,Welcome everyone\n2,d02,delegate,Thanks\n";
        let t = parse_transcript(csv.as_bytes(), &meta()).unwrap();
        assert_eq!(t.turns.len(), 3);
        assert_eq!(
            t.turns.iter().map(|t| t.turn_index).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
        assert_eq!(t.turns[1].role, Role::Moderator);
    }

    #[test]
    fn rejects_unknown_role() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,student,Hello\n";
        match parse_transcript(csv.as_bytes(), &meta()) {
            Err(CorpusError::UnknownRole { role, line, .. }) => {
                assert_eq!(role, "student");
                assert_eq!(line, 2);
            }
            other => panic!("expected UnknownRole, got {other:?}"),
        }
    }

    #[test]
    fn rejects_gapped_indices() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,delegate,Hi\n2,d02,delegate,Skip\n";
        assert!(matches!(
            parse_transcript(csv.as_bytes(), &meta()),
            Err(CorpusError::NonContiguousIndex { expected: 1, .. })
        ));
    }

    #[test]
    fn rejects_blank_text() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,delegate,   \n";
        assert!(matches!(
            parse_transcript(csv.as_bytes(), &meta()),
            Err(CorpusError::EmptyText { line: 2, .. })
        ));
    }

    #[test]
    fn rejects_wrong_column_count() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,delegate\n";
        assert!(matches!(
            parse_transcript(csv.as_bytes(), &meta()),
            Err(CorpusError::MalformedRow { got: 3, .. })
        ));
    }

    #[test]
    fn round_trips_embedded_commas_and_quotes() {
        let csv = "turn_index,speaker_id,role,text\n0,d01,delegate,\"I said, \"\"divest\"\" now\"\n";
        let t = parse_transcript(csv.as_bytes(), &meta()).unwrap();
        assert_eq!(t.turns[0].text, "I said, \"divest\" now");
        let out = transcript_to_csv(&t);
        let again = parse_transcript(&out, &meta()).unwrap();
        assert_eq!(t, again);
    }
}
