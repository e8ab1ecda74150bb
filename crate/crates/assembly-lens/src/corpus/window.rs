//! Batch windowing over a transcript's turns.

use super::{SpeakerTurn, Transcript};

/// One processing window: the turns to classify plus the turns immediately
/// preceding them for context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TurnWindow {
    /// Up to `context_size` turns directly before `current`; fewer at the
    /// start of a transcript.
    pub context: Vec<SpeakerTurn>,
    /// The turns this window evaluates. Never empty.
    pub current: Vec<SpeakerTurn>,
    /// Turn index of the first element of `current`.
    pub start_index: usize,
}

/// Split a transcript into consecutive batches of `batch_size` turns, each
/// paired with the `context_size` turns before it. Concatenating the
/// `current` slices reproduces the turn sequence exactly; the last batch may
/// be partial. An empty transcript yields no windows.
pub fn window_turns(
    transcript: &Transcript,
    batch_size: usize,
    context_size: usize,
) -> Vec<TurnWindow> {
    assert!(batch_size >= 1, "batch_size must be at least 1");
    let turns = &transcript.turns;
    let mut windows = Vec::new();
    let mut start = 0;
    while start < turns.len() {
        let end = (start + batch_size).min(turns.len());
        let ctx_start = start.saturating_sub(context_size);
        windows.push(TurnWindow {
            context: turns[ctx_start..start].to_vec(),
            current: turns[start..end].to_vec(),
            start_index: start,
        });
        start = end;
    }
    windows
}
