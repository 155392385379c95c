use std::collections::BTreeSet;

use crate::model::Dialog;
use crate::text::{collapse_ws_lower, sentences};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NagReport {
    pub nag_count: usize,
    pub nagging: bool,
    /// Turn indices of replies that repeat an earlier question.
    pub offending: Vec<usize>,
}

/// Normalized question sentences of one reply.
pub fn question_sentences(reply: &str) -> Vec<String> {
    sentences(reply)
        .into_iter()
        .filter(|s| s.terminator == Some('?'))
        .map(|s| collapse_ws_lower(s.text))
        .collect()
}

/// Counts verbatim re-asks: every question occurrence that already appeared
/// in an earlier model reply of the same dialog is one nag.
pub fn count_nags(dialog: &Dialog) -> NagReport {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut nag_count = 0;
    let mut offending = Vec::new();
    for turn in dialog.model_turns() {
        let questions = question_sentences(&turn.text);
        let repeats = questions.iter().filter(|q| seen.contains(*q)).count();
        if repeats > 0 {
            nag_count += repeats;
            offending.push(turn.index);
        }
        seen.extend(questions);
    }
    NagReport {
        nag_count,
        nagging: nag_count > 0,
        offending,
    }
}
