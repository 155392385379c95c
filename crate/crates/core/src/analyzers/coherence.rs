//! Next-sentence-probability coherence checks over whole dialogs (I2) and
//! single prompt/reply pairs (I3).

use crate::error::ScorerError;
use crate::model::{Dialog, Speaker};

use super::scorers::{NspPair, NspScorer};

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceResult {
    /// One probability per model reply, in turn order.
    pub p_next: Vec<f64>,
    /// Turn indices of the replies whose p_next is below the threshold.
    pub incoherent: Vec<usize>,
    pub dialog_failed: bool,
}

/// Applies the failure rule to already-scored replies.
pub fn coherence_from_scores(reply_turns: &[usize], p_next: &[f64], threshold: f64) -> CoherenceResult {
    let incoherent: Vec<usize> = reply_turns
        .iter()
        .zip(p_next)
        .filter(|(_, p)| **p < threshold)
        .map(|(t, _)| *t)
        .collect();
    CoherenceResult {
        p_next: p_next.to_vec(),
        dialog_failed: !incoherent.is_empty(),
        incoherent,
    }
}

fn join(turns: &[crate::model::Turn]) -> String {
    turns.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ")
}

fn score_pairs(
    dialog: &Dialog,
    nsp: &dyn NspScorer,
    threshold: f64,
    context: impl Fn(usize) -> String,
) -> Result<Option<CoherenceResult>, ScorerError> {
    let mut turns = Vec::new();
    let mut pairs = Vec::new();
    for t in dialog.turns.iter().filter(|t| t.speaker == Speaker::Model) {
        turns.push(t.index);
        pairs.push(NspPair {
            context: context(t.index),
            candidate: t.text.clone(),
        });
    }
    if pairs.is_empty() {
        return Ok(None);
    }
    let p = nsp.p_next(&pairs)?;
    Ok(Some(coherence_from_scores(&turns, &p, threshold)))
}

/// Scores each reply against all turns before it. `None` when the dialog has
/// no model replies.
pub fn dialog_coherence(
    dialog: &Dialog,
    nsp: &dyn NspScorer,
    threshold: f64,
) -> Result<Option<CoherenceResult>, ScorerError> {
    score_pairs(dialog, nsp, threshold, |i| join(&dialog.turns[..i]))
}

/// Scores each reply against the prompt right before it.
pub fn reply_coherence(
    dialog: &Dialog,
    nsp: &dyn NspScorer,
    threshold: f64,
) -> Result<Option<CoherenceResult>, ScorerError> {
    score_pairs(dialog, nsp, threshold, |i| {
        i.checked_sub(1).map(|p| dialog.turns[p].text.clone()).unwrap_or_default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::scorers::ConstNsp;

    struct Fixed(Vec<f64>);

    impl NspScorer for Fixed {
        fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError> {
            Ok(self.0[..pairs.len()].to_vec())
        }
    }

    struct Recorder(std::sync::Mutex<Vec<NspPair>>);

    impl NspScorer for Recorder {
        fn p_next(&self, pairs: &[NspPair]) -> Result<Vec<f64>, ScorerError> {
            self.0.lock().unwrap().extend_from_slice(pairs);
            Ok(vec![1.0; pairs.len()])
        }
    }

    fn dialog(n: usize) -> Dialog {
        let mut d = Dialog::new("d", 0, "m");
        for k in 0..n {
            d.push(Speaker::Tester, format!("p{k}"), None);
            d.push(Speaker::Model, format!("r{k}"), None);
        }
        d
    }

    #[test]
    fn failure_rule() {
        let d = dialog(3);
        let r = dialog_coherence(&d, &ConstNsp(0.9), 0.5).unwrap().unwrap();
        assert!(!r.dialog_failed && r.incoherent.is_empty());
        let r = dialog_coherence(&d, &Fixed(vec![0.9, 0.2, 0.9]), 0.5).unwrap().unwrap();
        assert!(r.dialog_failed);
        assert_eq!(r.incoherent, vec![3]);
        assert_eq!(dialog_coherence(&dialog(0), &ConstNsp(0.9), 0.5).unwrap(), None);
        let r = reply_coherence(&d, &Fixed(vec![0.9, 0.9, 0.1]), 0.5).unwrap().unwrap();
        assert_eq!(r.incoherent, vec![5]);
    }

    #[test]
    fn contexts() {
        let d = dialog(2);
        let rec = Recorder(Default::default());
        dialog_coherence(&d, &rec, 0.5).unwrap();
        reply_coherence(&d, &rec, 0.5).unwrap();
        let got: Vec<(String, String)> = rec.0.into_inner().unwrap().into_iter().map(|p| (p.context, p.candidate)).collect();
        let s = |a: &str, b: &str| (a.to_string(), b.to_string());
        assert_eq!(
            got,
            vec![s("p0", "r0"), s("p0 r0 p1", "r1"), s("p0", "r0"), s("p1", "r1")]
        );
    }
}
