//! Q-A verdict logic: open answers, closed yes/no answers and
//! self-consistency.

use crate::error::ScorerError;
use crate::injection::Polarity;
use crate::model::Outcome;
use crate::text::{collapse_ws_lower, contains_run, sentences, tokenize};

use super::scorers::{token_jaccard, QaQuery, QaScorer};

pub const SELF_CONSISTENCY_MIN: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct OpenAssessment {
    pub outcome: Outcome,
    /// Extracted span; the whole reply under lenient matching.
    pub answer: String,
    pub confidence: Option<f64>,
    pub matched: Option<String>,
    pub reason: Option<&'static str>,
}

/// Normalized-token run match of any value inside `span`.
pub fn strict_match<'a>(span: &str, match_values: &'a [String]) -> Option<&'a String> {
    let span = tokenize(span);
    match_values
        .iter()
        .find(|m| {
            let m = tokenize(m);
            !m.is_empty() && contains_run(&span, &m)
        })
}

/// Case- and whitespace-insensitive substring match over the whole reply.
pub fn lenient_match<'a>(reply: &str, match_values: &'a [String]) -> Option<&'a String> {
    let reply = collapse_ws_lower(reply);
    match_values
        .iter()
        .find(|m| reply.contains(&collapse_ws_lower(m)))
}

/// Pass iff the extracted span contains a match value. A confidence below
/// `min_confidence` or an empty span fails with reason `no-answer`.
pub fn assess_open(
    question: &str,
    reply: &str,
    match_values: &[String],
    qa: &dyn QaScorer,
    min_confidence: f64,
) -> Result<OpenAssessment, ScorerError> {
    let ans = qa
        .answer(&[QaQuery {
            question: question.to_string(),
            context: reply.to_string(),
        }])?
        .pop()
        .ok_or_else(|| ScorerError::Protocol("empty qa response".into()))?;
    if ans.score < min_confidence || tokenize(&ans.text).is_empty() {
        return Ok(OpenAssessment {
            outcome: Outcome::Fail,
            answer: ans.text,
            confidence: Some(ans.score),
            matched: None,
            reason: Some("no-answer"),
        });
    }
    let matched = strict_match(&ans.text, match_values).cloned();
    Ok(OpenAssessment {
        outcome: if matched.is_some() { Outcome::Pass } else { Outcome::Fail },
        answer: ans.text,
        confidence: Some(ans.score),
        matched,
        reason: None,
    })
}

/// Reply-level substring variant used when `lenient_match` is set.
pub fn assess_open_lenient(reply: &str, match_values: &[String]) -> OpenAssessment {
    let matched = lenient_match(reply, match_values).cloned();
    OpenAssessment {
        outcome: if matched.is_some() { Outcome::Pass } else { Outcome::Fail },
        answer: reply.to_string(),
        confidence: None,
        matched,
        reason: None,
    }
}

/// `No` iff the first sentence contains a no-list phrase as a token run.
pub fn assess_closed(reply: &str, no_list: &[String]) -> Polarity {
    let first = sentences(reply).into_iter().next().map(|s| tokenize(s.text)).unwrap_or_default();
    let hit = no_list.iter().any(|p| {
        let p = tokenize(p);
        !p.is_empty() && contains_run(&first, &p)
    });
    if hit {
        Polarity::No
    } else {
        Polarity::Yes
    }
}

/// Jaccard similarity of the two answers and whether it reaches the bar.
pub fn self_consistency(answer_1: &str, answer_2: &str) -> (bool, f64) {
    let j = token_jaccard(answer_1, answer_2);
    (j >= SELF_CONSISTENCY_MIN, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analyzers::scorers::{OverlapQa, QaAnswer};
    use crate::injection::ControlledTestData;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    struct Low;

    impl QaScorer for Low {
        fn answer(&self, items: &[QaQuery]) -> Result<Vec<QaAnswer>, ScorerError> {
            Ok(items.iter().map(|q| QaAnswer { text: q.context.clone(), score: 0.05 }).collect())
        }
    }

    #[test]
    fn open_examples() {
        let a = assess_open("Where did I study?", "I studied at Shiraz University", &s(&["Shiraz University"]), &OverlapQa, 0.1).unwrap();
        assert_eq!(a.outcome, Outcome::Pass);
        let a = assess_open(
            "Where do I work?",
            "I used to work at a fast food restaurant",
            &s(&["a bakery"]),
            &OverlapQa,
            0.1,
        )
        .unwrap();
        assert_eq!(a.outcome, Outcome::Fail);
        let a = assess_open("Where did I study?", "Lovely weather.", &s(&["Shiraz"]), &OverlapQa, 0.1).unwrap();
        assert_eq!((a.outcome, a.reason), (Outcome::Fail, Some("no-answer")));
        let a = assess_open("Where did I study?", "Shiraz", &s(&["Shiraz"]), &Low, 0.1).unwrap();
        assert_eq!(a.reason, Some("no-answer"));
    }

    #[test]
    fn lenient_is_substring() {
        assert_eq!(assess_open_lenient("I  work at A Bakery!", &s(&["a bakery"])).outcome, Outcome::Pass);
        assert_eq!(assess_open_lenient("I bake", &s(&["a bakery"])).outcome, Outcome::Fail);
    }

    #[test]
    fn closed_examples() {
        let no = ControlledTestData::bundled().no_list;
        assert_eq!(assess_closed("No, I don't think so.", &no), Polarity::No);
        assert_eq!(assess_closed("Absolutely!", &no), Polarity::Yes);
        assert_eq!(assess_closed("What do you mean by people skills?", &no), Polarity::Yes);
        assert_eq!(assess_closed("Sure. No problem at all.", &no), Polarity::Yes);
        assert_eq!(assess_closed("", &no), Polarity::Yes);
    }

    #[test]
    fn self_consistency_examples() {
        assert!(self_consistency("Emely", "Emely").0);
        assert!(self_consistency("Emely", "emely.").0);
        let (ok, j) = self_consistency("a bank", "a school");
        assert!(!ok);
        assert!((j - 1.0 / 3.0).abs() < 1e-12);
    }
}
