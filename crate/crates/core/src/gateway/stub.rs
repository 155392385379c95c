//! Deterministic local models.
//!
//! Each stub is a pure function of `(spec, dialog_id, history)`; any
//! randomness is drawn from a stream seeded by the stub seed, the dialog id
//! and the history length.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ChatSource;
use crate::bundled;
use crate::error::GatewayError;
use crate::model::{Speaker, Turn};
use crate::seed;
use crate::text::{content_tokens, tokenize};

/// Words used to build stuttered n-grams. None of them occurs in the fillers.
pub(crate) const STUTTER_POOL: &[&str] = &[
    "really", "truly", "deeply", "simply", "fully", "clearly", "warmly", "gladly",
];

const AUXILIARIES: &[&str] = &[
    "am", "are", "can", "could", "did", "do", "does", "had", "has", "have", "is", "was", "were",
    "will", "would", "should",
];

const NEGATIONS: &[&str] = &["not", "never", "no", "don't", "doesn't", "didn't", "haven't", "hasn't"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StubKind {
    /// Replies cycle through a fixed list.
    Scripted { replies: Vec<String> },
    /// Repeats the last prompt.
    Echo,
    /// Perfect memory: answers questions with the earlier statement that best
    /// matches them.
    Parrot,
    /// Never recalls anything; replies with neutral filler.
    Amnesiac,
    /// Asks `question` verbatim on every `period`-th reply.
    Nagger { question: String, period: usize },
    /// Every reply ends with an `ngram`-gram repeated back to back `times`
    /// more times.
    Stutterer { ngram: usize, times: usize },
    /// Plants a toxic phrase in a reply with probability `rate`.
    ToxicPlanter {
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        lexicon: Vec<String>,
        rate: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubSpec {
    #[serde(flatten)]
    pub kind: StubKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

impl StubSpec {
    pub fn new(kind: StubKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            model_id: None,
        }
    }

    pub fn label(&self) -> String {
        if let Some(id) = &self.model_id {
            return id.clone();
        }
        let kind = match &self.kind {
            StubKind::Scripted { .. } => "scripted".to_string(),
            StubKind::Echo => "echo".to_string(),
            StubKind::Parrot => "parrot".to_string(),
            StubKind::Amnesiac => "amnesiac".to_string(),
            StubKind::Nagger { period, .. } => format!("nagger-k{period}"),
            StubKind::Stutterer { ngram, times } => format!("stutterer-{ngram}x{times}"),
            StubKind::ToxicPlanter { rate, .. } => format!("toxic-planter-{rate}"),
        };
        format!("stub:{kind}")
    }

    /// Checks kind parameters.
    pub fn validate(&self) -> Result<(), String> {
        match &self.kind {
            StubKind::Scripted { replies } => {
                if replies.is_empty() || replies.iter().any(|r| r.trim().is_empty()) {
                    return Err("scripted replies must be non-empty".into());
                }
            }
            StubKind::Nagger { question, period } => {
                if *period < 1 {
                    return Err("nagger period must be >= 1".into());
                }
                if question.trim().is_empty() {
                    return Err("nagger question must be non-empty".into());
                }
            }
            StubKind::Stutterer { ngram, times } => {
                if *times < 1 {
                    return Err("stutterer times must be >= 1".into());
                }
                if *ngram < 1 || *ngram > STUTTER_POOL.len() {
                    return Err(format!("stutterer ngram must be in [1, {}]", STUTTER_POOL.len()));
                }
            }
            StubKind::ToxicPlanter { rate, .. } => {
                if !(0.0..=1.0).contains(rate) {
                    return Err("toxic planter rate must be in [0, 1]".into());
                }
            }
            StubKind::Echo | StubKind::Parrot | StubKind::Amnesiac => {}
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct StubModel {
    spec: StubSpec,
    fillers: Vec<String>,
    lexicon: Vec<String>,
}

impl StubModel {
    pub fn new(spec: StubSpec) -> Self {
        let lexicon = match &spec.kind {
            StubKind::ToxicPlanter { lexicon, .. } if !lexicon.is_empty() => lexicon.clone(),
            _ => bundled::toxic_phrases(),
        };
        Self {
            spec,
            fillers: bundled::fillers(),
            lexicon,
        }
    }

    pub fn spec(&self) -> &StubSpec {
        &self.spec
    }

    fn rng(&self, dialog_id: &str, history: &[Turn]) -> ChaCha8Rng {
        let s = seed::derive(seed::derive_str(self.spec.seed, dialog_id), history.len() as u64);
        ChaCha8Rng::seed_from_u64(s)
    }

    fn filler(&self, rng: &mut ChaCha8Rng) -> String {
        self.fillers[rng.gen_range(0..self.fillers.len())].clone()
    }
}

fn last_text(history: &[Turn]) -> &str {
    history.last().map(|t| t.text.as_str()).unwrap_or("")
}

/// Earlier tester statement sharing the most content tokens with `question`;
/// ties go to the most recent.
fn recall<'a>(history: &'a [Turn], question: &str) -> Option<&'a str> {
    let wanted: BTreeSet<String> = content_tokens(question).into_iter().collect();
    let earlier = &history[..history.len().saturating_sub(1)];
    let mut best: Option<(usize, &str)> = None;
    for turn in earlier.iter().filter(|t| t.speaker == Speaker::Tester) {
        if turn.text.contains('?') {
            continue;
        }
        let overlap = content_tokens(&turn.text)
            .into_iter()
            .collect::<BTreeSet<_>>()
            .intersection(&wanted)
            .count();
        if overlap > 0 && best.is_none_or(|(b, _)| overlap >= b) {
            best = Some((overlap, turn.text.as_str()));
        }
    }
    best.map(|(_, text)| text)
}

fn parrot(history: &[Turn]) -> String {
    let prompt = last_text(history).trim();
    if prompt.contains('?') {
        if let Some(statement) = recall(history, prompt) {
            let tokens = tokenize(prompt);
            let closed = tokens.first().is_some_and(|t| AUXILIARIES.contains(&t.as_str()));
            if closed {
                let negated = tokenize(statement).iter().any(|t| NEGATIONS.contains(&t.as_str()));
                let lead = if negated { "No." } else { "Yes." };
                return format!("{lead} {statement}");
            }
            return statement.to_string();
        }
        let restated = prompt.replace('?', "");
        return format!("{}.", restated.trim());
    }
    if prompt.is_empty() {
        return "Hello.".to_string();
    }
    prompt.to_string()
}

impl ChatSource for StubModel {
    fn reply(&self, dialog_id: &str, history: &[Turn]) -> Result<String, GatewayError> {
        let mut rng = self.rng(dialog_id, history);
        let replies_so_far = history.iter().filter(|t| t.speaker == Speaker::Model).count();
        let out = match &self.spec.kind {
            StubKind::Scripted { replies } => replies[replies_so_far % replies.len()].clone(),
            StubKind::Echo => {
                let last = last_text(history);
                if last.trim().is_empty() {
                    self.filler(&mut rng)
                } else {
                    last.to_string()
                }
            }
            StubKind::Parrot => parrot(history),
            StubKind::Amnesiac => self.filler(&mut rng),
            StubKind::Nagger { question, period } => {
                if (replies_so_far + 1) % period == 0 {
                    question.clone()
                } else {
                    self.filler(&mut rng)
                }
            }
            StubKind::Stutterer { ngram, times } => {
                let phrase = STUTTER_POOL[..*ngram].join(" ");
                let repeated = vec![phrase.as_str(); times + 1].join(" ");
                format!("{} {repeated}.", self.filler(&mut rng))
            }
            StubKind::ToxicPlanter { rate, .. } => {
                let base = self.filler(&mut rng);
                if rng.gen_bool(*rate) {
                    let phrase = &self.lexicon[rng.gen_range(0..self.lexicon.len())];
                    format!("{base} {phrase}.")
                } else {
                    base
                }
            }
        };
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::next_reply;
    use crate::model::Dialog;

    fn history(prompts_and_replies: &[&str]) -> Vec<Turn> {
        let mut d = Dialog::new("d", 0, "m");
        for (i, t) in prompts_and_replies.iter().enumerate() {
            let sp = if i % 2 == 0 { Speaker::Tester } else { Speaker::Model };
            d.push(sp, *t, None);
        }
        d.turns
    }

    fn stub(kind: StubKind) -> StubModel {
        StubModel::new(StubSpec::new(kind, 11))
    }

    #[test]
    fn echo_repeats() {
        let h = history(&["Hi"]);
        assert_eq!(next_reply("d", &h, &stub(StubKind::Echo)).unwrap(), "Hi");
    }

    #[test]
    fn parrot_recalls_information() {
        let h = history(&[
            "I studied at Shiraz University.",
            "ok",
            "Tell me about your education.",
            "ok",
            "Where did I study?",
        ]);
        let r = next_reply("d", &h, &stub(StubKind::Parrot)).unwrap();
        assert!(r.contains("Shiraz University"), "{r}");
    }

    #[test]
    fn parrot_answers_closed_questions() {
        let h = history(&["I have never had a driving license.", "ok", "Do I have a driving license?"]);
        let r = next_reply("d", &h, &stub(StubKind::Parrot)).unwrap();
        assert!(r.starts_with("No."), "{r}");
        let h = history(&["I have a cat named Misse.", "ok", "Do I have a cat?"]);
        let r = next_reply("d", &h, &stub(StubKind::Parrot)).unwrap();
        assert!(r.starts_with("Yes."), "{r}");
    }

    #[test]
    fn parrot_restates_unknown_questions() {
        let h = history(&["What is your name?"]);
        let r = next_reply("d", &h, &stub(StubKind::Parrot)).unwrap();
        assert_eq!(r, "What is your name.");
    }

    #[test]
    fn amnesiac_never_recalls() {
        let h = history(&["I studied at Shiraz University.", "ok", "Where did I study?"]);
        let r = next_reply("d", &h, &stub(StubKind::Amnesiac)).unwrap();
        assert!(!r.contains("Shiraz"));
    }

    #[test]
    fn nagger_counts() {
        let s = stub(StubKind::Nagger {
            question: "What do you do?".into(),
            period: 3,
        });
        let mut d = Dialog::new("d", 0, "m");
        let mut asked = 0;
        for _ in 0..10 {
            d.push(Speaker::Tester, "Hello there.", None);
            let r = next_reply("d", &d.turns, &s).unwrap();
            if r == "What do you do?" {
                asked += 1;
            }
            assert!(r == "What do you do?" || !r.contains('?'));
            d.push(Speaker::Model, r, None);
        }
        assert_eq!(asked, 10 / 3);
    }

    #[test]
    fn stutterer_repeats_exactly() {
        for (m, t) in [(1, 1), (2, 3), (3, 2), (6, 1)] {
            let s = stub(StubKind::Stutterer { ngram: m, times: t });
            let r = next_reply("d", &history(&["Hi"]), &s).unwrap();
            let toks = tokenize(&r);
            let phrase: Vec<String> = STUTTER_POOL[..m].iter().map(|s| s.to_string()).collect();
            let start = toks.iter().position(|w| *w == phrase[0]).unwrap();
            let mut copies = 0;
            while toks.get(start + copies * m..start + (copies + 1) * m) == Some(&phrase[..]) {
                copies += 1;
            }
            assert_eq!(copies, t + 1, "{r}");
            assert_eq!(start + copies * m, toks.len(), "{r}");
        }
    }

    #[test]
    fn stubs_are_pure() {
        let s = stub(StubKind::ToxicPlanter {
            lexicon: vec![],
            rate: 0.5,
        });
        let h = history(&["Hi", "Hello", "How are you?"]);
        let a: Vec<_> = (0..20).map(|_| s.reply("d7", &h).unwrap()).collect();
        assert!(a.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn invalid_parameters() {
        assert!(StubSpec::new(StubKind::Nagger { question: "q?".into(), period: 0 }, 0).validate().is_err());
        assert!(StubSpec::new(StubKind::Stutterer { ngram: 2, times: 0 }, 0).validate().is_err());
        assert!(StubSpec::new(StubKind::ToxicPlanter { lexicon: vec![], rate: 1.5 }, 0).validate().is_err());
        assert!(StubSpec::new(StubKind::Scripted { replies: vec![] }, 0).validate().is_err());
    }

    #[test]
    fn fillers_are_clean() {
        for f in bundled::fillers() {
            assert!(!f.contains('?'), "{f}");
            let toks = tokenize(&f);
            let uniq: BTreeSet<_> = toks.iter().collect();
            assert_eq!(uniq.len(), toks.len(), "repeated token in filler {f}");
            assert!(toks.iter().all(|t| !STUTTER_POOL.contains(&t.as_str())), "{f}");
        }
    }
}
