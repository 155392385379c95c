//! Shared domain types: turns, dialogs, injection annotations and verdicts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Tester,
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ProvideInfo,
    RequestInfo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Typo,
    WordSwap,
    WordDrop,
    Synonym,
}

/// Noise applied to an injected request prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub fraction: f64,
    pub rng_stream: u64,
}

/// Marks a tester turn that was replaced by test payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionTag {
    pub test_id: String,
    pub requirement_id: String,
    pub phase: Phase,
    pub payload_id: String,
    pub noise_applied: Option<NoiseSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
    pub injection: Option<InjectionTag>,
}

/// A test instance that was planned but could not be placed in the dialog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedInstance {
    pub test_id: String,
    pub requirement_id: String,
    pub reason: String,
}

/// One recorded conversation between the tester and the model under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dialog {
    pub dialog_id: String,
    pub seed: u64,
    pub model_id: String,
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dropped: Vec<DroppedInstance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Dialog {
    pub fn new(dialog_id: impl Into<String>, seed: u64, model_id: impl Into<String>) -> Self {
        Self {
            dialog_id: dialog_id.into(),
            seed,
            model_id: model_id.into(),
            turns: Vec::new(),
            dropped: Vec::new(),
            error: None,
        }
    }

    /// Appends a turn, assigning the next index.
    pub fn push(&mut self, speaker: Speaker, text: impl Into<String>, injection: Option<InjectionTag>) {
        let index = self.turns.len();
        self.turns.push(Turn {
            index,
            speaker,
            text: text.into(),
            injection,
        });
    }

    pub fn model_turns(&self) -> impl Iterator<Item = &Turn> {
        self.turns.iter().filter(|t| t.speaker == Speaker::Model)
    }

    pub fn tester_turn_count(&self) -> usize {
        self.turns.iter().filter(|t| t.speaker == Speaker::Tester).count()
    }

    /// Checks the structural invariants every persisted dialog must satisfy.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| ModelError::InvalidDialog {
            dialog_id: self.dialog_id.clone(),
            reason,
        };
        for (pos, turn) in self.turns.iter().enumerate() {
            if turn.index != pos {
                return Err(bad(format!("turn {pos} carries index {}", turn.index)));
            }
            let expected = if pos % 2 == 0 {
                Speaker::Tester
            } else {
                Speaker::Model
            };
            if turn.speaker != expected {
                return Err(bad(format!("turn {pos} breaks tester/model alternation")));
            }
            if turn.text.trim().is_empty() {
                return Err(bad(format!("turn {pos} has empty text")));
            }
            if turn.injection.is_some() && turn.speaker != Speaker::Tester {
                return Err(bad(format!("turn {pos} is a model turn with an injection tag")));
            }
        }
        if !self.turns.len().is_multiple_of(2) {
            return Err(bad("unanswered tester turn".into()));
        }
        let mut provided = std::collections::BTreeSet::new();
        for tag in self.turns.iter().filter_map(|t| t.injection.as_ref()) {
            match tag.phase {
                Phase::ProvideInfo => {
                    provided.insert((tag.test_id.as_str(), tag.payload_id.as_str()));
                }
                Phase::RequestInfo => {
                    if !provided.contains(&(tag.test_id.as_str(), tag.payload_id.as_str())) {
                        return Err(bad(format!(
                            "request for {} precedes its provide turn",
                            tag.test_id
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

/// One test outcome bound to a requirement and dialog.
///
/// Skips carry `evidence["reason"]`; failures carry at least one turn index
/// under `evidence["turns"]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub dialog_id: String,
    pub model_id: String,
    pub requirement_id: String,
    pub test_instance_id: String,
    pub outcome: Outcome,
    pub score: Option<f64>,
    pub evidence: BTreeMap<String, serde_json::Value>,
}

impl Verdict {
    pub fn new(
        dialog: &Dialog,
        requirement_id: &str,
        test_instance_id: impl Into<String>,
        outcome: Outcome,
    ) -> Self {
        Self {
            dialog_id: dialog.dialog_id.clone(),
            model_id: dialog.model_id.clone(),
            requirement_id: requirement_id.to_string(),
            test_instance_id: test_instance_id.into(),
            outcome,
            score: None,
            evidence: BTreeMap::new(),
        }
    }

    pub fn skip(dialog: &Dialog, requirement_id: &str, test_instance_id: impl Into<String>, reason: &str) -> Self {
        Self::new(dialog, requirement_id, test_instance_id, Outcome::Skip).with("reason", reason)
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.evidence.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
        self
    }

    pub fn with_score(mut self, score: f64) -> Self {
        self.score = Some(score);
        self
    }

    /// Ordering key used for canonical output.
    pub fn sort_key(&self) -> (&str, &str, &str) {
        (&self.dialog_id, &self.requirement_id, &self.test_instance_id)
    }

    pub fn reason(&self) -> Option<&str> {
        self.evidence.get("reason").and_then(|v| v.as_str())
    }

    /// Checks the skip/fail evidence rules.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::InvalidVerdict {
            dialog_id: self.dialog_id.clone(),
            requirement_id: self.requirement_id.clone(),
            reason: reason.to_string(),
        };
        match self.outcome {
            Outcome::Skip if self.reason().is_none() => Err(bad("skip without reason")),
            Outcome::Fail => {
                let located = self
                    .evidence
                    .get("turns")
                    .and_then(|v| v.as_array())
                    .is_some_and(|a| !a.is_empty());
                if located {
                    Ok(())
                } else {
                    Err(bad("fail without turn evidence"))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Sorts verdicts by (dialog_id, requirement_id, test_instance_id).
pub fn canonicalize(verdicts: &mut [Verdict]) {
    verdicts.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}
