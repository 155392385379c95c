use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ChatSource;
use crate::bundled;
use crate::error::GatewayError;
use crate::model::{Speaker, Turn};
use crate::seed;

/// Produces tester prompts for generator slots.
pub trait PromptGenerator: Send + Sync {
    fn prompt(&self, dialog_id: &str, dialog_seed: u64, history: &[Turn]) -> Result<String, GatewayError>;
}

/// Samples an interview corpus without replacement per dialog, cycling through
/// the same per-dialog permutation once exhausted.
#[derive(Debug, Clone)]
pub struct CorpusGenerator {
    prompts: Vec<String>,
}

impl CorpusGenerator {
    pub fn new(prompts: Vec<String>) -> Result<Self, GatewayError> {
        if prompts.is_empty() {
            return Err(GatewayError::Protocol("generator corpus is empty".into()));
        }
        Ok(Self { prompts })
    }

    pub fn bundled() -> Self {
        Self {
            prompts: bundled::interview_prompts(),
        }
    }

    pub fn len(&self) -> usize {
        self.prompts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prompts.is_empty()
    }

    fn permutation(&self, dialog_seed: u64) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.prompts.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive_str(dialog_seed, "generator"));
        order.shuffle(&mut rng);
        order
    }
}

impl PromptGenerator for CorpusGenerator {
    fn prompt(&self, _dialog_id: &str, dialog_seed: u64, history: &[Turn]) -> Result<String, GatewayError> {
        let slot = history.iter().filter(|t| t.speaker == Speaker::Tester).count();
        let order = self.permutation(dialog_seed);
        Ok(self.prompts[order[slot % order.len()]].clone())
    }
}

/// Uses any chat source as the generator. The source sees the dialog from its
/// own side: tester turns are presented as its earlier replies.
pub struct ChatGenerator {
    source: Box<dyn ChatSource>,
}

impl ChatGenerator {
    pub fn new(source: Box<dyn ChatSource>) -> Self {
        Self { source }
    }
}

impl PromptGenerator for ChatGenerator {
    fn prompt(&self, dialog_id: &str, _dialog_seed: u64, history: &[Turn]) -> Result<String, GatewayError> {
        let swapped: Vec<Turn> = history
            .iter()
            .map(|t| Turn {
                index: t.index,
                speaker: match t.speaker {
                    Speaker::Tester => Speaker::Model,
                    Speaker::Model => Speaker::Tester,
                },
                text: t.text.clone(),
                injection: None,
            })
            .collect();
        self.source.reply(dialog_id, &swapped)
    }
}
