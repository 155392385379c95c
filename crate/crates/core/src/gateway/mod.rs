//! Chat-model access: an HTTP client for the chat wire protocol, deterministic
//! stub models, and the prompt generators that drive the tester side.

mod generator;
pub(crate) mod http;
mod stub;

use serde::{Deserialize, Serialize};

pub use generator::{ChatGenerator, CorpusGenerator, PromptGenerator};
pub use http::{ChatRequest, ChatResponse, HttpChat, WireTurn};
pub use stub::{StubKind, StubModel, StubSpec};

use crate::error::GatewayError;
use crate::model::{Speaker, Turn};

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatEndpointConfig {
    pub base_url: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    pub model_id: String,
}

/// Where replies come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceSpec {
    Http(ChatEndpointConfig),
    Stub(StubSpec),
}

impl SourceSpec {
    pub fn model_id(&self) -> String {
        match self {
            SourceSpec::Http(c) => c.model_id.clone(),
            SourceSpec::Stub(s) => s.label(),
        }
    }

    pub fn build(&self) -> Result<Box<dyn ChatSource>, GatewayError> {
        Ok(match self {
            SourceSpec::Http(cfg) => Box::new(HttpChat::new(cfg.clone())?),
            SourceSpec::Stub(spec) => Box::new(StubModel::new(spec.clone())),
        })
    }
}

/// A chat model. Implementations are shared across worker threads.
pub trait ChatSource: Send + Sync {
    /// Produces the next utterance for `history`, with no precondition on
    /// who spoke last.
    fn reply(&self, dialog_id: &str, history: &[Turn]) -> Result<String, GatewayError>;
}

/// Next reply of the model under test. `history` must end with a tester turn.
pub fn next_reply(
    dialog_id: &str,
    history: &[Turn],
    source: &dyn ChatSource,
) -> Result<String, GatewayError> {
    match history.last() {
        Some(t) if t.speaker == Speaker::Tester => {}
        _ => return Err(GatewayError::History("tester")),
    }
    let reply = source.reply(dialog_id, history)?;
    if reply.trim().is_empty() {
        return Err(GatewayError::Protocol("empty reply".into()));
    }
    Ok(reply)
}

/// Next tester prompt. `history` must be empty or end with a model turn.
pub fn generator_prompt(
    dialog_id: &str,
    dialog_seed: u64,
    history: &[Turn],
    generator: &dyn PromptGenerator,
) -> Result<String, GatewayError> {
    if history.last().is_some_and(|t| t.speaker != Speaker::Model) {
        return Err(GatewayError::History("model"));
    }
    let prompt = generator.prompt(dialog_id, dialog_seed, history)?;
    if prompt.trim().is_empty() {
        return Err(GatewayError::Protocol("empty generator prompt".into()));
    }
    Ok(prompt)
}
