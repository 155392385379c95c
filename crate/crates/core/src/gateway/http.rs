//! Blocking JSON-over-HTTP client for the chat wire protocol.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{ChatEndpointConfig, ChatSource};
use crate::error::GatewayError;
use crate::model::{Speaker, Turn};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTurn {
    pub speaker: Speaker,
    pub text: String,
}

/// Body of `POST {base_url}/v1/chat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub dialog_id: String,
    pub turns: Vec<WireTurn>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatResponse {
    pub reply: String,
}

/// Failure modes of a single JSON POST.
#[derive(Debug)]
pub(crate) enum PostError {
    /// Connection failure or timeout after all retries.
    Unavailable(String),
    /// Non-200 status or a body that does not match the schema.
    Protocol(String),
}

pub(crate) fn build_client(timeout_ms: u64) -> Result<reqwest::blocking::Client, String> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_millis(timeout_ms))
        .build()
        .map_err(|e| e.to_string())
}

/// POSTs `body` as JSON and decodes a 200 response. Transport failures are
/// retried up to `max_retries` times with no extra delay beyond the timeout.
pub(crate) fn post_json<B: Serialize, R: DeserializeOwned>(
    client: &reqwest::blocking::Client,
    url: &str,
    body: &B,
    max_retries: u32,
) -> Result<R, PostError> {
    let mut last = String::new();
    for attempt in 0..=max_retries {
        match client.post(url).json(body).send() {
            Ok(resp) => {
                let status = resp.status();
                if status != reqwest::StatusCode::OK {
                    return Err(PostError::Protocol(format!("{url} returned {status}")));
                }
                let bytes = resp
                    .bytes()
                    .map_err(|e| PostError::Protocol(format!("{url}: reading body: {e}")))?;
                return serde_json::from_slice(&bytes)
                    .map_err(|e| PostError::Protocol(format!("{url}: {e}")));
            }
            Err(e) => {
                tracing::debug!(url, attempt, error = %e, "request failed");
                last = e.to_string();
            }
        }
    }
    Err(PostError::Unavailable(last))
}

pub(crate) fn join_url(base: &str, path: &str) -> String {
    format!("{}{}", base.trim_end_matches('/'), path)
}

#[derive(Debug, Clone)]
pub struct HttpChat {
    cfg: ChatEndpointConfig,
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpChat {
    pub fn new(cfg: ChatEndpointConfig) -> Result<Self, GatewayError> {
        let client = build_client(cfg.timeout_ms).map_err(|message| GatewayError::ModelUnavailable {
            url: cfg.base_url.clone(),
            message,
        })?;
        let url = join_url(&cfg.base_url, "/v1/chat");
        Ok(Self { cfg, client, url })
    }

    pub fn config(&self) -> &ChatEndpointConfig {
        &self.cfg
    }

    pub(crate) fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let resp: ChatResponse = post_json(&self.client, &self.url, request, self.cfg.max_retries)
            .map_err(|e| match e {
                PostError::Unavailable(message) => GatewayError::ModelUnavailable {
                    url: self.url.clone(),
                    message,
                },
                PostError::Protocol(m) => GatewayError::Protocol(m),
            })?;
        if resp.reply.trim().is_empty() {
            return Err(GatewayError::Protocol(format!("{}: empty reply", self.url)));
        }
        Ok(resp.reply)
    }
}

pub(crate) fn wire_turns(history: &[Turn]) -> Vec<WireTurn> {
    history
        .iter()
        .map(|t| WireTurn {
            speaker: t.speaker,
            text: t.text.clone(),
        })
        .collect()
}

impl ChatSource for HttpChat {
    fn reply(&self, dialog_id: &str, history: &[Turn]) -> Result<String, GatewayError> {
        self.send(&ChatRequest {
            dialog_id: dialog_id.to_string(),
            turns: wire_turns(history),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_shape() {
        let req = ChatRequest {
            dialog_id: "d00001".into(),
            turns: vec![
                WireTurn { speaker: Speaker::Tester, text: "Hi".into() },
                WireTurn { speaker: Speaker::Model, text: "Hello".into() },
            ],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"dialog_id":"d00001","turns":[{"speaker":"tester","text":"Hi"},{"speaker":"model","text":"Hello"}]}"#
        );
    }

    #[test]
    fn response_schema_is_strict() {
        assert!(serde_json::from_str::<ChatResponse>(r#"{"reply":"x"}"#).is_ok());
        assert!(serde_json::from_str::<ChatResponse>(r#"{"text":"x"}"#).is_err());
        assert!(serde_json::from_str::<ChatResponse>(r#"{"reply":3}"#).is_err());
    }

    #[test]
    fn unreachable_endpoint_is_unavailable() {
        // Port 9 on localhost is closed in the sandbox; connection is refused.
        let chat = HttpChat::new(ChatEndpointConfig {
            base_url: "http://127.0.0.1:9".into(),
            timeout_ms: 500,
            max_retries: 1,
            model_id: "x".into(),
        })
        .unwrap();
        let h = vec![Turn { index: 0, speaker: Speaker::Tester, text: "Hi".into(), injection: None }];
        match chat.reply("d", &h) {
            Err(GatewayError::ModelUnavailable { .. }) => {}
            other => panic!("expected ModelUnavailable, got {other:?}"),
        }
    }
}
