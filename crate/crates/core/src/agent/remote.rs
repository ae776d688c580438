//! Policy backed by an OpenAI-compatible chat-completions endpoint.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::prompt::build_prompt;
use super::{
    AgentError, DecisionPolicy, ExpectedEffect, Observation, OpParams, SessionContext, TestIntent,
    TestOperation,
};
use crate::app::Action;
use crate::perception::GuiStateDoc;

pub const DEFAULT_API_KEY_ENV: &str = "PERSONA_GUI_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: "assistant".into(),
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("http error: {0}")]
    Http(String),
    #[error("malformed completion response: {0}")]
    Response(String),
    #[error("missing API key; set {0}")]
    MissingKey(String),
}

/// Sends a conversation and returns the assistant's reply text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, TransportError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    /// Extra attempts after a transport failure.
    #[serde(default = "default_retries")]
    pub max_retries: usize,
}

fn default_key_env() -> String {
    DEFAULT_API_KEY_ENV.into()
}

fn default_timeout() -> u64 {
    60
}

fn default_retries() -> usize {
    2
}

pub struct HttpChatTransport {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: String,
}

impl HttpChatTransport {
    pub fn from_config(config: &RemoteConfig) -> Result<Self, TransportError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| TransportError::MissingKey(config.api_key_env.clone()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(Self {
            agent,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            api_key,
        })
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

impl ChatTransport for HttpChatTransport {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String, TransportError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": messages,
        });
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| TransportError::Http(e.to_string()))?;
        let completion: Completion = response
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Response(e.to_string()))?;
        completion
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Response("no choices".into()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Decision {
    intent: String,
    expected_effect: ExpectedEffect,
    target_ref: usize,
    action: Action,
    #[serde(default)]
    params: Option<OpParams>,
    summary: String,
}

/// Extracts the outermost JSON object from a reply (tolerating code
/// fences and surrounding prose) and checks it against `doc`.
pub fn parse_decision(reply: &str, doc: &GuiStateDoc) -> Result<TestOperation, String> {
    let start = reply.find('{').ok_or("no JSON object in reply")?;
    let end = reply.rfind('}').ok_or("unterminated JSON object")?;
    if end < start {
        return Err("unterminated JSON object".into());
    }
    let decision: Decision =
        serde_json::from_str(&reply[start..=end]).map_err(|e| format!("invalid decision: {e}"))?;
    if decision.intent.trim().is_empty() {
        return Err("intent must be non-empty".into());
    }
    let op = TestOperation {
        intent: TestIntent::new(decision.intent, decision.expected_effect),
        target_ref: decision.target_ref,
        action: decision.action,
        params: decision.params,
        summary: decision.summary,
    };
    op.check_against(doc)?;
    Ok(op)
}

pub struct RemotePolicy<T: ChatTransport = HttpChatTransport> {
    transport: T,
    max_retries: usize,
}

impl<T: ChatTransport> RemotePolicy<T> {
    pub fn new(transport: T, max_retries: usize) -> Self {
        Self {
            transport,
            max_retries,
        }
    }

    fn send(&self, messages: &[ChatMessage]) -> Result<String, AgentError> {
        let mut last = None;
        for attempt in 0..=self.max_retries {
            match self.transport.complete(messages) {
                Ok(reply) => return Ok(reply),
                Err(e) => {
                    log::warn!("chat request failed (attempt {}): {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(AgentError::PolicyFailure(format!(
            "transport failed after {} attempts: {}",
            self.max_retries + 1,
            last.map(|e| e.to_string()).unwrap_or_default()
        )))
    }
}

impl<T: ChatTransport> DecisionPolicy for RemotePolicy<T> {
    fn propose(
        &self,
        ctx: &SessionContext,
        obs: &Observation,
        excluded: &[TestOperation],
    ) -> Result<TestOperation, AgentError> {
        let mut prompt = build_prompt(ctx, &obs.doc).render();
        if !excluded.is_empty() {
            prompt.push_str("\nThese operations were just rejected as repeats; choose something else:\n");
            for op in excluded {
                prompt.push_str(&format!("- {} (ref {})\n", op.summary, op.target_ref));
            }
        }
        let mut messages = vec![ChatMessage::user(prompt)];
        let reply = self.send(&messages)?;
        let err = match parse_decision(&reply, &obs.doc) {
            Ok(op) => return Ok(op),
            Err(e) => e,
        };
        log::info!("repairing malformed decision: {err}");
        messages.push(ChatMessage::assistant(reply));
        messages.push(ChatMessage::user(format!(
            "Your reply could not be used: {err}. Reply again with only the JSON object."
        )));
        let repaired = self.send(&messages)?;
        parse_decision(&repaired, &obs.doc)
            .map_err(|e| AgentError::PolicyFailure(format!("unusable decision after repair: {e}")))
    }
}
