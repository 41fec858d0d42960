//! HTTP agent backend targeting a chat-completions-style endpoint.
//!
//! Sends the rendered prompt as a user message (with an optional image
//! part) and reads the answer from `choices[0].message.content`, plus
//! per-token log-probabilities when the endpoint supplies them. The bearer
//! token is read from the environment variable named in `backend_params`,
//! never stored in config files.
//!
//! Backend params: `endpoint` (required), `model`, `api_key_env`,
//! `timeout_secs` (default 60), `temperature` (default 0), `logprobs`
//! ("true"/"false", default true).

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{CalibError, Result};

use super::{Agent, AgentSpec, Completion, CompletionRequest};

const MAX_ATTEMPTS: u32 = 3;
const BACKOFF_BASE_MS: u64 = 250;

#[derive(Debug, Serialize)]
struct ChatRequest {
    model: String,
    messages: Vec<Message>,
    temperature: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    logprobs: bool,
}

#[derive(Debug, Serialize)]
struct Message {
    role: &'static str,
    content: Vec<ContentPart>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ContentPart {
    Text { text: String },
    ImageUrl { image_url: ImageUrl },
}

#[derive(Debug, Serialize)]
struct ImageUrl {
    url: String,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
    #[serde(default)]
    logprobs: Option<LogProbs>,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Debug, Deserialize)]
struct LogProbs {
    #[serde(default)]
    content: Vec<TokenLogProb>,
}

#[derive(Debug, Deserialize)]
struct TokenLogProb {
    logprob: f64,
}

pub struct HttpAgent {
    spec: AgentSpec,
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    temperature: f64,
    request_logprobs: bool,
    /// Whether the endpoint has returned logprobs so far; flips to an error
    /// if presence becomes inconsistent mid-run.
    logprobs_seen: Option<bool>,
}

impl HttpAgent {
    pub fn from_spec(spec: AgentSpec) -> Result<Self> {
        let params = &spec.backend_params;
        let endpoint = params
            .get("endpoint")
            .cloned()
            .ok_or_else(|| {
                CalibError::InvalidParam(format!(
                    "http agent '{}' needs an 'endpoint' backend param",
                    spec.name
                ))
            })?;
        let timeout_secs: u64 = match params.get("timeout_secs") {
            Some(v) => v.parse().map_err(|_| {
                CalibError::InvalidParam(format!("timeout_secs is not an integer: {v}"))
            })?,
            None => 60,
        };
        let temperature: f64 = match params.get("temperature") {
            Some(v) => v.parse().map_err(|_| {
                CalibError::InvalidParam(format!("temperature is not a number: {v}"))
            })?,
            None => 0.0,
        };
        let request_logprobs = params.get("logprobs").map(String::as_str) != Some("false");
        let api_key = match params.get("api_key_env") {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                CalibError::InvalidParam(format!(
                    "environment variable '{var}' (api_key_env for agent '{}') is not set",
                    spec.name
                ))
            })?),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| CalibError::Transport { agent: spec.name.clone(), message: e.to_string() })?;
        Ok(Self {
            model: params.get("model").cloned().unwrap_or_default(),
            spec,
            client,
            endpoint,
            api_key,
            temperature,
            request_logprobs,
            logprobs_seen: None,
        })
    }

    fn transport(&self, message: String) -> CalibError {
        CalibError::Transport { agent: self.spec.name.clone(), message }
    }

    fn send_once(&self, body: &ChatRequest) -> std::result::Result<ChatResponse, String> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if !status.is_success() {
            return Err(format!("endpoint returned {status}"));
        }
        resp.json::<ChatResponse>().map_err(|e| format!("invalid response body: {e}"))
    }
}

impl Agent for HttpAgent {
    fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn complete(&mut self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let mut content = vec![ContentPart::Text { text: request.prompt.clone() }];
        if let Some(image) = &request.query.image_ref {
            content.push(ContentPart::ImageUrl { image_url: ImageUrl { url: image.clone() } });
        }
        let body = ChatRequest {
            model: self.model.clone(),
            messages: vec![Message { role: "user", content }],
            temperature: self.temperature,
            logprobs: self.request_logprobs,
        };

        let mut last_err = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(BACKOFF_BASE_MS << (attempt - 1)));
            }
            match self.send_once(&body) {
                Ok(parsed) => {
                    let choice = parsed
                        .choices
                        .into_iter()
                        .next()
                        .ok_or_else(|| self.transport("response carried no choices".into()))?;
                    let text = choice.message.content.unwrap_or_default();
                    let token_probs: Option<Vec<f64>> = choice.logprobs.map(|lp| {
                        lp.content
                            .iter()
                            .map(|t| t.logprob.exp().clamp(f64::MIN_POSITIVE, 1.0))
                            .collect()
                    });
                    let has = token_probs.as_ref().is_some_and(|t| !t.is_empty());
                    match self.logprobs_seen {
                        None => self.logprobs_seen = Some(has),
                        Some(seen) if seen != has => {
                            return Err(self.transport(
                                "endpoint returned token log-probabilities inconsistently across calls"
                                    .into(),
                            ))
                        }
                        _ => {}
                    }
                    return Ok(Completion {
                        text,
                        token_probs: token_probs.filter(|t| !t.is_empty()),
                    });
                }
                Err(e) => last_err = e,
            }
        }
        Err(self.transport(format!("{MAX_ATTEMPTS} attempts failed, last error: {last_err}")))
    }
}
