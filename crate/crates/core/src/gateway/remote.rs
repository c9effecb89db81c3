//! Chat-completion HTTP client. The wire contract is provider-neutral: a
//! single user message, a temperature, one completion back.
//!
//! Request body:  `{"model": ..., "messages": [{"role": "user", "content": ...}],
//!                  "temperature": ..., "n": 1}`
//! Response body: `{"choices": [{"message": {"content": ...}}]}`

use super::retry::{RetryPolicy, Sleeper, ThreadSleeper};
use super::{Gateway, GatewayError, GenerationRequest, GenerationResponse};
use serde_json::json;
use std::time::Duration;

pub struct RemoteGateway {
    url: String,
    api_key: Option<String>,
    model: Option<String>,
    agent: ureq::Agent,
    policy: RetryPolicy,
    sleeper: Box<dyn Sleeper>,
}

impl RemoteGateway {
    pub fn new(url: impl Into<String>, api_key: Option<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build();
        RemoteGateway {
            url: url.into(),
            api_key,
            model: None,
            agent: config.into(),
            policy: RetryPolicy::default(),
            sleeper: Box::new(ThreadSleeper),
        }
    }

    /// Configure from `GATEWAY_URL` / `GATEWAY_KEY`.
    pub fn from_env() -> Result<Self, GatewayError> {
        let url = std::env::var("GATEWAY_URL")
            .map_err(|_| GatewayError::MissingConfig("GATEWAY_URL not set".to_string()))?;
        let key = std::env::var("GATEWAY_KEY").ok();
        Ok(Self::new(url, key))
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = Some(model.into());
        self
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Swap the clock; tests use a recording sleeper.
    pub fn with_sleeper(mut self, sleeper: Box<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    fn call_once(&self, req: &GenerationRequest) -> Result<String, GatewayError> {
        let mut body = json!({
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "n": 1,
        });
        if let Some(model) = &self.model {
            body["model"] = json!(model);
        }
        let mut http = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            http = http.header("authorization", &format!("Bearer {key}"));
        }
        let mut resp = http
            .send_json(&body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("http status {status}"))),
            _ => return Err(GatewayError::Transport(format!("http status {status}"))),
        }
        let value: serde_json::Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::BadResponse(e.to_string()))?;
        let content = value
            .pointer("/choices/0/message/content")
            .and_then(|v| v.as_str())
            .ok_or_else(|| GatewayError::BadResponse("missing choices[0].message.content".to_string()))?;
        Ok(content.to_string())
    }
}

impl Gateway for RemoteGateway {
    fn generate(&mut self, req: &GenerationRequest) -> Result<GenerationResponse, GatewayError> {
        let policy = self.policy.clone();
        let mut sleeper = std::mem::replace(&mut self.sleeper, Box::new(ThreadSleeper));
        let result = policy.run(sleeper.as_mut(), |_| self.call_once(req));
        self.sleeper = sleeper;
        let raw = result?;
        Ok(GenerationResponse::from_raw(raw, req.candidates))
    }
}
