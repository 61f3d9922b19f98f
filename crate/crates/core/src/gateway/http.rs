use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, BackendConfig, ChatRequest, GatewayError, Message};

/// OpenAI-compatible `POST {base_url}/chat/completions` client.
pub struct HttpBackend {
    agent: ureq::Agent,
    endpoint: String,
    api_key_env: String,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [Message],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

impl HttpBackend {
    pub fn new(config: &BackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs.max(1))))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key_env: config.api_key_env.clone(),
        }
    }

    fn api_key(&self) -> Result<String, GatewayError> {
        match std::env::var(&self.api_key_env) {
            Ok(key) if !key.trim().is_empty() => Ok(key),
            _ => Err(GatewayError::Auth(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))),
        }
    }
}

impl Backend for HttpBackend {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        let key = self.api_key()?;
        let body = WireRequest {
            model: &request.model_id,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let mut response = self
            .agent
            .post(&self.endpoint)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(&body)
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        match status {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(format!("HTTP {status}"))),
            429 => return Err(GatewayError::RateLimited),
            408 | 500..=599 => return Err(GatewayError::Transport(format!("HTTP {status}"))),
            _ => {
                let detail = response.body_mut().read_to_string().unwrap_or_default();
                return Err(GatewayError::InvalidRequest(format!("HTTP {status}: {detail}")));
            }
        }
        let parsed: WireResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| GatewayError::Transport(format!("malformed response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::Transport("response has no choices".into()))
    }
}
