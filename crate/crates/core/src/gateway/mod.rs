//! Uniform access to chat-completion backends.
//!
//! A [`Gateway`] wraps a [`Backend`] with retry/backoff and a bound on the
//! number of requests in flight. Two backends ship with the crate: the
//! OpenAI-compatible [`HttpBackend`] and the scripted [`MockBackend`] used
//! for offline runs and tests.

mod http;
mod mock;
mod template;

use std::collections::BTreeMap;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tracing::warn;

pub use http::HttpBackend;
pub use mock::{MockBackend, MockScript};
pub use template::{PromptLibrary, PromptTemplate};

/// Default sampling temperature for generation prompts.
pub const GENERATION_TEMPERATURE: f64 = 0.7;
/// Default sampling temperature for detection, checking and annotation prompts.
pub const JUDGE_TEMPERATURE: f64 = 0.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// Which template produced a request, plus the values it was rendered with.
///
/// Never sent over the wire. The template id takes part in the mock
/// fingerprint; the bindings are only visible to the mock's reply
/// synthesizer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RequestTag {
    pub template_id: String,
    pub bindings: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tag: Option<RequestTag>,
}

impl ChatRequest {
    pub fn new(model_id: impl Into<String>, messages: Vec<Message>) -> Self {
        Self {
            model_id: model_id.into(),
            messages,
            temperature: JUDGE_TEMPERATURE,
            max_tokens: 512,
            tag: None,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn tagged(mut self, template_id: &str, bindings: BTreeMap<String, String>) -> Self {
        self.tag = Some(RequestTag { template_id: template_id.to_string(), bindings });
        self
    }

    pub fn template_id(&self) -> Option<&str> {
        self.tag.as_ref().map(|t| t.template_id.as_str())
    }

    /// Appends a follow-up exchange, used when a reply fails to parse.
    pub fn followed_by(&self, reply: &str, correction: &str) -> Self {
        let mut next = self.clone();
        next.messages.push(Message::assistant(reply));
        next.messages.push(Message::user(correction));
        next
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        let first = self
            .messages
            .first()
            .ok_or_else(|| GatewayError::InvalidRequest("no messages".into()))?;
        if first.role == Role::Assistant {
            return Err(GatewayError::InvalidRequest(
                "first message must be system or user".into(),
            ));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(GatewayError::InvalidRequest("temperature must be >= 0".into()));
        }
        if self.max_tokens == 0 {
            return Err(GatewayError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Stable SHA-256 digest of a request, as lowercase hex.
///
/// Covers the model id, the template id when tagged, and the message texts
/// in order. Every field is length-prefixed so distinct requests cannot
/// collide by concatenation.
pub fn mock_fingerprint(request: &ChatRequest) -> String {
    let mut hasher = Sha256::new();
    let mut field = |bytes: &[u8]| {
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    };
    field(request.model_id.as_bytes());
    field(request.template_id().unwrap_or("").as_bytes());
    for message in &request.messages {
        field(message.content.as_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GatewayError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("missing bindings: {}", .0.join(", "))]
    MissingBinding(Vec<String>),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited")]
    RateLimited,
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("no scripted reply for fingerprint {fingerprint} (template {template_id:?})")]
    Unscripted { fingerprint: String, template_id: Option<String> },
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport(_) | GatewayError::RateLimited)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub base_url: String,
    pub api_key_env: String,
    pub model_id: String,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "LLM_API_KEY".into(),
            model_id: "gpt-4o".into(),
            max_retries: 3,
            backoff_ms: 500,
            max_in_flight: 8,
            timeout_secs: 120,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.max_in_flight == 0 {
            return Err(GatewayError::InvalidRequest("max_in_flight must be >= 1".into()));
        }
        if self.backoff_ms == 0 {
            return Err(GatewayError::InvalidRequest("backoff_ms must be positive".into()));
        }
        Ok(())
    }
}

/// A chat-completion provider. Implementations must be shareable across
/// threads; the gateway calls `send` concurrently.
pub trait Backend: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError>;
}

impl<B: Backend + ?Sized> Backend for Arc<B> {
    fn send(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        (**self).send(request)
    }
}

/// Counting semaphore bounding concurrent backend calls.
struct InFlightLimit {
    max: usize,
    current: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    fn new(max: usize) -> Self {
        Self { max, current: Mutex::new(0), freed: Condvar::new() }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut current = self.current.lock().unwrap_or_else(|e| e.into_inner());
        while *current >= self.max {
            current = self.freed.wait(current).unwrap_or_else(|e| e.into_inner());
        }
        *current += 1;
        InFlightPermit { limit: self }
    }
}

struct InFlightPermit<'a> {
    limit: &'a InFlightLimit,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        let mut current = self.limit.current.lock().unwrap_or_else(|e| e.into_inner());
        *current -= 1;
        self.limit.freed.notify_one();
    }
}

/// Shared entry point for every LLM call in the pipeline.
pub struct Gateway {
    backend: Arc<dyn Backend>,
    prompts: PromptLibrary,
    model_id: String,
    max_retries: u32,
    backoff: Duration,
    limit: InFlightLimit,
}

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, config: &BackendConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        Ok(Self {
            backend,
            prompts: crate::prompts::library(),
            model_id: config.model_id.clone(),
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
            limit: InFlightLimit::new(config.max_in_flight),
        })
    }

    /// Gateway over a mock backend with no backoff delay.
    pub fn mock(script: MockScript) -> Self {
        let config = BackendConfig { backoff_ms: 1, ..BackendConfig::default() };
        Self::new(Arc::new(MockBackend::new(script)), &config).expect("default config is valid")
    }

    pub fn with_prompts(mut self, prompts: PromptLibrary) -> Self {
        self.prompts = prompts;
        self
    }

    pub fn prompts(&self) -> &PromptLibrary {
        &self.prompts
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn render_prompt(
        &self,
        template_id: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, GatewayError> {
        self.prompts.render_prompt(template_id, bindings)
    }

    /// Sends a request, retrying transient failures with doubling backoff.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, GatewayError> {
        request.validate()?;
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.limit.acquire();
                self.backend.send(request)
            };
            match result {
                Ok(text) => return Ok(text),
                Err(err) if err.is_retryable() && attempt < self.max_retries => {
                    attempt += 1;
                    warn!(attempt, error = %err, "retrying chat request");
                    std::thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
                Err(err) => return Err(err),
            }
        }
    }

    /// Renders a single-user-message request from a template.
    pub fn templated(
        &self,
        template_id: &str,
        bindings: BTreeMap<String, String>,
        temperature: f64,
    ) -> Result<ChatRequest, GatewayError> {
        let body = self.render_prompt(template_id, &bindings)?;
        Ok(ChatRequest::new(self.model_id.clone(), vec![Message::user(body)])
            .with_temperature(temperature)
            .tagged(template_id, bindings))
    }
}

/// Builds a binding map from string pairs.
pub fn bindings<K: AsRef<str>, V: AsRef<str>>(
    pairs: impl IntoIterator<Item = (K, V)>,
) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn request(texts: &[&str]) -> ChatRequest {
        ChatRequest::new("m", texts.iter().map(|t| Message::user(*t)).collect())
    }

    #[test]
    fn fingerprint_is_stable_and_order_sensitive() {
        let a = request(&["hello", "world"]);
        assert_eq!(mock_fingerprint(&a), mock_fingerprint(&a.clone()));
        assert_ne!(mock_fingerprint(&a), mock_fingerprint(&request(&["world", "hello"])));
        // length prefixes keep split points distinct
        assert_ne!(mock_fingerprint(&a), mock_fingerprint(&request(&["hellow", "orld"])));
    }

    #[test]
    fn fingerprint_pinned_digest() {
        // model "m", no template, one message "x":
        // sha256(le64(1) "m" le64(0) le64(1) "x")
        let fp = mock_fingerprint(&request(&["x"]));
        let mut h = Sha256::new();
        h.update(1u64.to_le_bytes());
        h.update(b"m");
        h.update(0u64.to_le_bytes());
        h.update(1u64.to_le_bytes());
        h.update(b"x");
        let expected: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(fp, expected);
        assert_eq!(fp.len(), 64);
    }

    #[test]
    fn fingerprint_one_character_difference() {
        assert_ne!(
            mock_fingerprint(&request(&["Topic: Marijuana"])),
            mock_fingerprint(&request(&["Topic: marijuana"]))
        );
    }

    #[test]
    fn fingerprint_includes_template_id() {
        let plain = request(&["x"]);
        let tagged = plain.clone().tagged("t", BTreeMap::new());
        assert_ne!(mock_fingerprint(&plain), mock_fingerprint(&tagged));
    }

    #[test]
    fn request_validation() {
        assert!(ChatRequest::new("m", vec![]).validate().is_err());
        assert!(ChatRequest::new("m", vec![Message::assistant("x")]).validate().is_err());
        assert!(request(&["x"]).with_temperature(-1.0).validate().is_err());
        assert!(request(&["x"]).validate().is_ok());
    }

    struct Flaky {
        failures: AtomicUsize,
        error: GatewayError,
        calls: AtomicUsize,
    }

    impl Backend for Flaky {
        fn send(&self, _: &ChatRequest) -> Result<String, GatewayError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                Err(self.error.clone())
            } else {
                Ok("ok".into())
            }
        }
    }

    fn flaky_gateway(failures: usize, error: GatewayError) -> (Gateway, Arc<Flaky>) {
        let backend = Arc::new(Flaky {
            failures: AtomicUsize::new(failures),
            error,
            calls: AtomicUsize::new(0),
        });
        let config = BackendConfig { backoff_ms: 1, max_retries: 3, ..Default::default() };
        (Gateway::new(backend.clone(), &config).unwrap(), backend)
    }

    #[test]
    fn retries_transient_failures() {
        let (gw, backend) = flaky_gateway(3, GatewayError::Transport("reset".into()));
        assert_eq!(gw.complete(&request(&["x"])).unwrap(), "ok");
        assert_eq!(backend.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn gives_up_after_max_retries() {
        let (gw, backend) = flaky_gateway(10, GatewayError::RateLimited);
        assert_eq!(gw.complete(&request(&["x"])).unwrap_err(), GatewayError::RateLimited);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn auth_is_not_retried() {
        let (gw, backend) = flaky_gateway(10, GatewayError::Auth("bad key".into()));
        assert!(matches!(gw.complete(&request(&["x"])), Err(GatewayError::Auth(_))));
        assert_eq!(backend.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn zero_in_flight_is_rejected() {
        let config = BackendConfig { max_in_flight: 0, ..Default::default() };
        let backend: Arc<dyn Backend> = Arc::new(MockBackend::new(MockScript::default()));
        assert!(Gateway::new(backend, &config).is_err());
    }
}
