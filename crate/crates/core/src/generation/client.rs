use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};

use super::{render_prompt, GenerationParams, GenerationSource, Subtask, SubtaskSpec};
use crate::error::{Error, Result};

/// Environment variable holding the live API key. Its value is never logged.
pub const API_KEY_ENV: &str = "GRF_API_KEY";
/// Environment variable overriding the completions API base URL.
pub const API_BASE_ENV: &str = "GRF_API_BASE";
const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

pub struct CompletionRequest<'a> {
    pub query_id: &'a str,
    pub subtask: Subtask,
    pub prompt: &'a str,
    pub max_tokens: u32,
    pub params: &'a GenerationParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    /// Provenance timestamp when the provider supplies one (fixtures do).
    pub created_at: Option<String>,
}

/// The single capability generation needs: prompt in, text out.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion>;

    fn source(&self) -> GenerationSource;
}

/// Renders the subtask prompt and requests a completion capped at the
/// subtask's token budget.
pub fn generate(
    client: &dyn CompletionClient,
    spec: &SubtaskSpec,
    query_id: &str,
    query_text: &str,
    params: &GenerationParams,
) -> Result<Completion> {
    let prompt = render_prompt(spec, query_text)?;
    client.complete(&CompletionRequest {
        query_id,
        subtask: spec.subtask,
        prompt: &prompt,
        max_tokens: spec.max_tokens,
        params,
    })
}

/// Serves completions from `<dir>/<query_id>/<subtask>.json` files holding
/// `{text, params, created_at}`. Never touches the network.
#[derive(Debug, Clone)]
pub struct FixtureClient {
    dir: PathBuf,
}

#[derive(Deserialize)]
struct FixtureFile {
    text: String,
    #[serde(default)]
    created_at: Option<String>,
}

impl FixtureClient {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl CompletionClient for FixtureClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let path = self
            .dir
            .join(request.query_id)
            .join(format!("{}.json", request.subtask));
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(Error::FixtureMissing {
                    query_id: request.query_id.to_string(),
                    subtask: request.subtask.to_string(),
                })
            }
            Err(e) => return Err(Error::io(path, e)),
        };
        let fixture: FixtureFile = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
        Ok(Completion {
            text: fixture.text,
            created_at: fixture.created_at,
        })
    }

    fn source(&self) -> GenerationSource {
        GenerationSource::Fixture
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportError {
    pub retryable: bool,
    pub message: String,
}

/// Minimal JSON-over-HTTP capability used by [`LiveClient`].
pub trait Transport: Send + Sync {
    fn post_json(
        &self,
        url: &str,
        bearer_token: Option<&str>,
        body: &Value,
    ) -> Result<Value, TransportError>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn post_json(
        &self,
        url: &str,
        bearer_token: Option<&str>,
        body: &Value,
    ) -> Result<Value, TransportError> {
        let mut request = self.client.post(url).json(body);
        if let Some(token) = bearer_token {
            request = request.bearer_auth(token);
        }
        let response = request.send().map_err(|e| TransportError {
            retryable: true,
            message: e.without_url().to_string(),
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(TransportError {
                retryable: status.is_server_error() || status.as_u16() == 429,
                message: format!("HTTP {status}"),
            });
        }
        response.json().map_err(|e| TransportError {
            retryable: false,
            message: e.without_url().to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    /// Three attempts, backing off 1s then 2s.
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_secs(1),
        }
    }
}

/// Completions over an OpenAI-style `/completions` endpoint.
pub struct LiveClient {
    transport: Arc<dyn Transport>,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl std::fmt::Debug for LiveClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LiveClient")
            .field("endpoint", &self.endpoint)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .field("retry", &self.retry)
            .finish()
    }
}

impl LiveClient {
    pub fn new(transport: Arc<dyn Transport>, api_base: &str, api_key: Option<String>) -> Self {
        Self {
            transport,
            endpoint: format!("{}/completions", api_base.trim_end_matches('/')),
            api_key,
            retry: RetryPolicy::default(),
        }
    }

    /// Reads the base URL and key from the environment.
    pub fn from_env(transport: Arc<dyn Transport>) -> Self {
        let base = std::env::var(API_BASE_ENV).unwrap_or_else(|_| DEFAULT_API_BASE.to_string());
        let key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Self::new(transport, &base, key)
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn request_body(request: &CompletionRequest<'_>) -> Value {
        json!({
            "model": request.params.model_id,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "frequency_penalty": request.params.frequency_penalty,
            "presence_penalty": request.params.presence_penalty,
        })
    }
}

impl CompletionClient for LiveClient {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<Completion> {
        let body = Self::request_body(request);
        let attempts = self.retry.attempts.max(1);
        let mut backoff = self.retry.initial_backoff;
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self
                .transport
                .post_json(&self.endpoint, self.api_key.as_deref(), &body)
            {
                Ok(response) => {
                    let text = response
                        .pointer("/choices/0/text")
                        .and_then(Value::as_str)
                        .unwrap_or_default()
                        .to_string();
                    return Ok(Completion {
                        text,
                        created_at: None,
                    });
                }
                Err(e) if !e.retryable => return Err(Error::Transport(e.message)),
                Err(e) => {
                    log::warn!(
                        "completion for {}/{} failed (attempt {attempt}/{attempts}): {}",
                        request.query_id,
                        request.subtask,
                        e.message
                    );
                    last = e.message;
                    if attempt < attempts && !backoff.is_zero() {
                        std::thread::sleep(backoff);
                    }
                    backoff *= 2;
                }
            }
        }
        Err(Error::RetriesExhausted { attempts, last })
    }

    fn source(&self) -> GenerationSource {
        GenerationSource::Live
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClientMode {
    Live,
    Fixtures(PathBuf),
}

/// Builds the client for a mode. The transport is used only in live mode.
pub fn build_client(mode: &ClientMode, transport: Arc<dyn Transport>) -> Box<dyn CompletionClient> {
    match mode {
        ClientMode::Live => Box::new(LiveClient::from_env(transport)),
        ClientMode::Fixtures(dir) => Box::new(FixtureClient::new(dir.clone())),
    }
}
