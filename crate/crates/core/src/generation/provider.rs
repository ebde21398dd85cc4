use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use super::prompt::PromptBundle;
use super::rules::rule_based_generate;
use crate::chart::ChartSpec;
use crate::data::Dataset;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const RULES_PROVIDER: &str = "rules";

/// Everything a provider may look at. Owned so a call can outlive its
/// caller's timeout.
#[derive(Debug, Clone)]
pub struct CompletionRequest {
    pub prompt: PromptBundle,
    pub dataset: Arc<Dataset>,
    pub goal: String,
    pub parent: Option<ChartSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProviderError {
    #[error("provider did not answer within {0:?}")]
    Timeout(Duration),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("unusable response: {0}")]
    BadResponse(String),
    #[error("provider declined: {0}")]
    Declined(String),
}

/// A text-completion backend. Calls must not touch engine state.
pub trait ModelProvider: Send + Sync {
    fn name(&self) -> &str;

    fn timeout(&self) -> Duration {
        DEFAULT_TIMEOUT
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError>;
}

/// Runs `complete` on its own thread and gives up after the provider's
/// timeout. An abandoned call keeps running until it returns; its result is
/// discarded.
pub fn complete_with_timeout(
    provider: Arc<dyn ModelProvider>,
    request: CompletionRequest,
) -> Result<String, ProviderError> {
    let timeout = provider.timeout();
    let (tx, rx) = mpsc::channel();
    std::thread::Builder::new()
        .name(format!("provider-{}", provider.name()))
        .spawn(move || {
            let _ = tx.send(provider.complete(&request));
        })
        .map_err(|e| ProviderError::Transport(format!("cannot start provider thread: {e}")))?;
    match rx.recv_timeout(timeout) {
        Ok(result) => result,
        Err(mpsc::RecvTimeoutError::Timeout) => Err(ProviderError::Timeout(timeout)),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err(ProviderError::Transport("provider thread panicked".into())),
    }
}

/// The rule-based generator exposed as a provider; answers with spec JSON.
#[derive(Debug, Clone, Copy, Default)]
pub struct RulesProvider;

impl ModelProvider for RulesProvider {
    fn name(&self) -> &str {
        RULES_PROVIDER
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        rule_based_generate(&request.goal, &request.dataset, request.parent.as_ref())
            .map(|spec| spec.to_json())
            .map_err(|e| ProviderError::Declined(format!("{}: {e}", e.code())))
    }
}

/// Fixture file for [`ScriptedProvider`].
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFixture {
    /// Responses keyed by [`PromptBundle::hash`].
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    /// Responses keyed by the trimmed goal text, consulted after hashes.
    #[serde(default)]
    pub goals: BTreeMap<String, String>,
    #[serde(default)]
    pub default: Option<String>,
    #[serde(default)]
    pub delay_ms: u64,
    #[serde(default)]
    pub timeout_ms: Option<u64>,
}

/// Replays canned responses; for tests and offline demos.
#[derive(Debug, Clone)]
pub struct ScriptedProvider {
    name: String,
    script: ScriptFixture,
}

impl ScriptedProvider {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), script: ScriptFixture::default() }
    }

    pub fn from_fixture(name: impl Into<String>, script: ScriptFixture) -> Self {
        Self { name: name.into(), script }
    }

    pub fn from_file(name: impl Into<String>, path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let script = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::from_fixture(name, script))
    }

    pub fn respond_to_hash(mut self, hash: impl Into<String>, text: impl Into<String>) -> Self {
        self.script.responses.insert(hash.into(), text.into());
        self
    }

    pub fn respond_to_goal(mut self, goal: impl Into<String>, text: impl Into<String>) -> Self {
        self.script.goals.insert(goal.into(), text.into());
        self
    }

    pub fn with_default(mut self, text: impl Into<String>) -> Self {
        self.script.default = Some(text.into());
        self
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.script.delay_ms = delay.as_millis() as u64;
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.script.timeout_ms = Some(timeout.as_millis() as u64);
        self
    }
}

impl ModelProvider for ScriptedProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn timeout(&self) -> Duration {
        self.script.timeout_ms.map_or(DEFAULT_TIMEOUT, Duration::from_millis)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        if self.script.delay_ms > 0 {
            std::thread::sleep(Duration::from_millis(self.script.delay_ms));
        }
        self.script
            .responses
            .get(&request.prompt.hash())
            .or_else(|| self.script.goals.get(request.goal.trim()))
            .or(self.script.default.as_ref())
            .cloned()
            .ok_or_else(|| ProviderError::BadResponse(format!("no scripted response for prompt {}", request.prompt.hash())))
    }
}

/// Connection settings for [`HttpProvider`].
#[derive(Debug, Clone, PartialEq)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpConfig {
    /// Reads `HYPOCANVAS_LLM_ENDPOINT`, `HYPOCANVAS_LLM_MODEL`,
    /// `HYPOCANVAS_LLM_API_KEY` and `HYPOCANVAS_LLM_TIMEOUT_SECS`. Endpoint
    /// and model are required.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let required = |k: &str| get(k).filter(|v| !v.trim().is_empty()).ok_or_else(|| format!("{k} is not set"));
        let timeout = match get("HYPOCANVAS_LLM_TIMEOUT_SECS") {
            None => DEFAULT_TIMEOUT,
            Some(s) => s
                .trim()
                .parse::<u64>()
                .ok()
                .filter(|&n| n > 0)
                .map(Duration::from_secs)
                .ok_or_else(|| format!("HYPOCANVAS_LLM_TIMEOUT_SECS must be a positive integer, got {s:?}"))?,
        };
        Ok(Self {
            endpoint: required("HYPOCANVAS_LLM_ENDPOINT")?,
            model: required("HYPOCANVAS_LLM_MODEL")?,
            api_key: get("HYPOCANVAS_LLM_API_KEY").filter(|v| !v.is_empty()),
            timeout,
        })
    }
}

/// A chat-completions endpoint (OpenAI-compatible request and response
/// bodies).
#[derive(Debug, Clone)]
pub struct HttpProvider {
    name: String,
    config: HttpConfig,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl HttpProvider {
    pub fn new(name: impl Into<String>, config: HttpConfig) -> Self {
        Self { name: name.into(), config }
    }

    pub fn request_body(&self, prompt: &PromptBundle) -> serde_json::Value {
        serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        })
    }
}

impl ModelProvider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn timeout(&self) -> Duration {
        self.config.timeout
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(self.config.timeout)
            .build()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let mut call = client.post(&self.config.endpoint).json(&self.request_body(&request.prompt));
        if let Some(key) = &self.config.api_key {
            call = call.bearer_auth(key);
        }
        let response = call.send().map_err(|e| {
            if e.is_timeout() {
                ProviderError::Timeout(self.config.timeout)
            } else {
                ProviderError::Transport(e.to_string())
            }
        })?;
        let status = response.status();
        if !status.is_success() {
            return Err(ProviderError::Transport(format!("endpoint answered {status}")));
        }
        let body: ChatResponse = response.json().map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::BadResponse("response has no message content".into()))
    }
}

/// Named providers. Always holds the rules provider.
#[derive(Clone)]
pub struct ProviderRegistry {
    providers: HashMap<String, Arc<dyn ModelProvider>>,
}

impl Default for ProviderRegistry {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for ProviderRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProviderRegistry").field("providers", &self.names()).finish()
    }
}

impl ProviderRegistry {
    pub fn new() -> Self {
        let mut providers: HashMap<String, Arc<dyn ModelProvider>> = HashMap::new();
        providers.insert(RULES_PROVIDER.into(), Arc::new(RulesProvider));
        Self { providers }
    }

    /// Adds or replaces a provider under its own name. The rules provider
    /// cannot be replaced.
    pub fn register(&mut self, provider: Arc<dyn ModelProvider>) -> &mut Self {
        let name = provider.name().to_string();
        if name != RULES_PROVIDER {
            self.providers.insert(name, provider);
        }
        self
    }

    pub fn with(mut self, provider: impl ModelProvider + 'static) -> Self {
        self.register(Arc::new(provider));
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn ModelProvider>> {
        self.providers.get(name).cloned()
    }

    /// Registered names, sorted.
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.providers.keys().cloned().collect();
        names.sort();
        names
    }
}
