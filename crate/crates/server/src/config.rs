use std::net::SocketAddr;
use std::path::PathBuf;
use std::time::Duration;

use hypocanvas_core::generation::{
    HttpConfig, HttpProvider, ProviderRegistry, ScriptFixture, ScriptedProvider, RULES_PROVIDER,
};

/// Name under which the scripted provider is registered.
pub const MOCK_PROVIDER: &str = "mock";
/// Name under which the HTTP provider is registered.
pub const LIVE_PROVIDER: &str = "live";

pub const DEFAULT_MAX_JOBS: usize = 4;
pub const DEFAULT_MAX_QUEUED: usize = 64;
pub const DEFAULT_MAX_UPLOAD_BYTES: usize = 10 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProviderMode {
    Rules,
    Mock,
    Live,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("max concurrent jobs must be at least 1")]
    NoWorkers,
    #[error("queue bound must be at least 1")]
    NoQueue,
    #[error("mock fixture: {0}")]
    MockFixture(String),
    #[error("live provider: {0}")]
    Live(String),
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub provider: ProviderMode,
    /// Script for the mock provider; without one it echoes nothing and
    /// every job falls back to the rules generator.
    pub mock_fixture: Option<PathBuf>,
    /// Added to the fixture's own delay.
    pub mock_delay: Duration,
    /// Required when `provider` is live.
    pub live: Option<HttpConfig>,
    pub max_jobs: usize,
    /// Jobs queued or running before new ones are refused with 429.
    pub max_queued: usize,
    pub allow_fallback: bool,
    pub max_upload_bytes: usize,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: data_dir.into(),
            provider: ProviderMode::Rules,
            mock_fixture: None,
            mock_delay: Duration::ZERO,
            live: None,
            max_jobs: DEFAULT_MAX_JOBS,
            max_queued: DEFAULT_MAX_QUEUED,
            allow_fallback: true,
            max_upload_bytes: DEFAULT_MAX_UPLOAD_BYTES,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_jobs == 0 {
            return Err(ConfigError::NoWorkers);
        }
        if self.max_queued == 0 {
            return Err(ConfigError::NoQueue);
        }
        Ok(())
    }

    /// Registry for this configuration and the provider requests use when
    /// they name none. The rules provider is always registered.
    pub fn registry(&self) -> Result<(ProviderRegistry, String), ConfigError> {
        let mut registry = ProviderRegistry::new();
        let default = match self.provider {
            ProviderMode::Rules => RULES_PROVIDER,
            ProviderMode::Mock => {
                let mut script = match &self.mock_fixture {
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .map_err(|e| ConfigError::MockFixture(format!("{}: {e}", path.display())))?;
                        serde_json::from_str::<ScriptFixture>(&text)
                            .map_err(|e| ConfigError::MockFixture(format!("{}: {e}", path.display())))?
                    }
                    None => ScriptFixture::default(),
                };
                script.delay_ms += self.mock_delay.as_millis() as u64;
                registry.register(std::sync::Arc::new(ScriptedProvider::from_fixture(MOCK_PROVIDER, script)));
                MOCK_PROVIDER
            }
            ProviderMode::Live => {
                let http = match &self.live {
                    Some(c) => c.clone(),
                    None => HttpConfig::from_env().map_err(ConfigError::Live)?,
                };
                registry.register(std::sync::Arc::new(HttpProvider::new(LIVE_PROVIDER, http)));
                LIVE_PROVIDER
            }
        };
        Ok((registry, default.to_string()))
    }
}
