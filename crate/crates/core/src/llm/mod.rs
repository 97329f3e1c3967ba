//! Completion providers and reply parsing.
//!
//! Every provider implements [`CompletionProvider`]. HTTP adapters differ
//! only in request and response field mapping; [`MockProvider`] answers
//! from a fixture table or, failing that, from a hash of the prompt.

mod http;
mod mock;
mod parse;
mod ratelimit;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::prompts::PromptBundle;

pub use http::{reply_text, request_for, HttpProvider, HttpRequest};
pub use mock::{sha256_hex, MockProvider};
pub use parse::{
    format_dass, format_panas, parse_dass_response, parse_panas_response, DassPrediction,
    PanasScores, ParseError,
};
pub use ratelimit::RateLimiter;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LlmError {
    #[error("provider did not answer within the timeout (after {attempts} attempts)")]
    Timeout { attempts: u32 },
    #[error("provider rejected the credentials (HTTP {status})")]
    AuthFailure { status: u16 },
    #[error("provider kept rate limiting (after {attempts} attempts)")]
    RateLimited { attempts: u32 },
    #[error("provider returned HTTP {status} (after {attempts} attempts)")]
    ServerError { status: u16, attempts: u32 },
    #[error("unexpected provider response: {0}")]
    MalformedProviderResponse(String),
    #[error("invalid request: {0}")]
    Usage(String),
    #[error("mock fixtures: {0}")]
    Fixture(String),
}

impl LlmError {
    fn is_transient(&self) -> bool {
        matches!(
            self,
            LlmError::Timeout { .. } | LlmError::RateLimited { .. } | LlmError::ServerError { .. }
        )
    }
}

/// Provider API family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    OpenAi,
    Gemini,
    Anthropic,
    Mock,
}

impl ProviderKind {
    pub fn default_endpoint(self) -> &'static str {
        match self {
            ProviderKind::OpenAi => "https://api.openai.com/v1/chat/completions",
            ProviderKind::Gemini => {
                "https://generativelanguage.googleapis.com/v1beta/models/{model}:generateContent"
            }
            ProviderKind::Anthropic => "https://api.anthropic.com/v1/messages",
            ProviderKind::Mock => "",
        }
    }
}

impl FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "openai" | "openai-compatible" => Ok(ProviderKind::OpenAi),
            "gemini" | "gemini-compatible" => Ok(ProviderKind::Gemini),
            "anthropic" | "anthropic-compatible" | "claude" => Ok(ProviderKind::Anthropic),
            "mock" => Ok(ProviderKind::Mock),
            other => Err(format!("unknown provider `{other}` (openai, gemini, anthropic, mock)")),
        }
    }
}

/// A credential that never appears in `Debug` or `Display` output.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct SecretString(String);

impl SecretString {
    pub fn new(s: impl Into<String>) -> Self {
        SecretString(s.into())
    }

    pub fn expose(&self) -> &str {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Debug for SecretString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SecretString(***)")
    }
}

impl fmt::Display for SecretString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("***")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderConfig {
    pub provider: ProviderKind,
    pub endpoint: String,
    pub model: String,
    pub api_key: SecretString,
    pub timeout_s: f64,
    pub max_retries: u32,
    /// First retry delay; doubles on every further attempt.
    pub backoff_base_ms: u64,
    pub requests_per_minute: Option<u32>,
    pub temperature: Option<f64>,
    pub max_output_tokens: u32,
}

impl ProviderConfig {
    pub fn new(provider: ProviderKind) -> Self {
        ProviderConfig {
            provider,
            endpoint: provider.default_endpoint().to_owned(),
            model: String::new(),
            api_key: SecretString::default(),
            timeout_s: 120.0,
            max_retries: 3,
            backoff_base_ms: 1000,
            requests_per_minute: None,
            temperature: None,
            max_output_tokens: 4096,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(LlmError::Usage(format!("timeout must be positive, got {}", self.timeout_s)));
        }
        if self.provider != ProviderKind::Mock {
            if self.endpoint.is_empty() {
                return Err(LlmError::Usage("no endpoint configured".into()));
            }
            if self.model.is_empty() {
                return Err(LlmError::Usage("no model configured".into()));
            }
        }
        Ok(())
    }

    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_base_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

pub trait CompletionProvider: Send + Sync {
    /// One attempt at a completion. Retries are handled by [`complete`].
    fn complete_once(&self, prompt: &PromptBundle) -> Result<String, LlmError>;

    fn max_retries(&self) -> u32 {
        0
    }

    fn backoff(&self, _attempt: u32) -> Duration {
        Duration::ZERO
    }
}

/// Sends `prompt`, retrying transient failures with exponential backoff.
pub fn complete(provider: &dyn CompletionProvider, prompt: &PromptBundle) -> Result<String, LlmError> {
    if prompt.text.trim().is_empty() {
        return Err(LlmError::Usage("empty prompt".into()));
    }
    let retries = provider.max_retries();
    let mut attempt = 0;
    loop {
        match provider.complete_once(prompt) {
            Ok(text) => return Ok(text),
            Err(e) if e.is_transient() && attempt < retries => {
                log::warn!("attempt {} failed: {e}; retrying", attempt + 1);
                std::thread::sleep(provider.backoff(attempt));
                attempt += 1;
            }
            Err(e) => {
                let attempts = attempt + 1;
                return Err(match e {
                    LlmError::Timeout { .. } => LlmError::Timeout { attempts },
                    LlmError::RateLimited { .. } => LlmError::RateLimited { attempts },
                    LlmError::ServerError { status, .. } => LlmError::ServerError { status, attempts },
                    other => other,
                });
            }
        }
    }
}

/// Builds the provider described by `cfg`. Mock providers load their
/// fixture table from `mock_fixtures` when given.
pub fn provider_from_config(
    cfg: &ProviderConfig,
    mock_fixtures: Option<&std::path::Path>,
) -> Result<Box<dyn CompletionProvider>, LlmError> {
    cfg.validate()?;
    Ok(match cfg.provider {
        ProviderKind::Mock => Box::new(match mock_fixtures {
            Some(path) => MockProvider::from_fixture_file(path)?,
            None => MockProvider::new(),
        }),
        _ => Box::new(HttpProvider::new(cfg.clone())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prompts::PromptKind;
    use std::sync::atomic::{AtomicU32, Ordering};

    struct Flaky {
        failures: u32,
        error: LlmError,
        calls: AtomicU32,
    }

    impl CompletionProvider for Flaky {
        fn complete_once(&self, _: &PromptBundle) -> Result<String, LlmError> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.failures {
                Err(self.error.clone())
            } else {
                Ok("done".into())
            }
        }
        fn max_retries(&self) -> u32 {
            2
        }
    }

    fn prompt(text: &str) -> PromptBundle {
        PromptBundle { kind: PromptKind::DailyQuestion, text: text.into(), token_estimate: 1, warnings: vec![] }
    }

    #[test]
    fn retries_transient_failures() {
        let p = Flaky { failures: 2, error: LlmError::Timeout { attempts: 1 }, calls: AtomicU32::new(0) };
        assert_eq!(complete(&p, &prompt("x")).unwrap(), "done");
        let p = Flaky { failures: 5, error: LlmError::RateLimited { attempts: 1 }, calls: AtomicU32::new(0) };
        assert_eq!(complete(&p, &prompt("x")), Err(LlmError::RateLimited { attempts: 3 }));
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn auth_failures_are_not_retried() {
        let p = Flaky { failures: 5, error: LlmError::AuthFailure { status: 401 }, calls: AtomicU32::new(0) };
        assert_eq!(complete(&p, &prompt("x")), Err(LlmError::AuthFailure { status: 401 }));
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn empty_prompt_is_a_usage_error() {
        let p = Flaky { failures: 0, error: LlmError::Timeout { attempts: 1 }, calls: AtomicU32::new(0) };
        assert!(matches!(complete(&p, &prompt("  ")), Err(LlmError::Usage(_))));
    }

    #[test]
    fn secrets_stay_out_of_debug_output() {
        let mut cfg = ProviderConfig::new(ProviderKind::OpenAi);
        cfg.api_key = SecretString::new("sk-very-secret-123");
        cfg.model = "m".into();
        let shown = format!("{cfg:?} {}", cfg.api_key);
        assert!(!shown.contains("sk-very-secret-123"));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ProviderConfig::new(ProviderKind::Anthropic);
        assert!(cfg.validate().is_err());
        cfg.model = "claude".into();
        assert!(cfg.validate().is_ok());
        cfg.timeout_s = 0.0;
        assert!(cfg.validate().is_err());
        assert!(ProviderConfig::new(ProviderKind::Mock).validate().is_ok());
        assert_eq!("Gemini".parse::<ProviderKind>(), Ok(ProviderKind::Gemini));
        assert!("bard".parse::<ProviderKind>().is_err());
    }
}
