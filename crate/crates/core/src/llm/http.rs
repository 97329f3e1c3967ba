use std::io;
use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionProvider, LlmError, ProviderConfig, ProviderKind, RateLimiter};
use crate::prompts::PromptBundle;

const ANTHROPIC_VERSION: &str = "2023-06-01";

/// A provider request before it hits the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct HttpRequest {
    pub url: String,
    /// Header values; the credential header is included.
    pub headers: Vec<(String, String)>,
    pub body: Value,
}

/// Maps a prompt onto the provider family's chat-completion request.
pub fn request_for(cfg: &ProviderConfig, prompt: &str) -> Result<HttpRequest, LlmError> {
    let key = cfg.api_key.expose().to_owned();
    let mut headers = vec![("content-type".to_owned(), "application/json".to_owned())];
    let (url, body) = match cfg.provider {
        ProviderKind::OpenAi => {
            headers.push(("authorization".into(), format!("Bearer {key}")));
            let mut body = json!({
                "model": cfg.model,
                "messages": [{"role": "user", "content": prompt}],
            });
            if let Some(t) = cfg.temperature {
                body["temperature"] = json!(t);
            }
            (cfg.endpoint.clone(), body)
        }
        ProviderKind::Anthropic => {
            headers.push(("x-api-key".into(), key));
            headers.push(("anthropic-version".into(), ANTHROPIC_VERSION.into()));
            let mut body = json!({
                "model": cfg.model,
                "max_tokens": cfg.max_output_tokens,
                "messages": [{"role": "user", "content": prompt}],
            });
            if let Some(t) = cfg.temperature {
                body["temperature"] = json!(t);
            }
            (cfg.endpoint.clone(), body)
        }
        ProviderKind::Gemini => {
            headers.push(("x-goog-api-key".into(), key));
            let mut body = json!({
                "contents": [{"role": "user", "parts": [{"text": prompt}]}],
            });
            if let Some(t) = cfg.temperature {
                body["generationConfig"] = json!({"temperature": t});
            }
            (cfg.endpoint.replace("{model}", &cfg.model), body)
        }
        ProviderKind::Mock => {
            return Err(LlmError::Usage("the mock provider does not speak HTTP".into()))
        }
    };
    Ok(HttpRequest { url, headers, body })
}

/// Pulls the completion text out of a provider's JSON response.
pub fn reply_text(kind: ProviderKind, body: &str) -> Result<String, LlmError> {
    let malformed = |what: &str| LlmError::MalformedProviderResponse(what.to_owned());
    let v: Value = serde_json::from_str(body).map_err(|e| malformed(&format!("not JSON: {e}")))?;
    let text = match kind {
        ProviderKind::OpenAi => v["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned),
        ProviderKind::Anthropic => v["content"].as_array().map(|blocks| {
            blocks
                .iter()
                .filter(|b| b["type"] == "text")
                .filter_map(|b| b["text"].as_str())
                .collect::<String>()
        }),
        ProviderKind::Gemini => v["candidates"][0]["content"]["parts"].as_array().map(|parts| {
            parts
                .iter()
                .filter_map(|p| p["text"].as_str())
                .collect::<String>()
        }),
        ProviderKind::Mock => None,
    };
    match text {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(malformed("no completion text in response")),
    }
}

/// Blocking HTTPS JSON client for the OpenAI, Gemini and Anthropic APIs.
pub struct HttpProvider {
    cfg: ProviderConfig,
    agent: ureq::Agent,
    limiter: Option<Arc<RateLimiter>>,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(cfg.timeout_s)))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = cfg.requests_per_minute.map(|rpm| Arc::new(RateLimiter::per_minute(rpm)));
        HttpProvider { cfg, agent, limiter }
    }

    /// Shares one limiter between providers.
    pub fn with_limiter(mut self, limiter: Arc<RateLimiter>) -> Self {
        self.limiter = Some(limiter);
        self
    }
}

fn transport_error(e: ureq::Error) -> LlmError {
    match e {
        ureq::Error::Timeout(_)
        | ureq::Error::ConnectionFailed
        | ureq::Error::HostNotFound
        | ureq::Error::Io(_) => LlmError::Timeout { attempts: 1 },
        other => LlmError::MalformedProviderResponse(other.to_string()),
    }
}

impl CompletionProvider for HttpProvider {
    fn complete_once(&self, prompt: &PromptBundle) -> Result<String, LlmError> {
        if let Some(l) = &self.limiter {
            l.acquire();
        }
        let req = request_for(&self.cfg, &prompt.text)?;
        let mut call = self.agent.post(&req.url);
        for (k, v) in &req.headers {
            call = call.header(k.as_str(), v.as_str());
        }
        let mut response = call.send(req.body.to_string()).map_err(transport_error)?;
        let status = response.status().as_u16();
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| match e {
                ureq::Error::Io(ref io) if io.kind() == io::ErrorKind::TimedOut => {
                    LlmError::Timeout { attempts: 1 }
                }
                other => transport_error(other),
            })?;
        match status {
            200..=299 => reply_text(self.cfg.provider, &body),
            401 | 403 => Err(LlmError::AuthFailure { status }),
            429 => Err(LlmError::RateLimited { attempts: 1 }),
            408 | 500..=599 => Err(LlmError::ServerError { status, attempts: 1 }),
            _ => Err(LlmError::MalformedProviderResponse(format!("HTTP {status}"))),
        }
    }

    fn max_retries(&self) -> u32 {
        self.cfg.max_retries
    }

    fn backoff(&self, attempt: u32) -> Duration {
        self.cfg.backoff(attempt)
    }
}
