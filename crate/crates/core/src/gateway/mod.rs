//! Prompt rendering, provider calls with retry, and structured-reply
//! validation.

pub mod http;
pub mod mock;
pub mod parse;
pub mod schema;
pub mod template;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

pub use parse::{parse_structured, ParseError};
pub use schema::{Field, Schema, SchemaError};
pub use template::{render_prompt, TemplateError, TemplateId};

/// Re-prompt suffix used after a reply fails to parse.
pub const JSON_REPAIR_SUFFIX: &str = "\n\nRespond with valid JSON only.";

/// Retries after the first attempt.
pub const DEFAULT_RETRIES: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTier {
    Nano,
    Mini,
    Pro,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attachment {
    Path(PathBuf),
    Png(Vec<u8>),
}

impl Attachment {
    pub fn bytes(&self) -> std::io::Result<Vec<u8>> {
        match self {
            Attachment::Path(p) => std::fs::read(p),
            Attachment::Png(b) => Ok(b.clone()),
        }
    }

    pub fn image(&self) -> Result<image::DynamicImage, String> {
        let bytes = self.bytes().map_err(|e| e.to_string())?;
        crate::imaging::decode(&bytes).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProviderRequest {
    pub template_id: TemplateId,
    pub bindings: BTreeMap<String, String>,
    /// Learner turn for chat-style templates (clarify).
    pub user_message: Option<String>,
    /// Extra constraints appended after the rendered template.
    pub prompt_suffix: Option<String>,
    pub attachments: Vec<Attachment>,
    pub model_tier: ModelTier,
}

impl ProviderRequest {
    pub fn new(template_id: TemplateId) -> Self {
        ProviderRequest {
            template_id,
            bindings: BTreeMap::new(),
            user_message: None,
            prompt_suffix: None,
            attachments: Vec::new(),
            model_tier: template_id.default_tier(),
        }
    }

    pub fn bind(mut self, key: &str, value: impl Into<String>) -> Self {
        self.bindings.insert(key.to_owned(), value.into());
        self
    }

    pub fn attach(mut self, a: Attachment) -> Self {
        self.attachments.push(a);
        self
    }

    pub fn user(mut self, message: impl Into<String>) -> Self {
        self.user_message = Some(message.into());
        self
    }

    pub fn suffix(mut self, suffix: impl Into<String>) -> Self {
        self.prompt_suffix = Some(suffix.into());
        self
    }

    pub fn tier(mut self, tier: ModelTier) -> Self {
        self.model_tier = tier;
        self
    }
}

/// What a provider actually receives.
#[derive(Debug, Clone)]
pub struct RenderedRequest<'a> {
    pub request: &'a ProviderRequest,
    pub system: String,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("provider unreachable: {0}")]
    Unreachable(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed provider envelope: {0}")]
    Envelope(String),
}

pub trait TextProvider: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, request: &RenderedRequest<'_>) -> Result<String, TransportError>;
}

#[derive(Debug, Clone)]
pub struct ProviderResponse {
    pub raw_text: String,
    pub parsed: Result<Value, ParseError>,
    pub latency_ms: u64,
    pub attempts: u32,
}

impl ProviderResponse {
    pub fn text(&self) -> &str {
        self.raw_text.trim()
    }

    pub fn value(&self) -> Option<&Value> {
        self.parsed.as_ref().ok()
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GatewayError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("provider unavailable after {attempts} attempts: {last}")]
    ProviderUnavailable { attempts: u32, last: TransportError },
    #[error("call budget of {0} exhausted")]
    BudgetExceeded(u64),
    #[error("{template} reply failed validation after {attempts} attempts: {detail}")]
    PersistentSchemaMismatch {
        template: TemplateId,
        attempts: u32,
        detail: String,
    },
}

enum Failure {
    Transport(TransportError),
    Parse(ParseError),
}

pub struct Gateway {
    provider: Arc<dyn TextProvider>,
    max_retries: u32,
    budget: Option<u64>,
    calls: AtomicU64,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.name())
            .field("max_retries", &self.max_retries)
            .field("budget", &self.budget)
            .finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn TextProvider>) -> Self {
        Gateway {
            provider,
            max_retries: DEFAULT_RETRIES,
            budget: None,
            calls: AtomicU64::new(0),
        }
    }

    pub fn mock() -> Self {
        Gateway::new(Arc::new(mock::MockProvider::default()))
    }

    /// Mock when `LLM_MOCK=1`, otherwise the HTTP provider.
    pub fn from_env() -> Result<Self, GatewayError> {
        if std::env::var("LLM_MOCK").map(|v| v == "1").unwrap_or(false) {
            return Ok(Gateway::mock());
        }
        let provider = http::ChatCompletionProvider::from_env()
            .map_err(|e| GatewayError::InvalidRequest(e.to_string()))?;
        Ok(Gateway::new(Arc::new(provider)))
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.max_retries = retries;
        self
    }

    pub fn with_budget(mut self, max_calls: u64) -> Self {
        self.budget = Some(max_calls);
        self
    }

    pub fn provider_name(&self) -> &str {
        self.provider.name()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    fn take_call(&self) -> Result<(), GatewayError> {
        let n = self.calls.fetch_add(1, Ordering::Relaxed);
        match self.budget {
            Some(b) if n >= b => {
                self.calls.fetch_sub(1, Ordering::Relaxed);
                Err(GatewayError::BudgetExceeded(b))
            }
            _ => Ok(()),
        }
    }

    /// Renders, calls and validates, retrying transport failures and
    /// unparseable replies up to the configured retry count.
    pub fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, GatewayError> {
        let id = request.template_id;
        if id.requires_images() == request.attachments.is_empty() {
            return Err(GatewayError::InvalidRequest(format!(
                "{id} {} image attachments",
                if id.requires_images() {
                    "requires"
                } else {
                    "takes no"
                }
            )));
        }
        let template = id.template();
        let schema = template.response_schema();
        let mut system = template.render(&request.bindings)?;
        if let Some(s) = &request.prompt_suffix {
            system.push_str(s);
        }

        let started = Instant::now();
        let mut last = None;
        let mut repaired = false;
        for attempt in 1..=self.max_retries + 1 {
            self.take_call()?;
            let rendered = RenderedRequest {
                request,
                system: system.clone(),
            };
            match self.provider.generate(&rendered) {
                Err(e) => {
                    log::warn!("{id}: attempt {attempt} transport failure: {e}");
                    last = Some(Failure::Transport(e));
                }
                Ok(raw) => {
                    let parsed = parse_structured(&raw, &schema);
                    if schema.is_text() || parsed.is_ok() {
                        return Ok(ProviderResponse {
                            raw_text: raw,
                            parsed,
                            latency_ms: started.elapsed().as_millis() as u64,
                            attempts: attempt,
                        });
                    }
                    let err = parsed.unwrap_err();
                    log::warn!("{id}: attempt {attempt} unusable reply: {err}");
                    if !repaired {
                        system.push_str(JSON_REPAIR_SUFFIX);
                        repaired = true;
                    }
                    last = Some(Failure::Parse(err));
                }
            }
        }
        let attempts = self.max_retries + 1;
        match last.expect("at least one attempt ran") {
            Failure::Transport(last) => Err(GatewayError::ProviderUnavailable { attempts, last }),
            Failure::Parse(e) => Err(GatewayError::PersistentSchemaMismatch {
                template: id,
                attempts,
                detail: e.to_string(),
            }),
        }
    }

    /// `complete` plus deserialization into a typed reply.
    pub fn complete_as<T: serde::de::DeserializeOwned>(
        &self,
        request: &ProviderRequest,
    ) -> Result<T, GatewayError> {
        let resp = self.complete(request)?;
        let value = resp
            .parsed
            .map_err(|e| GatewayError::PersistentSchemaMismatch {
                template: request.template_id,
                attempts: resp.attempts,
                detail: e.to_string(),
            })?;
        serde_json::from_value(value).map_err(|e| GatewayError::PersistentSchemaMismatch {
            template: request.template_id,
            attempts: resp.attempts,
            detail: e.to_string(),
        })
    }
}
