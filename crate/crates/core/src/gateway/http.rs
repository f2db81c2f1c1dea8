//! Chat-completion style HTTP provider.

use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::{ModelTier, RenderedRequest, TextProvider, TransportError};
use crate::net;

#[derive(Debug, Clone)]
pub struct TierModels {
    pub nano: String,
    pub mini: String,
    pub pro: String,
}

impl TierModels {
    pub fn model(&self, tier: ModelTier) -> &str {
        match tier {
            ModelTier::Nano => &self.nano,
            ModelTier::Mini => &self.mini,
            ModelTier::Pro => &self.pro,
        }
    }
}

impl Default for TierModels {
    fn default() -> Self {
        TierModels {
            nano: "gpt-5-nano".into(),
            mini: "gpt-5-mini".into(),
            pro: "gemini-2.5-pro".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatCompletionProvider {
    base_url: String,
    api_key: Option<String>,
    models: TierModels,
    agent: ureq::Agent,
}

#[derive(Debug, thiserror::Error)]
#[error("LLM_API_URL is not set (use LLM_MOCK=1 for the offline provider)")]
pub struct MissingEndpoint;

impl ChatCompletionProvider {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>, models: TierModels) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .http_status_as_error(false)
            .build()
            .into();
        ChatCompletionProvider {
            base_url: base_url.into(),
            api_key,
            models,
            agent,
        }
    }

    /// Reads `LLM_API_URL`, `LLM_API_KEY` and the optional per-tier
    /// `LLM_MODEL_NANO` / `LLM_MODEL_MINI` / `LLM_MODEL_PRO`.
    pub fn from_env() -> Result<Self, MissingEndpoint> {
        let url = std::env::var("LLM_API_URL").map_err(|_| MissingEndpoint)?;
        let mut models = TierModels::default();
        for (var, slot) in [
            ("LLM_MODEL_NANO", &mut models.nano),
            ("LLM_MODEL_MINI", &mut models.mini),
            ("LLM_MODEL_PRO", &mut models.pro),
        ] {
            if let Ok(v) = std::env::var(var) {
                *slot = v;
            }
        }
        Ok(Self::new(url, std::env::var("LLM_API_KEY").ok(), models))
    }

    fn endpoint(&self) -> String {
        let base = self.base_url.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_owned()
        } else {
            format!("{base}/chat/completions")
        }
    }

    pub fn request_body(&self, request: &RenderedRequest<'_>) -> Result<Value, TransportError> {
        let r = request.request;
        let mut user: Vec<Value> = vec![json!({
            "type": "text",
            "text": r.user_message.clone().unwrap_or_else(|| "Analyze the attached input.".into())
        })];
        for a in &r.attachments {
            let bytes = a
                .bytes()
                .map_err(|e| TransportError::Envelope(e.to_string()))?;
            let b64 = base64::engine::general_purpose::STANDARD.encode(bytes);
            user.push(json!({
                "type": "image_url",
                "image_url": { "url": format!("data:image/png;base64,{b64}") }
            }));
        }
        Ok(json!({
            "model": self.models.model(r.model_tier),
            "messages": [
                { "role": "system", "content": request.system },
                { "role": "user", "content": user }
            ]
        }))
    }
}

impl TextProvider for ChatCompletionProvider {
    fn name(&self) -> &str {
        "chat-completions"
    }

    fn generate(&self, request: &RenderedRequest<'_>) -> Result<String, TransportError> {
        let body = self.request_body(request)?;
        net::record_outbound();
        let mut req = self.agent.post(&self.endpoint());
        if let Some(k) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| TransportError::Unreachable(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            let body = resp.body_mut().read_to_string().unwrap_or_default();
            return Err(TransportError::Status { status, body });
        }
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Envelope(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Envelope("no choices[0].message.content".into()))
    }
}
