//! Avatar speech and image search providers.
//!
//! Speech jobs are simulated on the session clock: a provider hands back a
//! schedule of status changes and the session advances the job as time
//! passes. Only the text and timing travel through here; audio and video
//! streams belong to the external avatar service.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::net;

/// Speaking rate used for every duration estimate.
pub const WORDS_PER_MINUTE: f64 = 150.0;

/// Delay between queueing and the avatar starting to speak, stub provider.
pub const STUB_LEAD_SEC: f64 = 0.5;

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

pub fn estimate_speech_sec(text: &str) -> f64 {
    word_count(text) as f64 / (WORDS_PER_MINUTE / 60.0)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediaError {
    #[error("speech text is empty")]
    EmptyText,
    #[error("avatar session unavailable: {0}")]
    AvatarSessionUnavailable(String),
    #[error("search keywords are empty")]
    EmptyKeywords,
    #[error("image search unavailable: {0}")]
    SearchUnavailable(String),
    #[error("no images found")]
    EmptyResults,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SpeechStatus {
    Queued,
    Speaking,
    Done,
    Failed,
}

impl SpeechStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, SpeechStatus::Done | SpeechStatus::Failed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatusChange {
    pub job_id: u64,
    pub status: SpeechStatus,
    /// Session-clock seconds.
    pub at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SpeechJob {
    pub id: u64,
    pub text: String,
    pub voice_id: String,
    pub status: SpeechStatus,
    pub estimated_duration_sec: f64,
    /// Text-only delivery; no avatar stream.
    pub degraded: bool,
    pub started_at: f64,
    /// Offsets from `started_at`, ascending, ending in one terminal status.
    schedule: Vec<(f64, SpeechStatus)>,
    emitted: usize,
}

impl SpeechJob {
    fn with_schedule(
        id: u64,
        text: &str,
        voice_id: &str,
        now: f64,
        lead: f64,
        degraded: bool,
    ) -> Self {
        let est = estimate_speech_sec(text);
        SpeechJob {
            id,
            text: text.to_owned(),
            voice_id: voice_id.to_owned(),
            status: SpeechStatus::Queued,
            estimated_duration_sec: est,
            degraded,
            started_at: now,
            schedule: vec![
                (0.0, SpeechStatus::Queued),
                (lead, SpeechStatus::Speaking),
                (lead + est, SpeechStatus::Done),
            ],
            emitted: 0,
        }
    }

    /// Text-only delivery timed by the speaking-rate estimate.
    pub fn text_only(id: u64, text: &str, now: f64) -> Self {
        Self::with_schedule(id, text, "", now, 0.0, true)
    }

    pub fn is_terminal(&self) -> bool {
        self.emitted == self.schedule.len()
    }

    /// Session time of the next pending status change.
    pub fn next_deadline(&self) -> Option<f64> {
        self.schedule
            .get(self.emitted)
            .map(|(off, _)| self.started_at + off)
    }

    pub fn end_time(&self) -> f64 {
        self.started_at + self.schedule.last().map_or(0.0, |(off, _)| *off)
    }

    /// Emits every status change due at or before `now`.
    pub fn advance(&mut self, now: f64) -> Vec<StatusChange> {
        let mut out = Vec::new();
        while let Some(&(off, status)) = self.schedule.get(self.emitted) {
            let at = self.started_at + off;
            if at > now + 1e-9 {
                break;
            }
            self.status = status;
            self.emitted += 1;
            out.push(StatusChange {
                job_id: self.id,
                status,
                at,
            });
        }
        out
    }

    /// Cancels a live job: pending changes are dropped and a single
    /// `Failed` is emitted. No-op on finished jobs.
    pub fn cancel(&mut self, now: f64) -> Option<StatusChange> {
        if self.is_terminal() {
            return None;
        }
        self.schedule.truncate(self.emitted);
        self.schedule
            .push((now - self.started_at, SpeechStatus::Failed));
        self.emitted = self.schedule.len();
        self.status = SpeechStatus::Failed;
        Some(StatusChange {
            job_id: self.id,
            status: SpeechStatus::Failed,
            at: now,
        })
    }
}

pub trait SpeechProvider: Send + Sync {
    /// Starts speaking `text`; `now` is the session clock.
    fn speak(
        &self,
        job_id: u64,
        text: &str,
        voice_id: &str,
        now: f64,
    ) -> Result<SpeechJob, MediaError>;
}

/// Offline avatar: deterministic schedule, no media.
#[derive(Debug, Default, Clone)]
pub struct StubSpeech;

impl SpeechProvider for StubSpeech {
    fn speak(
        &self,
        job_id: u64,
        text: &str,
        voice_id: &str,
        now: f64,
    ) -> Result<SpeechJob, MediaError> {
        if text.trim().is_empty() {
            return Err(MediaError::EmptyText);
        }
        Ok(SpeechJob::with_schedule(
            job_id,
            text,
            voice_id,
            now,
            STUB_LEAD_SEC,
            false,
        ))
    }
}

/// Used when no avatar service is configured; every call reports the
/// session as unavailable so callers fall back to text-only delivery.
#[derive(Debug, Default, Clone)]
pub struct NoAvatar;

impl SpeechProvider for NoAvatar {
    fn speak(&self, _: u64, text: &str, _: &str, _: f64) -> Result<SpeechJob, MediaError> {
        if text.trim().is_empty() {
            return Err(MediaError::EmptyText);
        }
        Err(MediaError::AvatarSessionUnavailable(
            "no avatar service configured".into(),
        ))
    }
}

/// Posts the text to a streaming-avatar task endpoint; timing is estimated
/// locally from the speaking rate.
#[derive(Debug, Clone)]
pub struct HttpAvatar {
    url: String,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpAvatar {
    pub fn new(url: impl Into<String>, api_key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpAvatar {
            url: url.into(),
            api_key: api_key.into(),
            agent,
        }
    }
}

impl SpeechProvider for HttpAvatar {
    fn speak(
        &self,
        job_id: u64,
        text: &str,
        voice_id: &str,
        now: f64,
    ) -> Result<SpeechJob, MediaError> {
        if text.trim().is_empty() {
            return Err(MediaError::EmptyText);
        }
        net::record_outbound();
        let resp = self
            .agent
            .post(&self.url)
            .header("X-Api-Key", &self.api_key)
            .send_json(
                serde_json::json!({ "text": text, "voice_id": voice_id, "task_type": "repeat" }),
            )
            .map_err(|e| MediaError::AvatarSessionUnavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(MediaError::AvatarSessionUnavailable(format!(
                "HTTP {}",
                resp.status()
            )));
        }
        Ok(SpeechJob::with_schedule(
            job_id, text, voice_id, now, 0.0, false,
        ))
    }
}

/// `MEDIA_MOCK=1` → stub; `AVATAR_API_URL` + `AVATAR_API_KEY` → HTTP;
/// otherwise text-only.
pub fn speech_from_env() -> Box<dyn SpeechProvider> {
    if std::env::var("MEDIA_MOCK").is_ok_and(|v| v == "1") {
        return Box::new(StubSpeech);
    }
    match (
        std::env::var("AVATAR_API_URL"),
        std::env::var("AVATAR_API_KEY"),
    ) {
        (Ok(url), Ok(key)) => Box::new(HttpAvatar::new(url, key)),
        _ => Box::new(NoAvatar),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ImageResult {
    pub url: String,
    pub title: String,
    pub source_domain: String,
    pub thumb_url: String,
}

pub trait ImageSearch: Send + Sync {
    fn search(&self, keywords: &str, max_results: usize) -> Result<Vec<ImageResult>, MediaError>;
}

/// Validates inputs and outputs around a provider call.
pub fn search_images(
    provider: &dyn ImageSearch,
    keywords: &str,
    max_results: usize,
) -> Result<Vec<ImageResult>, MediaError> {
    let keywords = keywords.trim();
    if keywords.is_empty() {
        return Err(MediaError::EmptyKeywords);
    }
    if max_results == 0 {
        return Ok(Vec::new());
    }
    let mut results: Vec<ImageResult> = provider
        .search(keywords, max_results)?
        .into_iter()
        .filter(|r| url::Url::parse(&r.url).is_ok())
        .collect();
    results.truncate(max_results);
    if results.is_empty() {
        return Err(MediaError::EmptyResults);
    }
    Ok(results)
}

struct ImageFixture {
    key: &'static str,
    url: &'static str,
    title: &'static str,
    domain: &'static str,
}

const IMAGE_FIXTURES: &[ImageFixture] = &[
    ImageFixture {
        key: "quarks",
        url: "https://upload.wikimedia.org/wikipedia/commons/9/92/Quark_structure_proton.svg",
        title: "Quark structure of the proton (diagram)",
        domain: "wikimedia.org",
    },
    ImageFixture {
        key: "quarks",
        url: "https://upload.wikimedia.org/wikipedia/commons/e/e1/Quark_structure_neutron.svg",
        title: "Quark structure of the neutron (diagram)",
        domain: "wikimedia.org",
    },
    ImageFixture {
        key: "gluons",
        url: "https://upload.wikimedia.org/wikipedia/commons/4/4c/Gluon_exchange.svg",
        title: "Gluon exchange between quarks (diagram)",
        domain: "wikimedia.org",
    },
    ImageFixture {
        key: "nucleus",
        url: "https://upload.wikimedia.org/wikipedia/commons/2/2d/Atomic_nucleus.svg",
        title: "Atomic nucleus with protons and neutrons (diagram)",
        domain: "wikimedia.org",
    },
    ImageFixture {
        key: "perceptron",
        url: "https://upload.wikimedia.org/wikipedia/commons/8/8a/Perceptron_example.svg",
        title: "Single-layer perceptron (diagram)",
        domain: "wikimedia.org",
    },
    ImageFixture {
        key: "electron orbitals",
        url: "https://upload.wikimedia.org/wikipedia/commons/c/cf/Atomic_orbitals.svg",
        title: "Shapes of electron orbitals (diagram)",
        domain: "wikimedia.org",
    },
];

/// Offline image search over a fixed table.
#[derive(Debug, Default, Clone)]
pub struct StubImageSearch;

impl ImageSearch for StubImageSearch {
    fn search(&self, keywords: &str, max_results: usize) -> Result<Vec<ImageResult>, MediaError> {
        let q = keywords.to_lowercase();
        Ok(IMAGE_FIXTURES
            .iter()
            .filter(|f| q.contains(f.key))
            .take(max_results)
            .map(|f| ImageResult {
                url: f.url.to_owned(),
                title: f.title.to_owned(),
                source_domain: f.domain.to_owned(),
                thumb_url: format!("{}?width=200", f.url),
            })
            .collect())
    }
}

/// Google Custom Search JSON API, image mode.
#[derive(Debug, Clone)]
pub struct GoogleImageSearch {
    endpoint: String,
    key: String,
    cx: String,
    agent: ureq::Agent,
}

impl GoogleImageSearch {
    pub const DEFAULT_ENDPOINT: &'static str = "https://www.googleapis.com/customsearch/v1";

    pub fn new(endpoint: impl Into<String>, key: impl Into<String>, cx: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(15)))
            .http_status_as_error(false)
            .build()
            .into();
        GoogleImageSearch {
            endpoint: endpoint.into(),
            key: key.into(),
            cx: cx.into(),
            agent,
        }
    }

    pub fn parse_items(v: &Value) -> Vec<ImageResult> {
        v.get("items")
            .and_then(Value::as_array)
            .map(|items| {
                items
                    .iter()
                    .filter_map(|it| {
                        Some(ImageResult {
                            url: it.get("link")?.as_str()?.to_owned(),
                            title: it
                                .get("title")
                                .and_then(Value::as_str)
                                .unwrap_or("")
                                .to_owned(),
                            source_domain: it
                                .get("displayLink")
                                .and_then(Value::as_str)
                                .unwrap_or("")
                                .to_owned(),
                            thumb_url: it
                                .pointer("/image/thumbnailLink")
                                .and_then(Value::as_str)
                                .unwrap_or("")
                                .to_owned(),
                        })
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

impl ImageSearch for GoogleImageSearch {
    fn search(&self, keywords: &str, max_results: usize) -> Result<Vec<ImageResult>, MediaError> {
        net::record_outbound();
        let num = max_results.clamp(1, 10).to_string();
        let mut resp = self
            .agent
            .get(&self.endpoint)
            .query("key", &self.key)
            .query("cx", &self.cx)
            .query("q", keywords)
            .query("searchType", "image")
            .query("num", &num)
            .call()
            .map_err(|e| MediaError::SearchUnavailable(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(MediaError::SearchUnavailable(format!(
                "HTTP {}",
                resp.status()
            )));
        }
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| MediaError::SearchUnavailable(e.to_string()))?;
        Ok(Self::parse_items(&v))
    }
}

/// Search provider that always reports the service as down.
#[derive(Debug, Default, Clone)]
pub struct NoImageSearch;

impl ImageSearch for NoImageSearch {
    fn search(&self, _: &str, _: usize) -> Result<Vec<ImageResult>, MediaError> {
        Err(MediaError::SearchUnavailable(
            "IMAGE_SEARCH_KEY / IMAGE_SEARCH_CX not set".into(),
        ))
    }
}

/// `MEDIA_MOCK=1` → stub; `IMAGE_SEARCH_KEY` + `IMAGE_SEARCH_CX` → Google.
pub fn image_search_from_env() -> Box<dyn ImageSearch> {
    if std::env::var("MEDIA_MOCK").is_ok_and(|v| v == "1") {
        return Box::new(StubImageSearch);
    }
    match (
        std::env::var("IMAGE_SEARCH_KEY"),
        std::env::var("IMAGE_SEARCH_CX"),
    ) {
        (Ok(key), Ok(cx)) => {
            let endpoint = std::env::var("IMAGE_SEARCH_URL")
                .unwrap_or_else(|_| GoogleImageSearch::DEFAULT_ENDPOINT.into());
            Box::new(GoogleImageSearch::new(endpoint, key, cx))
        }
        _ => Box::new(NoImageSearch),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifty_words_take_twenty_seconds() {
        let text = vec!["word"; 50].join(" ");
        let job = StubSpeech.speak(1, &text, "v", 0.0).unwrap();
        assert!((job.estimated_duration_sec - 20.0).abs() < 1e-9);
    }

    #[test]
    fn empty_text_rejected() {
        assert_eq!(
            StubSpeech.speak(1, "  ", "v", 0.0),
            Err(MediaError::EmptyText)
        );
    }

    #[test]
    fn stub_schedule_is_deterministic() {
        let text = vec!["word"; 10].join(" ");
        let mut job = StubSpeech.speak(7, &text, "v", 100.0).unwrap();
        assert_eq!(job.next_deadline(), Some(100.0));
        let first = job.advance(100.0);
        assert_eq!(
            first.iter().map(|c| c.status).collect::<Vec<_>>(),
            vec![SpeechStatus::Queued]
        );
        let rest = job.advance(1000.0);
        let times: Vec<f64> = rest.iter().map(|c| c.at).collect();
        assert_eq!(times, vec![100.5, 104.5]);
        assert!(job.is_terminal());
        assert!(job.advance(2000.0).is_empty());
        assert_eq!(job.cancel(2000.0), None);
    }

    #[test]
    fn cancel_emits_single_failure() {
        let mut job = StubSpeech.speak(1, "hello there", "v", 0.0).unwrap();
        job.advance(0.6);
        let c = job.cancel(0.7).unwrap();
        assert_eq!(c.status, SpeechStatus::Failed);
        assert!(job.advance(100.0).is_empty());
        assert!(job.is_terminal());
    }

    #[test]
    fn quarks_fixture() {
        let r = search_images(&StubImageSearch, "Quarks", 5).unwrap();
        assert!(r[0].title.contains("Quark structure"));
        assert_eq!(
            search_images(&StubImageSearch, "quarks", 1).unwrap().len(),
            1
        );
        assert_eq!(
            search_images(&StubImageSearch, "quarks", 0).unwrap(),
            vec![]
        );
        assert_eq!(
            search_images(&StubImageSearch, "", 3),
            Err(MediaError::EmptyKeywords)
        );
        assert_eq!(
            search_images(&StubImageSearch, "zebra", 3),
            Err(MediaError::EmptyResults)
        );
    }

    #[test]
    fn unreachable_search() {
        let g = GoogleImageSearch::new("http://127.0.0.1:9/customsearch", "k", "cx");
        assert!(matches!(
            search_images(&g, "quarks", 3),
            Err(MediaError::SearchUnavailable(_))
        ));
    }

    #[test]
    fn parses_cse_items() {
        let v = serde_json::json!({"items": [{"link": "https://a.b/c.png", "title": "T", "displayLink": "a.b", "image": {"thumbnailLink": "https://a.b/t.png"}}]});
        let items = GoogleImageSearch::parse_items(&v);
        assert_eq!(items[0].source_domain, "a.b");
        assert_eq!(items[0].thumb_url, "https://a.b/t.png");
    }
}
