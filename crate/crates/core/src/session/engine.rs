use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::lecture::Lecture;
use super::log::SessionLog;
use super::model::*;
use crate::content::{HighlightEntry, QuizItem, QuizType, TIME_EPS};
use crate::gateway::{Attachment, Gateway, GatewayError, ProviderRequest, TemplateId};
use crate::geometry::Rect;
use crate::layout::{plan_from_boxes, LayoutConfig, OverlayPlan};
use crate::media::{
    self, ImageResult, ImageSearch, MediaError, SpeechJob, SpeechProvider, SpeechStatus,
};
use crate::summary::{compile_summary, OrphanRecord, SummaryDocument};

pub const DEFAULT_QUESTION: &str = "Please explain this.";

/// Bottom-right corner where the UI shows the avatar; never covered by
/// overlays.
pub const AVATAR_BOX: Rect = Rect {
    x0: 0.8,
    y0: 0.75,
    x1: 1.0,
    y1: 1.0,
};

pub const BREAK_MINUTES: [u32; 3] = [1, 3, 5];

pub const APOLOGY: &str =
    "Sorry, I could not come up with an explanation right now. Please try again in a moment.";

#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// Largest forward position step still treated as playback rather
    /// than a seek; only playback crosses quiz and example triggers.
    pub tick_tolerance_sec: f64,
    pub layout: LayoutConfig,
    pub max_images: usize,
    pub word_limit: usize,
    pub sentence_limit: usize,
    /// Accepted relative deviation of a break story from its word target.
    pub story_tolerance: f64,
    pub voice_id: String,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            tick_tolerance_sec: 2.0,
            layout: LayoutConfig {
                reserved: vec![AVATAR_BOX],
                ..LayoutConfig::default()
            },
            max_images: 5,
            word_limit: 50,
            sentence_limit: 3,
            story_tolerance: 0.2,
            voice_id: "instructor".into(),
        }
    }
}

#[derive(Clone)]
pub struct Services {
    pub gateway: Arc<Gateway>,
    pub speech: Arc<dyn SpeechProvider>,
    pub images: Arc<dyn ImageSearch>,
}

impl Services {
    /// Mock gateway and stub media.
    pub fn offline() -> Self {
        Services {
            gateway: Arc::new(Gateway::mock()),
            speech: Arc::new(media::StubSpeech),
            images: Arc::new(media::StubImageSearch),
        }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{op} is not allowed while {mode}")]
    IllegalTransition { mode: Mode, op: Op },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("section {0} has no quiz items at any level")]
    EmptyBank(String),
    #[error("the lecture has no sections")]
    NoSection,
    #[error(transparent)]
    Provider(#[from] GatewayError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Orphan(#[from] OrphanRecord),
}

impl SessionError {
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::IllegalTransition { .. } => "illegalTransition",
            SessionError::InvalidArgument(_) => "invalidArgument",
            SessionError::NotFound(_) => "notFound",
            SessionError::EmptyBank(_) => "emptyBank",
            SessionError::NoSection => "noSection",
            SessionError::Provider(_) => "providerFailure",
            SessionError::Media(_) => "mediaFailure",
            SessionError::Orphan(_) => "orphanRecord",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ExplanationStyle {
    Plain,
    Analogy,
    StepByStep,
}

/// Feature keywords in the learner's question select the style.
pub fn explanation_style(question: &str) -> ExplanationStyle {
    let q = question.to_lowercase();
    if ["analogy", "analogies", "like i'm", "like i am"]
        .iter()
        .any(|k| q.contains(k))
    {
        ExplanationStyle::Analogy
    } else if q.contains("step by step") {
        ExplanationStyle::StepByStep
    } else {
        ExplanationStyle::Plain
    }
}

pub fn sentence_count(text: &str) -> usize {
    text.split(['.', '!', '?'])
        .filter(|s| s.chars().any(char::is_alphanumeric))
        .count()
}

/// Trim, case-fold, collapse inner whitespace.
pub fn normalize_answer(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

pub fn answer_matches(item: &QuizItem, answer: &str) -> bool {
    let a = normalize_answer(answer);
    if a == normalize_answer(&item.correct_answer) {
        return true;
    }
    item.kind == QuizType::FillBlank
        && item
            .accepted_answers
            .iter()
            .any(|s| normalize_answer(s) == a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClarifyOutcome {
    pub response: String,
    pub plan: OverlayPlan,
    pub speech: SpeechJob,
    pub style: ExplanationStyle,
    pub length_violation: bool,
    pub interests_missing: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VisualOutcome {
    pub keywords: String,
    pub results: Vec<ImageResult>,
    /// Set when nothing was found; the mode is then unchanged.
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuizPrompt {
    pub section_id: String,
    pub level: u8,
    pub requested_level: u8,
    pub fallback: bool,
    #[serde(rename = "type")]
    pub kind: QuizType,
    pub question: String,
    pub options: Vec<String>,
    pub trigger: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuizResult {
    pub correct: bool,
    pub explanation: String,
    pub correct_answer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BreakOutcome {
    pub story: String,
    pub word_count: usize,
    pub target_words: usize,
    pub within_budget: bool,
    pub speech: SpeechJob,
    /// Session time at which the break timer runs out.
    pub timer_ends_at: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Fired {
    Quiz(QuizPrompt),
    Example {
        index: usize,
        title: String,
        html_ref: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PositionOutcome {
    pub position_sec: f64,
    pub fired: Option<Fired>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Purpose {
    Clarify,
    Break,
    Replay,
}

impl Purpose {
    fn as_str(self) -> &'static str {
        match self {
            Purpose::Clarify => "clarify",
            Purpose::Break => "break",
            Purpose::Replay => "replay",
        }
    }
}

struct ActiveSpeech {
    job: SpeechJob,
    purpose: Purpose,
}

struct OverlayCtx {
    overlay_id: u64,
    return_mode: Mode,
}

struct ActiveQuiz {
    section: usize,
    level: u8,
    index: usize,
    prompt: QuizPrompt,
}

struct BreakCtx {
    timer_end: f64,
}

pub struct Session {
    lecture: Arc<Lecture>,
    services: Services,
    cfg: SessionConfig,
    state: SessionState,
    started_at: DateTime<Utc>,
    events: Vec<SessionEvent>,
    speech: Option<ActiveSpeech>,
    finished_job: Option<SpeechJob>,
    next_job: u64,
    next_overlay: u64,
    clarify: Option<OverlayCtx>,
    visual: Option<OverlayCtx>,
    quiz: Option<ActiveQuiz>,
    on_break: Option<BreakCtx>,
    example: Option<usize>,
    fired_examples: BTreeSet<usize>,
    served: HashMap<(usize, u8, usize), u64>,
    serve_tick: u64,
    last_highlights: Option<Value>,
    log: Option<SessionLog>,
}

impl Session {
    pub fn new(
        session_id: impl Into<String>,
        lecture: Arc<Lecture>,
        services: Services,
        cfg: SessionConfig,
        interests: Vec<String>,
        started_at: DateTime<Utc>,
    ) -> Self {
        let interests = interests
            .into_iter()
            .map(|s| s.trim().to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        let state = SessionState {
            session_id: session_id.into(),
            bundle_id: lecture.bundle.id.clone(),
            position_sec: 0.0,
            mode: Mode::Playing,
            difficulty: 3,
            interests,
            highlight_enabled: true,
            log: Vec::new(),
        };
        Session {
            lecture,
            services,
            cfg,
            state,
            started_at,
            events: Vec::new(),
            speech: None,
            finished_job: None,
            next_job: 1,
            next_overlay: 1,
            clarify: None,
            visual: None,
            quiz: None,
            on_break: None,
            example: None,
            fired_examples: BTreeSet::new(),
            served: HashMap::new(),
            serve_tick: 0,
            last_highlights: None,
            log: None,
        }
    }

    /// Persists every future record to `log`.
    pub fn with_log(mut self, log: SessionLog) -> Self {
        self.log = Some(log);
        self
    }

    /// Re-attaches records recovered from disk; the session stays Playing.
    pub fn restore_records(&mut self, records: Vec<InteractionRecord>) {
        self.state.log = records;
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn lecture(&self) -> &Arc<Lecture> {
        &self.lecture
    }

    pub fn started_at(&self) -> DateTime<Utc> {
        self.started_at
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn events_since(&self, seq: u64) -> &[SessionEvent] {
        let start = self.events.partition_point(|e| e.seq <= seq);
        &self.events[start..]
    }

    pub fn last_seq(&self) -> u64 {
        self.events.last().map_or(0, |e| e.seq)
    }

    pub fn current_speech(&self) -> Option<&SpeechJob> {
        self.speech.as_ref().map(|s| &s.job)
    }

    pub fn active_quiz(&self) -> Option<&QuizPrompt> {
        self.quiz.as_ref().map(|q| &q.prompt)
    }

    /// Earliest session time at which [`Session::advance`] has work to do.
    pub fn next_deadline(&self) -> Option<f64> {
        let speech = self.speech.as_ref().and_then(|s| s.job.next_deadline());
        let brk = self.on_break.as_ref().map(|b| b.timer_end);
        match (speech, brk) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    // ---- plumbing -------------------------------------------------------

    fn emit(&mut self, at: f64, kind: EventKind, payload: Value) {
        let seq = self.last_seq() + 1;
        self.events.push(SessionEvent {
            seq,
            at,
            kind,
            payload,
        });
    }

    fn check(&self, op: Op) -> Result<(), SessionError> {
        if is_allowed(self.state.mode, op) {
            Ok(())
        } else {
            Err(SessionError::IllegalTransition {
                mode: self.state.mode,
                op,
            })
        }
    }

    fn transition(&mut self, op: Op, to: Mode) {
        debug_assert!(
            is_declared(self.state.mode, op, to),
            "undeclared {:?} -{op}-> {to:?}",
            self.state.mode
        );
        self.state.mode = to;
    }

    fn current_section(&self) -> Option<usize> {
        self.lecture.bundle.section_at(self.state.position_sec)
    }

    fn section_id(&self, idx: Option<usize>) -> Option<String> {
        idx.map(|i| self.lecture.bundle.sections[i].id.clone())
    }

    fn wall(&self, now: f64) -> DateTime<Utc> {
        self.started_at + Duration::microseconds((now * 1e6).round() as i64)
    }

    fn push_record(
        &mut self,
        now: f64,
        kind: RecordKind,
        area: Option<Rect>,
        prompt: Option<String>,
        response: Option<String>,
        extra: BTreeMap<String, Value>,
    ) {
        let record = InteractionRecord {
            kind,
            timestamp_sec: self.state.position_sec,
            wall_time: self.wall(now),
            section_id: self.section_id(self.current_section()),
            selected_area: area,
            prompt,
            response,
            extra,
        };
        if let Some(log) = &self.log {
            if let Err(e) = log.append(&record) {
                log::error!(
                    "session {}: cannot persist record: {e}",
                    self.state.session_id
                );
            }
        }
        self.state.log.push(record);
    }

    fn start_speech(&mut self, now: f64, text: &str, purpose: Purpose) -> SpeechJob {
        if let Some(mut old) = self.speech.take() {
            if let Some(c) = old.job.cancel(now) {
                self.emit_speech(&old.job, c.status, c.at, old.purpose);
                self.speech_finished(old.purpose, c.at);
            }
        }
        let id = self.next_job;
        self.next_job += 1;
        let job = match self
            .services
            .speech
            .speak(id, text, &self.cfg.voice_id, now)
        {
            Ok(j) => j,
            Err(e) => {
                log::warn!("avatar unavailable, delivering as text: {e}");
                SpeechJob::text_only(id, text, now)
            }
        };
        self.speech = Some(ActiveSpeech { job, purpose });
        self.pump_speech(now);
        match &self.speech {
            Some(sp) if sp.job.id == id => sp.job.clone(),
            _ => self.finished_job.take().expect("finished job kept"),
        }
    }

    fn emit_speech(&mut self, job: &SpeechJob, status: SpeechStatus, at: f64, purpose: Purpose) {
        self.emit(
            at,
            EventKind::SpeechStatus,
            json!({
                "jobId": job.id,
                "status": status,
                "degraded": job.degraded,
                "purpose": purpose.as_str(),
                "estimatedDurationSec": job.estimated_duration_sec,
            }),
        );
    }

    fn pump_speech(&mut self, now: f64) {
        let Some(mut sp) = self.speech.take() else {
            return;
        };
        for c in sp.job.advance(now) {
            self.emit_speech(&sp.job, c.status, c.at, sp.purpose);
        }
        if sp.job.is_terminal() {
            let end = sp.job.end_time();
            self.speech_finished(sp.purpose, end);
            self.finished_job = Some(sp.job);
        } else {
            self.speech = Some(sp);
        }
    }

    fn speech_finished(&mut self, purpose: Purpose, at: f64) {
        if purpose == Purpose::Clarify {
            if let Some(ctx) = self.clarify.take() {
                self.emit(
                    at,
                    EventKind::OverlayHide,
                    json!({ "overlayId": ctx.overlay_id }),
                );
                self.transition(Op::ClarifyDone, ctx.return_mode);
                self.emit_resume(at, "clarify");
            }
        }
    }

    fn emit_resume(&mut self, at: f64, reason: &str) {
        let payload = json!({ "reason": reason, "mode": self.state.mode, "positionSec": self.state.position_sec });
        self.emit(at, EventKind::Resume, payload);
    }

    /// Applies every scheduled change due by `now`: speech status updates,
    /// auto-resume after explanations, and break endings.
    pub fn advance(&mut self, now: f64) {
        self.pump_speech(now);
        if let Some(b) = &self.on_break {
            let story_running = self
                .speech
                .as_ref()
                .is_some_and(|s| s.purpose == Purpose::Break);
            if !story_running && now + 1e-9 >= b.timer_end {
                let at = b.timer_end.max(self.last_break_speech_end());
                self.on_break = None;
                self.emit(at, EventKind::BreakEnd, json!({}));
                self.transition(Op::BreakEnd, Mode::Playing);
                self.emit_resume(at, "break");
            }
        }
    }

    fn last_break_speech_end(&self) -> f64 {
        self.events
            .iter()
            .rev()
            .find(|e| e.kind == EventKind::SpeechStatus && e.payload["purpose"] == "break")
            .map_or(0.0, |e| e.at)
    }

    // ---- highlights -----------------------------------------------------

    /// Highlights of the section under `t` whose time range holds `t`.
    pub fn active_highlights(&self, t: f64) -> Vec<HighlightEntry> {
        if !self.state.highlight_enabled {
            return Vec::new();
        }
        let Some(i) = self.lecture.bundle.section_at(t) else {
            return Vec::new();
        };
        self.lecture.bundle.sections[i]
            .highlights
            .iter()
            .filter(|h| h.active_at(t))
            .cloned()
            .collect()
    }

    fn refresh_highlights(&mut self, now: f64, force: bool) {
        let t = self.state.position_sec;
        let active = self.active_highlights(t);
        let payload = json!({
            "sectionId": self.section_id(self.current_section()),
            "enabled": self.state.highlight_enabled,
            "highlights": active,
        });
        if force || self.last_highlights.as_ref() != Some(&payload) {
            self.last_highlights = Some(payload.clone());
            self.emit(now, EventKind::HighlightSet, payload);
        }
    }

    pub fn set_highlight(&mut self, now: f64, enabled: bool) -> Result<(), SessionError> {
        self.advance(now);
        self.check(Op::SetHighlight)?;
        self.state.highlight_enabled = enabled;
        self.refresh_highlights(now, true);
        Ok(())
    }

    pub fn set_difficulty(&mut self, now: f64, level: u8) -> Result<(), SessionError> {
        self.advance(now);
        if !(1..=5).contains(&level) {
            return Err(SessionError::InvalidArgument(format!(
                "difficulty must be 1-5, got {level}"
            )));
        }
        self.check(Op::SetDifficulty)?;
        self.state.difficulty = level;
        Ok(())
    }

    // ---- clarification ---------------------------------------------------

    fn clarify_user_message(&self, section: usize, area: Option<Rect>, question: &str) -> String {
        let mut msg = String::new();
        if let Some(a) = area {
            msg.push_str(&format!(
                "The learner selected this area of the slide (normalized x0, y0, x1, y1): [{:.3}, {:.3}, {:.3}, {:.3}].\n",
                a.x0, a.y0, a.x1, a.y1
            ));
            let said: Vec<&str> = self.lecture.bundle.sections[section]
                .highlights
                .iter()
                .filter(|h| !h.relevant_transcript.is_empty() && h.bbox.interiors_intersect(&a))
                .map(|h| h.relevant_transcript.as_str())
                .collect();
            if !said.is_empty() {
                msg.push_str(&format!(
                    "What the lecturer says about that area: {}\n",
                    said.join(" ")
                ));
            }
            msg.push('\n');
        }
        msg.push_str(&format!("Question: {question}"));
        msg
    }

    /// Pauses, asks the provider, plans an overlay and speaks the answer.
    /// Analogy and step-by-step requests are recognised from the question.
    pub fn ask_clarification(
        &mut self,
        now: f64,
        area: Option<Rect>,
        question: Option<&str>,
    ) -> Result<ClarifyOutcome, SessionError> {
        self.advance(now);
        self.check(Op::Clarify)?;
        if let Some(a) = area {
            if !a.is_proper() || !a.within_unit() {
                return Err(SessionError::InvalidArgument(
                    "areaRect must be a proper rectangle inside [0,1]^2".into(),
                ));
            }
        }
        let section = self.current_section().ok_or(SessionError::NoSection)?;
        let question = question
            .map(str::trim)
            .filter(|q| !q.is_empty())
            .unwrap_or(DEFAULT_QUESTION)
            .to_owned();
        let style = explanation_style(&question);
        let interests_missing =
            style == ExplanationStyle::Analogy && self.state.interests.is_empty();
        let suffix = match style {
            ExplanationStyle::Plain => None,
            ExplanationStyle::Analogy if interests_missing => {
                Some("\n\nExplain with an analogy from everyday life.".to_owned())
            }
            ExplanationStyle::Analogy => Some(format!(
                "\n\nExplain with an analogy. The learner is interested in: {}.",
                self.state.interests.join(", ")
            )),
            ExplanationStyle::StepByStep => {
                Some("\n\nWalk the learner through it step by step.".to_owned())
            }
        };

        let bundle = &self.lecture.bundle;
        let sec = &bundle.sections[section];
        let mut req = ProviderRequest::new(TemplateId::Clarify)
            .bind("currentVideoName", bundle.title.clone())
            .bind("summaryText", bundle.summary.clone())
            .bind("currentSlideContent", sec.content_text())
            .user(self.clarify_user_message(section, area, &question));
        if let Some(s) = suffix {
            req = req.suffix(s);
        }
        let (response, error) = match self.services.gateway.complete(&req) {
            Ok(r) => (r.text().to_owned(), None),
            Err(e) => {
                log::warn!("clarification failed: {e}");
                (APOLOGY.to_owned(), Some(e.to_string()))
            }
        };
        let words = media::word_count(&response);
        let length_violation =
            words > self.cfg.word_limit || sentence_count(&response) > self.cfg.sentence_limit;

        let anchor = area.map_or((0.5, 0.5), |a| a.center());
        let (plan, _) = plan_from_boxes(
            self.lecture.content_boxes(section),
            anchor,
            &response,
            &self.cfg.layout,
        );

        let return_mode = self.state.mode;
        let overlay_id = self.next_overlay;
        self.next_overlay += 1;
        self.transition(Op::Clarify, Mode::Clarifying);
        self.clarify = Some(OverlayCtx {
            overlay_id,
            return_mode,
        });

        let mut extra = BTreeMap::new();
        extra.insert("style".into(), json!(style));
        extra.insert("lengthViolation".into(), json!(length_violation));
        extra.insert("wordCount".into(), json!(words));
        if interests_missing {
            extra.insert("interestsMissing".into(), json!(true));
        }
        if let Some(e) = &error {
            extra.insert("error".into(), json!(e));
        }
        self.push_record(
            now,
            RecordKind::Question,
            area,
            Some(question),
            Some(response.clone()),
            extra,
        );

        self.emit(
            now,
            EventKind::OverlayShow,
            json!({
                "overlayId": overlay_id,
                "kind": "clarify",
                "sectionId": self.section_id(Some(section)),
                "area": area,
                "text": response,
                "plan": plan,
            }),
        );
        let speech = self.start_speech(now, &response, Purpose::Clarify);
        Ok(ClarifyOutcome {
            response,
            plan,
            speech,
            style,
            length_violation,
            interests_missing,
            error,
        })
    }

    /// [`Session::ask_clarification`] for questions that ask for an analogy
    /// or a step-by-step walk-through.
    pub fn personalize_explanation(
        &mut self,
        now: f64,
        area: Option<Rect>,
        question: &str,
    ) -> Result<ClarifyOutcome, SessionError> {
        if explanation_style(question) == ExplanationStyle::Plain {
            return Err(SessionError::InvalidArgument(
                "question must ask for an analogy or a step-by-step explanation".into(),
            ));
        }
        self.ask_clarification(now, area, Some(question))
    }

    // ---- visuals ---------------------------------------------------------

    pub fn request_visual(
        &mut self,
        now: f64,
        area: Option<Rect>,
    ) -> Result<VisualOutcome, SessionError> {
        self.advance(now);
        self.check(Op::RequestVisual)?;
        let area = area.unwrap_or(Rect::UNIT);
        if !area.is_proper() || !area.within_unit() {
            return Err(SessionError::InvalidArgument(
                "areaRect must be a proper rectangle inside [0,1]^2".into(),
            ));
        }
        let section = self.current_section().ok_or(SessionError::NoSection)?;
        let crop = crate::imaging::crop_normalized(self.lecture.slide(section), &area);
        let png = crate::imaging::encode_png(&crop)
            .map_err(|e| SessionError::InvalidArgument(e.to_string()))?;
        let req = ProviderRequest::new(TemplateId::VisualKeywords).attach(Attachment::Png(png));
        let reply = self.services.gateway.complete(&req)?;
        let keywords = reply
            .value()
            .and_then(|v| v["keywords"].as_str())
            .unwrap_or("")
            .trim()
            .to_owned();
        let results = match media::search_images(
            self.services.images.as_ref(),
            &keywords,
            self.cfg.max_images,
        ) {
            Ok(r) => r,
            Err(MediaError::EmptyKeywords | MediaError::EmptyResults) => Vec::new(),
            Err(e) => return Err(e.into()),
        };

        let mut extra = BTreeMap::new();
        extra.insert("resultCount".into(), json!(results.len()));
        let chosen = results.first().map(|r| r.url.clone());
        if results.is_empty() {
            extra.insert("noResults".into(), json!(true));
            let mode = self.state.mode;
            self.transition(Op::RequestVisual, mode);
            self.push_record(
                now,
                RecordKind::VisualRequest,
                Some(area),
                Some(keywords.clone()),
                None,
                extra,
            );
            return Ok(VisualOutcome {
                keywords,
                results,
                notice: Some("No visuals found".into()),
            });
        }

        let return_mode = match self.visual.take() {
            Some(old) => {
                self.emit(
                    now,
                    EventKind::OverlayHide,
                    json!({ "overlayId": old.overlay_id }),
                );
                old.return_mode
            }
            None => self.state.mode,
        };
        let overlay_id = self.next_overlay;
        self.next_overlay += 1;
        self.transition(Op::RequestVisual, Mode::VisualShown);
        self.visual = Some(OverlayCtx {
            overlay_id,
            return_mode,
        });
        self.push_record(
            now,
            RecordKind::VisualRequest,
            Some(area),
            Some(keywords.clone()),
            chosen,
            extra,
        );
        self.emit(
            now,
            EventKind::OverlayShow,
            json!({
                "overlayId": overlay_id,
                "kind": "visual",
                "sectionId": self.section_id(Some(section)),
                "area": area,
                "keywords": keywords,
                "results": results,
            }),
        );
        Ok(VisualOutcome {
            keywords,
            results,
            notice: None,
        })
    }

    pub fn dismiss_visual(&mut self, now: f64) -> Result<(), SessionError> {
        self.advance(now);
        self.check(Op::DismissVisual)?;
        let ctx = self.visual.take().expect("visual context in VisualShown");
        self.emit(
            now,
            EventKind::OverlayHide,
            json!({ "overlayId": ctx.overlay_id }),
        );
        self.transition(Op::DismissVisual, ctx.return_mode);
        if ctx.return_mode == Mode::Playing {
            self.emit_resume(now, "visual");
        }
        Ok(())
    }

    // ---- quizzes ---------------------------------------------------------

    /// Nearest populated level to the requested one, lower first on ties,
    /// then the least recently served item there.
    fn pick_quiz(&self, section: usize) -> Option<(u8, usize)> {
        let bank = &self.lecture.bundle.sections[section].quizzes;
        let want = self.state.difficulty as i32;
        let level = (1..=5u8)
            .filter(|l| !bank.level(*l).is_empty())
            .min_by_key(|l| ((*l as i32 - want).abs(), *l))?;
        let index = (0..bank.level(level).len()).min_by_key(|i| {
            (
                self.served.get(&(section, level, *i)).copied().unwrap_or(0),
                *i,
            )
        })?;
        Some((level, index))
    }

    fn serve_quiz_at(
        &mut self,
        now: f64,
        section: usize,
        op: Op,
        trigger: &str,
    ) -> Result<QuizPrompt, SessionError> {
        let sec_id = self.lecture.bundle.sections[section].id.clone();
        let (level, index) = self
            .pick_quiz(section)
            .ok_or_else(|| SessionError::EmptyBank(sec_id.clone()))?;
        let item = &self.lecture.bundle.sections[section].quizzes.level(level)[index];
        let prompt = QuizPrompt {
            section_id: sec_id,
            level: item.difficulty,
            requested_level: self.state.difficulty,
            fallback: level != self.state.difficulty,
            kind: item.kind,
            question: item.question.clone(),
            options: item.options.clone(),
            trigger: trigger.to_owned(),
        };
        self.serve_tick += 1;
        self.served.insert((section, level, index), self.serve_tick);
        self.transition(op, Mode::QuizActive);
        self.quiz = Some(ActiveQuiz {
            section,
            level,
            index,
            prompt: prompt.clone(),
        });
        self.emit(
            now,
            EventKind::QuizPrompt,
            serde_json::to_value(&prompt).expect("prompt json"),
        );
        Ok(prompt)
    }

    /// Serves a quiz for `section_id`, or for the current section.
    pub fn serve_quiz(
        &mut self,
        now: f64,
        section_id: Option<&str>,
    ) -> Result<QuizPrompt, SessionError> {
        self.advance(now);
        self.check(Op::ServeQuiz)?;
        let section = match section_id {
            Some(id) => self
                .lecture
                .bundle
                .section_index(id)
                .ok_or_else(|| SessionError::NotFound(format!("section {id}")))?,
            None => self.current_section().ok_or(SessionError::NoSection)?,
        };
        self.serve_quiz_at(now, section, Op::ServeQuiz, "manual")
    }

    pub fn answer_quiz(&mut self, now: f64, answer: &str) -> Result<QuizResult, SessionError> {
        self.advance(now);
        self.check(Op::AnswerQuiz)?;
        let active = self.quiz.take().expect("quiz context in QuizActive");
        let item = &self.lecture.bundle.sections[active.section]
            .quizzes
            .level(active.level)[active.index];
        let correct = answer_matches(item, answer);
        let result = QuizResult {
            correct,
            explanation: item.explanation.clone(),
            correct_answer: item.correct_answer.clone(),
        };
        let mut extra = BTreeMap::new();
        extra.insert("correct".into(), json!(correct));
        extra.insert("correctAnswer".into(), json!(item.correct_answer));
        extra.insert("explanation".into(), json!(item.explanation));
        extra.insert("level".into(), json!(active.level));
        extra.insert("quizSectionId".into(), json!(active.prompt.section_id));
        if active.prompt.fallback {
            extra.insert("fallbackLevel".into(), json!(active.level));
        }
        let question = active.prompt.question.clone();
        self.transition(Op::AnswerQuiz, Mode::Playing);
        self.push_record(
            now,
            RecordKind::QuizAnswer,
            None,
            Some(question),
            Some(answer.to_owned()),
            extra,
        );
        self.emit_resume(now, "quiz");
        Ok(result)
    }

    // ---- breaks ----------------------------------------------------------

    pub fn start_break(&mut self, now: f64, minutes: u32) -> Result<BreakOutcome, SessionError> {
        self.advance(now);
        if !BREAK_MINUTES.contains(&minutes) {
            return Err(SessionError::InvalidArgument(format!(
                "break must be 1, 3 or 5 minutes, got {minutes}"
            )));
        }
        self.check(Op::StartBreak)?;
        let bundle = &self.lecture.bundle;
        let slide = self
            .current_section()
            .map(|i| bundle.sections[i].content_text())
            .unwrap_or_default();
        let req = ProviderRequest::new(TemplateId::BreakStory)
            .bind("currentVideoName", bundle.title.clone())
            .bind("breakDuration", minutes.to_string())
            .bind("summaryText", bundle.summary.clone())
            .bind("currentSlideContent", slide)
            .bind("userInterests", self.state.interests.join(", "));
        let story = self.services.gateway.complete(&req)?.text().to_owned();
        let word_count = media::word_count(&story);
        let target_words = (minutes as f64 * media::WORDS_PER_MINUTE) as usize;
        let within_budget = (word_count as f64 - target_words as f64).abs()
            <= self.cfg.story_tolerance * target_words as f64;
        let timer_ends_at = now + minutes as f64 * 60.0;

        self.transition(Op::StartBreak, Mode::OnBreak);
        self.on_break = Some(BreakCtx {
            timer_end: timer_ends_at,
        });
        let mut extra = BTreeMap::new();
        extra.insert("minutes".into(), json!(minutes));
        extra.insert("wordCount".into(), json!(word_count));
        extra.insert("targetWords".into(), json!(target_words));
        extra.insert("withinBudget".into(), json!(within_budget));
        self.push_record(
            now,
            RecordKind::BreakTaken,
            None,
            Some(format!("{minutes}-minute break")),
            Some(story.clone()),
            extra,
        );
        self.emit(
            now,
            EventKind::BreakStart,
            json!({ "minutes": minutes, "timerEndsAt": timer_ends_at, "story": story, "wordCount": word_count }),
        );
        let speech = self.start_speech(now, &story, Purpose::Break);
        Ok(BreakOutcome {
            story,
            word_count,
            target_words,
            within_budget,
            speech,
            timer_ends_at,
        })
    }

    // ---- examples --------------------------------------------------------

    fn open_example_at(&mut self, now: f64, index: usize, op: Op, trigger: &str) -> Fired {
        let ex = self.lecture.bundle.examples[index].clone();
        self.fired_examples.insert(index);
        self.example = Some(index);
        self.transition(op, Mode::ExampleActive);
        let mut extra = BTreeMap::new();
        extra.insert("trigger".into(), json!(trigger));
        extra.insert("htmlRef".into(), json!(ex.html_ref));
        extra.insert("exampleIndex".into(), json!(index));
        self.push_record(
            now,
            RecordKind::ExampleOpened,
            None,
            Some(ex.title.clone()),
            None,
            extra,
        );
        self.emit(
            now,
            EventKind::ExamplePrompt,
            json!({
                "index": index,
                "title": ex.title,
                "htmlRef": ex.html_ref,
                "sectionId": ex.section_id,
                "triggerSec": ex.trigger_sec,
                "trigger": trigger,
            }),
        );
        Fired::Example {
            index,
            title: ex.title,
            html_ref: ex.html_ref,
        }
    }

    /// Opens an example from the control bar; the once-per-session rule
    /// does not apply.
    pub fn open_example(&mut self, now: f64, index: usize) -> Result<Fired, SessionError> {
        self.advance(now);
        if index >= self.lecture.bundle.examples.len() {
            return Err(SessionError::NotFound(format!("example {index}")));
        }
        self.check(Op::OpenExample)?;
        Ok(self.open_example_at(now, index, Op::OpenExample, "manual"))
    }

    pub fn close_example(&mut self, now: f64) -> Result<(), SessionError> {
        self.advance(now);
        self.check(Op::CloseExample)?;
        self.example = None;
        self.transition(Op::CloseExample, Mode::Playing);
        self.emit_resume(now, "example");
        Ok(())
    }

    // ---- playback position -------------------------------------------------

    /// Example that fires when playback moves from `prev` to `t`.
    pub fn trigger_example(&self, prev: f64, t: f64) -> Option<usize> {
        if !(t > prev && t - prev <= self.cfg.tick_tolerance_sec + TIME_EPS) {
            return None;
        }
        self.lecture
            .bundle
            .examples
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                !self.fired_examples.contains(i)
                    && prev < e.trigger_sec
                    && e.trigger_sec <= t + TIME_EPS
            })
            .min_by(|a, b| a.1.trigger_sec.total_cmp(&b.1.trigger_sec))
            .map(|(i, _)| i)
    }

    fn quiz_crossing(&self, prev: f64, t: f64) -> Option<(f64, usize)> {
        if !(t > prev && t - prev <= self.cfg.tick_tolerance_sec + TIME_EPS) {
            return None;
        }
        self.lecture
            .bundle
            .sections
            .iter()
            .enumerate()
            .find(|(_, s)| prev < s.end_sec && s.end_sec <= t + TIME_EPS && !s.quizzes.is_empty())
            .map(|(i, s)| (s.end_sec, i))
    }

    /// Reports the player position. Forward steps no longer than the tick
    /// tolerance count as playback and may fire one quiz (section end) or
    /// one example (trigger time), whichever comes first.
    pub fn set_position(&mut self, now: f64, t: f64) -> Result<PositionOutcome, SessionError> {
        self.advance(now);
        let duration = self.lecture.bundle.duration_sec;
        if !t.is_finite() || t < -TIME_EPS || t > duration + TIME_EPS {
            return Err(SessionError::InvalidArgument(format!(
                "tSec must be within [0, {duration}]"
            )));
        }
        self.check(Op::Seek)?;
        let prev = self.state.position_sec;
        let t = t.clamp(0.0, duration);
        self.state.position_sec = t;
        self.refresh_highlights(now, false);

        let quiz = self.quiz_crossing(prev, t);
        let example = self
            .trigger_example(prev, t)
            .map(|i| (self.lecture.bundle.examples[i].trigger_sec, i));
        let fired = match (quiz, example) {
            (Some((qt, s)), Some((et, _))) if qt <= et => Some(
                self.serve_quiz_at(now, s, Op::AutoQuiz, "auto")
                    .map(Fired::Quiz)?,
            ),
            (Some((_, s)), None) => Some(
                self.serve_quiz_at(now, s, Op::AutoQuiz, "auto")
                    .map(Fired::Quiz)?,
            ),
            (_, Some((_, i))) => Some(self.open_example_at(now, i, Op::AutoExample, "auto")),
            (None, None) => None,
        };
        Ok(PositionOutcome {
            position_sec: t,
            fired,
        })
    }

    // ---- summary and notes -----------------------------------------------

    pub fn open_summary(&mut self, now: f64) -> Result<SummaryDocument, SessionError> {
        self.advance(now);
        self.check(Op::OpenSummary)?;
        let doc = self.summary()?;
        if let Some(l) = &self.log {
            if let Err(e) = l.write_summary(&doc) {
                log::warn!("session {}: summary not saved: {e}", self.state.session_id);
            }
        }
        self.transition(Op::OpenSummary, Mode::SummaryView);
        Ok(doc)
    }

    pub fn close_summary(&mut self, now: f64) -> Result<(), SessionError> {
        self.advance(now);
        self.check(Op::CloseSummary)?;
        self.transition(Op::CloseSummary, Mode::Playing);
        self.emit_resume(now, "summary");
        Ok(())
    }

    pub fn summary(&self) -> Result<SummaryDocument, SessionError> {
        Ok(compile_summary(
            &self.state.session_id,
            &self.state.log,
            &self.lecture.bundle,
        )?)
    }

    /// Speaks a stored explanation again from the summary view.
    pub fn replay(&mut self, now: f64, record_index: usize) -> Result<SpeechJob, SessionError> {
        self.advance(now);
        self.check(Op::Replay)?;
        let text = self
            .state
            .log
            .get(record_index)
            .filter(|r| r.kind == RecordKind::Question)
            .and_then(|r| r.response.clone())
            .ok_or_else(|| SessionError::NotFound(format!("explanation record {record_index}")))?;
        Ok(self.start_speech(now, &text, Purpose::Replay))
    }

    pub fn add_note(
        &mut self,
        now: f64,
        text: &str,
        area: Option<Rect>,
    ) -> Result<(), SessionError> {
        self.advance(now);
        if text.trim().is_empty() {
            return Err(SessionError::InvalidArgument("note text is empty".into()));
        }
        self.check(Op::AddNote)?;
        let mode = self.state.mode;
        self.transition(Op::AddNote, mode);
        self.push_record(
            now,
            RecordKind::Note,
            area,
            Some(text.trim().to_owned()),
            None,
            BTreeMap::new(),
        );
        Ok(())
    }
}
