use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::geometry::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mode {
    Playing,
    Clarifying,
    VisualShown,
    QuizActive,
    OnBreak,
    SummaryView,
    ExampleActive,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Playing,
        Mode::Clarifying,
        Mode::VisualShown,
        Mode::QuizActive,
        Mode::OnBreak,
        Mode::SummaryView,
        Mode::ExampleActive,
    ];
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Everything that can move a session between modes. `ClarifyDone`,
/// `BreakEnd`, `AutoQuiz` and `AutoExample` are raised by the engine
/// itself; the rest are learner actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Op {
    Clarify,
    ClarifyDone,
    RequestVisual,
    DismissVisual,
    ServeQuiz,
    AnswerQuiz,
    StartBreak,
    BreakEnd,
    OpenExample,
    CloseExample,
    OpenSummary,
    CloseSummary,
    Replay,
    Seek,
    AutoQuiz,
    AutoExample,
    SetDifficulty,
    SetHighlight,
    AddNote,
}

impl Op {
    pub const ALL: [Op; 19] = [
        Op::Clarify,
        Op::ClarifyDone,
        Op::RequestVisual,
        Op::DismissVisual,
        Op::ServeQuiz,
        Op::AnswerQuiz,
        Op::StartBreak,
        Op::BreakEnd,
        Op::OpenExample,
        Op::CloseExample,
        Op::OpenSummary,
        Op::CloseSummary,
        Op::Replay,
        Op::Seek,
        Op::AutoQuiz,
        Op::AutoExample,
        Op::SetDifficulty,
        Op::SetHighlight,
        Op::AddNote,
    ];
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

use Mode::*;

/// The declared transition table: `(from, op, to)`. An op is legal in a
/// mode iff some row starts with that pair; ops that restore a saved mode
/// list every mode they can restore.
pub const TRANSITIONS: &[(Mode, Op, Mode)] = &[
    (Playing, Op::Clarify, Clarifying),
    (QuizActive, Op::Clarify, Clarifying),
    (Clarifying, Op::ClarifyDone, Playing),
    (Clarifying, Op::ClarifyDone, QuizActive),
    (Playing, Op::RequestVisual, VisualShown),
    (QuizActive, Op::RequestVisual, VisualShown),
    (ExampleActive, Op::RequestVisual, VisualShown),
    (VisualShown, Op::RequestVisual, VisualShown),
    // A search with no results leaves the mode alone.
    (Playing, Op::RequestVisual, Playing),
    (QuizActive, Op::RequestVisual, QuizActive),
    (ExampleActive, Op::RequestVisual, ExampleActive),
    (VisualShown, Op::DismissVisual, Playing),
    (VisualShown, Op::DismissVisual, QuizActive),
    (VisualShown, Op::DismissVisual, ExampleActive),
    (Playing, Op::ServeQuiz, QuizActive),
    (QuizActive, Op::ServeQuiz, QuizActive),
    (QuizActive, Op::AnswerQuiz, Playing),
    (Playing, Op::StartBreak, OnBreak),
    (OnBreak, Op::BreakEnd, Playing),
    (Playing, Op::OpenExample, ExampleActive),
    (ExampleActive, Op::CloseExample, Playing),
    (Playing, Op::OpenSummary, SummaryView),
    (SummaryView, Op::CloseSummary, Playing),
    (SummaryView, Op::Replay, SummaryView),
    (Playing, Op::Seek, Playing),
    (Playing, Op::AutoQuiz, QuizActive),
    (Playing, Op::AutoExample, ExampleActive),
    (Playing, Op::SetDifficulty, Playing),
    (Clarifying, Op::SetDifficulty, Clarifying),
    (VisualShown, Op::SetDifficulty, VisualShown),
    (QuizActive, Op::SetDifficulty, QuizActive),
    (OnBreak, Op::SetDifficulty, OnBreak),
    (SummaryView, Op::SetDifficulty, SummaryView),
    (ExampleActive, Op::SetDifficulty, ExampleActive),
    (Playing, Op::SetHighlight, Playing),
    (Clarifying, Op::SetHighlight, Clarifying),
    (VisualShown, Op::SetHighlight, VisualShown),
    (QuizActive, Op::SetHighlight, QuizActive),
    (OnBreak, Op::SetHighlight, OnBreak),
    (SummaryView, Op::SetHighlight, SummaryView),
    (ExampleActive, Op::SetHighlight, ExampleActive),
    (Playing, Op::AddNote, Playing),
    (Clarifying, Op::AddNote, Clarifying),
    (VisualShown, Op::AddNote, VisualShown),
    (QuizActive, Op::AddNote, QuizActive),
    (OnBreak, Op::AddNote, OnBreak),
    (SummaryView, Op::AddNote, SummaryView),
    (ExampleActive, Op::AddNote, ExampleActive),
];

pub fn is_allowed(from: Mode, op: Op) -> bool {
    TRANSITIONS.iter().any(|(f, o, _)| *f == from && *o == op)
}

pub fn is_declared(from: Mode, op: Op, to: Mode) -> bool {
    TRANSITIONS.contains(&(from, op, to))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RecordKind {
    Question,
    VisualRequest,
    QuizAnswer,
    BreakTaken,
    ExampleOpened,
    Note,
}

impl RecordKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Question => "question",
            RecordKind::VisualRequest => "visualRequest",
            RecordKind::QuizAnswer => "quizAnswer",
            RecordKind::BreakTaken => "breakTaken",
            RecordKind::ExampleOpened => "exampleOpened",
            RecordKind::Note => "note",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InteractionRecord {
    pub kind: RecordKind,
    /// Video position.
    pub timestamp_sec: f64,
    pub wall_time: DateTime<Utc>,
    pub section_id: Option<String>,
    pub selected_area: Option<Rect>,
    pub prompt: Option<String>,
    pub response: Option<String>,
    #[serde(default)]
    pub extra: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum EventKind {
    OverlayShow,
    OverlayHide,
    SpeechStatus,
    HighlightSet,
    QuizPrompt,
    ExamplePrompt,
    Resume,
    BreakStart,
    BreakEnd,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::OverlayShow => "overlayShow",
            EventKind::OverlayHide => "overlayHide",
            EventKind::SpeechStatus => "speechStatus",
            EventKind::HighlightSet => "highlightSet",
            EventKind::QuizPrompt => "quizPrompt",
            EventKind::ExamplePrompt => "examplePrompt",
            EventKind::Resume => "resume",
            EventKind::BreakStart => "breakStart",
            EventKind::BreakEnd => "breakEnd",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionEvent {
    pub seq: u64,
    /// Session clock seconds.
    pub at: f64,
    pub kind: EventKind,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub session_id: String,
    pub bundle_id: String,
    pub position_sec: f64,
    pub mode: Mode,
    pub difficulty: u8,
    pub interests: Vec<String>,
    pub highlight_enabled: bool,
    pub log: Vec<InteractionRecord>,
}
