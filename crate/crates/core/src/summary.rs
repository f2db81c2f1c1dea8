//! Turns a session's interaction log into a per-section review document
//! and a column layout for the summary canvas.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::content::LectureBundle;
use crate::geometry::Rect;
use crate::session::{InteractionRecord, RecordKind};

pub const COLUMN_WIDTH: f64 = 480.0;
pub const GUTTER: f64 = 16.0;
pub const HEADER_HEIGHT: f64 = 64.0;
pub const MIN_CARD_HEIGHT: f64 = 96.0;
const CHARS_PER_LINE: usize = 60;
const LINE_HEIGHT: f64 = 18.0;
const CARD_PADDING: f64 = 40.0;

/// Left edge of the column that holds section `index`.
pub fn column_x(index: usize) -> f64 {
    GUTTER + index as f64 * (COLUMN_WIDTH + GUTTER)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("record {index} refers to unknown section {section_id:?}")]
pub struct OrphanRecord {
    pub index: usize,
    pub section_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QaPair {
    pub record_index: usize,
    pub timestamp_sec: f64,
    pub area: Option<Rect>,
    pub question: String,
    pub answer: String,
    /// Text the avatar speaks when the card is replayed.
    pub replay_text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuizAttempt {
    pub record_index: usize,
    pub question: String,
    pub answer: String,
    pub correct: bool,
    pub correct_answer: String,
    pub explanation: String,
    pub level: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Activity {
    pub record_index: usize,
    pub kind: RecordKind,
    pub timestamp_sec: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SectionSummary {
    pub section_id: String,
    pub title: String,
    pub start_sec: f64,
    pub end_sec: f64,
    pub slide_image_ref: String,
    pub selected_areas: Vec<Rect>,
    pub questions: Vec<QaPair>,
    pub quiz_attempts: Vec<QuizAttempt>,
    pub notes: Vec<Activity>,
    /// Visual requests, breaks and opened examples.
    pub activities: Vec<Activity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CanvasCard {
    pub record_ref: usize,
    pub section_id: String,
    pub kind: RecordKind,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub title: String,
    pub body: String,
    pub replay_text: Option<String>,
    pub correct: Option<bool>,
}

impl CanvasCard {
    pub fn rect(&self) -> (f64, f64, f64, f64) {
        (self.x, self.y, self.x + self.w, self.y + self.h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SummaryDocument {
    pub session_id: String,
    pub bundle_id: String,
    pub title: String,
    /// One per bundle section, in lecture order; section `i` owns canvas
    /// column `i`.
    pub sections: Vec<SectionSummary>,
    pub canvas: Vec<CanvasCard>,
}

fn text(v: &Option<String>) -> String {
    v.clone().unwrap_or_default()
}

fn card_height(body: &str) -> f64 {
    let lines: usize = body
        .lines()
        .map(|l| l.chars().count().div_ceil(CHARS_PER_LINE).max(1))
        .sum();
    (CARD_PADDING + lines as f64 * LINE_HEIGHT).max(MIN_CARD_HEIGHT)
}

fn card_text(r: &InteractionRecord) -> (String, String) {
    let prompt = text(&r.prompt);
    let response = text(&r.response);
    match r.kind {
        RecordKind::Question => (format!("Q: {prompt}"), response),
        RecordKind::QuizAnswer => {
            let ok = r
                .extra
                .get("correct")
                .and_then(Value::as_bool)
                .unwrap_or(false);
            let right = r
                .extra
                .get("correctAnswer")
                .and_then(Value::as_str)
                .unwrap_or("");
            let verdict = if ok {
                "Correct".to_owned()
            } else {
                format!("Incorrect, the answer is {right}")
            };
            (
                format!("Quiz: {prompt}"),
                format!("Your answer: {response}\n{verdict}"),
            )
        }
        RecordKind::VisualRequest => (
            "Visual".to_owned(),
            format!("{prompt}\n{response}").trim().to_owned(),
        ),
        RecordKind::BreakTaken => (prompt, response),
        RecordKind::ExampleOpened => ("Example".to_owned(), prompt),
        RecordKind::Note => ("Note".to_owned(), prompt),
    }
}

/// Groups records by section and lays one card per record into one
/// column per section. Records are taken in log order, which is wall
/// time order, so cards stack chronologically inside each column.
pub fn compile_summary(
    session_id: &str,
    log: &[InteractionRecord],
    bundle: &LectureBundle,
) -> Result<SummaryDocument, OrphanRecord> {
    let mut owner = Vec::with_capacity(log.len());
    for (index, r) in log.iter().enumerate() {
        let s = r
            .section_id
            .as_deref()
            .and_then(|id| bundle.section_index(id))
            .ok_or_else(|| OrphanRecord {
                index,
                section_id: r.section_id.clone(),
            })?;
        owner.push(s);
    }
    let mut sections = Vec::with_capacity(bundle.sections.len());
    let mut canvas = Vec::with_capacity(log.len());
    for (si, sec) in bundle.sections.iter().enumerate() {
        let mut sum = SectionSummary {
            section_id: sec.id.clone(),
            title: sec.title.clone(),
            start_sec: sec.start_sec,
            end_sec: sec.end_sec,
            slide_image_ref: sec.slide_image_ref.clone(),
            selected_areas: Vec::new(),
            questions: Vec::new(),
            quiz_attempts: Vec::new(),
            notes: Vec::new(),
            activities: Vec::new(),
        };
        let x = column_x(si);
        let mut y = HEADER_HEIGHT + GUTTER;
        for (i, r) in log.iter().enumerate().filter(|(i, _)| owner[*i] == si) {
            if let Some(a) = r.selected_area {
                sum.selected_areas.push(a);
            }
            let activity = || Activity {
                record_index: i,
                kind: r.kind,
                timestamp_sec: r.timestamp_sec,
                text: [text(&r.prompt), text(&r.response)]
                    .join("\n")
                    .trim()
                    .to_owned(),
            };
            let mut replay_text = None;
            let mut correct = None;
            match r.kind {
                RecordKind::Question => {
                    let answer = text(&r.response);
                    replay_text = Some(answer.clone());
                    sum.questions.push(QaPair {
                        record_index: i,
                        timestamp_sec: r.timestamp_sec,
                        area: r.selected_area,
                        question: text(&r.prompt),
                        answer: answer.clone(),
                        replay_text: answer,
                    });
                }
                RecordKind::QuizAnswer => {
                    let ok = r
                        .extra
                        .get("correct")
                        .and_then(Value::as_bool)
                        .unwrap_or(false);
                    correct = Some(ok);
                    let field = |k: &str| {
                        r.extra
                            .get(k)
                            .and_then(Value::as_str)
                            .unwrap_or("")
                            .to_owned()
                    };
                    sum.quiz_attempts.push(QuizAttempt {
                        record_index: i,
                        question: text(&r.prompt),
                        answer: text(&r.response),
                        correct: ok,
                        correct_answer: field("correctAnswer"),
                        explanation: field("explanation"),
                        level: r.extra.get("level").and_then(Value::as_u64),
                    });
                }
                RecordKind::Note => sum.notes.push(activity()),
                _ => sum.activities.push(activity()),
            }
            let (title, body) = card_text(r);
            let h = card_height(&body);
            canvas.push(CanvasCard {
                record_ref: i,
                section_id: sec.id.clone(),
                kind: r.kind,
                x,
                y,
                w: COLUMN_WIDTH,
                h,
                title,
                body,
                replay_text,
                correct,
            });
            y += h + GUTTER;
        }
        sections.push(sum);
    }
    canvas.sort_by_key(|c| c.record_ref);
    Ok(SummaryDocument {
        session_id: session_id.to_owned(),
        bundle_id: bundle.id.clone(),
        title: bundle.title.clone(),
        sections,
        canvas,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use chrono::{TimeZone, Utc};
    use serde_json::json;

    use super::*;
    use crate::content::{BoxReference, DifficultyBank, Section};

    fn section(id: &str, s: f64, e: f64) -> Section {
        Section {
            id: id.into(),
            start_sec: s,
            end_sec: e,
            slide_image_ref: format!("sections/{id}/slide.png"),
            title: format!("Slide {id}"),
            main_concepts: vec![],
            key_points: vec![],
            equations: None,
            diagrams: None,
            content_fingerprint: "0".into(),
            description: String::new(),
            box_reference: BoxReference::default(),
            transcript: vec![],
            quizzes: DifficultyBank::default(),
            highlights: vec![],
        }
    }

    fn bundle() -> LectureBundle {
        LectureBundle {
            id: "b".into(),
            title: "T".into(),
            video_ref: "v.gif".into(),
            duration_sec: 30.0,
            summary: String::new(),
            sections: vec![
                section("s001", 0.0, 10.0),
                section("s002", 10.0, 20.0),
                section("s003", 20.0, 30.0),
            ],
            examples: vec![],
            created_at: Utc.timestamp_opt(0, 0).unwrap(),
        }
    }

    fn rec(kind: RecordKind, sec: &str, t: f64, prompt: &str, resp: &str) -> InteractionRecord {
        InteractionRecord {
            kind,
            timestamp_sec: t,
            wall_time: Utc.timestamp_opt(t as i64, 0).unwrap(),
            section_id: Some(sec.into()),
            selected_area: None,
            prompt: Some(prompt.into()),
            response: Some(resp.into()),
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn groups_by_section_and_stacks_cards() {
        let mut quiz = rec(RecordKind::QuizAnswer, "s003", 25.0, "Quarks?", "three");
        quiz.extra.insert("correct".into(), json!(true));
        quiz.extra.insert("correctAnswer".into(), json!("three"));
        let log = vec![
            rec(RecordKind::Question, "s001", 2.0, "What?", "This."),
            rec(
                RecordKind::Question,
                "s003",
                21.0,
                "Why?",
                &"word ".repeat(80),
            ),
            quiz,
            rec(RecordKind::Note, "s001", 5.0, "remember", ""),
        ];
        let doc = compile_summary("x", &log, &bundle()).unwrap();
        assert_eq!(doc.sections.len(), 3);
        assert_eq!(doc.sections[0].section_id, "s001");
        assert!(doc.sections[1].questions.is_empty());
        assert_eq!(doc.sections[2].quiz_attempts.len(), 1);
        assert!(doc.sections[2].quiz_attempts[0].correct);
        assert_eq!(doc.canvas.len(), 4);
        let by_ref: Vec<_> = doc.canvas.iter().map(|c| c.record_ref).collect();
        assert_eq!(by_ref, vec![0, 1, 2, 3]);
        // s001 cards in column 0, s003 in column 2.
        assert_eq!(doc.canvas[0].x, GUTTER);
        assert_eq!(doc.canvas[1].x, GUTTER + 2.0 * (COLUMN_WIDTH + GUTTER));
        assert_eq!(doc.canvas[3].y, doc.canvas[0].y + doc.canvas[0].h + GUTTER);
        assert!(doc.canvas[1].h > MIN_CARD_HEIGHT);
        assert_eq!(doc.canvas[2].y, doc.canvas[1].y + doc.canvas[1].h + GUTTER);
        assert_eq!(doc.canvas[0].replay_text.as_deref(), Some("This."));
    }

    #[test]
    fn orphan_records_are_rejected() {
        let mut r = rec(RecordKind::Note, "s009", 1.0, "n", "");
        assert_eq!(
            compile_summary("x", &[r.clone()], &bundle()),
            Err(OrphanRecord {
                index: 0,
                section_id: Some("s009".into())
            })
        );
        r.section_id = None;
        assert!(compile_summary("x", &[r], &bundle()).is_err());
    }

    #[test]
    fn empty_log_gives_columns_only() {
        let doc = compile_summary("x", &[], &bundle()).unwrap();
        assert_eq!(doc.sections.len(), 3);
        assert!(doc.canvas.is_empty());
    }
}
