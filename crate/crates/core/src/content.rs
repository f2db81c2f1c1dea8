//! Lecture bundle data model, on-disk layout and validation.
//!
//! A bundle directory looks like:
//!
//! ```text
//! manifest.json
//! sections/000/slide.png
//! sections/000/content.json
//! sections/000/quiz.json
//! sections/000/highlights.json
//! examples/*.html
//! ```
//!
//! All JSON is written canonically (sorted keys, two-space indent, trailing
//! newline) so repeated saves are byte-identical.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::geometry::Rect;

/// Tolerance applied to every timestamp comparison, in seconds.
pub const TIME_EPS: f64 = 1e-3;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ContentError {
    #[error("no {MANIFEST_FILE} in {0}")]
    MissingManifest(PathBuf),
    #[error("schema violation at `{field}`: {reason}")]
    SchemaViolation { field: String, reason: String },
    #[error("referenced file does not exist: {0}")]
    DanglingReference(PathBuf),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ContentError {
    pub fn violation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ContentError::SchemaViolation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        ContentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LectureBundle {
    pub id: String,
    pub title: String,
    pub video_ref: String,
    pub duration_sec: f64,
    /// Short whole-lecture summary used as prompt context.
    #[serde(default)]
    pub summary: String,
    pub sections: Vec<Section>,
    #[serde(default)]
    pub examples: Vec<ExampleAsset>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Section {
    pub id: String,
    pub start_sec: f64,
    pub end_sec: f64,
    /// Path relative to the bundle root.
    pub slide_image_ref: String,
    pub title: String,
    pub main_concepts: Vec<String>,
    pub key_points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagrams: Option<Vec<String>>,
    pub content_fingerprint: String,
    #[serde(default)]
    pub description: String,
    /// Pixel-space resolution the provider's raw boxes were expressed in.
    #[serde(default)]
    pub box_reference: BoxReference,
    pub transcript: Vec<TranscriptSegment>,
    pub quizzes: DifficultyBank,
    pub highlights: Vec<HighlightEntry>,
}

impl Section {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_sec - TIME_EPS && t <= self.end_sec + TIME_EPS
    }

    pub fn duration(&self) -> f64 {
        self.end_sec - self.start_sec
    }

    /// Text form of the slide used as prompt context.
    pub fn content_text(&self) -> String {
        let mut out = format!("Title: {}", self.title);
        if !self.main_concepts.is_empty() {
            out.push_str(&format!(
                "\nMain Concepts: {}",
                self.main_concepts.join(", ")
            ));
        }
        if !self.key_points.is_empty() {
            out.push_str(&format!("\nKey Points: {}", self.key_points.join(", ")));
        }
        if let Some(eq) = &self.equations {
            out.push_str(&format!("\nEquations: {}", eq.join(", ")));
        }
        if let Some(d) = &self.diagrams {
            out.push_str(&format!("\nDiagrams: {}", d.join(", ")));
        }
        out
    }

    pub fn transcript_text(&self) -> String {
        self.transcript
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxReference {
    pub width: u32,
    pub height: u32,
}

impl Default for BoxReference {
    fn default() -> Self {
        BoxReference {
            width: 1000,
            height: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TranscriptSegment {
    pub start_sec: f64,
    pub end_sec: f64,
    pub text: String,
}

impl TranscriptSegment {
    pub fn midpoint(&self) -> f64 {
        (self.start_sec + self.end_sec) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuizType {
    #[serde(rename = "multiple-choice")]
    MultipleChoice,
    #[serde(rename = "true-false")]
    TrueFalse,
    #[serde(rename = "fill-blank")]
    FillBlank,
}

impl QuizType {
    pub fn as_str(self) -> &'static str {
        match self {
            QuizType::MultipleChoice => "multiple-choice",
            QuizType::TrueFalse => "true-false",
            QuizType::FillBlank => "fill-blank",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "multiple-choice" => Some(QuizType::MultipleChoice),
            "true-false" => Some(QuizType::TrueFalse),
            "fill-blank" => Some(QuizType::FillBlank),
            _ => None,
        }
    }

    pub const ALL: [QuizType; 3] = [
        QuizType::MultipleChoice,
        QuizType::TrueFalse,
        QuizType::FillBlank,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuizItem {
    #[serde(rename = "type")]
    pub kind: QuizType,
    pub question: String,
    pub options: Vec<String>,
    pub correct_answer: String,
    pub explanation: String,
    pub difficulty: u8,
    /// Extra accepted spellings for fill-blank answers.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accepted_answers: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuizItemError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("unknown question type `{0}`")]
    BadEnum(String),
    #[error("correct answer is not one of the options")]
    AnswerNotInOptions,
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error("invalid difficulty: {0}")]
    BadDifficulty(String),
}

/// Maps a difficulty label or number onto 1..=5.
pub fn parse_difficulty(v: &Value) -> Result<u8, QuizItemError> {
    match v {
        Value::Number(n) => match n.as_u64() {
            Some(d @ 1..=5) => Ok(d as u8),
            _ => Err(QuizItemError::BadDifficulty(n.to_string())),
        },
        Value::String(s) => {
            let s = s.trim().to_lowercase();
            if let Ok(d) = s.parse::<u8>() {
                if (1..=5).contains(&d) {
                    return Ok(d);
                }
            }
            let label = s.split(" - ").next().unwrap_or("").trim();
            match label {
                "very easy" => Ok(1),
                "easy" => Ok(2),
                "medium" => Ok(3),
                "hard" => Ok(4),
                "very hard" => Ok(5),
                _ => Err(QuizItemError::BadDifficulty(s)),
            }
        }
        other => Err(QuizItemError::BadDifficulty(other.to_string())),
    }
}

fn str_field(raw: &Value, name: &str) -> Result<String, QuizItemError> {
    raw.get(name)
        .and_then(Value::as_str)
        .map(str::to_owned)
        .ok_or_else(|| QuizItemError::MissingField(name.to_owned()))
}

/// Normalizes a provider-produced quiz question into a [`QuizItem`].
pub fn validate_quiz_item(raw: &Value) -> Result<QuizItem, QuizItemError> {
    let kind_raw = str_field(raw, "type")?;
    let kind = QuizType::parse(kind_raw.trim()).ok_or(QuizItemError::BadEnum(kind_raw))?;
    let question = str_field(raw, "question")?;
    let options_raw = raw
        .get("options")
        .ok_or_else(|| QuizItemError::MissingField("options".into()))?;
    let options = options_raw
        .as_array()
        .ok_or_else(|| QuizItemError::BadOptions("not an array".into()))?
        .iter()
        .map(|o| o.as_str().map(str::to_owned))
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| QuizItemError::BadOptions("non-string option".into()))?;
    let correct_answer = match raw.get("correctAnswer") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Bool(b)) => if *b { "True" } else { "False" }.to_owned(),
        _ => return Err(QuizItemError::MissingField("correctAnswer".into())),
    };
    let explanation = str_field(raw, "explanation")?;
    let difficulty = parse_difficulty(
        raw.get("difficulty")
            .ok_or_else(|| QuizItemError::MissingField("difficulty".into()))?,
    )?;
    let accepted_answers = raw
        .get("acceptedAnswers")
        .and_then(Value::as_array)
        .map(|a| {
            a.iter()
                .filter_map(|v| v.as_str().map(str::to_owned))
                .collect()
        })
        .unwrap_or_default();

    let item = QuizItem {
        kind,
        question,
        options,
        correct_answer,
        explanation,
        difficulty,
        accepted_answers,
    };
    check_quiz_item(&item)?;
    Ok(item)
}

pub fn check_quiz_item(item: &QuizItem) -> Result<(), QuizItemError> {
    if !(1..=5).contains(&item.difficulty) {
        return Err(QuizItemError::BadDifficulty(item.difficulty.to_string()));
    }
    match item.kind {
        QuizType::MultipleChoice => {
            if item.options.len() != 4 {
                return Err(QuizItemError::BadOptions(format!(
                    "multiple-choice needs 4 options, got {}",
                    item.options.len()
                )));
            }
            if !item.options.iter().any(|o| o == &item.correct_answer) {
                return Err(QuizItemError::AnswerNotInOptions);
            }
        }
        QuizType::TrueFalse | QuizType::FillBlank => {
            if !item.options.is_empty() {
                return Err(QuizItemError::BadOptions(format!(
                    "{} takes no options",
                    item.kind.as_str()
                )));
            }
        }
    }
    Ok(())
}

/// Quiz items keyed by difficulty level 1..=5.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DifficultyBank(pub BTreeMap<u8, Vec<QuizItem>>);

impl DifficultyBank {
    pub fn level(&self, level: u8) -> &[QuizItem] {
        self.0.get(&level).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_empty(&self) -> bool {
        self.0.values().all(Vec::is_empty)
    }

    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HighlightEntry {
    #[serde(rename = "box")]
    pub bbox: Rect,
    pub relevant_transcript: String,
    pub start_sec: Option<f64>,
    pub end_sec: Option<f64>,
}

impl HighlightEntry {
    pub fn active_at(&self, t: f64) -> bool {
        match (self.start_sec, self.end_sec) {
            (Some(s), Some(e)) => t >= s - TIME_EPS && t <= e + TIME_EPS,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExampleAsset {
    pub section_id: String,
    pub trigger_sec: f64,
    /// Path relative to the bundle root.
    pub html_ref: String,
    pub title: String,
}

impl LectureBundle {
    pub fn section(&self, id: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.id == id)
    }

    pub fn section_index(&self, id: &str) -> Option<usize> {
        self.sections.iter().position(|s| s.id == id)
    }

    /// Section whose half-open range `[start, end)` holds `t`; the final
    /// section also owns its end point.
    pub fn section_at(&self, t: f64) -> Option<usize> {
        let last = self.sections.len().checked_sub(1)?;
        self.sections.iter().enumerate().position(|(i, s)| {
            t >= s.start_sec - TIME_EPS
                && (t < s.end_sec || (i == last && t <= s.end_sec + TIME_EPS))
        })
    }

    /// Checks every structural invariant that does not need the filesystem.
    pub fn validate(&self) -> Result<(), ContentError> {
        use ContentError as E;
        if self.id.trim().is_empty() {
            return Err(E::violation("id", "empty"));
        }
        if !self.duration_sec.is_finite() || self.duration_sec < 0.0 {
            return Err(E::violation("durationSec", "must be finite and >= 0"));
        }
        let mut ids = HashSet::new();
        for (i, s) in self.sections.iter().enumerate() {
            let f = |name: &str| format!("sections[{i}].{name}");
            if !ids.insert(s.id.as_str()) {
                return Err(E::violation("sections", format!("duplicate id {}", s.id)));
            }
            if !(s.start_sec.is_finite() && s.end_sec.is_finite()) || s.start_sec >= s.end_sec {
                return Err(E::violation(f("startSec"), "startSec must be < endSec"));
            }
            if s.content_fingerprint.trim().is_empty() {
                return Err(E::violation(f("contentFingerprint"), "empty"));
            }
            let mut prev_start = f64::NEG_INFINITY;
            for (j, seg) in s.transcript.iter().enumerate() {
                let field = f(&format!("transcript[{j}]"));
                if seg.start_sec > seg.end_sec + TIME_EPS {
                    return Err(E::violation(field, "startSec > endSec"));
                }
                if seg.text.trim().is_empty() {
                    return Err(E::violation(field, "empty text"));
                }
                if seg.start_sec < prev_start - TIME_EPS {
                    return Err(E::violation(field, "not sorted"));
                }
                if seg.start_sec < s.start_sec - TIME_EPS || seg.end_sec > s.end_sec + TIME_EPS {
                    return Err(E::violation(field, "outside section range"));
                }
                prev_start = seg.start_sec;
            }
            for (level, items) in &s.quizzes.0 {
                if !(1..=5).contains(level) {
                    return Err(E::violation(f("quizzes"), format!("bad level {level}")));
                }
                for (k, item) in items.iter().enumerate() {
                    let field = f(&format!("quizzes.{level}[{k}]"));
                    if item.difficulty != *level {
                        return Err(E::violation(field, "difficulty differs from bank level"));
                    }
                    check_quiz_item(item).map_err(|e| E::violation(field, e.to_string()))?;
                }
            }
            for (k, h) in s.highlights.iter().enumerate() {
                let field = f(&format!("highlights[{k}]"));
                if !h.bbox.is_proper() || !h.bbox.within_unit() {
                    return Err(E::violation(field, "box must be proper and inside [0,1]^2"));
                }
                match (h.start_sec, h.end_sec) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        if h.relevant_transcript.trim().is_empty() {
                            return Err(E::violation(
                                field,
                                "empty transcript carries a time range",
                            ));
                        }
                        if a > b + TIME_EPS || !s.contains(a) || !s.contains(b) {
                            return Err(E::violation(field, "time range outside section"));
                        }
                    }
                    _ => return Err(E::violation(field, "half-open time range")),
                }
            }
        }
        for pair in self.sections.windows(2) {
            if pair[1].start_sec < pair[0].end_sec - TIME_EPS {
                return Err(E::violation("sections", "overlap"));
            }
            if pair[1].start_sec > pair[0].end_sec + TIME_EPS {
                return Err(E::violation("sections", "gap"));
            }
        }
        if let (Some(first), Some(last)) = (self.sections.first(), self.sections.last()) {
            if first.start_sec.abs() > TIME_EPS
                || (last.end_sec - self.duration_sec).abs() > TIME_EPS
            {
                return Err(E::violation("sections", "do not cover [0, durationSec]"));
            }
        }
        for (i, ex) in self.examples.iter().enumerate() {
            let field = format!("examples[{i}]");
            let Some(sec) = self.section(&ex.section_id) else {
                return Err(E::violation(
                    field,
                    format!("unknown section {}", ex.section_id),
                ));
            };
            if !sec.contains(ex.trigger_sec) {
                return Err(E::violation(field, "triggerSec outside owning section"));
            }
        }
        Ok(())
    }
}

/// Serializes with sorted keys and pretty formatting.
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    // serde_json::Map is a BTreeMap here, so a trip through Value sorts keys.
    let v = serde_json::to_value(value).expect("bundle types serialize");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Manifest {
    id: String,
    title: String,
    video_ref: String,
    duration_sec: f64,
    #[serde(default)]
    summary: String,
    created_at: DateTime<Utc>,
    sections: Vec<ManifestSection>,
    #[serde(default)]
    examples: Vec<ExampleAsset>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ManifestSection {
    id: String,
    start_sec: f64,
    end_sec: f64,
    dir: String,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SectionContent {
    title: String,
    main_concepts: Vec<String>,
    key_points: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    equations: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagrams: Option<Vec<String>>,
    content_fingerprint: String,
    #[serde(default)]
    description: String,
    #[serde(default)]
    box_reference: BoxReference,
    transcript: Vec<TranscriptSegment>,
}

pub fn section_dir(index: usize) -> String {
    format!("sections/{index:03}")
}

fn read_json<T: DeserializeOwned>(path: &Path, field: &str) -> Result<T, ContentError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => ContentError::DanglingReference(path.to_path_buf()),
        _ => ContentError::io(path, e),
    })?;
    serde_json::from_slice(&bytes).map_err(|e| ContentError::violation(field, e.to_string()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ContentError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| ContentError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| ContentError::io(path, e))
}

/// Reads and fully validates a bundle directory.
pub fn load_bundle(dir: &Path) -> Result<LectureBundle, ContentError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(ContentError::MissingManifest(dir.to_path_buf()));
    }
    let manifest: Manifest = read_json(&manifest_path, "manifest")?;
    let mut sections = Vec::with_capacity(manifest.sections.len());
    for (i, ms) in manifest.sections.into_iter().enumerate() {
        if ms.dir.contains("..") || Path::new(&ms.dir).is_absolute() {
            return Err(ContentError::violation(
                format!("sections[{i}].dir"),
                "must be relative",
            ));
        }
        let sdir = dir.join(&ms.dir);
        let content: SectionContent = read_json(
            &sdir.join("content.json"),
            &format!("sections[{i}].content"),
        )?;
        let quizzes: DifficultyBank =
            read_json(&sdir.join("quiz.json"), &format!("sections[{i}].quizzes"))?;
        let highlights: Vec<HighlightEntry> = read_json(
            &sdir.join("highlights.json"),
            &format!("sections[{i}].highlights"),
        )?;
        let slide_image_ref = format!("{}/slide.png", ms.dir.trim_end_matches('/'));
        let slide = dir.join(&slide_image_ref);
        if !slide.is_file() {
            return Err(ContentError::DanglingReference(slide));
        }
        sections.push(Section {
            id: ms.id,
            start_sec: ms.start_sec,
            end_sec: ms.end_sec,
            slide_image_ref,
            title: content.title,
            main_concepts: content.main_concepts,
            key_points: content.key_points,
            equations: content.equations,
            diagrams: content.diagrams,
            content_fingerprint: content.content_fingerprint,
            description: content.description,
            box_reference: content.box_reference,
            transcript: content.transcript,
            quizzes,
            highlights,
        });
    }
    let bundle = LectureBundle {
        id: manifest.id,
        title: manifest.title,
        video_ref: manifest.video_ref,
        duration_sec: manifest.duration_sec,
        summary: manifest.summary,
        sections,
        examples: manifest.examples,
        created_at: manifest.created_at,
    };
    bundle.validate()?;
    for ex in &bundle.examples {
        if ex.html_ref.contains("..") || Path::new(&ex.html_ref).is_absolute() {
            return Err(ContentError::violation(
                "examples.htmlRef",
                "must be relative",
            ));
        }
        let p = dir.join(&ex.html_ref);
        if !p.is_file() {
            return Err(ContentError::DanglingReference(p));
        }
    }
    Ok(bundle)
}

/// Writes the JSON parts of a bundle. Slide images and example assets are
/// expected to already sit at their referenced paths under `dir`.
pub fn save_bundle(bundle: &LectureBundle, dir: &Path) -> Result<(), ContentError> {
    bundle.validate()?;
    let mut manifest_sections = Vec::with_capacity(bundle.sections.len());
    for (i, s) in bundle.sections.iter().enumerate() {
        let sdir = s
            .slide_image_ref
            .strip_suffix("/slide.png")
            .map(str::to_owned)
            .unwrap_or_else(|| section_dir(i));
        let content = SectionContent {
            title: s.title.clone(),
            main_concepts: s.main_concepts.clone(),
            key_points: s.key_points.clone(),
            equations: s.equations.clone(),
            diagrams: s.diagrams.clone(),
            content_fingerprint: s.content_fingerprint.clone(),
            description: s.description.clone(),
            box_reference: s.box_reference,
            transcript: s.transcript.clone(),
        };
        let base = dir.join(&sdir);
        write_file(&base.join("content.json"), &canonical_json(&content))?;
        write_file(&base.join("quiz.json"), &canonical_json(&s.quizzes))?;
        write_file(
            &base.join("highlights.json"),
            &canonical_json(&s.highlights),
        )?;
        manifest_sections.push(ManifestSection {
            id: s.id.clone(),
            start_sec: s.start_sec,
            end_sec: s.end_sec,
            dir: sdir,
        });
    }
    let manifest = Manifest {
        id: bundle.id.clone(),
        title: bundle.title.clone(),
        video_ref: bundle.video_ref.clone(),
        duration_sec: bundle.duration_sec,
        summary: bundle.summary.clone(),
        created_at: bundle.created_at,
        sections: manifest_sections,
        examples: bundle.examples.clone(),
    };
    write_file(&dir.join(MANIFEST_FILE), &canonical_json(&manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn multiple_choice_from_template_example() {
        let raw = json!({
            "type": "multiple-choice",
            "question": "Question text here?",
            "options": ["Option A", "Option B", "Option C", "Option D"],
            "correctAnswer": "Option A",
            "explanation": "Detailed explanation.",
            "difficulty": "medium"
        });
        let item = validate_quiz_item(&raw).unwrap();
        assert_eq!(item.kind, QuizType::MultipleChoice);
        assert_eq!(item.difficulty, 3);
    }

    #[test]
    fn true_false_with_empty_options() {
        let raw = json!({
            "type": "true-false",
            "question": "Statement to evaluate as true or false.",
            "options": [],
            "correctAnswer": "True",
            "explanation": "Because.",
            "difficulty": "easy"
        });
        let item = validate_quiz_item(&raw).unwrap();
        assert_eq!(item.correct_answer, "True");
        assert_eq!(item.difficulty, 2);
    }

    #[test]
    fn answer_must_be_an_option() {
        let raw = json!({
            "type": "multiple-choice",
            "question": "Q?",
            "options": ["a", "b", "c", "d"],
            "correctAnswer": "e",
            "explanation": "x",
            "difficulty": 4
        });
        assert_eq!(
            validate_quiz_item(&raw),
            Err(QuizItemError::AnswerNotInOptions)
        );
    }

    #[test]
    fn quiz_item_error_paths() {
        let base = json!({
            "type": "fill-blank",
            "question": "Q _____",
            "options": [],
            "correctAnswer": "addition",
            "explanation": "x",
            "difficulty": 1
        });
        assert!(validate_quiz_item(&base).is_ok());

        let mut missing = base.clone();
        missing.as_object_mut().unwrap().remove("options");
        assert_eq!(
            validate_quiz_item(&missing),
            Err(QuizItemError::MissingField("options".into()))
        );

        let mut bad = base.clone();
        bad["type"] = json!("essay");
        assert_eq!(
            validate_quiz_item(&bad),
            Err(QuizItemError::BadEnum("essay".into()))
        );

        let mut level = base.clone();
        level["difficulty"] = json!(6);
        assert!(matches!(
            validate_quiz_item(&level),
            Err(QuizItemError::BadDifficulty(_))
        ));
    }

    #[test]
    fn difficulty_labels() {
        assert_eq!(parse_difficulty(&json!("very hard")), Ok(5));
        assert_eq!(parse_difficulty(&json!("very easy - basic recall")), Ok(1));
        assert_eq!(parse_difficulty(&json!("2")), Ok(2));
        assert!(parse_difficulty(&json!(0)).is_err());
        assert!(parse_difficulty(&json!(true)).is_err());
    }
}
