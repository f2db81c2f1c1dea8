//! The seven prompt templates and their placeholder binding rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::schema::{Field, Schema};
use super::ModelTier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TemplateId {
    SameSlide,
    SlideExtract,
    QuizGen,
    HighlightGen,
    Clarify,
    VisualKeywords,
    BreakStory,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::SameSlide,
        TemplateId::SlideExtract,
        TemplateId::QuizGen,
        TemplateId::HighlightGen,
        TemplateId::Clarify,
        TemplateId::VisualKeywords,
        TemplateId::BreakStory,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::SameSlide => "sameSlide",
            TemplateId::SlideExtract => "slideExtract",
            TemplateId::QuizGen => "quizGen",
            TemplateId::HighlightGen => "highlightGen",
            TemplateId::Clarify => "clarify",
            TemplateId::VisualKeywords => "visualKeywords",
            TemplateId::BreakStory => "breakStory",
        }
    }

    /// Vision prompts carry image attachments; the rest must not.
    pub fn requires_images(self) -> bool {
        matches!(
            self,
            TemplateId::SameSlide
                | TemplateId::SlideExtract
                | TemplateId::HighlightGen
                | TemplateId::VisualKeywords
        )
    }

    pub fn default_tier(self) -> ModelTier {
        match self {
            TemplateId::SameSlide | TemplateId::SlideExtract => ModelTier::Nano,
            TemplateId::HighlightGen => ModelTier::Pro,
            _ => ModelTier::Mini,
        }
    }

    pub fn template(self) -> &'static PromptTemplate {
        &TEMPLATES[self as usize]
    }
}

impl std::fmt::Display for TemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindingRule {
    Required,
    /// Missing bindings render as the given literal.
    Default(&'static str),
    /// Numeric difficulty renders as `n/5 (label)`; anything else verbatim.
    QuizDifficulty,
    /// `breakDuration * 150`, unless bound explicitly.
    BreakWords,
}

#[derive(Debug, Clone, Copy)]
pub struct Placeholder {
    pub name: &'static str,
    pub rule: BindingRule,
}

const fn ph(name: &'static str, rule: BindingRule) -> Placeholder {
    Placeholder { name, rule }
}

#[derive(Debug)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub placeholders: &'static [Placeholder],
}

use BindingRule::*;

static TEMPLATES: [PromptTemplate; 7] = [
    PromptTemplate {
        id: TemplateId::SameSlide,
        body: include_str!("../../templates/a1_same_slide.txt"),
        placeholders: &[],
    },
    PromptTemplate {
        id: TemplateId::SlideExtract,
        body: include_str!("../../templates/a2_slide_extract.txt"),
        placeholders: &[],
    },
    PromptTemplate {
        id: TemplateId::QuizGen,
        body: include_str!("../../templates/a3_quiz_gen.txt"),
        placeholders: &[
            ph("questionsPerSection", Required),
            ph("title", Required),
            ph("mainConcepts", Required),
            ph("keyPoints", Required),
            ph("equationsLine", Default("")),
            ph("diagramsLine", Default("")),
            ph("transcript", Required),
            ph("difficulty", QuizDifficulty),
            ph("questionTypes", Required),
        ],
    },
    PromptTemplate {
        id: TemplateId::HighlightGen,
        body: include_str!("../../templates/a4_highlight_gen.txt"),
        placeholders: &[ph("slideTranscript", Required)],
    },
    PromptTemplate {
        id: TemplateId::Clarify,
        body: include_str!("../../templates/a5_clarify.txt"),
        placeholders: &[
            ph("currentVideoName", Default("null")),
            ph("summaryText", Default("null")),
            ph("currentSlideContent", Default("null")),
        ],
    },
    PromptTemplate {
        id: TemplateId::VisualKeywords,
        body: include_str!("../../templates/a6_visual_keywords.txt"),
        placeholders: &[],
    },
    PromptTemplate {
        id: TemplateId::BreakStory,
        body: include_str!("../../templates/a7_break_story.txt"),
        placeholders: &[
            ph("currentVideoName", Required),
            ph("breakDuration", Required),
            ph("summaryText", Default("")),
            ph("currentSlideContent", Default("")),
            ph("userInterests", Default("")),
            ph("breakWords", BreakWords),
        ],
    },
];

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("placeholder `{0}` is not bound")]
    UnboundPlaceholder(String),
    #[error("template references `{0}` but declares no binding rule for it")]
    UndeclaredPlaceholder(String),
}

/// Splits a template body into literal text and placeholder names.
pub fn placeholder_sites(body: &str) -> Vec<(usize, usize, &str)> {
    let mut out = Vec::new();
    let mut rest = 0;
    while let Some(off) = body[rest..].find("${") {
        let start = rest + off;
        let Some(close) = body[start..].find('}') else {
            break;
        };
        let end = start + close + 1;
        out.push((start, end, &body[start + 2..end - 1]));
        rest = end;
    }
    out
}

fn js_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn difficulty_text(raw: &str) -> String {
    match raw.trim().parse::<f64>() {
        Ok(n) if n.is_finite() => {
            let label = if n == 1.0 {
                "very easy - basic recall"
            } else if n == 2.0 {
                "easy - simple understanding"
            } else if n == 3.0 {
                "medium - application"
            } else if n == 4.0 {
                "hard - analysis"
            } else {
                "very hard - synthesis/evaluation"
            };
            format!("{}/5 ({label})", js_number(n))
        }
        _ => raw.to_owned(),
    }
}

impl PromptTemplate {
    pub fn rule(&self, name: &str) -> Option<BindingRule> {
        self.placeholders
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.rule)
    }

    fn resolve(
        &self,
        name: &str,
        bindings: &BTreeMap<String, String>,
    ) -> Result<String, TemplateError> {
        let rule = self
            .rule(name)
            .ok_or_else(|| TemplateError::UndeclaredPlaceholder(name.to_owned()))?;
        let bound = bindings.get(name);
        let unbound = || TemplateError::UnboundPlaceholder(name.to_owned());
        Ok(match rule {
            Required => bound.cloned().ok_or_else(unbound)?,
            Default(d) => bound.cloned().unwrap_or_else(|| d.to_owned()),
            QuizDifficulty => difficulty_text(bound.ok_or_else(unbound)?),
            BreakWords => match bound {
                Some(v) => v.clone(),
                None => {
                    let minutes = bindings
                        .get("breakDuration")
                        .ok_or_else(|| TemplateError::UnboundPlaceholder("breakDuration".into()))?;
                    match minutes.trim().parse::<f64>() {
                        Ok(m) => js_number(m * 150.0),
                        Err(_) => "NaN".to_owned(),
                    }
                }
            },
        })
    }

    /// Substitutes every placeholder; bound values are not re-scanned.
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len() + 256);
        let mut last = 0;
        for (start, end, name) in placeholder_sites(self.body) {
            out.push_str(&self.body[last..start]);
            out.push_str(&self.resolve(name, bindings)?);
            last = end;
        }
        out.push_str(&self.body[last..]);
        Ok(out)
    }

    /// Structured shape the reply must take.
    pub fn response_schema(&self) -> Schema {
        use Schema as S;
        let s = S::string;
        match self.id {
            TemplateId::SameSlide => S::object(vec![
                Field::required("isSameSlide", S::Bool),
                Field::required("confidence", S::number(0.0, 1.0)),
                Field::required("reason", s()),
                Field::required(
                    "contentChange",
                    S::object(vec![
                        Field::required(
                            "type",
                            S::Enum(vec![
                                "annotation",
                                "human_motion",
                                "cursor",
                                "new_slide",
                                "transition",
                            ]),
                        ),
                        Field::optional("description", s()),
                    ]),
                ),
            ]),
            TemplateId::SlideExtract => S::object(vec![
                Field::required("title", s()),
                Field::required("mainTopics", S::array(s())),
                Field::required("hasHumanPresence", S::Bool),
                Field::required("hasAnnotations", S::Bool),
                Field::required("contentFingerprint", S::NonEmptyString),
                Field::required("description", s()),
                Field::optional("keyPoints", S::array(s())),
                Field::optional("equations", S::array(s())),
                Field::optional("diagrams", S::array(s())),
            ]),
            TemplateId::QuizGen => S::object(vec![Field::required(
                "questions",
                S::array(S::object(vec![
                    Field::required(
                        "type",
                        S::Enum(vec!["multiple-choice", "true-false", "fill-blank"]),
                    ),
                    Field::required("question", s()),
                    Field::required("options", S::array(s())),
                    Field::required("correctAnswer", S::OneOf(vec![s(), S::Bool])),
                    Field::required("explanation", s()),
                    Field::required("difficulty", S::OneOf(vec![s(), S::number(1.0, 5.0)])),
                ])),
            )]),
            TemplateId::HighlightGen => S::array(S::object(vec![
                Field::required(
                    "box_2d",
                    S::Array {
                        items: Box::new(S::number(f64::MIN, f64::MAX)),
                        len: Some(4),
                    },
                ),
                Field::required("relavant_transcript", s()),
            ])),
            TemplateId::VisualKeywords => S::object(vec![Field::required("keywords", s())]),
            TemplateId::Clarify | TemplateId::BreakStory => S::Text,
        }
    }
}

/// Renders `id` with `bindings`.
pub fn render_prompt(
    id: TemplateId,
    bindings: &BTreeMap<String, String>,
) -> Result<String, TemplateError> {
    id.template().render(bindings)
}

/// `Array.prototype.toString` formatting: elements joined by `,`.
pub fn js_array(items: &[String]) -> String {
    items.join(",")
}
