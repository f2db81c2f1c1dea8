//! Deterministic offline provider.
//!
//! Vision templates work from the attached images: `sameSlide` compares
//! average hashes, `slideExtract` reports the hash as the content
//! fingerprint, `highlightGen` runs the layout detector. Text templates draw
//! from fixed tables seeded by a digest of the template id and bindings, so
//! identical requests always produce identical replies.

use std::collections::HashMap;
use std::sync::RwLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{RenderedRequest, TemplateId, TextProvider, TransportError};
use crate::imaging;

/// Hash distance up to which the mock judges two frames to show one slide.
pub const SAME_SLIDE_MAX_DISTANCE: u32 = 20;

struct SlideFixture {
    title: &'static str,
    topics: &'static [&'static str],
    key_points: &'static [&'static str],
    equations: &'static [&'static str],
}

const SLIDES: &[SlideFixture] = &[
    SlideFixture {
        title: "Structure of the Atom",
        topics: &["Nucleus", "Nucleons", "Electrons"],
        key_points: &[
            "The nucleus holds protons and neutrons",
            "Electrons occupy orbitals around the nucleus",
        ],
        equations: &[],
    },
    SlideFixture {
        title: "Quarks and Gluons",
        topics: &["Quarks", "Gluons", "Strong force"],
        key_points: &[
            "Protons contain three valence quarks",
            "Gluons carry the strong force",
        ],
        equations: &[],
    },
    SlideFixture {
        title: "The Perceptron",
        topics: &["Perceptron", "Weights", "Activation"],
        key_points: &[
            "A perceptron computes a weighted sum",
            "The step function thresholds the output",
        ],
        equations: &["y = step(w · x + b)"],
    },
    SlideFixture {
        title: "Mass-Energy Equivalence",
        topics: &["Rest energy", "Binding energy", "Mass defect"],
        key_points: &[
            "Mass and energy are interchangeable",
            "Binding energy explains the mass defect",
        ],
        equations: &["E = m c^2"],
    },
    SlideFixture {
        title: "Linear Transformations",
        topics: &["Linearity", "Addition", "Scalar multiplication"],
        key_points: &[
            "Linear maps preserve addition",
            "Linear maps preserve scalar multiplication",
        ],
        equations: &["T(a u + b v) = a T(u) + b T(v)"],
    },
];

/// Keyword vocabulary for the visual-search tagger; each has a fixture
/// entry in the image-search stub.
pub const KEYWORDS: &[&str] = &[
    "quarks",
    "gluons",
    "nucleus",
    "perceptron",
    "electron orbitals",
];

const DISTRACTORS: &[&str] = &[
    "Photon",
    "Entropy",
    "Gradient",
    "Momentum",
    "Isotope",
    "Voltage",
    "Inertia",
    "Wavelength",
];

const CLARIFY_ANSWERS: &[&str] = &[
    "Great question! The nucleus is the tiny dense core of the atom, while nucleons are the protons and neutrons that make it up. So the nucleus is the whole, and nucleons are its parts.",
    "Think of this part of the slide as the key idea of the section. It connects the definition on the left with the example underneath. Once you see that link, the rest follows naturally.",
    "This term names the main quantity we are tracking here. The lecturer uses it to compare the two cases shown on the slide. Keep an eye on how it changes between them.",
    "Here the slide is summarizing the result we just derived. It says the same rule holds in every case we looked at. That is why it gets its own box.",
];

const STORY_SENTENCES: &[&str] = &[
    "Once upon a time a curious student wandered into a workshop full of humming machines and blinking lights.",
    "Every object in the room seemed to whisper a small secret about how the world fits together.",
    "The student noticed that even the dust drifting in the sunlight followed rules we had talked about in class.",
    "An old caretaker laughed and said that the best discoveries usually start with someone asking a silly question.",
    "So the student asked why the kettle sang before it boiled, and the caretaker grinned from ear to ear.",
    "Together they traced the sound back to tiny bubbles collapsing, each one a little burst of physics.",
    "By the time the tea was ready the student had filled half a notebook with doodles and new ideas.",
    "Outside, a gust of wind rattled the windows as if nature itself wanted to join the conversation.",
];

#[derive(Default)]
pub struct MockProvider {
    labels: RwLock<HashMap<u64, String>>,
}

impl MockProvider {
    /// Pins the visual-search keywords the mock reports for an image hash.
    pub fn label_image(&self, hash: u64, keywords: impl Into<String>) {
        self.labels
            .write()
            .expect("label lock")
            .insert(hash, keywords.into());
    }
}

pub fn seed_for(request: &RenderedRequest<'_>) -> u64 {
    let r = request.request;
    let mut h = Sha256::new();
    h.update(r.template_id.as_str().as_bytes());
    for (k, v) in &r.bindings {
        h.update([0u8]);
        h.update(k.as_bytes());
        h.update([1u8]);
        h.update(v.as_bytes());
    }
    if let Some(u) = &r.user_message {
        h.update([2u8]);
        h.update(u.as_bytes());
    }
    if let Some(s) = &r.prompt_suffix {
        h.update([3u8]);
        h.update(s.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

fn image_at(
    request: &RenderedRequest<'_>,
    i: usize,
) -> Result<image::DynamicImage, TransportError> {
    request
        .request
        .attachments
        .get(i)
        .ok_or_else(|| TransportError::Envelope(format!("missing attachment {i}")))?
        .image()
        .map_err(TransportError::Envelope)
}

fn binding<'a>(request: &'a RenderedRequest<'_>, key: &str) -> &'a str {
    request
        .request
        .bindings
        .get(key)
        .map(String::as_str)
        .unwrap_or("")
}

pub fn fixture_topics(hash: u64) -> (&'static str, Vec<&'static str>) {
    let f = &SLIDES[(hash % SLIDES.len() as u64) as usize];
    (f.title, f.topics.to_vec())
}

fn same_slide(request: &RenderedRequest<'_>) -> Result<Value, TransportError> {
    let a = imaging::average_hash(&image_at(request, 0)?);
    let b = imaging::average_hash(&image_at(request, 1)?);
    let d = imaging::hamming(a, b);
    Ok(if d <= SAME_SLIDE_MAX_DISTANCE {
        let kind = if d == 0 { "cursor" } else { "annotation" };
        json!({
            "isSameSlide": true,
            "confidence": 1.0 - d as f64 / 64.0,
            "reason": format!("Core layout unchanged (hash distance {d})."),
            "contentChange": { "type": kind, "description": "Only minor marks differ between the frames." }
        })
    } else {
        json!({
            "isSameSlide": false,
            "confidence": (d as f64 / 64.0).min(1.0),
            "reason": format!("Layout differs substantially (hash distance {d})."),
            "contentChange": { "type": "new_slide", "description": "A different slide is shown." }
        })
    })
}

fn slide_extract(request: &RenderedRequest<'_>) -> Result<Value, TransportError> {
    let img = image_at(request, 0)?;
    let hash = imaging::average_hash(&img);
    let fingerprint = format!("{hash:016x}");
    if imaging::is_uniform(&img, 8) {
        return Ok(json!({
            "title": "Untitled slide",
            "mainTopics": [],
            "hasHumanPresence": false,
            "hasAnnotations": false,
            "contentFingerprint": fingerprint,
            "description": "A blank frame with no visible content."
        }));
    }
    let f = &SLIDES[(hash % SLIDES.len() as u64) as usize];
    let mut v = json!({
        "title": f.title,
        "mainTopics": f.topics,
        "hasHumanPresence": false,
        "hasAnnotations": false,
        "contentFingerprint": fingerprint,
        "description": format!("A slide about {}.", f.topics.join(", ")),
        "keyPoints": f.key_points,
    });
    if !f.equations.is_empty() {
        v["equations"] = json!(f.equations);
    }
    Ok(v)
}

fn quiz_gen(request: &RenderedRequest<'_>) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(request));
    let n: usize = binding(request, "questionsPerSection")
        .trim()
        .parse()
        .unwrap_or(1);
    let level: u8 = binding(request, "difficulty")
        .trim()
        .parse::<u8>()
        .ok()
        .filter(|d| (1..=5).contains(d))
        .unwrap_or(3);
    let title = binding(request, "title");
    let concepts: Vec<&str> = binding(request, "mainConcepts")
        .split(", ")
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let equations = binding(request, "equationsLine")
        .strip_prefix("Equations: ")
        .unwrap_or("");
    let types: Vec<&str> = binding(request, "questionTypes")
        .split(", ")
        .map(str::trim)
        .filter(|t| matches!(*t, "multiple-choice" | "true-false" | "fill-blank"))
        .collect();
    let types = if types.is_empty() {
        vec!["multiple-choice"]
    } else {
        types
    };

    let questions: Vec<Value> = (0..n)
        .map(|i| {
            let concept = concepts.get(i % concepts.len().max(1)).copied().unwrap_or(title);
            let kind = types[i % types.len()];
            let stem = match level {
                1 => format!("Which term names {concept}?"),
                2 => format!("What does {concept} describe in \"{title}\"?"),
                3 if !equations.is_empty() => format!("Recall the formula for {concept}: which expression is it?"),
                3 => format!("Recall the formula or rule that governs {concept}."),
                4 => format!("How does {concept} constrain the other ideas in \"{title}\"?"),
                _ => format!("Evaluate how {concept} would change if the assumptions of \"{title}\" were dropped."),
            };
            match kind {
                "multiple-choice" => {
                    let correct = if level == 3 && !equations.is_empty() {
                        equations.split(", ").next().unwrap_or(concept).to_owned()
                    } else {
                        concept.to_owned()
                    };
                    let mut options = vec![correct.clone()];
                    let mut pool: Vec<&str> = DISTRACTORS.iter().copied().filter(|d| *d != correct).collect();
                    pool.shuffle(&mut rng);
                    options.extend(pool.into_iter().take(3).map(str::to_owned));
                    options.shuffle(&mut rng);
                    json!({
                        "type": kind,
                        "question": stem,
                        "options": options,
                        "correctAnswer": correct,
                        "explanation": format!("{concept} is the idea this slide of \"{title}\" is built around."),
                        "difficulty": level
                    })
                }
                "true-false" => {
                    let truth = rng.gen_bool(0.5);
                    let statement = if truth {
                        format!("{concept} is one of the main concepts of \"{title}\".")
                    } else {
                        format!("{concept} plays no role in \"{title}\".")
                    };
                    json!({
                        "type": kind,
                        "question": statement,
                        "options": [],
                        "correctAnswer": if truth { "True" } else { "False" },
                        "explanation": format!("The slide presents {concept} as a central idea."),
                        "difficulty": level
                    })
                }
                _ => json!({
                    "type": kind,
                    "question": format!("Complete this statement: the slide \"{title}\" introduces _____."),
                    "options": [],
                    "correctAnswer": concept,
                    "explanation": format!("The blank is {concept}, a main concept of the slide."),
                    "difficulty": level
                }),
            }
        })
        .collect();
    json!({ "questions": questions })
}

fn highlight_gen(request: &RenderedRequest<'_>) -> Result<Value, TransportError> {
    let img = image_at(request, 0)?;
    let boxes = crate::layout::detect_boxes_in(&img, &crate::layout::DetectConfig::default());
    let lines: Vec<&str> = binding(request, "slideTranscript")
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let scale = |v: f64| (v * 1000.0).round() as i64;
    Ok(Value::Array(
        boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                json!({
                    "box_2d": [scale(b.x0), scale(b.y0), scale(b.x1), scale(b.y1)],
                    "relavant_transcript": lines.get(i).copied().unwrap_or("")
                })
            })
            .collect(),
    ))
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

fn clarify(request: &RenderedRequest<'_>) -> String {
    let suffix = request.request.prompt_suffix.as_deref().unwrap_or("");
    if let Some(rest) = suffix.split("interested in: ").nth(1) {
        let interests: Vec<&str> = rest
            .lines()
            .next()
            .unwrap_or("")
            .trim_end_matches('.')
            .split(", ")
            .filter(|s| !s.is_empty())
            .collect();
        if interests.iter().any(|i| i.eq_ignore_ascii_case("football")) {
            return "Picture the atom as a football stadium. The nucleus is the ball on the centre spot, and the electrons are fans in the far stands. Almost all the mass sits in that tiny ball while the stadium is mostly empty space.".into();
        }
        if let Some(first) = interests.first() {
            return format!(
                "Think of it in terms of {first}. The core idea is the part everything else organises around, just like the centre of a game of {first}. The surrounding details follow from that centre."
            );
        }
    }
    if suffix.contains("analogy") {
        return "Imagine a busy city. The central idea is the downtown where everything important happens, and the other details are the suburbs that depend on it.".into();
    }
    if suffix.contains("step by step") {
        return "Step one, find the main quantity on the slide. Step two, see how the highlighted rule acts on it. Step three, check the result against the example below.".into();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(request));
    CLARIFY_ANSWERS[rng.gen_range(0..CLARIFY_ANSWERS.len())].to_owned()
}

fn visual_keywords(
    labels: &RwLock<HashMap<u64, String>>,
    request: &RenderedRequest<'_>,
) -> Result<Value, TransportError> {
    let img = image_at(request, 0)?;
    if imaging::is_uniform(&img, 8) {
        return Ok(json!({ "keywords": "" }));
    }
    let hash = imaging::average_hash(&img);
    if let Some(k) = labels.read().expect("label lock").get(&hash) {
        return Ok(json!({ "keywords": k }));
    }
    Ok(json!({ "keywords": KEYWORDS[(hash % KEYWORDS.len() as u64) as usize] }))
}

/// Story of roughly `minutes * 150` words.
pub fn break_story(minutes: f64, interests: &str) -> String {
    let target = (minutes * 150.0).round() as usize;
    let mut words = 0;
    let mut out = Vec::new();
    let interests = interests.trim();
    if !interests.is_empty() {
        let opener =
            format!("Since you enjoy {interests}, here is a story that borrows a little from it.");
        words += word_count(&opener);
        out.push(opener);
    }
    let mut i = 0;
    while words < target {
        let s = STORY_SENTENCES[i % STORY_SENTENCES.len()];
        words += word_count(s);
        out.push(s.to_owned());
        i += 1;
    }
    out.join(" ")
}

impl TextProvider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn generate(&self, request: &RenderedRequest<'_>) -> Result<String, TransportError> {
        let text = match request.request.template_id {
            TemplateId::SameSlide => same_slide(request)?.to_string(),
            TemplateId::SlideExtract => slide_extract(request)?.to_string(),
            TemplateId::QuizGen => quiz_gen(request).to_string(),
            TemplateId::HighlightGen => highlight_gen(request)?.to_string(),
            TemplateId::VisualKeywords => visual_keywords(&self.labels, request)?.to_string(),
            TemplateId::Clarify => clarify(request),
            TemplateId::BreakStory => {
                let minutes = binding(request, "breakDuration")
                    .trim()
                    .parse()
                    .unwrap_or(1.0);
                break_story(minutes, binding(request, "userInterests"))
            }
        };
        Ok(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Attachment, Gateway, ProviderRequest};

    fn png(img: image::RgbaImage) -> Attachment {
        Attachment::Png(imaging::encode_png(&image::DynamicImage::ImageRgba8(img)).unwrap())
    }

    #[test]
    fn identical_frames_are_same_slide() {
        let mut img = imaging::blank(64, 36, [255, 255, 255, 255]);
        imaging::fill_rect(
            &mut img,
            &crate::geometry::Rect::new(0.1, 0.1, 0.6, 0.3),
            [0, 0, 0, 255],
        );
        let req = ProviderRequest::new(TemplateId::SameSlide)
            .attach(png(img.clone()))
            .attach(png(img));
        let v = Gateway::mock().complete(&req).unwrap().parsed.unwrap();
        assert_eq!(v["isSameSlide"], true);
        assert_eq!(v["confidence"], 1.0);
    }

    #[test]
    fn quiz_level_five_single_question() {
        let req = ProviderRequest::new(TemplateId::QuizGen)
            .bind("questionsPerSection", "1")
            .bind("title", "Quarks and Gluons")
            .bind("mainConcepts", "Quarks, Gluons")
            .bind("keyPoints", "x")
            .bind("transcript", "t")
            .bind("difficulty", "5")
            .bind("questionTypes", "multiple-choice, true-false, fill-blank");
        let v = Gateway::mock().complete(&req).unwrap().parsed.unwrap();
        let qs = v["questions"].as_array().unwrap();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0]["difficulty"], 5);
    }

    #[test]
    fn story_lengths_track_minutes() {
        for m in [1.0, 3.0, 5.0] {
            let n = word_count(&break_story(m, "football"));
            let target = m * 150.0;
            assert!((n as f64 - target).abs() <= 0.2 * target, "{m}: {n}");
        }
    }

    #[test]
    fn identical_requests_identical_text() {
        let req = ProviderRequest::new(TemplateId::Clarify)
            .user("Please explain this.")
            .bind("summaryText", "s");
        let a = Gateway::mock().complete(&req).unwrap().raw_text;
        let b = Gateway::mock().complete(&req).unwrap().raw_text;
        assert_eq!(a, b);
    }
}
