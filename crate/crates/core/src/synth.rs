//! Synthetic slides and lectures for tests, benchmarks and demos.

use std::path::{Path, PathBuf};

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use image::{DynamicImage, RgbaImage};
use rand::Rng;

use crate::content::{
    save_bundle, section_dir, BoxReference, ContentError, DifficultyBank, ExampleAsset,
    HighlightEntry, LectureBundle, QuizItem, QuizType, Section, TranscriptSegment,
};
use crate::geometry::Rect;
use crate::imaging::{blank, fill_rect};
use crate::transcript;
use crate::video::{self, VideoError};

pub const SLIDE_W: u32 = 320;
pub const SLIDE_H: u32 = 180;

const PAPER: [u8; 4] = [255, 255, 255, 255];
const INK: [u8; 4] = [20, 20, 20, 255];

/// Fills `rect` with text-like horizontal bars; bars are close enough
/// that the detector merges them into one block.
pub fn draw_text_block(img: &mut RgbaImage, rect: &Rect) {
    let (h, w) = (img.height() as f64, img.width() as f64);
    let (x0, x1) = ((rect.x0 * w).round(), (rect.x1 * w).round());
    let mut y = (rect.y0 * h).round();
    let y_end = (rect.y1 * h).round();
    while y < y_end {
        let bar = Rect::new(x0 / w, y / h, x1 / w, (y + 3.0).min(y_end) / h);
        fill_rect(img, &bar, INK);
        y += 5.0;
    }
}

pub fn render_slide(blocks: &[Rect]) -> RgbaImage {
    let mut img = blank(SLIDE_W, SLIDE_H, PAPER);
    for b in blocks {
        draw_text_block(&mut img, b);
    }
    img
}

/// A slide with up to `max_blocks` random text blocks; returns the drawn
/// block rectangles as well.
pub fn random_slide(rng: &mut impl Rng, max_blocks: usize) -> (RgbaImage, Vec<Rect>) {
    let n = rng.gen_range(0..=max_blocks);
    let blocks: Vec<Rect> = (0..n)
        .map(|_| {
            let w = rng.gen_range(0.05..0.6);
            let h = rng.gen_range(0.03..0.4);
            let x = rng.gen_range(0.0..1.0 - w);
            let y = rng.gen_range(0.0..1.0 - h);
            Rect::new(x, y, x + w, y + h)
        })
        .collect();
    (render_slide(&blocks), blocks)
}

/// Layouts of the three demo slides: all distinct by far more than the
/// same-slide hash threshold.
pub fn demo_slide_layouts() -> [Vec<Rect>; 3] {
    [
        // Title and a left text column.
        vec![
            Rect::new(0.05, 0.05, 0.95, 0.15),
            Rect::new(0.05, 0.25, 0.45, 0.95),
        ],
        // Title and a right text column.
        vec![
            Rect::new(0.05, 0.05, 0.95, 0.15),
            Rect::new(0.55, 0.25, 0.95, 0.95),
        ],
        // Title and a wide bottom band.
        vec![
            Rect::new(0.05, 0.05, 0.95, 0.15),
            Rect::new(0.05, 0.6, 0.95, 0.95),
        ],
    ]
}

/// Highlighter ink the instructor adds to slide 0 part-way through; enough
/// to trip the hash pre-filter, but the frame still shows the same slide.
pub fn demo_annotation() -> Rect {
    Rect::new(0.5, 0.25, 0.95, 0.6)
}

pub const DEMO_SLIDE_SEC: f64 = 20.0;

pub const DEMO_TRANSCRIPT: &[(f64, f64, &str)] = &[
    (
        0.0,
        6.0,
        "Welcome, today we look at the structure of the atom.",
    ),
    (
        6.0,
        13.0,
        "The nucleus holds protons and neutrons, together called nucleons.",
    ),
    (
        13.0,
        19.5,
        "Electrons occupy orbitals far from the nucleus.",
    ),
    (20.5, 27.0, "Inside each nucleon we find quarks."),
    (
        27.0,
        34.0,
        "Gluons carry the strong force that binds the quarks together.",
    ),
    (34.0, 39.5, "This force gets stronger as quarks move apart."),
    (
        40.5,
        48.0,
        "A perceptron computes a weighted sum of its inputs.",
    ),
    (
        48.0,
        55.0,
        "The step function turns that sum into a decision.",
    ),
    (
        55.0,
        59.5,
        "Training adjusts the weights after every mistake.",
    ),
];

pub const DEMO_EXAMPLE_HTML: &str = r#"<!doctype html>
<html>
<head>
<meta charset="utf-8">
<meta name="trigger-sec" content="30">
<title>Strong force explorer</title>
</head>
<body>
<p>Drag the quarks apart and watch the binding energy grow.</p>
<input type="range" min="0" max="10" value="1">
</body>
</html>
"#;

#[derive(Debug, Clone)]
pub struct SyntheticLecture {
    pub video: PathBuf,
    pub transcript: PathBuf,
    pub examples_dir: PathBuf,
    pub duration_sec: f64,
    /// Ground-truth slide change times.
    pub boundaries: Vec<f64>,
}

/// Writes a 60 s three-slide lecture (GIF video, SRT transcript, one
/// interactive example triggering at 30 s) into `dir`. Slide 0 gains an
/// annotation at 10 s.
pub fn write_demo_lecture(dir: &Path) -> Result<SyntheticLecture, VideoError> {
    std::fs::create_dir_all(dir)?;
    let [a, b, c] = demo_slide_layouts();
    let plain = render_slide(&a);
    let mut annotated = plain.clone();
    fill_rect(&mut annotated, &demo_annotation(), [200, 30, 30, 255]);
    let half = DEMO_SLIDE_SEC / 2.0;
    let frames = vec![
        (plain, half),
        (annotated, half),
        (render_slide(&b), DEMO_SLIDE_SEC),
        (render_slide(&c), DEMO_SLIDE_SEC),
    ];
    let video = dir.join("lecture.gif");
    video::write_gif(&video, &frames)?;

    let segments: Vec<TranscriptSegment> = DEMO_TRANSCRIPT
        .iter()
        .map(|&(s, e, t)| TranscriptSegment {
            start_sec: s,
            end_sec: e,
            text: t.to_owned(),
        })
        .collect();
    let transcript_path = dir.join("lecture.srt");
    std::fs::write(&transcript_path, transcript::to_srt(&segments))?;

    let examples_dir = dir.join("examples");
    std::fs::create_dir_all(&examples_dir)?;
    std::fs::write(examples_dir.join("strong-force.html"), DEMO_EXAMPLE_HTML)?;

    Ok(SyntheticLecture {
        video,
        transcript: transcript_path,
        examples_dir,
        duration_sec: 3.0 * DEMO_SLIDE_SEC,
        boundaries: vec![DEMO_SLIDE_SEC, 2.0 * DEMO_SLIDE_SEC],
    })
}

fn quiz(kind: QuizType, question: &str, options: &[&str], answer: &str, level: u8) -> QuizItem {
    QuizItem {
        kind,
        question: question.to_owned(),
        options: options.iter().map(|o| (*o).to_owned()).collect(),
        correct_answer: answer.to_owned(),
        explanation: format!("The answer is {answer}."),
        difficulty: level,
        accepted_answers: Vec::new(),
    }
}

fn demo_quizzes(section: usize) -> DifficultyBank {
    let mut bank = BTreeMap::new();
    // The last section only has easy items so level fallback can be seen.
    let levels: &[u8] = if section == 2 {
        &[1, 2]
    } else {
        &[1, 2, 3, 4, 5]
    };
    for &l in levels {
        let items = vec![
            quiz(
                QuizType::MultipleChoice,
                &format!(
                    "Section {} level {l}: how many quarks are in a proton?",
                    section + 1
                ),
                &["one", "two", "three", "four"],
                "three",
                l,
            ),
            quiz(
                QuizType::TrueFalse,
                &format!("Level {l}: gluons carry the strong force."),
                &[],
                "true",
                l,
            ),
            QuizItem {
                accepted_answers: vec!["nucleon".into()],
                ..quiz(
                    QuizType::FillBlank,
                    &format!("Level {l}: protons and neutrons are called ____."),
                    &[],
                    "nucleons",
                    l,
                )
            },
        ];
        bank.insert(l, items);
    }
    DifficultyBank(bank)
}

/// The demo lecture as an already-built bundle with its slide images, for
/// tests that need a session without running preprocessing.
pub fn demo_bundle() -> (LectureBundle, Vec<DynamicImage>) {
    let layouts = demo_slide_layouts();
    let titles = [
        "Structure of the atom",
        "Quarks and gluons",
        "The perceptron",
    ];
    let mut sections = Vec::new();
    let mut slides = Vec::new();
    for (i, layout) in layouts.iter().enumerate() {
        let start = i as f64 * DEMO_SLIDE_SEC;
        let end = start + DEMO_SLIDE_SEC;
        let transcript: Vec<TranscriptSegment> = DEMO_TRANSCRIPT
            .iter()
            .filter(|(s, e, _)| (s + e) / 2.0 >= start && (s + e) / 2.0 < end)
            .map(|&(s, e, t)| TranscriptSegment {
                start_sec: s,
                end_sec: e,
                text: t.to_owned(),
            })
            .collect();
        let highlights = layout[1..]
            .iter()
            .zip(transcript.iter().skip(1))
            .map(|(b, seg)| HighlightEntry {
                bbox: *b,
                relevant_transcript: seg.text.clone(),
                start_sec: Some(seg.start_sec),
                end_sec: Some(seg.end_sec),
            })
            .collect();
        let img = render_slide(layout);
        sections.push(Section {
            id: format!("s{:03}", i + 1),
            start_sec: start,
            end_sec: end,
            slide_image_ref: format!("{}/slide.png", section_dir(i)),
            title: titles[i].to_owned(),
            main_concepts: vec![titles[i].to_lowercase()],
            key_points: transcript.iter().map(|s| s.text.clone()).collect(),
            equations: None,
            diagrams: None,
            content_fingerprint: format!(
                "{:016x}",
                crate::imaging::average_hash(&DynamicImage::ImageRgba8(img.clone()))
            ),
            description: titles[i].to_owned(),
            box_reference: BoxReference::default(),
            transcript,
            quizzes: demo_quizzes(i),
            highlights,
        });
        slides.push(DynamicImage::ImageRgba8(img));
    }
    let bundle = LectureBundle {
        id: "demo-lecture".into(),
        title: "Demo lecture".into(),
        video_ref: "lecture.gif".into(),
        duration_sec: 3.0 * DEMO_SLIDE_SEC,
        summary: titles.join("\n"),
        sections,
        examples: vec![ExampleAsset {
            section_id: "s002".into(),
            trigger_sec: 30.0,
            html_ref: "examples/strong-force.html".into(),
            title: "Strong force explorer".into(),
        }],
        created_at: Utc.timestamp_opt(0, 0).unwrap(),
    };
    (bundle, slides)
}

/// Writes [`demo_bundle`] as a loadable bundle directory, together with
/// the source video and transcript it was made from.
pub fn write_demo_bundle(dir: &Path) -> Result<LectureBundle, ContentError> {
    let (bundle, slides) = demo_bundle();
    write_demo_lecture(dir).map_err(|e| ContentError::violation("videoRef", e.to_string()))?;
    for (s, img) in bundle.sections.iter().zip(&slides) {
        let p = dir.join(&s.slide_image_ref);
        std::fs::create_dir_all(p.parent().expect("slide parent"))
            .map_err(|e| ContentError::io(&p, e))?;
        img.save(&p)
            .map_err(|e| ContentError::violation("slideImageRef", e.to_string()))?;
    }
    for ex in &bundle.examples {
        let p = dir.join(&ex.html_ref);
        std::fs::create_dir_all(p.parent().expect("example parent"))
            .map_err(|e| ContentError::io(&p, e))?;
        std::fs::write(&p, DEMO_EXAMPLE_HTML).map_err(|e| ContentError::io(&p, e))?;
    }
    save_bundle(&bundle, dir)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{average_hash, hamming};

    fn hash(img: &RgbaImage) -> u64 {
        average_hash(&DynamicImage::ImageRgba8(img.clone()))
    }

    #[test]
    fn demo_slides_are_far_apart() {
        let hs: Vec<u64> = demo_slide_layouts()
            .iter()
            .map(|l| hash(&render_slide(l)))
            .collect();
        for i in 0..3 {
            for j in i + 1..3 {
                assert!(
                    hamming(hs[i], hs[j]) > 20,
                    "slides {i},{j}: {}",
                    hamming(hs[i], hs[j])
                );
            }
        }
    }

    #[test]
    fn annotation_is_escalated_but_same_slide() {
        let [a, ..] = demo_slide_layouts();
        let plain = render_slide(&a);
        let mut ann = plain.clone();
        fill_rect(&mut ann, &demo_annotation(), [200, 30, 30, 255]);
        let d = hamming(hash(&plain), hash(&ann));
        assert!(d > 10 && d <= 20, "annotation distance {d}");
    }

    #[test]
    fn demo_bundle_is_valid() {
        let (b, slides) = demo_bundle();
        b.validate().unwrap();
        assert_eq!(slides.len(), 3);
        let gluon = &b.sections[1].highlights[0];
        assert_eq!((gluon.start_sec, gluon.end_sec), (Some(27.0), Some(34.0)));
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(
            write_demo_bundle(dir.path()).unwrap(),
            crate::content::load_bundle(dir.path()).unwrap()
        );
    }
}
