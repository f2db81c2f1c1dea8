//! Turns a lecture video and its transcript into a lecture bundle.
//!
//! Stages: frame sampling, segmentation into same-slide sections,
//! transcript partitioning, and per section slide extraction, quiz bank
//! and highlight generation; finally example ingest and the bundle write.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::content::{
    self, validate_quiz_item, BoxReference, ContentError, DifficultyBank, ExampleAsset,
    HighlightEntry, LectureBundle, QuizType, Section, TranscriptSegment, TIME_EPS,
};
use crate::gateway::{Attachment, Gateway, GatewayError, ProviderRequest, TemplateId};
use crate::geometry::Rect;
use crate::imaging;
use crate::par::{self, Execution};
use crate::transcript::{self, TranscriptError};
use crate::video::{self, FrameSample, VideoError, VideoSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    FrameSampling,
    Segmentation,
    TranscriptIngest,
    SlideExtract,
    QuizGen,
    HighlightGen,
    ExampleIngest,
    Write,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::FrameSampling => "frame-sampling",
            Stage::Segmentation => "segmentation",
            Stage::TranscriptIngest => "transcript-ingest",
            Stage::SlideExtract => "slide-extract",
            Stage::QuizGen => "quiz-gen",
            Stage::HighlightGen => "highlight-gen",
            Stage::ExampleIngest => "example-ingest",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum StageFailure {
    #[error(transparent)]
    Video(#[from] VideoError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    QuizBank(#[from] QuizBankError),
    #[error(transparent)]
    Content(#[from] ContentError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
#[error("stage {stage}: {failure}")]
pub struct PipelineError {
    pub stage: Stage,
    pub failure: StageFailure,
}

fn at<E: Into<StageFailure>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError {
        stage,
        failure: e.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub interval_sec: f64,
    /// Hash distances above this are escalated to the same-slide prompt.
    pub hash_threshold: u32,
    pub min_section_sec: f64,
    pub questions_per_section: usize,
    pub question_types: Vec<QuizType>,
    pub box_reference: BoxReference,
    /// Token overlap at which a highlight's transcript matches a segment.
    pub match_threshold: f64,
    pub bundle_id: Option<String>,
    pub title: Option<String>,
    /// Fixed creation time; defaults to now.
    pub created_at: Option<DateTime<Utc>>,
    pub execution: Execution,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            interval_sec: 2.0,
            hash_threshold: 10,
            min_section_sec: 5.0,
            questions_per_section: 3,
            question_types: vec![
                QuizType::MultipleChoice,
                QuizType::TrueFalse,
                QuizType::FillBlank,
            ],
            box_reference: BoxReference::default(),
            match_threshold: 0.6,
            bundle_id: None,
            title: None,
            created_at: None,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeType {
    Annotation,
    HumanMotion,
    Cursor,
    NewSlide,
    Transition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentChange {
    #[serde(rename = "type")]
    pub kind: ChangeType,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SameSlideVerdict {
    pub is_same_slide: bool,
    pub confidence: f64,
    pub reason: String,
    pub content_change: ContentChange,
}

impl SameSlideVerdict {
    /// A `new_slide` change always counts as a different slide.
    pub fn same_slide(&self) -> bool {
        self.is_same_slide && self.content_change.kind != ChangeType::NewSlide
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SlideExtract {
    pub title: String,
    pub main_topics: Vec<String>,
    pub has_human_presence: bool,
    pub has_annotations: bool,
    pub content_fingerprint: String,
    pub description: String,
    #[serde(default)]
    pub key_points: Option<Vec<String>>,
    #[serde(default)]
    pub equations: Option<Vec<String>>,
    #[serde(default)]
    pub diagrams: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSpan {
    pub start_sec: f64,
    pub end_sec: f64,
    pub key_frame: FrameSample,
}

pub fn judge_same_slide(
    a: &Path,
    b: &Path,
    gateway: &Gateway,
) -> Result<SameSlideVerdict, GatewayError> {
    let req = ProviderRequest::new(TemplateId::SameSlide)
        .attach(Attachment::Path(a.to_owned()))
        .attach(Attachment::Path(b.to_owned()));
    gateway.complete_as(&req)
}

/// Splits the sampled timeline into same-slide sections. Cheap hash
/// comparison first; only pairs that differ by more than
/// `cfg.hash_threshold` bits are sent to the provider.
pub fn segment_sections(
    samples: &[FrameSample],
    gateway: &Gateway,
    cfg: &PipelineConfig,
) -> Result<Vec<SectionSpan>, GatewayError> {
    let Some(last) = samples.last() else {
        return Ok(Vec::new());
    };
    // Index of the first sample of each section.
    let mut starts = vec![0usize];
    for i in 1..samples.len() {
        let d = imaging::hamming(samples[i - 1].perceptual_hash, samples[i].perceptual_hash);
        if d <= cfg.hash_threshold {
            continue;
        }
        let verdict = judge_same_slide(&samples[i - 1].image_ref, &samples[i].image_ref, gateway)?;
        log::debug!(
            "frames at {}s/{}s: {:?}",
            samples[i - 1].timestamp_sec,
            samples[i].timestamp_sec,
            verdict
        );
        if !verdict.same_slide() {
            starts.push(i);
        }
    }
    let boundary = |i: usize| (samples[i - 1].timestamp_sec + samples[i].timestamp_sec) / 2.0;
    let mut spans: Vec<(f64, f64, usize)> = starts
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let start = if s == 0 { 0.0 } else { boundary(s) };
            let (end, key) = match starts.get(k + 1) {
                Some(&next) => (boundary(next), next - 1),
                None => (last.timestamp_sec, samples.len() - 1),
            };
            (start, end, key)
        })
        .collect();

    // Fold short sections into a neighbour until all meet the floor.
    while spans.len() > 1 {
        let Some(i) = spans
            .iter()
            .position(|(s, e, _)| e - s < cfg.min_section_sec - TIME_EPS)
        else {
            break;
        };
        if i == 0 {
            let (s, _, _) = spans.remove(0);
            spans[0].0 = s;
        } else {
            let (_, e, key) = spans.remove(i);
            spans[i - 1].1 = e;
            spans[i - 1].2 = key;
        }
    }
    Ok(spans
        .into_iter()
        .map(|(start_sec, end_sec, key)| SectionSpan {
            start_sec,
            end_sec,
            key_frame: samples[key].clone(),
        })
        .collect())
}

pub fn extract_slide(key_frame: &Path, gateway: &Gateway) -> Result<SlideExtract, GatewayError> {
    let req = ProviderRequest::new(TemplateId::SlideExtract)
        .attach(Attachment::Path(key_frame.to_owned()));
    gateway.complete_as(&req)
}

/// Assigns each segment to the span containing its midpoint and clips it
/// to that span. Segments whose midpoint lies past the last span are
/// dropped.
pub fn partition_transcript(
    segments: &[TranscriptSegment],
    spans: &[(f64, f64)],
) -> Vec<Vec<TranscriptSegment>> {
    let mut out = vec![Vec::new(); spans.len()];
    let last = spans.len().saturating_sub(1);
    for seg in segments {
        let mid = seg.midpoint();
        let idx = spans.iter().enumerate().position(|(i, (s, e))| {
            mid >= *s - TIME_EPS && (mid < *e || (i == last && mid <= *e + TIME_EPS))
        });
        match idx {
            Some(i) => {
                let (s, e) = spans[i];
                out[i].push(TranscriptSegment {
                    start_sec: seg.start_sec.clamp(s, e),
                    end_sec: seg.end_sec.clamp(s, e),
                    text: seg.text.clone(),
                });
            }
            None => log::warn!(
                "transcript segment at {}s lies outside the video; dropped",
                seg.start_sec
            ),
        }
    }
    for v in &mut out {
        v.sort_by(|a, b| a.start_sec.total_cmp(&b.start_sec));
    }
    out
}

#[derive(Debug, Error)]
#[error("quiz bank failed at level {level}: {source}")]
pub struct QuizBankError {
    pub level: u8,
    /// Levels completed before the failure.
    pub partial: DifficultyBank,
    pub source: GatewayError,
}

fn join(items: &[String]) -> String {
    items.join(", ")
}

/// Quiz prompt bindings for one section at one level.
pub fn quiz_request(
    section: &Section,
    level: u8,
    questions: usize,
    types: &[QuizType],
) -> ProviderRequest {
    let mut req = ProviderRequest::new(TemplateId::QuizGen)
        .bind("questionsPerSection", questions.to_string())
        .bind("title", section.title.clone())
        .bind("mainConcepts", join(&section.main_concepts))
        .bind("keyPoints", join(&section.key_points))
        .bind("transcript", section.transcript_text())
        .bind("difficulty", level.to_string())
        .bind(
            "questionTypes",
            types
                .iter()
                .map(|t| t.as_str())
                .collect::<Vec<_>>()
                .join(", "),
        );
    if let Some(eq) = &section.equations {
        req = req.bind("equationsLine", format!("Equations: {}", join(eq)));
    }
    if let Some(d) = &section.diagrams {
        req = req.bind("diagramsLine", format!("Diagrams: {}", join(d)));
    }
    req
}

/// Fills all five levels. Items that fail validation are dropped; each
/// kept item is stamped with the level it was generated for.
pub fn generate_quiz_bank(
    section: &Section,
    gateway: &Gateway,
    questions_per_section: usize,
    types: &[QuizType],
) -> Result<DifficultyBank, QuizBankError> {
    let mut bank = DifficultyBank::default();
    for level in 1..=5u8 {
        if questions_per_section == 0 {
            bank.0.insert(level, Vec::new());
            continue;
        }
        let req = quiz_request(section, level, questions_per_section, types);
        let value: Value = match gateway.complete_as(&req) {
            Ok(v) => v,
            Err(source) => {
                return Err(QuizBankError {
                    level,
                    partial: bank,
                    source,
                })
            }
        };
        let items = value["questions"]
            .as_array()
            .map(|qs| {
                qs.iter()
                    .filter_map(|q| match validate_quiz_item(q) {
                        Ok(mut item) => {
                            item.difficulty = level;
                            Some(item)
                        }
                        Err(e) => {
                            log::warn!(
                                "section {} level {level}: dropping quiz item: {e}",
                                section.id
                            );
                            None
                        }
                    })
                    .take(questions_per_section)
                    .collect()
            })
            .unwrap_or_default();
        bank.0.insert(level, items);
    }
    Ok(bank)
}

fn tokens(s: &str) -> HashSet<String> {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Overlap coefficient of the two token sets: shared tokens over the
/// smaller set.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let (ta, tb) = (tokens(a), tokens(b));
    let min = ta.len().min(tb.len());
    if min == 0 {
        return 0.0;
    }
    ta.intersection(&tb).count() as f64 / min as f64
}

/// Time span of the segments a highlight's transcript refers to.
pub fn match_transcript(
    relevant: &str,
    segments: &[TranscriptSegment],
    threshold: f64,
) -> Option<(f64, f64)> {
    if relevant.trim().is_empty() {
        return None;
    }
    segments
        .iter()
        .filter(|s| token_overlap(relevant, &s.text) >= threshold)
        .fold(None, |acc, s| match acc {
            None => Some((s.start_sec, s.end_sec)),
            Some((a, b)) => Some((f64::min(a, s.start_sec), f64::max(b, s.end_sec))),
        })
}

/// Maps a provider box in reference units onto the unit square.
pub fn normalize_box(raw: [f64; 4], reference: BoxReference) -> Option<Rect> {
    let (w, h) = (reference.width as f64, reference.height as f64);
    let xs = [(raw[0] / w).clamp(0.0, 1.0), (raw[2] / w).clamp(0.0, 1.0)];
    let ys = [(raw[1] / h).clamp(0.0, 1.0), (raw[3] / h).clamp(0.0, 1.0)];
    let r = Rect::new(
        xs[0].min(xs[1]),
        ys[0].min(ys[1]),
        xs[0].max(xs[1]),
        ys[0].max(ys[1]),
    );
    r.is_proper().then_some(r)
}

#[derive(Debug, Deserialize)]
struct RawHighlight {
    box_2d: [f64; 4],
    #[serde(rename = "relavant_transcript", alias = "relevant_transcript", default)]
    relevant: String,
}

pub fn generate_highlights(
    key_frame: &Path,
    transcript: &[TranscriptSegment],
    gateway: &Gateway,
    reference: BoxReference,
    match_threshold: f64,
) -> Result<Vec<HighlightEntry>, GatewayError> {
    let slide_transcript = transcript
        .iter()
        .map(|s| s.text.as_str())
        .collect::<Vec<_>>()
        .join("\n");
    let req = ProviderRequest::new(TemplateId::HighlightGen)
        .bind("slideTranscript", slide_transcript)
        .attach(Attachment::Path(key_frame.to_owned()));
    let raw: Vec<RawHighlight> = gateway.complete_as(&req)?;
    Ok(raw
        .into_iter()
        .filter_map(|h| {
            let bbox = normalize_box(h.box_2d, reference)?;
            let relevant = h.relevant.trim().to_owned();
            let range = match_transcript(&relevant, transcript, match_threshold);
            Some(HighlightEntry {
                bbox,
                relevant_transcript: relevant,
                start_sec: range.map(|r| r.0),
                end_sec: range.map(|r| r.1),
            })
        })
        .collect())
}

/// An HTML example found in the examples directory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleFile {
    pub path: PathBuf,
    pub trigger_sec: f64,
    pub title: String,
}

/// Reads `<meta name="trigger-sec" content="..">` and `<title>` from every
/// `.html` file in `dir`, sorted by file name.
pub fn scan_examples(dir: &Path) -> Result<Vec<ExampleFile>, String> {
    let meta = Regex::new(
        r#"(?is)<meta\s+name\s*=\s*["']trigger-sec["']\s+content\s*=\s*["']([^"']+)["']"#,
    )
    .expect("regex");
    let title_re = Regex::new(r"(?is)<title>(.*?)</title>").expect("regex");
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .is_some_and(|x| x.eq_ignore_ascii_case("html") || x.eq_ignore_ascii_case("htm"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|path| {
            let html =
                std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let trigger_sec: f64 = meta
                .captures(&html)
                .and_then(|c| c[1].trim().parse().ok())
                .ok_or_else(|| {
                    format!("{}: missing or bad trigger-sec meta tag", path.display())
                })?;
            let title = title_re
                .captures(&html)
                .map(|c| c[1].trim().to_owned())
                .filter(|t| !t.is_empty())
                .unwrap_or_else(|| {
                    path.file_stem()
                        .unwrap_or_default()
                        .to_string_lossy()
                        .into_owned()
                });
            Ok(ExampleFile {
                path,
                trigger_sec,
                title,
            })
        })
        .collect()
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    let out = out.trim_end_matches('-').to_owned();
    if out.is_empty() {
        "lecture".into()
    } else {
        out
    }
}

pub fn section_id(index: usize) -> String {
    format!("s{:03}", index + 1)
}

pub struct PipelineInputs<'a> {
    pub video: &'a Path,
    pub transcript: &'a Path,
    pub examples: Option<&'a Path>,
    pub out_dir: &'a Path,
}

/// Runs every stage and writes the bundle to `inputs.out_dir`.
pub fn build_bundle(
    inputs: &PipelineInputs<'_>,
    gateway: &Gateway,
    cfg: &PipelineConfig,
) -> Result<LectureBundle, PipelineError> {
    let segments = transcript::load(inputs.transcript).map_err(at(Stage::TranscriptIngest))?;
    let source = video::open_video(inputs.video).map_err(at(Stage::FrameSampling))?;
    build_bundle_from(source.as_ref(), &segments, inputs, gateway, cfg)
}

/// [`build_bundle`] with the video and transcript already loaded.
pub fn build_bundle_from(
    source: &dyn VideoSource,
    segments: &[TranscriptSegment],
    inputs: &PipelineInputs<'_>,
    gateway: &Gateway,
    cfg: &PipelineConfig,
) -> Result<LectureBundle, PipelineError> {
    let out = inputs.out_dir;
    let frames_dir = out.join(".frames");
    let samples = video::sample_frames(source, cfg.interval_sec, &frames_dir, cfg.execution)
        .map_err(at(Stage::FrameSampling))?;
    log::info!("sampled {} frames", samples.len());

    let spans = segment_sections(&samples, gateway, cfg).map_err(at(Stage::Segmentation))?;
    log::info!("segmented into {} sections", spans.len());

    let ranges: Vec<(f64, f64)> = spans.iter().map(|s| (s.start_sec, s.end_sec)).collect();
    let per_section = partition_transcript(segments, &ranges);

    let work: Vec<(usize, &SectionSpan, &Vec<TranscriptSegment>)> = spans
        .iter()
        .zip(&per_section)
        .enumerate()
        .map(|(i, (s, t))| (i, s, t))
        .collect();
    let sections = par::try_map(cfg.execution, &work, |&(i, span, transcript)| {
        build_section(i, span, transcript, out, gateway, cfg)
    })?;

    let duration_sec = samples.last().map_or(0.0, |s| s.timestamp_sec);
    let stem = inputs
        .video
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned();
    let mut bundle = LectureBundle {
        id: cfg.bundle_id.clone().unwrap_or_else(|| slug(&stem)),
        title: cfg.title.clone().unwrap_or(stem),
        video_ref: inputs.video.to_string_lossy().into_owned(),
        duration_sec,
        summary: lecture_summary(&sections),
        sections,
        examples: Vec::new(),
        created_at: cfg.created_at.unwrap_or_else(Utc::now),
    };

    if let Some(dir) = inputs.examples {
        bundle.examples = ingest_examples(dir, &bundle, out).map_err(|e| PipelineError {
            stage: Stage::ExampleIngest,
            failure: StageFailure::Other(e),
        })?;
    }

    content::save_bundle(&bundle, out).map_err(at(Stage::Write))?;
    let _ = std::fs::remove_dir_all(&frames_dir);
    Ok(bundle)
}

fn build_section(
    index: usize,
    span: &SectionSpan,
    transcript: &[TranscriptSegment],
    out: &Path,
    gateway: &Gateway,
    cfg: &PipelineConfig,
) -> Result<Section, PipelineError> {
    let key = &span.key_frame.image_ref;
    let extract = extract_slide(key, gateway).map_err(at(Stage::SlideExtract))?;
    let dir = content::section_dir(index);
    let slide_image_ref = format!("{dir}/slide.png");
    let slide_path = out.join(&slide_image_ref);
    std::fs::create_dir_all(out.join(&dir))
        .and_then(|_| std::fs::copy(key, &slide_path))
        .map_err(|e| PipelineError {
            stage: Stage::Write,
            failure: StageFailure::Content(ContentError::io(&slide_path, e)),
        })?;

    let key_points = extract
        .key_points
        .clone()
        .unwrap_or_else(|| vec![extract.description.clone()]);
    let mut section = Section {
        id: section_id(index),
        start_sec: span.start_sec,
        end_sec: span.end_sec,
        slide_image_ref,
        title: extract.title.clone(),
        main_concepts: extract.main_topics.clone(),
        key_points,
        equations: extract.equations.clone(),
        diagrams: extract.diagrams.clone(),
        content_fingerprint: extract.content_fingerprint.clone(),
        description: extract.description.clone(),
        box_reference: cfg.box_reference,
        transcript: transcript.to_vec(),
        quizzes: DifficultyBank::default(),
        highlights: Vec::new(),
    };
    section.quizzes = generate_quiz_bank(
        &section,
        gateway,
        cfg.questions_per_section,
        &cfg.question_types,
    )
    .map_err(at(Stage::QuizGen))?;
    section.highlights = generate_highlights(
        key,
        transcript,
        gateway,
        cfg.box_reference,
        cfg.match_threshold,
    )
    .map_err(at(Stage::HighlightGen))?;
    Ok(section)
}

/// One line per section: title and description.
pub fn lecture_summary(sections: &[Section]) -> String {
    sections
        .iter()
        .map(|s| format!("{}: {}", s.title, s.description))
        .collect::<Vec<_>>()
        .join("\n")
}

fn ingest_examples(
    dir: &Path,
    bundle: &LectureBundle,
    out: &Path,
) -> Result<Vec<ExampleAsset>, String> {
    let files = scan_examples(dir)?;
    let dest = out.join("examples");
    let mut assets = Vec::with_capacity(files.len());
    let mut seen = BTreeMap::new();
    for f in files {
        let Some(idx) = bundle.section_at(f.trigger_sec) else {
            return Err(format!(
                "{}: trigger {}s is outside the video",
                f.path.display(),
                f.trigger_sec
            ));
        };
        let name = f
            .path
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .into_owned();
        if seen.insert(name.clone(), ()).is_some() {
            return Err(format!("duplicate example file name {name}"));
        }
        std::fs::create_dir_all(&dest).map_err(|e| e.to_string())?;
        std::fs::copy(&f.path, dest.join(&name))
            .map_err(|e| format!("{}: {e}", f.path.display()))?;
        assets.push(ExampleAsset {
            section_id: bundle.sections[idx].id.clone(),
            trigger_sec: f.trigger_sec,
            html_ref: format!("examples/{name}"),
            title: f.title,
        });
    }
    assets.sort_by(|a, b| a.trigger_sec.total_cmp(&b.trigger_sec));
    Ok(assets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(a: f64, b: f64, t: &str) -> TranscriptSegment {
        TranscriptSegment {
            start_sec: a,
            end_sec: b,
            text: t.into(),
        }
    }

    #[test]
    fn normalizes_reference_box() {
        let r = normalize_box([100.0, 200.0, 300.0, 400.0], BoxReference::default()).unwrap();
        assert_eq!(r, Rect::new(0.1, 0.2, 0.3, 0.4));
        assert_eq!(
            normalize_box([5.0, 5.0, 5.0, 9.0], BoxReference::default()),
            None
        );
        let clamped = normalize_box([-50.0, 0.0, 1500.0, 10.0], BoxReference::default()).unwrap();
        assert!(clamped.within_unit());
    }

    #[test]
    fn transcript_matching() {
        let segs = vec![
            seg(0.0, 4.0, "Gluons carry the strong force"),
            seg(4.0, 9.0, "Quarks come in six flavours"),
        ];
        assert_eq!(match_transcript("", &segs, 0.6), None);
        assert_eq!(
            match_transcript("Gluons carry the strong force", &segs, 0.6),
            Some((0.0, 4.0))
        );
        assert_eq!(
            match_transcript(
                "Gluons carry the strong force. Quarks come in six flavours",
                &segs,
                0.6
            ),
            Some((0.0, 9.0))
        );
        assert_eq!(
            match_transcript("entirely unrelated words here", &segs, 0.6),
            None
        );
    }

    #[test]
    fn partition_by_midpoint() {
        let segs = vec![
            seg(8.0, 11.0, "a"),
            seg(9.0, 14.0, "b"),
            seg(30.0, 40.0, "late"),
        ];
        let parts = partition_transcript(&segs, &[(0.0, 10.0), (10.0, 20.0)]);
        assert_eq!(parts[0], vec![seg(8.0, 10.0, "a")]);
        assert_eq!(parts[1], vec![seg(10.0, 14.0, "b")]);
    }

    #[test]
    fn stage_names() {
        assert_eq!(Stage::TranscriptIngest.to_string(), "transcript-ingest");
        assert_eq!(serde_json::to_value(Stage::QuizGen).unwrap(), "quiz-gen");
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("Intro to Physics (2024)"), "intro-to-physics-2024");
        assert_eq!(slug("光学"), "lecture");
    }
}
