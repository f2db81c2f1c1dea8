use chrono::{TimeZone, Utc};
use lecturelens_core::content::{self, QuizType};
use lecturelens_core::gateway::Gateway;
use lecturelens_core::imaging;
use lecturelens_core::par::Execution;
use lecturelens_core::pipeline::{self, PipelineConfig, PipelineInputs, Stage};
use lecturelens_core::synth;
use lecturelens_core::video;

fn config() -> PipelineConfig {
    PipelineConfig {
        created_at: Some(Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap()),
        ..Default::default()
    }
}

#[test]
fn demo_lecture_builds_a_valid_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = synth::write_demo_lecture(&dir.path().join("in")).unwrap();
    let out = dir.path().join("bundle");
    let inputs = PipelineInputs {
        video: &lecture.video,
        transcript: &lecture.transcript,
        examples: Some(&lecture.examples_dir),
        out_dir: &out,
    };
    let bundle = pipeline::build_bundle(&inputs, &Gateway::mock(), &config()).unwrap();

    assert_eq!(bundle.sections.len(), 3);
    for (s, truth) in bundle.sections[1..].iter().zip(&lecture.boundaries) {
        assert!(
            (s.start_sec - truth).abs() <= 2.0,
            "boundary {} vs {truth}",
            s.start_sec
        );
    }
    assert_eq!(bundle.duration_sec, 60.0);
    for s in &bundle.sections {
        assert_eq!(s.quizzes.0.len(), 5);
        assert!(!s.transcript.is_empty());
        assert!(!s.highlights.is_empty());
    }
    // The highlight whose text is the gluon sentence activates over it.
    let gluon = bundle.sections[1]
        .highlights
        .iter()
        .find(|h| h.relevant_transcript.starts_with("Gluons"))
        .expect("gluon highlight");
    assert_eq!((gluon.start_sec, gluon.end_sec), (Some(27.0), Some(34.0)));

    assert_eq!(bundle.examples.len(), 1);
    assert_eq!(bundle.examples[0].trigger_sec, 30.0);
    assert_eq!(bundle.examples[0].section_id, bundle.sections[1].id);
    assert_eq!(bundle.examples[0].title, "Strong force explorer");

    let loaded = content::load_bundle(&out).unwrap();
    assert_eq!(loaded, bundle);
    assert!(!out.join(".frames").exists());
}

#[test]
fn key_frame_is_the_annotated_one() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = synth::write_demo_lecture(&dir.path().join("in")).unwrap();
    let out = dir.path().join("bundle");
    let inputs = PipelineInputs {
        video: &lecture.video,
        transcript: &lecture.transcript,
        examples: None,
        out_dir: &out,
    };
    let bundle = pipeline::build_bundle(&inputs, &Gateway::mock(), &config()).unwrap();
    let v = video::open_video(&lecture.video).unwrap();
    let annotated = imaging::average_hash(&v.frame_at(15.0).unwrap());
    let slide = imaging::open(&out.join(&bundle.sections[0].slide_image_ref)).unwrap();
    assert_eq!(imaging::average_hash(&slide), annotated);
    assert_eq!(
        bundle.sections[0].content_fingerprint,
        format!("{annotated:016x}")
    );
}

#[test]
fn idempotent_and_execution_independent() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = synth::write_demo_lecture(&dir.path().join("in")).unwrap();
    let run = |name: &str, exec: Execution| {
        let out = dir.path().join(name);
        let inputs = PipelineInputs {
            video: &lecture.video,
            transcript: &lecture.transcript,
            examples: Some(&lecture.examples_dir),
            out_dir: &out,
        };
        let cfg = PipelineConfig {
            execution: exec,
            ..config()
        };
        let b = pipeline::build_bundle(&inputs, &Gateway::mock(), &cfg).unwrap();
        (b, std::fs::read(out.join("manifest.json")).unwrap())
    };
    let (a, ma) = run("a", Execution::Parallel);
    let (b, mb) = run("b", Execution::Parallel);
    let (c, _) = run("c", Execution::Sequential);
    assert_eq!(a, b);
    assert_eq!(ma, mb);
    assert_eq!(a.sections, c.sections);
}

#[test]
fn missing_transcript_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = synth::write_demo_lecture(&dir.path().join("in")).unwrap();
    let missing = dir.path().join("nope.srt");
    let out = dir.path().join("bundle");
    let inputs = PipelineInputs {
        video: &lecture.video,
        transcript: &missing,
        examples: None,
        out_dir: &out,
    };
    let err = pipeline::build_bundle(&inputs, &Gateway::mock(), &config()).unwrap_err();
    assert_eq!(err.stage, Stage::TranscriptIngest);
    assert!(err.to_string().starts_with("stage transcript-ingest"));
}

#[test]
fn zero_questions_gives_empty_levels() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = synth::write_demo_lecture(&dir.path().join("in")).unwrap();
    let out = dir.path().join("bundle");
    let inputs = PipelineInputs {
        video: &lecture.video,
        transcript: &lecture.transcript,
        examples: None,
        out_dir: &out,
    };
    let cfg = PipelineConfig {
        questions_per_section: 0,
        question_types: vec![QuizType::FillBlank],
        ..config()
    };
    let bundle = pipeline::build_bundle(&inputs, &Gateway::mock(), &cfg).unwrap();
    for s in &bundle.sections {
        assert_eq!(
            s.quizzes.0.keys().copied().collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5]
        );
        assert!(s.quizzes.0.values().all(Vec::is_empty));
    }
}

#[test]
fn static_video_is_one_section_with_equal_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let gif = dir.path().join("still.gif");
    let [layout, ..] = synth::demo_slide_layouts();
    video::write_gif(&gif, &[(synth::render_slide(&layout), 10.0)]).unwrap();
    let v = video::open_video(&gif).unwrap();
    let samples =
        video::sample_frames(v.as_ref(), 2.0, &dir.path().join("f"), Execution::Parallel).unwrap();
    assert_eq!(samples.len(), 6);
    assert!(samples
        .windows(2)
        .all(|w| w[0].perceptual_hash == w[1].perceptual_hash));
    assert!(samples
        .windows(2)
        .all(|w| w[0].timestamp_sec < w[1].timestamp_sec));
    let spans =
        pipeline::segment_sections(&samples, &Gateway::mock(), &PipelineConfig::default()).unwrap();
    assert_eq!(spans.len(), 1);
    assert_eq!((spans[0].start_sec, spans[0].end_sec), (0.0, 10.0));
}
