//! The `lecturelens` binary end to end.

mod common;

use common::{bin, spawn_serve, Client};
use image::{Rgba, RgbaImage};
use lecturelens_core::content::load_bundle;
use lecturelens_core::synth::write_demo_lecture;
use serde_json::{json, Value};

#[test]
fn inspect_layout_on_a_blank_slide_reports_the_full_grid() {
    let dir = tempfile::tempdir().unwrap();
    let slide = dir.path().join("blank.png");
    RgbaImage::from_pixel(320, 180, Rgba([255, 255, 255, 255]))
        .save(&slide)
        .unwrap();
    let prefix = dir.path().join("report");
    let out = bin()
        .args([
            "inspect",
            "layout",
            "--slide",
            slide.to_str().unwrap(),
            "--anchor",
            "0.2,0.3",
            "--out",
        ])
        .arg(&prefix)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["boxes"], json!([]));
    assert_eq!(report["plan"]["region"]["cellCount"], 24 * 14);
    assert_eq!(
        report["plan"]["region"]["rect"],
        json!([0.0, 0.0, 1.0, 1.0])
    );
    assert_eq!(report["plan"]["placement"], "region");
    assert!(report["grid"]
        .as_array()
        .unwrap()
        .iter()
        .all(|row| !row.as_str().unwrap().contains('#')));
    let saved: Value =
        serde_json::from_slice(&std::fs::read(prefix.with_extension("json")).unwrap()).unwrap();
    assert_eq!(saved, report);
    let png = image::open(prefix.with_extension("png")).unwrap();
    assert_eq!((png.width(), png.height()), (320, 180));
}

#[test]
fn inspect_layout_avoids_the_avatar_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let slide = dir.path().join("blank.png");
    RgbaImage::from_pixel(320, 180, Rgba([255, 255, 255, 255]))
        .save(&slide)
        .unwrap();
    let out = bin()
        .args([
            "inspect",
            "layout",
            "--avatar",
            "--slide",
            slide.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["plan"]["region"]["cellCount"].as_u64().unwrap() < 24 * 14);
}

#[test]
fn preprocess_mock_builds_a_valid_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let lecture = write_demo_lecture(&dir.path().join("src")).unwrap();
    let out_dir = dir.path().join("bundle");
    let out = bin()
        .args(["preprocess", "--mock", "--video"])
        .arg(&lecture.video)
        .arg("--transcript")
        .arg(&lecture.transcript)
        .arg("--examples")
        .arg(&lecture.examples_dir)
        .arg("--out")
        .arg(&out_dir)
        .args(["--title", "Physics"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["sections"], 3);
    let bundle = load_bundle(&out_dir).unwrap();
    assert_eq!(bundle.title, "Physics");
    assert_eq!(bundle.sections.len(), 3);
    assert_eq!(bundle.examples.len(), 1);
}

#[test]
fn preprocess_reports_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "preprocess",
            "--mock",
            "--video",
            "nope.gif",
            "--transcript",
            "nope.srt",
            "--out",
        ])
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(
        bin().arg("frobnicate").output().unwrap().status.code(),
        Some(2)
    );
    assert_eq!(
        bin()
            .args(["serve", "--port", "notaport"])
            .output()
            .unwrap()
            .status
            .code(),
        Some(2)
    );
    let out = bin()
        .args(["inspect", "layout", "--slide", "x.png", "--anchor", "2,2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn serve_with_an_empty_bundle_dir_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn_serve(&["--mock"], &[("BUNDLE_DIR", dir.path().to_str().unwrap())]);
    let c = Client::new(&server.base);
    assert_eq!(c.get("/lectures"), (200, json!([])));
    assert_eq!(c.get("/health").1["provider"], "mock");
}

#[test]
fn serve_without_a_provider_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["serve", "--port", "0", "--bundle-dir"])
        .arg(dir.path())
        .env_remove("LLM_API_URL")
        .env_remove("LLM_MOCK")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn llm_mock_env_selects_the_mock_provider() {
    let dir = tempfile::tempdir().unwrap();
    let server = spawn_serve(
        &["--bundle-dir", dir.path().to_str().unwrap()],
        &[("LLM_MOCK", "1"), ("MEDIA_MOCK", "1")],
    );
    assert_eq!(
        Client::new(&server.base).get("/health").1["provider"],
        "mock"
    );
}

#[test]
fn demo_writes_a_servable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["demo", "--bundle", "--out"])
        .arg(dir.path().join("demo"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let server = spawn_serve(
        &["--mock", "--bundle-dir", dir.path().to_str().unwrap()],
        &[],
    );
    let (_, v) = Client::new(&server.base).get("/lectures");
    assert_eq!(v[0]["id"], "demo-lecture");
}
