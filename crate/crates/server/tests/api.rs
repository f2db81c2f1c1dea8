//! Contract tests against an in-process server with mock providers.

mod common;

use std::io::{BufRead, BufReader};
use std::sync::OnceLock;
use std::time::Duration;

use common::{mock_options, start_server, Client};
use lecturelens_core::synth::write_demo_bundle;
use serde_json::{json, Value};

const BUNDLE: &str = "demo-lecture";

/// One server for the whole file, serving the demo bundle.
fn server() -> &'static Client {
    static SERVER: OnceLock<(tempfile::TempDir, Client)> = OnceLock::new();
    &SERVER
        .get_or_init(|| {
            let dir = tempfile::tempdir().expect("tempdir");
            write_demo_bundle(&dir.path().join(BUNDLE)).expect("demo bundle");
            let base = start_server(mock_options(dir.path()));
            (dir, Client::new(base))
        })
        .1
}

#[test]
fn every_endpoint_answers() {
    let c = server();
    let covered = common::exercise_all_endpoints(c, BUNDLE).unwrap_or_else(|e| panic!("{e}"));
    let unique: std::collections::BTreeSet<_> = covered.iter().collect();
    assert_eq!((covered.len(), unique.len()), (26, 26), "{covered:?}");
}

#[test]
fn lectures_and_assets() {
    let c = server();
    let (st, v) = c.get("/lectures");
    assert_eq!(st, 200);
    assert_eq!(
        v,
        json!([{ "id": BUNDLE, "title": "Demo lecture", "durationSec": 60.0, "sectionCount": 3, "exampleCount": 1 }])
    );
    let (st, by_index, _) = c.get_bytes(&format!("/lectures/{BUNDLE}/sections/1/slide.png"));
    assert_eq!((st, by_index.as_str()), (200, "image/png"));
    let (_, _, a) = c.get_bytes(&format!("/lectures/{BUNDLE}/sections/1/slide.png"));
    let (_, _, b) = c.get_bytes(&format!("/lectures/{BUNDLE}/sections/s002/slide.png"));
    assert_eq!(a, b);
    assert_eq!(
        c.get(&format!("/lectures/{BUNDLE}/sections/9/slide.png")).0,
        404
    );
    assert_eq!(c.get("/lectures/nope/manifest").0, 404);
    assert_eq!(
        c.get(&format!("/lectures/{BUNDLE}/examples/other.html")).0,
        404
    );
    let (_, ct, gif) = c.get_bytes(&format!("/lectures/{BUNDLE}/video"));
    assert_eq!(ct, "image/gif");
    assert!(gif.starts_with(b"GIF8"));
}

#[test]
fn errors_carry_code_status_and_message() {
    let c = server();
    let (st, v) = c.get("/sessions/missing");
    assert_eq!(st, 404);
    assert_eq!(v["code"], "notFound");
    assert_eq!(v["httpStatus"], 404);
    assert!(v["message"].as_str().is_some_and(|m| !m.is_empty()));

    assert_eq!(c.post("/sessions", json!({ "bundleId": "nope" })).0, 404);
    assert_eq!(c.post_raw("/sessions", "{not json").0, 400);
    assert_eq!(
        c.post(
            "/sessions",
            json!({ "bundleId": BUNDLE, "avatarRect": [0.9, 0.9, 0.1, 0.1] })
        )
        .0,
        400
    );

    let sid = c.new_session(BUNDLE, &[]);
    let (st, v) = c.post(&format!("/sessions/{sid}/break"), json!({ "minutes": 2 }));
    assert_eq!((st, v["code"].as_str()), (400, Some("invalidArgument")));
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/difficulty"),
            json!({ "level": 0 })
        )
        .0,
        400
    );
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/difficulty"),
            json!({ "level": 6 })
        )
        .0,
        400
    );
    assert_eq!(
        c.post(&format!("/sessions/{sid}/position"), json!({ "tSec": 1e9 }))
            .0,
        400
    );
    assert_eq!(
        c.post(&format!("/sessions/{sid}/notes"), json!({ "text": "" }))
            .0,
        400
    );
    assert_eq!(
        c.post_empty(&format!("/sessions/{sid}/examples/7/open")).0,
        404
    );
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/replay"),
            json!({ "recordIndex": 0 })
        )
        .0,
        409
    );
    assert_eq!(
        c.post_empty(&format!("/sessions/{sid}/summary/open")).0,
        200
    );
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/replay"),
            json!({ "recordIndex": 0 })
        )
        .0,
        404
    );
    assert_eq!(
        c.post_empty(&format!("/sessions/{sid}/summary/close")).0,
        200
    );

    // Illegal transitions are conflicts and change nothing.
    let (st, v) = c.post(
        &format!("/sessions/{sid}/quiz/answer"),
        json!({ "answer": "three" }),
    );
    assert_eq!((st, v["code"].as_str()), (409, Some("illegalTransition")));
    assert_eq!(v["detail"]["mode"], "Playing");
    assert_eq!(
        c.post_empty(&format!("/sessions/{sid}/example/close")).0,
        409
    );
    assert_eq!(c.mode(&sid), "Playing");
}

#[test]
fn clarify_uses_the_default_question_and_streams_in_order() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    let before = c.get(&format!("/sessions/{sid}")).1["lastSeq"]
        .as_u64()
        .unwrap();
    let (st, v) = c.post_empty(&format!("/sessions/{sid}/clarify"));
    assert_eq!(st, 200, "{v}");
    assert!(c.wait_mode(&sid, "Playing"));

    let log = c.get(&format!("/sessions/{sid}")).1["log"].clone();
    assert_eq!(log[0]["kind"], "question");
    assert_eq!(log[0]["prompt"], "Please explain this.");

    let events = c.events(&sid, before);
    let kinds: Vec<&str> = events.iter().map(|e| e.1.as_str()).collect();
    assert_eq!(
        kinds,
        [
            "overlayShow",
            "speechStatus",
            "speechStatus",
            "speechStatus",
            "overlayHide",
            "resume"
        ]
    );
    let statuses: Vec<&Value> = events
        .iter()
        .filter(|e| e.1 == "speechStatus")
        .map(|e| &e.2["payload"]["status"])
        .collect();
    assert_eq!(statuses, ["queued", "speaking", "done"]);
    assert_eq!(
        events[0].2["payload"]["overlayId"],
        events[4].2["payload"]["overlayId"]
    );
    assert_eq!(events[5].2["payload"]["reason"], "clarify");
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e.0, before + 1 + i as u64);
        assert_eq!(e.2["seq"], e.0);
    }
}

#[test]
fn clarify_styles_follow_the_question() {
    let c = server();
    let sid = c.new_session(BUNDLE, &["football"]);
    let (_, v) = c.post(
        &format!("/sessions/{sid}/clarify"),
        json!({ "question": "Can you make an analogy?" }),
    );
    assert_eq!(v["style"], "analogy");
    assert_eq!(v["interestsMissing"], false);
    assert!(c.wait_mode(&sid, "Playing"));
    let (_, v) = c.post(
        &format!("/sessions/{sid}/clarify"),
        json!({ "question": "Walk me through this step by step" }),
    );
    assert_eq!(v["style"], "stepByStep");
}

#[test]
fn clarify_is_a_conflict_during_a_break() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    let (st, v) = c.post(&format!("/sessions/{sid}/break"), json!({ "minutes": 5 }));
    assert_eq!(st, 200);
    let words = v["wordCount"].as_u64().unwrap() as f64;
    assert!((words - 750.0).abs() <= 150.0, "{words}");
    assert_eq!(c.mode(&sid), "OnBreak");
    assert_eq!(c.post_empty(&format!("/sessions/{sid}/clarify")).0, 409);
}

#[test]
fn quiz_flow_and_difficulty() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/difficulty"),
            json!({ "level": 5 })
        )
        .0,
        200
    );
    let (st, q) = c.post(
        &format!("/sessions/{sid}/quiz/next"),
        json!({ "sectionId": "s003" }),
    );
    assert_eq!(st, 200);
    // The last demo section only has levels 1 and 2.
    assert_eq!(
        (q["level"].as_u64(), q["fallback"].as_bool()),
        (Some(2), Some(true))
    );
    assert_eq!(c.mode(&sid), "QuizActive");
    let state = c.get(&format!("/sessions/{sid}")).1;
    assert_eq!(state["activeQuiz"]["question"], q["question"]);
    let (_, r) = c.post(
        &format!("/sessions/{sid}/quiz/answer"),
        json!({ "answer": "definitely wrong" }),
    );
    assert_eq!(r["correct"], false);
    assert!(r["correctAnswer"].as_str().is_some_and(|a| !a.is_empty()));
    assert_eq!(c.mode(&sid), "Playing");
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/quiz/next"),
            json!({ "sectionId": "s999" })
        )
        .0,
        404
    );
}

#[test]
fn playback_fires_examples_and_highlights() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    let (_, v) = c.post(
        &format!("/sessions/{sid}/highlight"),
        json!({ "enabled": true }),
    );
    assert_eq!(v["enabled"], true);
    for t in [27.0, 28.5, 30.0] {
        let (st, v) = c.post(&format!("/sessions/{sid}/position"), json!({ "tSec": t }));
        assert_eq!(st, 200, "{v}");
        if t == 30.0 {
            assert_eq!(v["fired"]["kind"], "example", "{v}");
        }
    }
    assert_eq!(c.mode(&sid), "ExampleActive");
    let events = c.events(&sid, 0);
    assert!(events.iter().any(|e| e.1 == "highlightSet"
        && e.2["payload"]["highlights"]
            .as_array()
            .is_some_and(|h| !h.is_empty())));
    assert!(events.iter().any(|e| e.1 == "examplePrompt"));
    assert_eq!(
        c.post(
            &format!("/sessions/{sid}/position"),
            json!({ "tSec": 32.0 })
        )
        .0,
        409
    );
    c.post_empty(&format!("/sessions/{sid}/example/close"));
    assert_eq!(c.mode(&sid), "Playing");
}

#[test]
fn summary_groups_cards_by_section_and_replays() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    let empty = c.get(&format!("/sessions/{sid}/summary")).1;
    assert_eq!(empty["sections"].as_array().unwrap().len(), 3);
    assert!(empty["canvas"].as_array().unwrap().is_empty());

    c.post(
        &format!("/sessions/{sid}/clarify"),
        json!({ "question": "What is different between nucleus and nucleons?" }),
    );
    assert!(c.wait_mode(&sid, "Playing"));
    c.post(
        &format!("/sessions/{sid}/position"),
        json!({ "tSec": 25.0 }),
    );
    c.post(
        &format!("/sessions/{sid}/notes"),
        json!({ "text": "gluons are bosons" }),
    );
    let doc = c.get(&format!("/sessions/{sid}/summary")).1;
    let cards = doc["canvas"].as_array().unwrap();
    assert_eq!(cards.len(), 2);
    assert_eq!(
        (
            cards[0]["sectionId"].as_str(),
            cards[1]["sectionId"].as_str()
        ),
        (Some("s001"), Some("s002"))
    );
    assert!(cards[1]["x"].as_f64() > cards[0]["x"].as_f64());

    assert_eq!(
        c.post_empty(&format!("/sessions/{sid}/summary/open")).0,
        200
    );
    let before = c.get(&format!("/sessions/{sid}")).1["lastSeq"]
        .as_u64()
        .unwrap();
    let (st, _) = c.post(
        &format!("/sessions/{sid}/clarify-replay"),
        json!({ "recordIndex": 0 }),
    );
    assert_eq!(st, 200);
    let t0 = std::time::Instant::now();
    loop {
        let ev = c.events(&sid, before);
        if ev.iter().any(|e| e.2["payload"]["status"] == "done") {
            assert!(ev
                .iter()
                .all(|e| e.1 == "speechStatus" && e.2["payload"]["purpose"] == "replay"));
            break;
        }
        assert!(
            t0.elapsed() < Duration::from_secs(20),
            "replay never finished"
        );
        std::thread::sleep(Duration::from_millis(20));
    }
    assert_eq!(c.mode(&sid), "SummaryView");
}

#[test]
fn live_event_stream_follows_and_resumes_from_last_id() {
    let c = server();
    let sid = c.new_session(BUNDLE, &[]);
    let url = format!("{}/sessions/{sid}/events", c.base);
    let reader = std::thread::spawn(move || {
        let resp = ureq::get(&url).call().expect("stream");
        let mut lines = BufReader::new(resp.into_body().into_reader()).lines();
        let mut ids = Vec::new();
        while let Some(Ok(line)) = lines.next() {
            if let Some(id) = line.strip_prefix("id:") {
                ids.push(id.trim().parse::<u64>().unwrap());
            }
            if line.starts_with("event:") && line.contains("resume") {
                break;
            }
        }
        ids
    });
    std::thread::sleep(Duration::from_millis(200));
    c.post_empty(&format!("/sessions/{sid}/clarify"));
    let ids = reader.join().unwrap();
    assert!(ids.len() >= 6, "{ids:?}");
    assert!(ids.windows(2).all(|w| w[1] == w[0] + 1));

    // Reconnecting with Last-Event-ID skips what was already seen.
    let resp = ureq::get(&format!("{}/sessions/{sid}/events?once=true", c.base))
        .header("Last-Event-ID", "3")
        .call()
        .unwrap();
    let body = resp.into_body().read_to_string().unwrap();
    let events = common::parse_sse(&body);
    assert_eq!(events.first().map(|e| e.0), Some(4));
}

#[test]
fn cors_is_enabled() {
    let c = server();
    let resp = ureq::get(&format!("{}/lectures", c.base))
        .header("Origin", "http://localhost:5173")
        .call()
        .unwrap();
    assert_eq!(
        resp.headers()
            .get("access-control-allow-origin")
            .and_then(|v| v.to_str().ok()),
        Some("*")
    );
}

#[test]
fn avatar_rect_is_kept_free() {
    let c = server();
    let (st, v) = c.post(
        "/sessions",
        json!({ "bundleId": BUNDLE, "avatarRect": [0.0, 0.0, 0.5, 0.5] }),
    );
    assert_eq!(st, 201);
    let sid = v["sessionId"].as_str().unwrap();
    let (_, out) = c.post(
        &format!("/sessions/{sid}/clarify"),
        json!({ "areaRect": [0.0, 0.0, 0.2, 0.2] }),
    );
    let r: Vec<f64> = serde_json::from_value(out["plan"]["region"]["rect"].clone()).unwrap();
    if out["plan"]["placement"] == "region" {
        assert!(r[0] >= 0.5 - 1e-9 || r[1] >= 0.5 - 1e-9, "{r:?}");
    }
}

#[test]
fn sessions_survive_a_restart_as_playing() {
    let dir = tempfile::tempdir().unwrap();
    write_demo_bundle(&dir.path().join(BUNDLE)).unwrap();
    let c = Client::new(start_server(mock_options(dir.path())));
    let sid = c.new_session(BUNDLE, &["chess"]);
    c.post(
        &format!("/sessions/{sid}/notes"),
        json!({ "text": "first" }),
    );
    c.post(&format!("/sessions/{sid}/break"), json!({ "minutes": 3 }));
    assert_eq!(c.mode(&sid), "OnBreak");

    let again = Client::new(start_server(mock_options(dir.path())));
    let v = again.get(&format!("/sessions/{sid}")).1;
    assert_eq!(v["mode"], "Playing");
    assert_eq!(v["interests"], json!(["chess"]));
    let kinds: Vec<&str> = v["log"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds, ["note", "breakTaken"]);
    assert_eq!(
        again.get(&format!("/sessions/{sid}/summary")).1["canvas"]
            .as_array()
            .unwrap()
            .len(),
        2
    );
}

#[test]
fn empty_bundle_dir_serves_no_lectures() {
    let dir = tempfile::tempdir().unwrap();
    let c = Client::new(start_server(mock_options(dir.path())));
    assert_eq!(c.get("/lectures"), (200, json!([])));
}
