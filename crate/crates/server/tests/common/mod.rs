//! Shared helpers: an in-process server, a small JSON client and the
//! scripted walk over every endpoint.
#![allow(dead_code)]

use std::net::TcpListener as StdListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Arc};
use std::thread;
use std::time::{Duration, Instant};

use lecturelens_server::ServeOptions;
use serde_json::{json, Value};
use ureq::Agent;

/// Session seconds per real second in tests, so speech and breaks end fast.
pub const FAST_CLOCK: f64 = 200.0;

/// Starts a server on an ephemeral port in a background thread; it lives
/// until the test process exits.
pub fn start_server(opts: ServeOptions) -> String {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .expect("runtime");
        rt.block_on(async move {
            let state = lecturelens_server::build_state(&opts).expect("state");
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
                .await
                .expect("bind");
            tx.send(listener.local_addr().expect("addr"))
                .expect("send addr");
            axum_serve(listener, state).await;
        });
    });
    let addr = rx
        .recv_timeout(Duration::from_secs(30))
        .expect("server start");
    format!("http://{addr}")
}

async fn axum_serve(listener: tokio::net::TcpListener, state: Arc<lecturelens_server::AppState>) {
    lecturelens_server::serve(listener, state)
        .await
        .expect("serve");
}

pub fn mock_options(bundle_dir: &Path) -> ServeOptions {
    let mut o = ServeOptions::new(bundle_dir);
    o.mock = true;
    o.clock_scale = FAST_CLOCK;
    o
}

/// JSON client that returns (status, body) instead of erroring on 4xx/5xx.
#[derive(Clone)]
pub struct Client {
    pub base: String,
    agent: Agent,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .build()
            .into();
        Client {
            base: base.into(),
            agent,
        }
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let mut r = self
            .agent
            .get(&format!("{}{path}", self.base))
            .call()
            .expect("GET");
        let status = r.status().as_u16();
        let text = r.body_mut().read_to_string().expect("body");
        (
            status,
            serde_json::from_str(&text).unwrap_or(Value::String(text)),
        )
    }

    pub fn get_bytes(&self, path: &str) -> (u16, String, Vec<u8>) {
        let mut r = self
            .agent
            .get(&format!("{}{path}", self.base))
            .call()
            .expect("GET");
        let status = r.status().as_u16();
        let ct = r
            .headers()
            .get("content-type")
            .and_then(|v| v.to_str().ok())
            .unwrap_or("")
            .to_owned();
        let bytes = r
            .body_mut()
            .with_config()
            .limit(64 << 20)
            .read_to_vec()
            .expect("body");
        (status, ct, bytes)
    }

    pub fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let mut r = self
            .agent
            .post(&format!("{}{path}", self.base))
            .send_json(&body)
            .expect("POST");
        let status = r.status().as_u16();
        let text = r.body_mut().read_to_string().expect("body");
        (
            status,
            serde_json::from_str(&text).unwrap_or(Value::String(text)),
        )
    }

    pub fn post_empty(&self, path: &str) -> (u16, Value) {
        let mut r = self
            .agent
            .post(&format!("{}{path}", self.base))
            .send_empty()
            .expect("POST");
        let status = r.status().as_u16();
        let text = r.body_mut().read_to_string().expect("body");
        (
            status,
            serde_json::from_str(&text).unwrap_or(Value::String(text)),
        )
    }

    pub fn post_raw(&self, path: &str, body: &str) -> (u16, Value) {
        let mut r = self
            .agent
            .post(&format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .send(body)
            .expect("POST");
        let status = r.status().as_u16();
        let text = r.body_mut().read_to_string().expect("body");
        (
            status,
            serde_json::from_str(&text).unwrap_or(Value::String(text)),
        )
    }

    /// Event history as (id, kind, data) via `?once=true`.
    pub fn events(&self, session: &str, since: u64) -> Vec<(u64, String, Value)> {
        let mut r = self
            .agent
            .get(&format!(
                "{}/sessions/{session}/events?once=true&since={since}",
                self.base
            ))
            .call()
            .expect("events");
        assert_eq!(r.status().as_u16(), 200);
        parse_sse(&r.body_mut().read_to_string().expect("sse body"))
    }

    pub fn new_session(&self, bundle: &str, interests: &[&str]) -> String {
        let (st, v) = self.post(
            "/sessions",
            json!({ "bundleId": bundle, "interests": interests }),
        );
        assert_eq!(st, 201, "{v}");
        v["sessionId"].as_str().expect("sessionId").to_owned()
    }

    pub fn mode(&self, session: &str) -> String {
        self.get(&format!("/sessions/{session}")).1["mode"]
            .as_str()
            .unwrap_or_default()
            .to_owned()
    }

    /// Polls until the session reaches `mode`.
    pub fn wait_mode(&self, session: &str, mode: &str) -> bool {
        let t0 = Instant::now();
        while t0.elapsed() < Duration::from_secs(20) {
            if self.mode(session) == mode {
                return true;
            }
            thread::sleep(Duration::from_millis(20));
        }
        false
    }
}

/// Parses a `text/event-stream` body.
pub fn parse_sse(body: &str) -> Vec<(u64, String, Value)> {
    let mut out = Vec::new();
    for block in body.split("\n\n") {
        let (mut id, mut kind, mut data) = (None, None, String::new());
        for line in block.lines() {
            if let Some(v) = line.strip_prefix("id:") {
                id = v.trim().parse().ok();
            } else if let Some(v) = line.strip_prefix("event:") {
                kind = Some(v.trim().to_owned());
            } else if let Some(v) = line.strip_prefix("data:") {
                data.push_str(v.strip_prefix(' ').unwrap_or(v));
            }
        }
        if let (Some(id), Some(kind)) = (id, kind) {
            out.push((id, kind, serde_json::from_str(&data).expect("event data")));
        }
    }
    out
}

/// A TCP listener that counts connection attempts; point provider URLs at
/// it to prove nothing dials out.
pub struct EgressTrap {
    pub url: String,
    hits: Arc<AtomicUsize>,
}

impl EgressTrap {
    pub fn start() -> Self {
        let l = StdListener::bind("127.0.0.1:0").expect("trap bind");
        let url = format!("http://{}", l.local_addr().expect("trap addr"));
        let hits = Arc::new(AtomicUsize::new(0));
        let h = hits.clone();
        thread::spawn(move || {
            for conn in l.incoming() {
                h.fetch_add(1, Ordering::SeqCst);
                drop(conn);
            }
        });
        EgressTrap { url, hits }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

/// Walks every endpoint once in a sensible order, checking statuses and
/// the basic shape of each reply. Returns the endpoints it covered.
pub fn exercise_all_endpoints(c: &Client, bundle: &str) -> Result<Vec<&'static str>, String> {
    let mut covered = Vec::new();
    macro_rules! check {
        ($cond:expr, $($msg:tt)+) => {
            if !$cond {
                return Err(format!($($msg)+));
            }
        };
    }

    let (st, v) = c.get("/health");
    check!(st == 200 && v["status"] == "ok", "health: {st} {v}");
    covered.push("GET /health");

    let (st, v) = c.get("/lectures");
    check!(
        st == 200
            && v.as_array()
                .is_some_and(|a| a.iter().any(|l| l["id"] == bundle)),
        "lectures: {v}"
    );
    covered.push("GET /lectures");

    let (st, manifest) = c.get(&format!("/lectures/{bundle}/manifest"));
    check!(st == 200 && manifest["id"] == bundle, "manifest: {st}");
    covered.push("GET /lectures/{id}/manifest");
    let sections = manifest["sections"].as_array().cloned().unwrap_or_default();
    check!(!sections.is_empty(), "manifest has no sections");

    let (st, ct, png) = c.get_bytes(&format!("/lectures/{bundle}/sections/0/slide.png"));
    check!(
        st == 200 && ct == "image/png" && png.starts_with(b"\x89PNG"),
        "slide: {st} {ct}"
    );
    covered.push("GET /lectures/{id}/sections/{n}/slide.png");

    if let Some(ex) = manifest["examples"].as_array().and_then(|a| a.first()) {
        let file = ex["htmlRef"]
            .as_str()
            .unwrap_or_default()
            .trim_start_matches("examples/")
            .to_owned();
        let (st, ct, _) = c.get_bytes(&format!("/lectures/{bundle}/examples/{file}"));
        check!(
            st == 200 && ct.starts_with("text/html"),
            "example file: {st}"
        );
        covered.push("GET /lectures/{id}/examples/{file}");
    }

    let (st, _, video) = c.get_bytes(&format!("/lectures/{bundle}/video"));
    check!(st == 200 && !video.is_empty(), "video: {st}");
    covered.push("GET /lectures/{id}/video");

    let (st, v) = c.post(
        "/sessions",
        json!({ "bundleId": bundle, "interests": ["football"] }),
    );
    check!(
        st == 201 && v["mode"] == "Playing",
        "create session: {st} {v}"
    );
    let sid = v["sessionId"].as_str().unwrap_or_default().to_owned();
    covered.push("POST /sessions");

    let (st, v) = c.get(&format!("/sessions/{sid}"));
    check!(
        st == 200 && v["sessionId"] == sid.as_str(),
        "get session: {st}"
    );
    covered.push("GET /sessions/{id}");

    let s = |p: &str| format!("/sessions/{sid}{p}");

    let (st, v) = c.post(&s("/highlight"), json!({ "enabled": true }));
    check!(st == 200 && v["enabled"] == true, "highlight: {st} {v}");
    covered.push("POST /sessions/{id}/highlight");

    let (st, v) = c.post(&s("/position"), json!({ "tSec": 1.0 }));
    check!(st == 200 && v["positionSec"] == 1.0, "position: {st} {v}");
    covered.push("POST /sessions/{id}/position");

    let (st, v) = c.post(&s("/difficulty"), json!({ "level": 4 }));
    check!(st == 200 && v["difficulty"] == 4, "difficulty: {st} {v}");
    covered.push("POST /sessions/{id}/difficulty");

    let (st, v) = c.post(&s("/clarify"), json!({ "areaRect": [0.1, 0.1, 0.5, 0.4] }));
    check!(
        st == 200 && v["response"].as_str().is_some_and(|r| !r.is_empty()),
        "clarify: {st} {v}"
    );
    covered.push("POST /sessions/{id}/clarify");
    check!(c.wait_mode(&sid, "Playing"), "clarification never resumed");

    let (st, v) = c.post(&s("/visual"), json!({ "areaRect": [0.1, 0.1, 0.6, 0.6] }));
    check!(st == 200 && v.get("results").is_some(), "visual: {st} {v}");
    covered.push("POST /sessions/{id}/visual");
    if c.mode(&sid) == "VisualShown" {
        let (st, v) = c.post_empty(&s("/visual/dismiss"));
        check!(
            st == 200 && v["mode"] == "Playing",
            "visual dismiss: {st} {v}"
        );
    } else {
        let (st, _) = c.post_empty(&s("/visual/dismiss"));
        check!(st == 409, "dismiss without a visual should conflict: {st}");
    }
    covered.push("POST /sessions/{id}/visual/dismiss");

    let (st, q) = c.post_empty(&s("/quiz/next"));
    check!(
        st == 200 && q["question"].as_str().is_some(),
        "quiz next: {st} {q}"
    );
    covered.push("POST /sessions/{id}/quiz/next");
    let answer = q["options"]
        .as_array()
        .and_then(|o| o.first())
        .and_then(Value::as_str)
        .unwrap_or("true")
        .to_owned();
    let (st, v) = c.post(&s("/quiz/answer"), json!({ "answer": answer }));
    check!(
        st == 200 && v["correct"].is_boolean(),
        "quiz answer: {st} {v}"
    );
    covered.push("POST /sessions/{id}/quiz/answer");

    if !manifest["examples"].as_array().is_none_or(|a| a.is_empty()) {
        let (st, v) = c.post_empty(&s("/examples/0/open"));
        check!(st == 200, "example open: {st} {v}");
        covered.push("POST /sessions/{id}/examples/{n}/open");
        let (st, v) = c.post_empty(&s("/example/close"));
        check!(
            st == 200 && v["mode"] == "Playing",
            "example close: {st} {v}"
        );
        covered.push("POST /sessions/{id}/example/close");
    }

    let (st, v) = c.post(
        &s("/notes"),
        json!({ "text": "revisit quark colours", "areaRect": [0.2, 0.2, 0.3, 0.3] }),
    );
    check!(st == 200, "notes: {st} {v}");
    covered.push("POST /sessions/{id}/notes");

    let (st, v) = c.post(&s("/break"), json!({ "minutes": 1 }));
    check!(
        st == 200 && v["story"].as_str().is_some(),
        "break: {st} {v}"
    );
    covered.push("POST /sessions/{id}/break");
    check!(c.wait_mode(&sid, "Playing"), "break never ended");

    let (st, doc) = c.get(&s("/summary"));
    let log_len = c.get(&s("")).1["log"].as_array().map_or(0, Vec::len);
    check!(
        st == 200 && doc["canvas"].as_array().map_or(0, Vec::len) == log_len,
        "summary: {st} {doc}"
    );
    covered.push("GET /sessions/{id}/summary");
    let q_ref = doc["canvas"]
        .as_array()
        .and_then(|cs| cs.iter().find(|c| c["kind"] == "question"))
        .map(|c| c["recordRef"].clone());
    check!(q_ref.is_some(), "summary has no question card");
    let q_ref = q_ref.unwrap_or_default();

    // Explanations are replayed from the summary view.
    let (st, v) = c.post_empty(&s("/summary/open"));
    check!(
        st == 200 && v["canvas"] == doc["canvas"],
        "summary open: {st} {v}"
    );
    covered.push("POST /sessions/{id}/summary/open");
    let (st, v) = c.post(&s("/replay"), json!({ "recordIndex": q_ref }));
    check!(
        st == 200 && v["text"].as_str().is_some(),
        "replay: {st} {v}"
    );
    covered.push("POST /sessions/{id}/replay");
    let (st, v) = c.post(&s("/clarify-replay"), json!({ "recordIndex": q_ref }));
    check!(st == 200, "clarify-replay: {st} {v}");
    covered.push("POST /sessions/{id}/clarify-replay");
    let (st, v) = c.post_empty(&s("/summary/close"));
    check!(
        st == 200 && v["mode"] == "Playing",
        "summary close: {st} {v}"
    );
    covered.push("POST /sessions/{id}/summary/close");

    let events = c.events(&sid, 0);
    check!(!events.is_empty(), "no events");
    check!(
        events.iter().enumerate().all(|(i, e)| e.0 == i as u64 + 1),
        "event ids not gap-free"
    );
    covered.push("GET /sessions/{id}/events");

    let (st, v) = c.get("/health");
    check!(
        st == 200 && v["outboundRequests"] == 0,
        "outbound requests: {v}"
    );
    Ok(covered)
}

/// A `lecturelens serve` subprocess; killed on drop.
pub struct ServeProcess {
    pub child: std::process::Child,
    pub base: String,
}

impl Drop for ServeProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn bin() -> std::process::Command {
    std::process::Command::new(env!("CARGO_BIN_EXE_lecturelens"))
}

/// Runs `serve --port 0 <args>` and waits for its listening line.
pub fn spawn_serve(args: &[&str], envs: &[(&str, &str)]) -> ServeProcess {
    use std::io::BufRead;
    let mut cmd = bin();
    cmd.args(["serve", "--port", "0"])
        .args(args)
        .stdout(std::process::Stdio::piped());
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let mut child = cmd.spawn().expect("spawn serve");
    let stdout = child.stdout.take().expect("stdout");
    let mut lines = std::io::BufReader::new(stdout).lines();
    let line = lines.next().expect("listening line").expect("read stdout");
    let base = line
        .strip_prefix("listening on ")
        .expect("listening line")
        .trim()
        .to_owned();
    // Keep draining so the child never blocks on a full pipe.
    thread::spawn(move || for _ in lines {});
    ServeProcess { child, base }
}
