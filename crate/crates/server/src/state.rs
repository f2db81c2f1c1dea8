//! Loaded lectures, live sessions and the per-session timer tasks.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, Utc};
use lecturelens_core::content::MANIFEST_FILE;
use lecturelens_core::geometry::Rect;
use lecturelens_core::par::Execution;
use lecturelens_core::session::{
    read_sessions, Clock, Lecture, Services, Session, SessionConfig, SessionEvent, SessionLog,
    SessionMeta,
};
use tokio::sync::{broadcast, Notify};

const EVENT_BUFFER: usize = 1024;

/// One live session. Every operation runs under `inner`, so operations on
/// a session are serialized and its events are published in order.
pub struct SessionHandle {
    pub id: String,
    inner: Mutex<Inner>,
    pub events: broadcast::Sender<SessionEvent>,
    wake: Notify,
}

struct Inner {
    session: Session,
    published: u64,
}

impl SessionHandle {
    fn new(session: Session) -> Self {
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        let published = session.last_seq();
        SessionHandle {
            id: session.state().session_id.clone(),
            inner: Mutex::new(Inner { session, published }),
            events,
            wake: Notify::new(),
        }
    }

    /// Runs `f` on the session, publishes whatever events it produced and
    /// wakes the timer so it can pick up new deadlines.
    pub fn with<R>(&self, f: impl FnOnce(&mut Session) -> R) -> R {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        let out = f(&mut inner.session);
        let fresh: Vec<SessionEvent> = inner.session.events_since(inner.published).to_vec();
        if let Some(last) = fresh.last() {
            inner.published = last.seq;
        }
        for e in fresh {
            // No subscribers is fine; history is replayed on connect.
            let _ = self.events.send(e);
        }
        drop(inner);
        self.wake.notify_one();
        out
    }

    /// Read-only access without publishing.
    pub fn peek<R>(&self, f: impl FnOnce(&Session) -> R) -> R {
        let inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        f(&inner.session)
    }
}

pub struct AppState {
    pub bundle_dir: PathBuf,
    pub sessions_dir: PathBuf,
    pub lectures: RwLock<BTreeMap<String, Arc<Lecture>>>,
    pub sessions: RwLock<HashMap<String, Arc<SessionHandle>>>,
    pub services: Services,
    pub clock: Arc<dyn Clock>,
    /// Clock scale: session seconds per real second.
    pub clock_scale: f64,
    pub epoch: DateTime<Utc>,
    pub session_cfg: SessionConfig,
}

impl AppState {
    pub fn new(
        bundle_dir: PathBuf,
        sessions_dir: PathBuf,
        services: Services,
        clock: Arc<dyn Clock>,
        clock_scale: f64,
        exec: Execution,
    ) -> Self {
        let lectures = load_lectures(&bundle_dir, exec);
        AppState {
            bundle_dir,
            sessions_dir,
            lectures: RwLock::new(lectures),
            sessions: RwLock::new(HashMap::new()),
            services,
            clock,
            clock_scale,
            epoch: Utc::now(),
            session_cfg: SessionConfig::default(),
        }
    }

    pub fn now(&self) -> f64 {
        self.clock.now()
    }

    pub fn lecture(&self, id: &str) -> Option<Arc<Lecture>> {
        self.lectures
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
    }

    pub fn session(&self, id: &str) -> Option<Arc<SessionHandle>> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
    }

    fn config_with_avatar(&self, avatar: Option<Rect>) -> SessionConfig {
        let mut cfg = self.session_cfg.clone();
        if let Some(r) = avatar {
            cfg.layout.reserved = vec![r];
        }
        cfg
    }

    /// Starts a session on `lecture`; the caller has checked the bundle.
    pub fn create_session(
        self: &Arc<Self>,
        lecture: Arc<Lecture>,
        interests: Vec<String>,
        avatar: Option<Rect>,
    ) -> std::io::Result<Arc<SessionHandle>> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::new(
            id.clone(),
            lecture.clone(),
            self.services.clone(),
            self.config_with_avatar(avatar),
            interests,
            self.epoch,
        );
        let meta = SessionMeta {
            session_id: id,
            bundle_id: lecture.bundle.id.clone(),
            interests: session.state().interests.clone(),
            created_at: Utc::now(),
        };
        let log = SessionLog::create(&self.sessions_dir, &meta)?;
        Ok(self.register(session.with_log(log)))
    }

    fn register(self: &Arc<Self>, session: Session) -> Arc<SessionHandle> {
        let handle = Arc::new(SessionHandle::new(session));
        self.sessions
            .write()
            .unwrap_or_else(|p| p.into_inner())
            .insert(handle.id.clone(), handle.clone());
        tokio::spawn(drive(
            Arc::downgrade(&handle),
            self.clock.clone(),
            self.clock_scale,
        ));
        handle
    }

    /// Re-creates persisted sessions. Modes are not persisted, so every
    /// recovered session starts out Playing with its records intact.
    pub fn recover_sessions(self: &Arc<Self>) -> usize {
        let found = match read_sessions(&self.sessions_dir) {
            Ok(f) => f,
            Err(e) => {
                log::warn!(
                    "cannot read sessions from {}: {e}",
                    self.sessions_dir.display()
                );
                return 0;
            }
        };
        let mut n = 0;
        for (meta, records) in found {
            let Some(lecture) = self.lecture(&meta.bundle_id) else {
                log::warn!(
                    "session {}: bundle {} is gone",
                    meta.session_id,
                    meta.bundle_id
                );
                continue;
            };
            let mut session = Session::new(
                meta.session_id.clone(),
                lecture,
                self.services.clone(),
                self.session_cfg.clone(),
                meta.interests.clone(),
                self.epoch,
            );
            log::info!(
                "recovering session {} with {} records",
                meta.session_id,
                records.len()
            );
            session.restore_records(records);
            match SessionLog::create(&self.sessions_dir, &meta) {
                Ok(log) => session = session.with_log(log),
                Err(e) => log::warn!("session {}: log not writable: {e}", meta.session_id),
            }
            self.register(session);
            n += 1;
        }
        n
    }
}

/// Applies speech and break deadlines as they fall due.
async fn drive(handle: std::sync::Weak<SessionHandle>, clock: Arc<dyn Clock>, scale: f64) {
    loop {
        let Some(h) = handle.upgrade() else { return };
        let deadline = h.peek(|s| s.next_deadline());
        match deadline {
            Some(d) => {
                let wait = ((d - clock.now()) / scale).max(0.0) + 0.001;
                tokio::select! {
                    _ = tokio::time::sleep(Duration::from_secs_f64(wait)) => {
                        let now = clock.now();
                        h.with(|s| s.advance(now));
                    }
                    _ = h.wake.notified() => {}
                }
            }
            None => h.wake.notified().await,
        }
    }
}

/// Every bundle under `dir`: the directory itself if it holds a manifest,
/// and each immediate subdirectory that does. Broken bundles are skipped.
pub fn load_lectures(dir: &Path, exec: Execution) -> BTreeMap<String, Arc<Lecture>> {
    let mut candidates = Vec::new();
    if dir.join(MANIFEST_FILE).is_file() {
        candidates.push(dir.to_path_buf());
    }
    if let Ok(entries) = std::fs::read_dir(dir) {
        let mut subdirs: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.join(MANIFEST_FILE).is_file())
            .collect();
        subdirs.sort();
        candidates.extend(subdirs);
    }
    let mut out = BTreeMap::new();
    for p in candidates {
        match Lecture::load(&p, exec) {
            Ok(l) => {
                log::info!("loaded bundle {} from {}", l.bundle.id, p.display());
                out.insert(l.bundle.id.clone(), Arc::new(l));
            }
            Err(e) => log::warn!("skipping bundle at {}: {e}", p.display()),
        }
    }
    out
}
