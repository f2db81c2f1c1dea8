//! Append-only JSON-lines persistence of interaction records.
//!
//! `<dir>/<session>.jsonl` holds one record per line; `<dir>/<session>.meta.json`
//! holds what is needed to re-create the session after a restart, and
//! `<dir>/<session>.summary.json` the last summary the learner opened.

use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::model::InteractionRecord;
use crate::summary::SummaryDocument;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionMeta {
    pub session_id: String,
    pub bundle_id: String,
    pub interests: Vec<String>,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone)]
pub struct SessionLog {
    records: PathBuf,
    summary: PathBuf,
}

impl SessionLog {
    pub fn create(dir: &Path, meta: &SessionMeta) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        fs::write(
            meta_path(dir, &meta.session_id),
            crate::content::canonical_json(meta),
        )?;
        let records = records_path(dir, &meta.session_id);
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(&records)?;
        Ok(SessionLog {
            records,
            summary: summary_path(dir, &meta.session_id),
        })
    }

    pub fn write_summary(&self, doc: &SummaryDocument) -> std::io::Result<()> {
        fs::write(&self.summary, crate::content::canonical_json(doc))
    }

    pub fn append(&self, record: &InteractionRecord) -> std::io::Result<()> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.records)?;
        let line = serde_json::to_string(record).map_err(std::io::Error::other)?;
        writeln!(f, "{line}")
    }
}

fn meta_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.meta.json"))
}

pub fn summary_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.summary.json"))
}

fn records_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

/// Reads one session's records; a torn final line is ignored.
pub fn read_records(path: &Path) -> std::io::Result<Vec<InteractionRecord>> {
    let f = fs::File::open(path)?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => log::warn!("{}: skipping unreadable record: {e}", path.display()),
        }
    }
    Ok(out)
}

/// Every persisted session in `dir` with its records.
pub fn read_sessions(dir: &Path) -> std::io::Result<Vec<(SessionMeta, Vec<InteractionRecord>)>> {
    let mut out = Vec::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    let mut metas: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".meta.json"))
        .collect();
    metas.sort();
    for p in metas {
        let meta: SessionMeta = match fs::read(&p).map(|b| serde_json::from_slice(&b)) {
            Ok(Ok(m)) => m,
            _ => {
                log::warn!("{}: unreadable session meta", p.display());
                continue;
            }
        };
        let records_file = records_path(dir, &meta.session_id);
        let records = if records_file.is_file() {
            read_records(&records_file)?
        } else {
            Vec::new()
        };
        out.push((meta, records));
    }
    Ok(out)
}
