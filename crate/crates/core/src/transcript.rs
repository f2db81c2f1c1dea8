//! SRT and WebVTT subtitle parsing.

use std::path::Path;

use thiserror::Error;

use crate::content::TranscriptSegment;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("cannot read transcript: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
}

/// Parses `HH:MM:SS,mmm`, `HH:MM:SS.mmm` or `MM:SS.mmm`.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim().replace(',', ".");
    let parts: Vec<&str> = s.split(':').collect();
    let (h, m, sec) = match parts.as_slice() {
        [h, m, s] => (h.parse::<u32>().ok()?, m.parse::<u32>().ok()?, *s),
        [m, s] => (0, m.parse::<u32>().ok()?, *s),
        _ => return None,
    };
    let sec: f64 = sec.parse().ok()?;
    if m >= 60 || !(0.0..60.0).contains(&sec) {
        return None;
    }
    Some(h as f64 * 3600.0 + m as f64 * 60.0 + sec)
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut depth = 0usize;
    for c in s.chars() {
        match c {
            '<' => depth += 1,
            '>' if depth > 0 => depth -= 1,
            _ if depth == 0 => out.push(c),
            _ => {}
        }
    }
    out
}

/// Parses SRT or WebVTT text. Cue numbers, WebVTT headers, NOTE/STYLE
/// blocks and cue settings are ignored; inline tags are stripped; cues
/// with no text are dropped. Output is sorted by start time.
pub fn parse(text: &str) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    let text = text.trim_start_matches('\u{feff}');
    let lines: Vec<&str> = text.lines().collect();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.starts_with("WEBVTT")
            || line.starts_with("NOTE")
            || line == "STYLE"
            || line == "REGION"
        {
            while i < lines.len() && !lines[i].trim().is_empty() {
                i += 1;
            }
            continue;
        }
        let Some((a, b)) = line.split_once("-->") else {
            i += 1;
            continue;
        };
        let lineno = i + 1;
        let start = parse_timestamp(a).ok_or_else(|| TranscriptError::Malformed {
            line: lineno,
            reason: format!("bad start time {a:?}"),
        })?;
        let end_field = b.split_whitespace().next().unwrap_or("");
        let end = parse_timestamp(end_field).ok_or_else(|| TranscriptError::Malformed {
            line: lineno,
            reason: format!("bad end time {end_field:?}"),
        })?;
        if end < start {
            return Err(TranscriptError::Malformed {
                line: lineno,
                reason: "cue ends before it starts".into(),
            });
        }
        i += 1;
        let mut body = Vec::new();
        while i < lines.len() && !lines[i].trim().is_empty() {
            body.push(strip_tags(lines[i].trim()));
            i += 1;
        }
        let text = body
            .join(" ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        if !text.is_empty() {
            segments.push(TranscriptSegment {
                start_sec: start,
                end_sec: end,
                text,
            });
        }
    }
    segments.sort_by(|a, b| a.start_sec.total_cmp(&b.start_sec));
    Ok(segments)
}

pub fn load(path: &Path) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    parse(&std::fs::read_to_string(path)?)
}

/// Renders segments as SRT.
pub fn to_srt(segments: &[TranscriptSegment]) -> String {
    fn ts(t: f64) -> String {
        let ms = (t * 1000.0).round() as u64;
        format!(
            "{:02}:{:02}:{:02},{:03}",
            ms / 3_600_000,
            ms / 60_000 % 60,
            ms / 1000 % 60,
            ms % 1000
        )
    }
    segments
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "{}\n{} --> {}\n{}\n",
                i + 1,
                ts(s.start_sec),
                ts(s.end_sec),
                s.text
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}
