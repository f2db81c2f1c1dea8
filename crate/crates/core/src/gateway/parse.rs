//! Extraction of a single JSON value from model output.
//!
//! Repairs are limited to dropping markdown code fences and removing
//! trailing commas before `}` or `]`.

use serde_json::Value;
use thiserror::Error;

use super::schema::{Schema, SchemaError};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("no JSON value found in reply")]
    NoJsonFound,
    #[error("reply contains {0} JSON values, expected exactly one")]
    MultipleJsonValues(usize),
    #[error(transparent)]
    SchemaMismatch(#[from] SchemaError),
}

fn strip_fences(raw: &str) -> String {
    raw.lines()
        .filter(|l| !l.trim_start().starts_with("```"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Byte length of the bracket-balanced region starting at `start`, string
/// literals respected. `None` when the brackets never close.
fn balanced_extent(s: &str, start: usize) -> Option<usize> {
    let bytes = s.as_bytes();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &c) in bytes.iter().enumerate().skip(start) {
        if in_str {
            match c {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            b'"' => in_str = true,
            b'{' | b'[' => depth += 1,
            b'}' | b']' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1 - start);
                }
                if depth < 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    None
}

fn remove_trailing_commas(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    let mut in_str = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_str {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_str = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_str = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn parse_prefix(s: &str) -> Option<(Value, usize)> {
    let mut it = serde_json::Deserializer::from_str(s).into_iter::<Value>();
    match it.next() {
        Some(Ok(v)) => Some((v, it.byte_offset())),
        _ => None,
    }
}

/// All top-level JSON objects/arrays embedded in `text`, in order.
pub fn extract_json_values(text: &str) -> Vec<Value> {
    let text = strip_fences(text);
    let mut found = Vec::new();
    let mut i = 0;
    while i < text.len() {
        let c = text.as_bytes()[i];
        if c != b'{' && c != b'[' {
            i += 1;
            continue;
        }
        if let Some((v, len)) = parse_prefix(&text[i..]) {
            if v.is_object() || v.is_array() {
                found.push(v);
                i += len;
                continue;
            }
        }
        if let Some(len) = balanced_extent(&text, i) {
            if let Ok(v) = serde_json::from_str::<Value>(&remove_trailing_commas(&text[i..i + len]))
            {
                found.push(v);
                i += len;
                continue;
            }
        }
        i += 1;
    }
    found
}

/// Pulls exactly one JSON value out of `raw` and checks it against `schema`.
pub fn parse_structured(raw: &str, schema: &Schema) -> Result<Value, ParseError> {
    let mut values = extract_json_values(raw);
    match values.len() {
        0 => Err(ParseError::NoJsonFound),
        1 => {
            let v = values.pop().expect("one value");
            schema.validate(&v)?;
            Ok(v)
        }
        n => Err(ParseError::MultipleJsonValues(n)),
    }
}
