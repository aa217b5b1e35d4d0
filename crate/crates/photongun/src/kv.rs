//! Flat `key = value` text used by scenario files and run reports.
//!
//! `#` starts a comment anywhere on a line. Keys are dotted paths. Values
//! are taken verbatim after trimming.

use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {reason}")]
pub struct KvError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub value: String,
}

pub fn parse(text: &str) -> Result<BTreeMap<String, Entry>, KvError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(KvError { line, reason: format!("expected `key = value`, found {content:?}") });
        };
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
            return Err(KvError { line, reason: format!("invalid key {key:?}") });
        }
        let entry = Entry { line, value: value.trim().to_string() };
        if let Some(prev) = out.insert(key.to_string(), entry) {
            return Err(KvError { line, reason: format!("duplicate key {key} (first set on line {})", prev.line) });
        }
    }
    Ok(out)
}

/// One `key = value` line.
pub fn line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    use std::fmt::Write;
    let _ = writeln!(out, "{key} = {value}");
}
