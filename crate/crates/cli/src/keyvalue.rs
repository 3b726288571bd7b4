//! `key = value` text files and `# tag: k=v,k=v` metadata lines.

use std::path::Path;

use crate::error::{GeoError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: u64,
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped;
/// repeated keys are an error.
pub fn parse_lines(path: &Path, text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let Some((k, v)) = s.split_once('=') else {
            return Err(GeoError::parse(path, line, format!("expected `key = value`, got `{s}`")));
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(GeoError::parse(path, line, "empty key"));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(GeoError::parse(path, line, format!("`{key}` already set on line {}", prev.line)));
        }
        out.push(Entry { key, value: v.trim().to_string(), line });
    }
    Ok(out)
}

pub fn parse_num<T: std::str::FromStr>(path: &Path, e: &Entry) -> Result<T> {
    e.value
        .parse()
        .map_err(|_| GeoError::parse(path, e.line, format!("`{}` has unparsable value `{}`", e.key, e.value)))
}

/// `# tag: k=v,k=v`
pub fn meta_line(tag: &str, pairs: &[(&str, String)]) -> String {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {tag}: {}", body.join(","))
}

/// Parses the body of a `# tag: ...` line, if `line` carries `tag`.
pub fn parse_meta<'a>(tag: &str, line: &'a str) -> Option<Vec<(&'a str, &'a str)>> {
    let rest = line.strip_prefix('#')?.trim_start();
    let body = rest.strip_prefix(tag)?.strip_prefix(':')?;
    Some(
        body.split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| match p.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (p.trim(), ""),
            })
            .collect(),
    )
}
