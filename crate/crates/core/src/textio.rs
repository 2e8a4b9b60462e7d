//! Plain-text column formats shared by every exporter.
//!
//! Header lines are `# key: value`; data lines are whitespace-separated
//! columns. Numbers are written with 17 significant digits in exponent
//! notation, which round-trips every `f64` and does not depend on locale.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Formats a number for a data column.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_num(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
}

/// `# key: value` lines at the top of a text file.
#[derive(Debug, Default, Clone)]
pub struct Header {
    entries: BTreeMap<String, String>,
}

impl Header {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            let Some(rest) = line.strip_prefix('#') else {
                continue;
            };
            if let Some((k, v)) = rest.split_once(':') {
                entries.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse {
            line: 0,
            reason: format!("missing header field `{key}`"),
        })
    }

    pub fn require_parsed<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse().map_err(|_| Error::Parse {
            line: 0,
            reason: format!("header field `{key}` has invalid value `{raw}`"),
        })
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
pub fn data_rows(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed.split_whitespace().collect()))
        }
    })
}

/// Writes a header block followed by a column-name line.
pub fn header_block(fields: &[(&str, String)], columns: &[&str]) -> String {
    let mut out = String::new();
    for (k, v) in fields {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    out.push_str(&format!("# columns: {}\n", columns.join(" ")));
    out
}
