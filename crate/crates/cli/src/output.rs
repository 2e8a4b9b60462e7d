//! Output files. Every file starts with the effective configuration.

use std::fs;
use std::path::{Path, PathBuf};

use cavity_search::textio;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

pub struct Writer<'a> {
    config: &'a RunConfig,
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    pub fn create(config: &'a RunConfig) -> Result<Self, CliError> {
        let dir = config.out.clone();
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        let mut w = Self {
            config,
            dir,
            written: Vec::new(),
        };
        let echo = format!(
            "# effective configuration of a cavity-search {} run\n{}",
            config.command,
            config.to_toml()
        );
        w.write("effective_config.toml", &echo)?;
        Ok(w)
    }

    /// Header fields prepended to every columnar file.
    pub fn header(&self) -> Vec<(&'static str, String)> {
        vec![
            ("command", self.config.command.to_string()),
            ("config", self.config.to_json_line()),
        ]
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// Writes a columnar table as `<stem>.dat`, or as `<stem>.json` in the
    /// structured format.
    pub fn table(&mut self, stem: &str, text: &str) -> Result<(), CliError> {
        match self.config.format {
            Format::Text => self.write(&format!("{stem}.dat"), text),
            Format::Structured => {
                let value = self.structured_table(text)?;
                self.write(&format!("{stem}.json"), &pretty(&value))
            }
        }
    }

    /// Writes both forms regardless of the selected format.
    pub fn table_both(
        &mut self,
        stem: &str,
        text: &str,
        structured: Value,
    ) -> Result<(), CliError> {
        self.write(&format!("{stem}.dat"), text)?;
        let mut value = json!({ "config": self.config });
        value[stem] = structured;
        self.write(&format!("{stem}.json"), &pretty(&value))
    }

    pub fn summary<T: Serialize>(&mut self, summary: &T) -> Result<(), CliError> {
        let value = serde_json::to_value(summary).expect("summary serializes");
        match self.config.format {
            Format::Text => {
                let mut out = textio::header_block(&self.header(), &["key value"]);
                if let Value::Object(map) = &value {
                    for (k, v) in flatten("", map) {
                        out.push_str(&format!("{k} {v}\n"));
                    }
                }
                self.write("summary.txt", &out)
            }
            Format::Structured => {
                let doc = json!({ "config": self.config, "summary": value });
                self.write("summary.json", &pretty(&doc))
            }
        }
    }

    fn structured_table(&self, text: &str) -> Result<Value, CliError> {
        let mut header = Map::new();
        let mut columns = Vec::new();
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            if let Some((k, v)) = line.split_once(':') {
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "columns" => columns = v.split_whitespace().map(String::from).collect(),
                    "config" | "command" => {}
                    _ => {
                        header.insert(k.to_string(), parse_scalar(v));
                    }
                }
            }
        }
        let mut rows = Vec::new();
        for (line, fields) in textio::data_rows(text) {
            let row = fields
                .iter()
                .map(|f| textio::parse_num(f).map(|x| json!(x)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::Usage(format!("internal table line {line}: {e}")))?;
            rows.push(Value::Array(row));
        }
        Ok(json!({
            "config": self.config,
            "header": header,
            "columns": columns,
            "data": rows,
        }))
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn parse_scalar(v: &str) -> Value {
    match textio::parse_num(v) {
        Ok(x) if x.is_finite() => json!(x),
        _ => json!(v),
    }
}

fn flatten(prefix: &str, map: &Map<String, Value>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (k, v) in map {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Object(inner) => out.extend(flatten(&key, inner)),
            other => out.push((key, other.to_string())),
        }
    }
    out
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
