//! Record sink: JSON lines or CSV with a header taken from the first record.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::ValueEnum;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, false)
    }
}

pub struct Sink {
    out: Box<dyn Write>,
    target: String,
    format: Format,
    header: Option<Vec<String>>,
}

impl Sink {
    pub fn open(path: Option<&Path>, format: Format) -> Result<Self, CliError> {
        let (out, target): (Box<dyn Write>, String) = match path {
            Some(p) => {
                let file = File::create(p).map_err(|source| CliError::Io { path: p.display().to_string(), source })?;
                (Box::new(BufWriter::new(file)), p.display().to_string())
            }
            None => (Box::new(BufWriter::new(io::stdout().lock())), "<stdout>".into()),
        };
        Ok(Sink { out, target, format, header: None })
    }

    pub fn emit(&mut self, record: &Map<String, Value>) -> Result<(), CliError> {
        let line = match self.format {
            Format::Json => serde_json::to_string(record).expect("maps of JSON values serialize"),
            Format::Csv => {
                let mut line = String::new();
                if self.header.is_none() {
                    let keys: Vec<String> = record.keys().cloned().collect();
                    line.push_str(&keys.iter().map(|k| csv_escape(k)).collect::<Vec<_>>().join(","));
                    line.push('\n');
                    self.header = Some(keys);
                }
                let header = self.header.as_ref().expect("set above");
                let cells: Vec<String> = header.iter().map(|k| csv_cell(record.get(k))).collect();
                line.push_str(&cells.join(","));
                line
            }
        };
        writeln!(self.out, "{line}").map_err(|e| self.io(e))
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| self.io(e))
    }

    fn io(&self, source: io::Error) -> CliError {
        CliError::Io { path: self.target.clone(), source }
    }
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => csv_escape(s),
        Some(v @ (Value::Array(_) | Value::Object(_))) => csv_escape(&v.to_string()),
        Some(v) => v.to_string(),
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn cells() {
        assert_eq!(csv_cell(Some(&json!(null))), "");
        assert_eq!(csv_cell(Some(&json!("m_dependent:1"))), "m_dependent:1");
        assert_eq!(csv_cell(Some(&json!({"a": 1, "b": 2}))), "\"{\"\"a\"\":1,\"\"b\"\":2}\"");
        assert_eq!(csv_cell(Some(&json!(0.25))), "0.25");
        assert_eq!(csv_cell(None), "");
    }

    #[test]
    fn format_names() {
        assert_eq!("csv".parse::<Format>().unwrap(), Format::Csv);
        assert!("xml".parse::<Format>().is_err());
    }
}
