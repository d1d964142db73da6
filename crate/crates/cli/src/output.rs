use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A fully computed report, renderable in every format.
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    /// Command-specific JSON body, merged after the header fields.
    pub body: Value,
    pub text: Vec<Table>,
    pub csv: Table,
}

pub struct Table {
    pub title: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            title: None,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn titled(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String], out: &mut String| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, &w)| format!("{c:<w$}"))
                .collect();
            out.push_str(padded.join("  ").trim_end());
            out.push('\n');
        };
        if let Some(title) = &self.title {
            out.push_str(title);
            out.push('\n');
        }
        line(&self.header, out);
        let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
        line(&rule, out);
        for row in &self.rows {
            line(row, out);
        }
    }
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut doc = json!({
                    "tool": "pdiqkd",
                    "version": VERSION,
                    "command": self.command,
                    "config": self.config,
                });
                if let (Value::Object(doc), Value::Object(body)) = (&mut doc, &self.body) {
                    doc.extend(body.clone());
                }
                let mut s = serde_json::to_string_pretty(&doc).map_err(CliError::internal)?;
                s.push('\n');
                Ok(s)
            }
            Format::Text => {
                let mut s = format!(
                    "pdiqkd {VERSION} {}\nconfig: {}\n",
                    self.command,
                    serde_json::to_string(&self.config).map_err(CliError::internal)?
                );
                for table in &self.text {
                    s.push('\n');
                    table.render(&mut s);
                }
                Ok(s)
            }
            Format::Csv => {
                let mut s = format!(
                    "# pdiqkd {VERSION} {}\n# config: {}\n",
                    self.command,
                    serde_json::to_string(&self.config).map_err(CliError::internal)?
                );
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.csv.header).map_err(CliError::internal)?;
                for row in &self.csv.rows {
                    w.write_record(row).map_err(CliError::internal)?;
                }
                let bytes = w.into_inner().map_err(CliError::internal)?;
                s.push_str(&String::from_utf8(bytes).map_err(CliError::internal)?);
                Ok(s)
            }
        }
    }
}

/// Writes `contents` to `path` via a temporary file in the same directory, or to stdout.
pub fn emit(contents: &str, path: Option<&Path>) -> Result<(), CliError> {
    let Some(path) = path else {
        let mut stdout = std::io::stdout().lock();
        return stdout
            .write_all(contents.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| CliError::Io(format!("stdout: {e}")));
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(CliError::internal)
}

/// Shortest round-trip decimal, or empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    v.map(|v| format!("{v}")).unwrap_or_default()
}
