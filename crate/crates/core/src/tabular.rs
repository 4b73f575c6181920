//! Line-oriented text format shared by scenario files and learner snapshots.
//!
//! ```text
//! # comment (anything after '#' is ignored)
//! key = value
//!
//! [section]
//! 0.53 0.93 0.14
//! 0.16 0.70 0.78
//! ```
//!
//! `key = value` lines hold scalars; every other non-blank line is a row of
//! whitespace-separated numbers belonging to the most recent `[section]`.
//! Numbers use Rust's locale-independent `f64` grammar, and writing uses the
//! shortest representation that parses back to the same bits.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub line: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    scalars: BTreeMap<String, (usize, String)>,
    sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = Document::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::parse(line, "empty section name"));
                }
                if doc.section(name).is_some() {
                    return Err(Error::parse(line, format!("duplicate section [{name}]")));
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line,
                    rows: Vec::new(),
                });
            } else if let Some((key, value)) = content.split_once('=') {
                let key = key.trim();
                if key.is_empty() {
                    return Err(Error::parse(line, "missing key before '='"));
                }
                if doc.scalars.contains_key(key) {
                    return Err(Error::parse(line, format!("duplicate key `{key}`")));
                }
                doc.scalars
                    .insert(key.to_string(), (line, value.trim().to_string()));
            } else {
                let section = doc
                    .sections
                    .last_mut()
                    .ok_or_else(|| Error::parse(line, "numeric row outside of any [section]"))?;
                let values = content
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| Error::parse(line, format!("`{tok}` is not a number")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                section.rows.push(Row { line, values });
            }
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Raw scalar text and its line number.
    pub fn scalar(&self, key: &str) -> Option<(usize, &str)> {
        self.scalars.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn parse_scalar<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.scalar(key) {
            None => Ok(None),
            Some((line, text)) => text
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(line, format!("invalid value `{text}` for `{key}`"))),
        }
    }

    pub fn require_scalar<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.parse_scalar(key)?
            .ok_or_else(|| Error::parse(0, format!("missing key `{key}`")))
    }

    pub fn require_section(&self, name: &str) -> Result<&Section> {
        self.section(name)
            .ok_or_else(|| Error::parse(0, format!("missing section [{name}]")))
    }

    /// Reads `[name]` as a `rows × cols` matrix.
    pub fn matrix(&self, name: &str, rows: usize, cols: usize) -> Result<Matrix<f64>> {
        let section = self.require_section(name)?;
        if section.rows.len() != rows {
            let line = section.rows.last().map_or(section.line, |r| r.line);
            return Err(Error::parse(
                line,
                format!("[{name}] has {} rows, expected {rows}", section.rows.len()),
            ));
        }
        for row in &section.rows {
            if row.values.len() != cols {
                return Err(Error::parse(
                    row.line,
                    format!(
                        "[{name}] row has {} entries, expected {cols}",
                        row.values.len()
                    ),
                ));
            }
            if let Some(v) = row.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::parse(
                    row.line,
                    format!("[{name}] entry {v} is not finite"),
                ));
            }
        }
        let data: Vec<Vec<f64>> = section.rows.iter().map(|r| r.values.clone()).collect();
        Ok(if rows == 0 {
            Matrix::filled(0, cols, 0.0)
        } else {
            Matrix::from_rows(&data)
        })
    }

    /// Reads `[name]` as a vector written on a single row.
    pub fn vector(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        Ok(self.matrix(name, 1, len)?.row(0).to_vec())
    }

    /// Line of row `i` in section `name`, for diagnostics.
    pub fn row_line(&self, name: &str, i: usize) -> usize {
        self.section(name)
            .and_then(|s| s.rows.get(i))
            .map_or(0, |r| r.line)
    }
}

/// Builds documents in the same format.
#[derive(Debug, Default)]
pub struct Writer {
    out: String,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        let _ = writeln!(self.out, "# {text}");
        self
    }

    pub fn scalar(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn matrix(&mut self, name: &str, m: &Matrix<f64>) -> &mut Self {
        let _ = writeln!(self.out, "\n[{name}]");
        for i in 0..m.rows() {
            self.row(m.row(i));
        }
        self
    }

    pub fn vector(&mut self, name: &str, v: &[f64]) -> &mut Self {
        let _ = writeln!(self.out, "\n[{name}]");
        self.row(v);
        self
    }

    fn row(&mut self, values: &[f64]) {
        let line: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(self.out, "{}", line.join(" "));
    }

    pub fn finish(&mut self) -> String {
        std::mem::take(&mut self.out)
    }
}
