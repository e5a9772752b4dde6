use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A CSV body with a block of `# key=value` header lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub header: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &str) -> Self {
        Self {
            header: Vec::new(),
            columns: columns.split(',').map(str::to_string).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.header.push((key.into(), value.to_string()));
    }

    /// Appends a comma-separated row.
    pub fn push_csv(&mut self, row: &str) {
        self.rows.push(row.split(',').map(str::to_string).collect());
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn column_f64(&self, name: &str) -> Result<Vec<f64>> {
        self.column(name)
            .ok_or_else(|| Error::Config(format!("no column {name:?}")))?
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    reason: format!("{name}: {s:?} is not a number"),
                })
            })
            .collect()
    }

    /// The column line and rows, without the header block.
    pub fn body(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in &self.header {
            writeln!(out, "# {k}={v}")?;
        }
        out.write_all(self.body().as_bytes())?;
        Ok(())
    }

    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut header = Vec::new();
        let mut columns = None;
        let mut rows = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if let Some(rest) = line.strip_prefix('#') {
                let (k, v) = rest.trim_start().split_once('=').ok_or_else(|| Error::Parse {
                    line: n + 1,
                    reason: "header line without '='".into(),
                })?;
                header.push((k.to_string(), v.to_string()));
            } else if columns.is_none() {
                columns = Some(line.split(',').map(str::to_string).collect::<Vec<_>>());
            } else if !line.is_empty() {
                let row: Vec<String> = line.split(',').map(str::to_string).collect();
                let width = columns.as_ref().map_or(0, Vec::len);
                if row.len() != width {
                    return Err(Error::Parse {
                        line: n + 1,
                        reason: format!("expected {width} fields, found {}", row.len()),
                    });
                }
                rows.push(row);
            }
        }
        Ok(Self {
            header,
            columns: columns.ok_or(Error::Parse {
                line: 0,
                reason: "missing column line".into(),
            })?,
            rows,
        })
    }

    pub fn save(&self, path: &Path, json: bool) -> Result<()> {
        let mut f = fs::File::create(path)?;
        self.write(&mut f)?;
        if json {
            let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
            fs::write(path.with_extension("json"), text)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let mut t = Table::new("a,b");
        t.meta("seed", 7);
        t.meta("model.name", "x=y");
        t.push_csv("1.0000000000000000e0,2");
        t.push_csv("3,4");
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = Table::read(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.header_value("model.name"), Some("x=y"));
        assert_eq!(back.column_f64("a").unwrap(), vec![1.0, 3.0]);
    }

    #[test]
    fn ragged_rows_fail() {
        assert!(Table::read("a,b\n1\n".as_bytes()).is_err());
    }
}
