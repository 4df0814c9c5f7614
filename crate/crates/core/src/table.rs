//! Rectangular numeric tables and their CSV form.
//!
//! ```text
//! # design=B(17)
//! # grid=theta:-90..0:1
//! # units=deg,mm
//! theta_deg,r_pip_mm
//! -90,17
//! ```
//!
//! Metadata lines come first, sorted by key, with the column units last. Values
//! are written with at most 12 significant digits.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

const UNITS_KEY: &str = "units";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StudyTable {
    columns: Vec<Column>,
    rows: Vec<Vec<f64>>,
    metadata: BTreeMap<String, String>,
}

/// NaN cells compare equal so that tables survive a round trip.
impl PartialEq for StudyTable {
    fn eq(&self, other: &Self) -> bool {
        self.columns == other.columns
            && self.metadata == other.metadata
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.iter()
                    .zip(b)
                    .all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            })
    }
}

fn table_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Table {
        line,
        message: message.into(),
    })
}

fn check_token(what: &str, s: &str) -> Result<()> {
    if s.is_empty() {
        return table_err(0, format!("{what} is empty"));
    }
    if s.chars()
        .any(|c| c == ',' || c == '\n' || c == '\r' || c == '=' || c == '#')
    {
        return table_err(0, format!("{what} `{s}` contains a reserved character"));
    }
    Ok(())
}

/// Writes through a temporary sibling file and renames it into place, so a
/// reader never sees a partial file.
pub fn write_atomic(destination: &Path, text: &str) -> Result<()> {
    let file_name = destination
        .file_name()
        .ok_or_else(|| {
            Error::Io(std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                format!("`{}` is not a file path", destination.display()),
            ))
        })?
        .to_string_lossy()
        .into_owned();
    let tmp = destination.with_file_name(format!(".{file_name}.{}.tmp", std::process::id()));
    let written = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(text.as_bytes())?;
        f.sync_all()?;
        fs::rename(&tmp, destination)
    })();
    if let Err(e) = written {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// Rounds to 12 significant digits, the precision kept in CSV files.
pub fn round_sig12(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        let r = round_sig12(v);
        if r == 0.0 {
            "0".to_string()
        } else {
            r.to_string()
        }
    }
}

impl StudyTable {
    pub fn new(columns: &[(&str, &str)]) -> Self {
        let columns = columns
            .iter()
            .map(|(n, u)| Column::new(*n, *u))
            .collect();
        Self::with_columns(columns).expect("static column list is well formed")
    }

    pub fn with_columns(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return table_err(0, "a table needs at least one column");
        }
        for (i, c) in columns.iter().enumerate() {
            check_token("column name", &c.name)?;
            check_token("unit", &c.unit)?;
            if columns[..i].iter().any(|p| p.name == c.name) {
                return table_err(0, format!("duplicate column `{}`", c.name));
            }
        }
        Ok(Self {
            columns,
            rows: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return table_err(
                self.rows.len() + 1,
                format!("row has {} cells, table has {} columns", row.len(), self.columns.len()),
            );
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        check_token("metadata key", key)?;
        if key == UNITS_KEY {
            return table_err(0, "`units` is derived from the columns");
        }
        let value = value.into();
        if value.contains(['\n', '\r']) {
            return table_err(0, format!("metadata `{key}` spans several lines"));
        }
        self.metadata.insert(key.to_string(), value);
        Ok(())
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Copy with every value rounded as it would be by a CSV round trip.
    pub fn rounded(&self) -> Self {
        let mut t = self.clone();
        for row in &mut t.rows {
            for v in row {
                *v = round_sig12(*v);
            }
        }
        t
    }

    pub fn to_csv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.metadata {
            s.push_str(&format!("# {k}={v}\n"));
        }
        let units: Vec<&str> = self.columns.iter().map(|c| c.unit.as_str()).collect();
        s.push_str(&format!("# {UNITS_KEY}={}\n", units.join(",")));
        let names: Vec<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        s.push_str(&names.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| format_value(*v)).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    /// Writes the table atomically and returns the number of bytes written.
    pub fn export_csv(&self, destination: &Path) -> Result<usize> {
        let text = self.to_csv_string();
        write_atomic(destination, &text)?;
        Ok(text.len())
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        let mut units: Option<Vec<String>> = None;
        let mut lines = text.split_terminator('\n').enumerate().map(|(i, l)| (i + 1, l));
        let (header_line, header) = loop {
            let Some((n, line)) = lines.next() else {
                return table_err(0, "missing header row");
            };
            if line.contains('\r') {
                return table_err(n, "carriage return in line");
            }
            let Some(comment) = line.strip_prefix('#') else {
                break (n, line);
            };
            let comment = comment.strip_prefix(' ').unwrap_or(comment);
            let Some((key, value)) = comment.split_once('=') else {
                return table_err(n, "metadata line without `=`");
            };
            if key == UNITS_KEY {
                if units.is_some() {
                    return table_err(n, "duplicate units line");
                }
                units = Some(value.split(',').map(str::to_string).collect());
            } else {
                if check_token("metadata key", key).is_err() {
                    return table_err(n, format!("bad metadata key `{key}`"));
                }
                if metadata.insert(key.to_string(), value.to_string()).is_some() {
                    return table_err(n, format!("duplicate metadata key `{key}`"));
                }
            }
        };
        let names: Vec<&str> = header.split(',').collect();
        let Some(units) = units else {
            return table_err(header_line, "no units line before the header");
        };
        if units.len() != names.len() {
            return table_err(
                header_line,
                format!("{} units for {} columns", units.len(), names.len()),
            );
        }
        let columns = names
            .iter()
            .zip(units)
            .map(|(n, u)| Column::new(*n, u))
            .collect();
        let mut table = match Self::with_columns(columns) {
            Ok(t) => t,
            Err(Error::Table { message, .. }) => return table_err(header_line, message),
            Err(e) => return Err(e),
        };
        table.metadata = metadata;
        for (n, line) in lines {
            if line.contains('\r') {
                return table_err(n, "carriage return in line");
            }
            let row = line
                .split(',')
                .map(|cell| {
                    cell.parse::<f64>().or_else(|_| {
                        table_err(n, format!("`{cell}` is not a number"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != table.columns.len() {
                return table_err(
                    n,
                    format!("{} cells for {} columns", row.len(), table.columns.len()),
                );
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn import_csv(source: &Path) -> Result<Self> {
        let bytes = fs::read(source)?;
        let text = String::from_utf8(bytes).or_else(|_| table_err(0, "file is not UTF-8"))?;
        Self::from_csv_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> StudyTable {
        let mut t = StudyTable::new(&[("theta_deg", "deg"), ("r_mm", "mm")]);
        t.set_meta("design", "B(17)").unwrap();
        t.push_row(vec![-90.0, 17.0]).unwrap();
        t.push_row(vec![-45.5, 16.123456789012345]).unwrap();
        t.push_row(vec![0.0, f64::NAN]).unwrap();
        t
    }

    #[test]
    fn empty_table_is_header_and_metadata() {
        let mut t = StudyTable::new(&[("a", "mm")]);
        t.set_meta("k", "v").unwrap();
        assert_eq!(t.to_csv_string(), "# k=v\n# units=mm\na\n");
    }

    #[test]
    fn round_trip_keeps_twelve_digits() {
        let t = sample();
        let back = StudyTable::from_csv_str(&t.to_csv_string()).unwrap();
        assert_eq!(back, t.rounded());
        assert_eq!(back.rows()[1][1], 16.1234567890);
    }

    #[test]
    fn export_reports_bytes_and_reimports() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let t = sample();
        let n = t.export_csv(&path).unwrap();
        assert_eq!(n, fs::metadata(&path).unwrap().len() as usize);
        assert_eq!(StudyTable::import_csv(&path).unwrap(), t.rounded());
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let bad = [
            "a,b\n1,2\n",
            "# units=mm\na,b\n",
            "# units=mm,mm\na,b\n1\n",
            "# units=mm,mm\na,b\n1,x\n",
            "# units=mm,mm\na,a\n",
            "# nokey\n# units=mm\na\n",
        ];
        for text in bad {
            assert!(
                matches!(StudyTable::from_csv_str(text), Err(Error::Table { .. })),
                "{text:?}"
            );
        }
    }

    #[test]
    fn ragged_row_refused() {
        let mut t = StudyTable::new(&[("a", "mm"), ("b", "mm")]);
        assert!(t.push_row(vec![1.0]).is_err());
    }

    #[test]
    fn formatting_is_compact() {
        assert_eq!(format_value(17.0), "17");
        assert_eq!(format_value(-0.0), "0");
        assert_eq!(format_value(0.1 + 0.2), "0.3");
        assert_eq!(format_value(f64::NAN), "NaN");
    }
}
