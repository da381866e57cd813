use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AlarmEvent;
use crate::clustering::Mask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Independent,
    Dependent,
}

/// Column name to role. Columns missing from the map are ignored.
pub type Roles = BTreeMap<String, Role>;

pub fn read_roles(path: impl AsRef<Path>) -> Result<Roles> {
    let path = path.as_ref();
    let file = File::open(path)?;
    serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Data(format!("{}: invalid roles descriptor: {e}", path.display())))
}

/// Which CSV columns form a realization, in header order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLayout {
    pub columns: Vec<usize>,
    pub names: Vec<String>,
    pub mask: Mask,
}

impl CsvLayout {
    pub fn new(headers: &csv::StringRecord, roles: &Roles) -> Result<Self> {
        for name in roles.keys() {
            if !headers.iter().any(|h| h == name) {
                return Err(Error::Data(format!("roles name column `{name}` missing from the CSV header")));
            }
        }
        let mut columns = Vec::new();
        let mut names = Vec::new();
        let mut flags = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if let Some(role) = roles.get(h) {
                columns.push(i);
                names.push(h.to_string());
                flags.push(*role == Role::Independent);
            }
        }
        if !flags.iter().any(|f| !f) {
            return Err(Error::Data("roles declare no dependent column".into()));
        }
        let mask = Mask::new(flags).map_err(|_| Error::Data("roles declare no independent column".into()))?;
        Ok(CsvLayout { columns, names, mask })
    }
}

/// Streams realizations from a CSV file with a header row.
pub struct RealizationReader {
    reader: csv::Reader<File>,
    layout: CsvLayout,
    record: csv::StringRecord,
}

impl RealizationReader {
    pub fn open(path: impl AsRef<Path>, roles: &Roles) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let layout = CsvLayout::new(reader.headers()?, roles)?;
        Ok(RealizationReader { reader, layout, record: csv::StringRecord::new() })
    }

    pub fn layout(&self) -> &CsvLayout {
        &self.layout
    }

    /// Next realization, or `None` at end of file.
    pub fn next_realization(&mut self) -> Result<Option<Vec<f64>>> {
        if !self.reader.read_record(&mut self.record)? {
            return Ok(None);
        }
        let line = self.record.position().map(|p| p.line()).unwrap_or(0);
        let mut x = Vec::with_capacity(self.layout.columns.len());
        for (&c, name) in self.layout.columns.iter().zip(&self.layout.names) {
            let field = self
                .record
                .get(c)
                .ok_or_else(|| Error::Data(format!("line {line}: missing column `{name}`")))?;
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("line {line}: column `{name}`: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("line {line}: column `{name}` is not finite")));
            }
            x.push(v);
        }
        Ok(Some(x))
    }
}

/// Writes alarms as JSON Lines.
pub struct AlarmWriter<W: Write> {
    out: W,
}

impl<W: Write> AlarmWriter<W> {
    pub fn new(out: W) -> Self {
        AlarmWriter { out }
    }

    pub fn write(&mut self, alarm: &AlarmEvent) -> Result<()> {
        serde_json::to_writer(&mut self.out, alarm)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}
