//! Row access for the small named-column CSV inputs.

use std::io::Read;

use crate::error::{Error, Result};

pub(crate) struct Row {
    pub line: usize,
    record: csv::StringRecord,
}

impl Row {
    pub fn text(&self, idx: usize, col: &str) -> Result<&str> {
        match self.record.get(idx) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(Error::Parse {
                row: self.line,
                column: col.into(),
                message: "empty value".into(),
            }),
        }
    }

    pub fn number(&self, idx: usize, col: &str) -> Result<f64> {
        let raw = self.text(idx, col)?;
        raw.parse::<f64>().map_err(|_| Error::Parse {
            row: self.line,
            column: col.into(),
            message: format!("`{raw}` is not a number"),
        })
    }
}

/// Reads all rows and returns them with the index of each requested column.
pub(crate) fn read_rows<const N: usize>(reader: impl Read, columns: [&str; N]) -> Result<([usize; N], Vec<Row>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: "header".into(),
            message: e.to_string(),
        })?
        .clone();
    let mut idx = [0; N];
    for (slot, col) in idx.iter_mut().zip(columns) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| Error::MissingColumn(col.into()))?;
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            row: e.position().map_or(0, |p| p.line() as usize),
            column: "record".into(),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        rows.push(Row { line, record });
    }
    Ok((idx, rows))
}
