use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub label: String,
    pub value: f64,
}

/// Labelled block maxima in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(records: Vec<Record>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::Data("dataset is empty".into()));
        }
        if let Some(r) = records.iter().find(|r| !r.value.is_finite()) {
            return Err(Error::Data(format!("value for {} is not finite", r.label)));
        }
        Ok(Self { records })
    }

    /// Unlabelled values, labelled by position.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .enumerate()
                .map(|(i, &value)| Record {
                    label: (i + 1).to_string(),
                    value,
                })
                .collect(),
        )
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.value).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max(&self) -> &Record {
        self.records
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("nonempty")
    }

    pub fn min(&self) -> &Record {
        self.records
            .iter()
            .min_by(|a, b| a.value.total_cmp(&b.value))
            .expect("nonempty")
    }
}

/// Parse `label,value` rows. A first row whose value does not parse is
/// taken as a header; any later such row is an error with its line number.
pub fn parse_csv(input: impl Read) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(i + 1, |p| p.line() as usize);
            Error::DataLine {
                line,
                msg: e.to_string(),
            }
        })?;
        let line = row.position().map_or(i + 1, |p| p.line() as usize);
        if row.iter().all(str::is_empty) {
            continue;
        }
        if row.len() != 2 {
            return Err(Error::DataLine {
                line,
                msg: format!("expected 2 columns (label, value), found {}", row.len()),
            });
        }
        match row[1].parse::<f64>() {
            Ok(v) if v.is_finite() => records.push(Record {
                label: row[0].to_string(),
                value: v,
            }),
            Ok(v) => {
                return Err(Error::DataLine {
                    line,
                    msg: format!("value {v} is not finite"),
                })
            }
            Err(_) if i == 0 => {}
            Err(_) => {
                return Err(Error::DataLine {
                    line,
                    msg: format!("value {:?} is not a number", &row[1]),
                })
            }
        }
    }
    Dataset::new(records)
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_optional() {
        let a = parse_csv("year,value\n2009,51.2\n1993,316.1\n".as_bytes()).unwrap();
        let b = parse_csv("2009,51.2\n1993,316.1\n".as_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records()[0].label, "2009");
        assert_eq!(a.max().value, 316.1);
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let e = parse_csv("year,value\n2009,51.2\n2010,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::DataLine { line: 3, .. }), "{e}");
        let e = parse_csv("2009,51.2\n2010\n".as_bytes()).unwrap_err();
        assert!(matches!(e, Error::DataLine { line: 2, .. }), "{e}");
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_csv("".as_bytes()), Err(Error::Data(_))));
        assert!(matches!(parse_csv("year,value\n".as_bytes()), Err(Error::Data(_))));
    }
}
