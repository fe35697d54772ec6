//! CSV input for numeric samples and screening datasets.

use std::io::Read;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::inference::ScreenRow;

/// Whether the first CSV record holds column names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Header present iff some field of the first record is not a number.
    #[default]
    Auto,
    Present,
    Absent,
}

impl FromStr for HeaderMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(HeaderMode::Auto),
            "yes" | "true" | "present" => Ok(HeaderMode::Present),
            "no" | "false" | "absent" => Ok(HeaderMode::Absent),
            _ => Err(Error::InvalidParameter(format!("unknown header mode `{s}` (expected auto, yes or no)"))),
        }
    }
}

/// Column-major numeric table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NumericTable {
    pub names: Option<Vec<String>>,
    pub columns: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }
}

fn records<R: Read>(reader: R) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    rdr.records().map(|r| r.map_err(|e| Error::Data(e.to_string()))).collect()
}

fn has_header(first: &csv::StringRecord, skip: usize, mode: HeaderMode) -> bool {
    match mode {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => first.iter().skip(skip).any(|f| !f.is_empty() && f.parse::<f64>().is_err()),
    }
}

fn parse_value(field: &str, line: usize) -> Result<f64> {
    let x: f64 = field.parse().map_err(|_| Error::Data(format!("line {line}: cannot parse `{field}` as a number")))?;
    if !x.is_finite() {
        return Err(Error::Data(format!("line {line}: non-finite value `{field}`")));
    }
    Ok(x)
}

/// Reads a rectangular numeric CSV (no missing values).
pub fn read_numeric<R: Read>(reader: R, header: HeaderMode) -> Result<NumericTable> {
    let recs = records(reader)?;
    let Some(first) = recs.first() else {
        return Ok(NumericTable::default());
    };
    let skip = usize::from(has_header(first, 0, header));
    let width = first.len();
    let names = (skip == 1).then(|| first.iter().map(str::to_string).collect());
    let mut columns = vec![Vec::with_capacity(recs.len()); width];
    for (i, rec) in recs.iter().enumerate().skip(skip) {
        if rec.len() != width {
            return Err(Error::Data(format!("line {}: expected {width} fields, found {}", i + 1, rec.len())));
        }
        for (col, field) in columns.iter_mut().zip(rec.iter()) {
            col.push(parse_value(field, i + 1)?);
        }
    }
    Ok(NumericTable { names, columns })
}

/// Screening dataset: one row per feature, identifier in the first column.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScreenData {
    /// Response per column: numeric header values when present, otherwise
    /// the column positions `1..=T`.
    pub response: Vec<Option<f64>>,
    pub rows: Vec<ScreenRow>,
}

/// Reads a screening CSV; empty fields are missing values. In auto mode the
/// first record is a header if a value field is non-numeric or the id cell is
/// empty or `id`.
pub fn read_screen<R: Read>(reader: R, header: HeaderMode) -> Result<ScreenData> {
    let recs = records(reader)?;
    let Some(first) = recs.first() else {
        return Ok(ScreenData::default());
    };
    // Numeric time labels cannot be told apart from data, so an empty or
    // `id` first cell also marks a header.
    let id = first.get(0).unwrap_or("");
    let has = has_header(first, 1, header)
        || (header == HeaderMode::Auto && (id.is_empty() || id.eq_ignore_ascii_case("id")));
    let width = first.len();
    if width < 2 {
        return Err(Error::Data("screening data needs an id column and at least one value column".into()));
    }
    let t = width - 1;
    let mut response: Vec<Option<f64>> = (1..=t).map(|j| Some(j as f64)).collect();
    if has {
        let parsed: Vec<Option<f64>> = first.iter().skip(1).map(|f| f.parse::<f64>().ok()).collect();
        if parsed.iter().all(Option::is_some) {
            response = parsed;
        }
    }
    let mut rows = Vec::with_capacity(recs.len());
    for (i, rec) in recs.iter().enumerate().skip(usize::from(has)) {
        if rec.len() != width {
            return Err(Error::Data(format!("line {}: expected {width} fields, found {}", i + 1, rec.len())));
        }
        let values = rec
            .iter()
            .skip(1)
            .map(|f| if f.is_empty() { Ok(None) } else { parse_value(f, i + 1).map(Some) })
            .collect::<Result<_>>()?;
        rows.push(ScreenRow { id: rec[0].to_string(), values });
    }
    Ok(ScreenData { response, rows })
}
