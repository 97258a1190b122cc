//! Reading and writing re-identification record files.
//!
//! A record file is comma-separated text with the header
//! `upstream_time,downstream_time`. Times are decimal hours from local
//! midnight (`6.6`) or clock times (`06:36`). Lines starting with `#` are
//! ignored.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use twopoint_core::{Dataset, SurveyWindows, TimeTimePoint};

use crate::error::{CliError, CliResult};

pub const HEADER: [&str; 2] = ["upstream_time", "downstream_time"];

/// Parses `6.6`, `06:36` or `6:36` into decimal hours.
pub fn parse_time(s: &str) -> Option<f64> {
    let s = s.trim();
    let value = match s.split_once(':') {
        Some((h, m)) => {
            if h.is_empty() || m.len() != 2 || !h.bytes().all(|b| b.is_ascii_digit()) || !m.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let minutes: u32 = m.parse().ok()?;
            if minutes >= 60 {
                return None;
            }
            h.parse::<u32>().ok()? as f64 + minutes as f64 / 60.0
        }
        None => s.parse::<f64>().ok()?,
    };
    value.is_finite().then_some(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedRow {
    /// 1-based line number in the input file.
    pub line: u64,
    pub zone: String,
}

/// Records that fell inside the observable zone, plus what was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRecords {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub excluded: Vec<ExcludedRow>,
}

fn malformed(line: u64, content: &str, why: &str) -> CliError {
    CliError::Data(format!("malformed row at line {line} ({content:?}): {why}"))
}

/// Parses record text against `windows`. Rows outside the observable zone
/// are excluded and reported; malformed rows are errors.
pub fn parse_records_from<R: std::io::Read>(reader: R, windows: &SurveyWindows) -> CliResult<ParsedRecords> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::Data(format!("cannot read header: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(CliError::Data(format!(
            "expected header {:?}, found {:?}",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut points = Vec::new();
    let mut excluded = Vec::new();
    let mut rows_read = 0;
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::Data(format!("unreadable row: {e}")))?;
        let line = row.position().map_or(0, |p| p.line());
        let content = row.iter().collect::<Vec<_>>().join(",");
        if row.len() != 2 {
            return Err(malformed(line, &content, "expected two fields"));
        }
        let up = parse_time(&row[0]).ok_or_else(|| malformed(line, &content, "bad upstream time"))?;
        let down = parse_time(&row[1]).ok_or_else(|| malformed(line, &content, "bad downstream time"))?;
        if down <= up {
            return Err(malformed(line, &content, "downstream time must be after upstream time"));
        }
        rows_read += 1;
        let p = TimeTimePoint::new(up, down - up);
        let zone = windows.classify(p);
        if windows.is_observable(p) {
            points.push(p);
        } else {
            excluded.push(ExcludedRow { line, zone: zone.label().to_string() });
        }
    }
    if points.is_empty() {
        return Err(CliError::Data(format!(
            "no records inside the observable zone ({rows_read} rows read, {} excluded)",
            excluded.len()
        )));
    }
    Ok(ParsedRecords { dataset: Dataset::new(points, *windows)?, rows_read, excluded })
}

pub fn parse_records(path: &Path, windows: &SurveyWindows) -> CliResult<ParsedRecords> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_records_from(file, windows)
}

/// Writes records in the input format with shortest round-trip decimals.
pub fn write_records<W: Write>(out: W, records: &[TimeTimePoint]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record([r.x.to_string(), r.downstream_time().to_string()])?;
    }
    w.flush()
}
