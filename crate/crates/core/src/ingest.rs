//! Observation datasets in the `uid,lat,lon,timestamp_ms` CSV schema.
//!
//! The first line is either a header naming the four columns (any order,
//! extra columns ignored) or, when its first field parses as a number, the
//! first data row of a headerless file in `uid,lat,lon,timestamp_ms` order.

use std::fs;
use std::io::{self, Write};
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoError, GeoPoint};

/// One geotagged observation of one user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRecord {
    /// Opaque user identifier; never interpreted numerically.
    pub uid: String,
    pub point: GeoPoint,
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp_ms: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    FieldCount { expected: usize, found: usize },
    EmptyUid,
    BadLatitude,
    BadLongitude,
    OutOfRangeLatitude,
    OutOfRangeLongitude,
    BadTimestamp,
    NonPositiveTimestamp,
    InvalidUtf8,
    Unparseable,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RejectReason::FieldCount { expected, found } => {
                write!(f, "expected {expected} fields, found {found}")
            }
            RejectReason::EmptyUid => f.write_str("empty uid"),
            RejectReason::BadLatitude => f.write_str("latitude is not a number"),
            RejectReason::BadLongitude => f.write_str("longitude is not a number"),
            RejectReason::OutOfRangeLatitude => f.write_str("latitude outside [-90, 90]"),
            RejectReason::OutOfRangeLongitude => f.write_str("longitude outside [-180, 180]"),
            RejectReason::BadTimestamp => f.write_str("timestamp_ms is not an integer"),
            RejectReason::NonPositiveTimestamp => f.write_str("timestamp_ms must be positive"),
            RejectReason::InvalidUtf8 => f.write_str("row is not valid UTF-8"),
            RejectReason::Unparseable => f.write_str("row is not valid CSV"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowRejection {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input file not found: {0}")]
    FileNotFound(String),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("line {line}: {reason}")]
    RowError { line: u64, reason: RejectReason },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parsed observations plus bookkeeping about what was dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<ObservationRecord>,
    pub source_path: String,
    pub rejected_count: usize,
    pub rejections: Vec<RowRejection>,
}

impl Dataset {
    pub fn from_records(records: Vec<ObservationRecord>) -> Self {
        Self {
            records,
            source_path: String::new(),
            rejected_count: 0,
            rejections: Vec::new(),
        }
    }

    /// Rows seen after the header: accepted plus rejected.
    pub fn input_rows(&self) -> usize {
        self.records.len() + self.rejected_count
    }
}

pub const COLUMNS: [&str; 4] = ["uid", "lat", "lon", "timestamp_ms"];

#[derive(Debug, Clone, Copy)]
struct ColumnMap {
    uid: usize,
    lat: usize,
    lon: usize,
    ts: usize,
    width: usize,
}

impl ColumnMap {
    const POSITIONAL: ColumnMap = ColumnMap {
        uid: 0,
        lat: 1,
        lon: 2,
        ts: 3,
        width: 4,
    };

    fn from_header(fields: &csv::ByteRecord) -> Result<Self, IngestError> {
        let names: Vec<String> = fields
            .iter()
            .map(|f| {
                String::from_utf8_lossy(f)
                    .trim()
                    .trim_start_matches('\u{feff}')
                    .to_ascii_lowercase()
            })
            .collect();
        let find = |col: &str| -> Result<usize, IngestError> {
            let mut hits = names.iter().enumerate().filter(|(_, n)| n.as_str() == col);
            match (hits.next(), hits.next()) {
                (Some((i, _)), None) => Ok(i),
                (None, _) => Err(IngestError::MalformedHeader(format!(
                    "missing column {col:?}"
                ))),
                (Some(_), Some(_)) => Err(IngestError::MalformedHeader(format!(
                    "duplicate column {col:?}"
                ))),
            }
        };
        Ok(ColumnMap {
            uid: find("uid")?,
            lat: find("lat")?,
            lon: find("lon")?,
            ts: find("timestamp_ms")?,
            width: names.len(),
        })
    }
}

/// Read an observation file from disk.
pub fn read_observations(path: impl AsRef<FsPath>, strict: bool) -> Result<Dataset, IngestError> {
    let path = path.as_ref();
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(IngestError::FileNotFound(path.display().to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    parse_observations(&bytes, &path.display().to_string(), strict)
}

/// Parse observation CSV from memory.
pub fn parse_observations(
    bytes: &[u8],
    source_path: &str,
    strict: bool,
) -> Result<Dataset, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);

    let mut rows = reader.byte_records();
    let mut dataset = Dataset {
        records: Vec::new(),
        source_path: source_path.to_string(),
        rejected_count: 0,
        rejections: Vec::new(),
    };

    let first = match rows.next() {
        None => return Err(IngestError::MalformedHeader("empty input".into())),
        Some(Err(e)) => return Err(IngestError::MalformedHeader(e.to_string())),
        Some(Ok(rec)) => rec,
    };
    let first_is_data = first
        .get(0)
        .and_then(|f| std::str::from_utf8(f).ok())
        .is_some_and(|s| s.trim().parse::<f64>().is_ok());

    let columns = if first_is_data {
        let line = first.position().map_or(1, |p| p.line());
        dataset.accept(line, parse_row(&first, ColumnMap::POSITIONAL), strict)?;
        ColumnMap::POSITIONAL
    } else {
        ColumnMap::from_header(&first)?
    };

    loop {
        let line_hint = rows.reader().position().line();
        match rows.next() {
            None => break,
            Some(Ok(rec)) => {
                let line = rec.position().map_or(line_hint, |p| p.line());
                dataset.accept(line, parse_row(&rec, columns), strict)?;
            }
            Some(Err(e)) => {
                let line = e.position().map_or(line_hint, |p| p.line());
                dataset.accept(line, Err(RejectReason::Unparseable), strict)?;
            }
        }
    }
    Ok(dataset)
}

impl Dataset {
    fn accept(
        &mut self,
        line: u64,
        row: Result<ObservationRecord, RejectReason>,
        strict: bool,
    ) -> Result<(), IngestError> {
        match row {
            Ok(rec) => self.records.push(rec),
            Err(reason) if strict => return Err(IngestError::RowError { line, reason }),
            Err(reason) => {
                self.rejected_count += 1;
                self.rejections.push(RowRejection { line, reason });
            }
        }
        Ok(())
    }
}

fn parse_row(rec: &csv::ByteRecord, cols: ColumnMap) -> Result<ObservationRecord, RejectReason> {
    if rec.len() != cols.width {
        return Err(RejectReason::FieldCount {
            expected: cols.width,
            found: rec.len(),
        });
    }
    let field = |i: usize| -> Result<&str, RejectReason> {
        std::str::from_utf8(&rec[i])
            .map(str::trim)
            .map_err(|_| RejectReason::InvalidUtf8)
    };
    let uid = field(cols.uid)?;
    if uid.is_empty() {
        return Err(RejectReason::EmptyUid);
    }
    let lat: f64 = field(cols.lat)?
        .parse()
        .map_err(|_| RejectReason::BadLatitude)?;
    let lon: f64 = field(cols.lon)?
        .parse()
        .map_err(|_| RejectReason::BadLongitude)?;
    let timestamp_ms: i64 = field(cols.ts)?
        .parse()
        .map_err(|_| RejectReason::BadTimestamp)?;
    if timestamp_ms <= 0 {
        return Err(RejectReason::NonPositiveTimestamp);
    }
    let point = GeoPoint::new(lat, lon).map_err(|e| match e {
        GeoError::LongitudeOutOfRange(_) => RejectReason::OutOfRangeLongitude,
        _ => RejectReason::OutOfRangeLatitude,
    })?;
    Ok(ObservationRecord {
        uid: uid.to_string(),
        point,
        timestamp_ms,
    })
}

/// Write records with a `uid,lat,lon,timestamp_ms` header.
pub fn write_observations<W: Write>(records: &[ObservationRecord], out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in records {
        w.write_record([
            r.uid.as_str(),
            &r.point.lat().to_string(),
            &r.point.lon().to_string(),
            &r.timestamp_ms.to_string(),
        ])?;
    }
    w.flush()
}
