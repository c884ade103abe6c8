//! Per-scan run records as CSV.
//!
//! Columns: `run_id, k, truth_alive, truth_x, truth_y, est_present, est_x,
//! est_y, ospa, event, step_micros`. Flags are 0/1, absent values are empty
//! fields, and reals are written in scientific notation with nine
//! significant digits.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lifecycle::Event;
use crate::types::{Position2, ScanIndex};
use crate::{Error, Result};

pub const HEADER: [&str; 11] = [
    "run_id",
    "k",
    "truth_alive",
    "truth_x",
    "truth_y",
    "est_present",
    "est_x",
    "est_y",
    "ospa",
    "event",
    "step_micros",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_id: u32,
    pub k: ScanIndex,
    pub truth: Option<Position2>,
    pub estimate: Option<Position2>,
    pub ospa: f64,
    pub event: Event,
    pub step_micros: Option<f64>,
}

/// Nine significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.8e}")
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

fn row(r: &RunRecord) -> [String; 11] {
    let coord = |p: Option<Position2>, f: fn(Position2) -> f64| p.map(|p| fmt_real(f(p))).unwrap_or_default();
    [
        r.run_id.to_string(),
        r.k.to_string(),
        flag(r.truth.is_some()).to_string(),
        coord(r.truth, |p| p.x),
        coord(r.truth, |p| p.y),
        flag(r.estimate.is_some()).to_string(),
        coord(r.estimate, |p| p.x),
        coord(r.estimate, |p| p.y),
        fmt_real(r.ospa),
        r.event.as_str().to_string(),
        r.step_micros.map(fmt_real).unwrap_or_default(),
    ]
}

pub fn write_records<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in records {
        w.write_record(row(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[RunRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_records(std::io::BufWriter::new(file), records)
}

struct Fields<'a> {
    rec: &'a csv::StringRecord,
    line: u64,
}

impl Fields<'_> {
    fn err(&self, message: String) -> Error {
        Error::Record {
            line: self.line,
            message,
        }
    }

    fn raw(&self, i: usize) -> &str {
        self.rec.get(i).unwrap_or("")
    }

    fn parse<T: std::str::FromStr>(&self, i: usize) -> Result<T> {
        self.raw(i)
            .trim()
            .parse()
            .map_err(|_| self.err(format!("bad {} value {:?}", HEADER[i], self.raw(i))))
    }

    fn real(&self, i: usize) -> Result<f64> {
        let v: f64 = self.parse(i)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(format!("non-finite {}", HEADER[i])))
        }
    }

    fn opt_real(&self, i: usize) -> Result<Option<f64>> {
        if self.raw(i).trim().is_empty() {
            Ok(None)
        } else {
            self.real(i).map(Some)
        }
    }

    fn flag(&self, i: usize) -> Result<bool> {
        match self.raw(i).trim() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.err(format!("{} must be 0 or 1, got {other:?}", HEADER[i]))),
        }
    }

    fn point(&self, flag: usize) -> Result<Option<Position2>> {
        let present = self.flag(flag)?;
        let (x, y) = (self.opt_real(flag + 1)?, self.opt_real(flag + 2)?);
        match (present, x, y) {
            (true, Some(x), Some(y)) => Ok(Some(Position2::new(x, y))),
            (false, None, None) => Ok(None),
            _ => Err(self.err(format!("{} disagrees with its coordinate fields", HEADER[flag]))),
        }
    }
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(HEADER.iter().copied()) {
        return Err(Error::Record {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let f = Fields { rec: &rec, line };
        if rec.len() != HEADER.len() {
            return Err(f.err(format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let event = Event::parse(f.raw(9).trim()).ok_or_else(|| f.err(format!("unknown event {:?}", f.raw(9))))?;
        out.push(RunRecord {
            run_id: f.parse(0)?,
            k: f.parse(1)?,
            truth: f.point(2)?,
            estimate: f.point(5)?,
            ospa: f.real(8)?,
            event,
            step_micros: f.opt_real(10)?,
        });
    }
    Ok(out)
}

pub fn read_records_file(path: &Path) -> Result<Vec<RunRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_records(std::io::BufReader::new(file))
}
