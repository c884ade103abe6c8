//! Scenario files: truth and frames of one run as CSV.
//!
//! Columns: `k, kind, x, y, vx, vy, omega, cxx, cxy, cyy`. Every scan opens
//! with a `scan` row, followed by at most one `truth` row (position,
//! velocity, optional turn rate) and any number of `meas` rows (position and
//! covariance). Reals use the shortest representation that round-trips
//! exactly, so a tracker run over a file reproduces the in-memory run.

use std::io::{Read, Write};
use std::path::Path;

use crate::simulator::{GroundTruth, Scenario, TruthState};
use crate::types::{Cov2, Measurement, MeasurementFrame, Position2, ScanIndex};
use crate::{Error, Result};

pub const HEADER: [&str; 10] = ["k", "kind", "x", "y", "vx", "vy", "omega", "cxx", "cxy", "cyy"];

pub fn write_scenario<W: Write>(out: W, scenario: &Scenario) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    let blank = String::new;
    for frame in &scenario.frames {
        let k = frame.k.to_string();
        w.write_record([&k, "scan", "", "", "", "", "", "", "", ""])?;
        if let Some(s) = scenario.truth.get(frame.k) {
            w.write_record([
                k.clone(),
                "truth".into(),
                s.pos.x.to_string(),
                s.pos.y.to_string(),
                s.vel[0].to_string(),
                s.vel[1].to_string(),
                s.turn_rate.map(|w| w.to_string()).unwrap_or_else(blank),
                blank(),
                blank(),
                blank(),
            ])?;
        }
        for m in &frame.points {
            w.write_record([
                k.clone(),
                "meas".into(),
                m.pos.x.to_string(),
                m.pos.y.to_string(),
                blank(),
                blank(),
                blank(),
                m.cov.xx().to_string(),
                m.cov.xy().to_string(),
                m.cov.yy().to_string(),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_scenario_file(path: &Path, scenario: &Scenario) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_scenario(std::io::BufWriter::new(file), scenario)
}

pub fn read_scenario<R: Read>(input: R) -> Result<Scenario> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    if rdr.headers()?.iter().map(str::trim).ne(HEADER.iter().copied()) {
        return Err(Error::Record {
            line: 1,
            message: format!("expected header {}", HEADER.join(",")),
        });
    }
    let mut frames: Vec<MeasurementFrame> = Vec::new();
    let mut truth: Vec<Option<TruthState>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Record { line, message };
        let num = |i: usize| -> Result<f64> {
            let s = rec.get(i).unwrap_or("").trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("bad {} value {s:?}", HEADER[i])))
        };
        let k: ScanIndex = rec
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| err("bad scan index".into()))?;
        let kind = rec.get(1).unwrap_or("").trim();
        if kind == "scan" {
            let expected = frames.len() as ScanIndex + 1;
            if k != expected {
                return Err(err(format!("scan {k} where scan {expected} was expected")));
            }
            frames.push(MeasurementFrame::empty(k));
            truth.push(None);
            continue;
        }
        if frames.last().map(|f| f.k) != Some(k) {
            return Err(err(format!("{kind} row for scan {k} outside its scan block")));
        }
        match kind {
            "truth" => {
                let slot = truth.last_mut().expect("scan row pushed");
                if slot.is_some() {
                    return Err(err(format!("second truth row for scan {k}")));
                }
                let omega = rec.get(6).unwrap_or("").trim();
                *slot = Some(TruthState {
                    pos: Position2::new(num(2)?, num(3)?),
                    vel: [num(4)?, num(5)?],
                    turn_rate: if omega.is_empty() { None } else { Some(num(6)?) },
                });
            }
            "meas" => {
                let cov = Cov2::from_rows([[num(7)?, num(8)?], [num(8)?, num(9)?]]);
                frames
                    .last_mut()
                    .expect("scan row pushed")
                    .points
                    .push(Measurement::new(Position2::new(num(2)?, num(3)?), cov));
            }
            other => return Err(err(format!("unknown row kind {other:?}"))),
        }
    }
    Ok(Scenario {
        truth: GroundTruth::new(truth),
        frames,
    })
}

pub fn read_scenario_file(path: &Path) -> Result<Scenario> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_scenario(std::io::BufReader::new(file))
}
