//! Face annotations: parsing, validation and repair, clip segmentation and
//! temporal interpolation.

mod filter;

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{BoundingBox, Point};

pub use filter::{
    apply_margins, check_duplicates_and_counts, check_landmarks_in_box, check_spatiotemporal,
    check_topology, filter_annotations, interpolate_labels, sample_time, segment_clips, Clip, FailReason,
    ReportTotals, SampleReport, ValidationReport, Verdict, BOX_MARGIN, GAP_TOLERANCE,
    MIN_CLIP_SECONDS, REPAIR_FRACTION, SPATIOTEMPORAL_FRACTION, SPATIOTEMPORAL_MARGIN,
};

pub const LANDMARKS: usize = 5;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sample {index}: timestamp {t} precedes {prev}")]
    Unsorted { index: usize, t: i64, prev: i64 },
    #[error("t = {t} lies outside [{start}, {end}]")]
    OutOfRange { t: i64, start: i64, end: i64 },
    #[error("interpolation needs five landmarks on both endpoints")]
    Incomplete,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One labelled face at one timestamp. Landmarks are ordered left eye,
/// right eye, nose, left mouth corner, right mouth corner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceAnnotation {
    pub t: i64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub landmarks: Vec<Point>,
}

impl FaceAnnotation {
    fn check(self, line: usize) -> Result<Self, AnnotationError> {
        let bad = |message: String| AnnotationError::Parse { line, message };
        let b = self.bbox;
        if ![b.x1, b.y1, b.x2, b.y2].iter().all(|v| v.is_finite()) || !b.is_well_ordered() {
            return Err(bad(format!("box {:?} is not well ordered", <[f64; 4]>::from(b))));
        }
        if self.landmarks.len() > LANDMARKS {
            return Err(bad(format!("{} landmarks, at most 5 allowed", self.landmarks.len())));
        }
        if self.landmarks.iter().flatten().any(|v| !v.is_finite()) {
            return Err(bad("non-finite landmark coordinate".into()));
        }
        Ok(self)
    }
}

/// Reads `{"t": .., "box": [x1, y1, x2, y2], "landmarks": [[x, y], ..]}` lines.
pub fn read_jsonl(reader: impl BufRead) -> Result<Vec<FaceAnnotation>, AnnotationError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let a: FaceAnnotation = serde_json::from_str(&line).map_err(|e| AnnotationError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(a.check(i + 1)?);
    }
    Ok(out)
}

pub fn write_jsonl(mut w: impl Write, samples: &[FaceAnnotation]) -> Result<(), AnnotationError> {
    for s in samples {
        serde_json::to_writer(&mut w, s).map_err(std::io::Error::from)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

const CSV_HEADER: [&str; 15] = [
    "t", "x1", "y1", "x2", "y2", "lx0", "ly0", "lx1", "ly1", "lx2", "ly2", "lx3", "ly3", "lx4", "ly4",
];

/// Reads the column layout `t,x1,y1,x2,y2,lx0,ly0,...,lx4,ly4`. Missing
/// landmarks are left empty.
pub fn read_csv(reader: impl Read) -> Result<Vec<FaceAnnotation>, AnnotationError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return Err(AnnotationError::Parse {
            line: 1,
            message: format!("expected header `{}`", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |message: String| AnnotationError::Parse { line, message };
        if rec.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len())));
        }
        let num = |i: usize| -> Result<Option<f64>, AnnotationError> {
            let f = &rec[i];
            if f.is_empty() {
                return Ok(None);
            }
            f.parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("column `{}`: `{f}` is not a number", CSV_HEADER[i])))
        };
        let t = rec[0]
            .parse::<i64>()
            .map_err(|_| bad(format!("column `t`: `{}` is not an integer", &rec[0])))?;
        let mut corners = [0.0; 4];
        for (k, c) in corners.iter_mut().enumerate() {
            *c = num(1 + k)?.ok_or_else(|| bad(format!("column `{}` is empty", CSV_HEADER[1 + k])))?;
        }
        let mut landmarks = Vec::new();
        for k in 0..LANDMARKS {
            match (num(5 + 2 * k)?, num(6 + 2 * k)?) {
                (Some(x), Some(y)) => landmarks.push([x, y]),
                (None, None) => {}
                _ => return Err(bad(format!("landmark {k} has only one coordinate"))),
            }
        }
        out.push(
            FaceAnnotation {
                t,
                bbox: corners.into(),
                landmarks,
            }
            .check(line)?,
        );
    }
    Ok(out)
}

pub fn write_csv(w: impl Write, samples: &[FaceAnnotation]) -> Result<(), AnnotationError> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_HEADER)?;
    for s in samples {
        let mut row = vec![s.t.to_string()];
        row.extend(<[f64; 4]>::from(s.bbox).iter().map(f64::to_string));
        for k in 0..LANDMARKS {
            match s.landmarks.get(k) {
                Some(p) => row.extend([p[0].to_string(), p[1].to_string()]),
                None => row.extend([String::new(), String::new()]),
            }
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
