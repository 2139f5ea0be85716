use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AnnotationError, FaceAnnotation, LANDMARKS};
use crate::events::{Frequency, US_PER_S};
use crate::metrics::{BoundingBox, Point};

/// Landmarks may overshoot the box by less than this fraction of its diagonal
/// and still be repaired.
pub const REPAIR_FRACTION: f64 = 0.10;
/// Allowed divergence between landmark and box motion, as a fraction of the
/// current box diagonal.
pub const SPATIOTEMPORAL_FRACTION: f64 = 0.20;
/// Samples excluded either side of a spatiotemporal failure.
pub const SPATIOTEMPORAL_MARGIN: usize = 5;
/// Samples excluded either side of an unrepairable landmark-outside-box failure.
pub const BOX_MARGIN: usize = 2;
pub const MIN_CLIP_SECONDS: u64 = 1;
/// A step longer than this many sample periods ends a clip.
pub const GAP_TOLERANCE: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailReason {
    DuplicateTimestamp,
    LandmarkCount,
    LandmarkOutsideBox,
    Topology,
    Spatiotemporal,
    MarginExclusion,
}

impl FailReason {
    pub const ALL: [FailReason; 6] = [
        FailReason::DuplicateTimestamp,
        FailReason::LandmarkCount,
        FailReason::LandmarkOutsideBox,
        FailReason::Topology,
        FailReason::Spatiotemporal,
        FailReason::MarginExclusion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailReason::DuplicateTimestamp => "duplicate_timestamp",
            FailReason::LandmarkCount => "landmark_count",
            FailReason::LandmarkOutsideBox => "landmark_outside_box",
            FailReason::Topology => "topology",
            FailReason::Spatiotemporal => "spatiotemporal",
            FailReason::MarginExclusion => "margin_exclusion",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Repaired {
        #[serde(rename = "box")]
        bbox: BoundingBox,
    },
    Fail {
        reason: FailReason,
    },
}

impl Verdict {
    pub fn fail(reason: FailReason) -> Self {
        Verdict::Fail { reason }
    }

    pub fn is_usable(&self) -> bool {
        !matches!(self, Verdict::Fail { .. })
    }

    pub fn reason(&self) -> Option<FailReason> {
        match self {
            Verdict::Fail { reason } => Some(*reason),
            _ => None,
        }
    }
}

fn ensure_sorted(samples: &[FaceAnnotation]) -> Result<(), AnnotationError> {
    for (i, w) in samples.windows(2).enumerate() {
        if w[1].t < w[0].t {
            return Err(AnnotationError::Unsorted {
                index: i + 1,
                t: w[1].t,
                prev: w[0].t,
            });
        }
    }
    Ok(())
}

/// Flags every sample that shares its timestamp with another, and every
/// sample without exactly five landmarks. Duplicates take precedence.
pub fn check_duplicates_and_counts(samples: &[FaceAnnotation]) -> Result<Vec<Option<FailReason>>, AnnotationError> {
    ensure_sorted(samples)?;
    let n = samples.len();
    Ok((0..n)
        .map(|i| {
            let dup = (i > 0 && samples[i - 1].t == samples[i].t)
                || (i + 1 < n && samples[i + 1].t == samples[i].t);
            if dup {
                Some(FailReason::DuplicateTimestamp)
            } else if samples[i].landmarks.len() != LANDMARKS {
                Some(FailReason::LandmarkCount)
            } else {
                None
            }
        })
        .collect())
}

/// Passes when all landmarks lie in the box. Otherwise, if the worst per-axis
/// overshoot is under a tenth of the diagonal, grows the box just enough.
pub fn check_landmarks_in_box(sample: &FaceAnnotation) -> Verdict {
    let b = sample.bbox;
    let overshoot = sample
        .landmarks
        .iter()
        .map(|p| {
            let ex = (b.x1 - p[0]).max(p[0] - b.x2).max(0.0);
            let ey = (b.y1 - p[1]).max(p[1] - b.y2).max(0.0);
            ex.max(ey)
        })
        .fold(0.0, f64::max);
    if overshoot == 0.0 {
        return Verdict::Pass;
    }
    if overshoot >= REPAIR_FRACTION * b.diagonal() {
        return Verdict::fail(FailReason::LandmarkOutsideBox);
    }
    let grown = sample.landmarks.iter().fold(b, |acc, p| {
        BoundingBox::new(acc.x1.min(p[0]), acc.y1.min(p[1]), acc.x2.max(p[0]), acc.y2.max(p[1]))
    });
    Verdict::Repaired { bbox: grown }
}

/// Left/right ordering, eyes above mouth on each side, and a nose position
/// check chosen by head pose. Image y grows downward.
pub fn check_topology(sample: &FaceAnnotation) -> Verdict {
    let fail = Verdict::fail(FailReason::Topology);
    let [le, re, nose, lm, rm]: [Point; 5] = match sample.landmarks.as_slice().try_into() {
        Ok(p) => p,
        Err(_) => return fail,
    };
    if le[0] >= re[0] || lm[0] >= rm[0] {
        return fail;
    }
    if le[1] >= lm[1] || re[1] >= rm[1] {
        return fail;
    }
    let vertical = (lm[1] - le[1]).abs() + (rm[1] - re[1]).abs();
    let horizontal = (re[0] - le[0]).abs() + (rm[0] - lm[0]).abs();
    let ok = if vertical > horizontal {
        let eye_y = (le[1] + re[1]) / 2.0;
        let mouth_y = (lm[1] + rm[1]) / 2.0;
        eye_y <= nose[1] && nose[1] <= mouth_y
    } else {
        le[0].min(lm[0]) <= nose[0] && nose[0] <= re[0].max(rm[0])
    };
    if ok {
        Verdict::Pass
    } else {
        fail
    }
}

fn centroid(points: &[Point]) -> Point {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    [sx / n, sy / n]
}

/// Fails when the landmark centroid and the box centre move apart by more
/// than a fifth of the current box diagonal between consecutive samples.
/// Boxes are taken as given, so pass repaired boxes where they exist.
pub fn check_spatiotemporal(
    prev: &FaceAnnotation,
    prev_box: &BoundingBox,
    curr: &FaceAnnotation,
    curr_box: &BoundingBox,
) -> Verdict {
    let (pc, cc) = (centroid(&prev.landmarks), centroid(&curr.landmarks));
    let (pb, cb) = (prev_box.center(), curr_box.center());
    let dx = (cc[0] - pc[0]) - (cb[0] - pb[0]);
    let dy = (cc[1] - pc[1]) - (cb[1] - pb[1]);
    if dx.hypot(dy) > SPATIOTEMPORAL_FRACTION * curr_box.diagonal() {
        Verdict::fail(FailReason::Spatiotemporal)
    } else {
        Verdict::Pass
    }
}

/// Excludes usable samples near spatiotemporal failures (five either side)
/// and unrepairable landmark-outside-box failures (two either side).
pub fn apply_margins(verdicts: &[Verdict]) -> Vec<Verdict> {
    let n = verdicts.len();
    let mut out = verdicts.to_vec();
    for (i, v) in verdicts.iter().enumerate() {
        let margin = match v.reason() {
            Some(FailReason::Spatiotemporal) => SPATIOTEMPORAL_MARGIN,
            Some(FailReason::LandmarkOutsideBox) => BOX_MARGIN,
            _ => continue,
        };
        for o in out.iter_mut().take((i + margin + 1).min(n)).skip(i.saturating_sub(margin)) {
            if o.is_usable() {
                *o = Verdict::fail(FailReason::MarginExclusion);
            }
        }
    }
    out
}

/// A maximal run of usable samples lasting at least one second.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clip {
    pub start_index: usize,
    /// Inclusive.
    pub end_index: usize,
    pub start_t: i64,
    pub end_t: i64,
    pub samples: usize,
    /// `samples / frequency`.
    pub duration_s: f64,
}

/// Splits the usable samples into runs, breaking at failures and at time gaps
/// longer than 1.5 periods. A run of `n` samples covers `n / f` seconds; runs
/// under one second are dropped.
pub fn segment_clips(times: &[i64], verdicts: &[Verdict], frequency: Frequency) -> Vec<Clip> {
    assert_eq!(times.len(), verdicts.len(), "one verdict per sample");
    let max_step = GAP_TOLERANCE * frequency.period_us();
    let mut clips = Vec::new();
    let mut start: Option<usize> = None;
    let close = |s: usize, e: usize, clips: &mut Vec<Clip>| {
        let n = (e - s + 1) as u64;
        if n * frequency.den() >= MIN_CLIP_SECONDS * frequency.num() {
            clips.push(Clip {
                start_index: s,
                end_index: e,
                start_t: times[s],
                end_t: times[e],
                samples: n as usize,
                duration_s: n as f64 / frequency.as_f64(),
            });
        }
    };
    for i in 0..times.len() {
        if !verdicts[i].is_usable() {
            if let Some(s) = start.take() {
                close(s, i - 1, &mut clips);
            }
            continue;
        }
        match start {
            Some(s) if (times[i] - times[i - 1]) as f64 > max_step => {
                close(s, i - 1, &mut clips);
                start = Some(i);
            }
            Some(_) => {}
            None => start = Some(i),
        }
    }
    if let Some(s) = start {
        close(s, times.len() - 1, &mut clips);
    }
    clips
}

/// Linear interpolation of box corners and landmarks at time `t`.
pub fn interpolate_labels(a: &FaceAnnotation, b: &FaceAnnotation, t: i64) -> Result<FaceAnnotation, AnnotationError> {
    if a.t >= b.t || t < a.t || t > b.t {
        return Err(AnnotationError::OutOfRange {
            t,
            start: a.t,
            end: b.t,
        });
    }
    if a.landmarks.len() != LANDMARKS || b.landmarks.len() != LANDMARKS {
        return Err(AnnotationError::Incomplete);
    }
    let s = (t - a.t) as f64 / (b.t - a.t) as f64;
    let lerp = |p: f64, q: f64| p + s * (q - p);
    let (ab, bb) = (a.bbox, b.bbox);
    Ok(FaceAnnotation {
        t,
        bbox: BoundingBox::new(lerp(ab.x1, bb.x1), lerp(ab.y1, bb.y1), lerp(ab.x2, bb.x2), lerp(ab.y2, bb.y2)),
        landmarks: a
            .landmarks
            .iter()
            .zip(&b.landmarks)
            .map(|(p, q)| [lerp(p[0], q[0]), lerp(p[1], q[1])])
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub index: usize,
    pub t: i64,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub samples: usize,
    pub pass: usize,
    pub repaired: usize,
    pub fail: usize,
    pub by_reason: std::collections::BTreeMap<String, usize>,
    pub clips: usize,
    pub clip_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub frequency: Frequency,
    pub samples: Vec<SampleReport>,
    pub clips: Vec<Clip>,
    pub totals: ReportTotals,
}

impl ValidationReport {
    pub fn verdicts(&self) -> Vec<Verdict> {
        self.samples.iter().map(|s| s.verdict).collect()
    }

    /// `index,t,reason` for every excluded sample.
    pub fn write_exclusions_csv(&self, w: impl Write) -> Result<(), AnnotationError> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "t", "reason"])?;
        for s in &self.samples {
            if let Some(r) = s.verdict.reason() {
                wtr.write_record([s.index.to_string(), s.t.to_string(), r.name().to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// `start_index,end_index,start_t,end_t,samples,duration_s` per clip.
    pub fn write_clips_csv(&self, w: impl Write) -> Result<(), AnnotationError> {
        let mut wtr = csv::Writer::from_writer(w);
        for c in &self.clips {
            wtr.serialize(c)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs every check in order, applies exclusion margins and cuts clips.
///
/// Per sample: duplicate timestamp, landmark count, landmarks in box (with
/// repair) and topology. Samples passing those are compared with the
/// previous such sample for spatiotemporal consistency.
pub fn filter_annotations(samples: &[FaceAnnotation], frequency: Frequency) -> Result<ValidationReport, AnnotationError> {
    let early = check_duplicates_and_counts(samples)?;
    let mut verdicts = Vec::with_capacity(samples.len());
    let mut prev: Option<(usize, BoundingBox)> = None;
    for (i, s) in samples.iter().enumerate() {
        if let Some(r) = early[i] {
            verdicts.push(Verdict::fail(r));
            continue;
        }
        let boxed = check_landmarks_in_box(s);
        let bbox = match boxed {
            Verdict::Fail { .. } => {
                verdicts.push(boxed);
                continue;
            }
            Verdict::Repaired { bbox } => bbox,
            Verdict::Pass => s.bbox,
        };
        if let v @ Verdict::Fail { .. } = check_topology(s) {
            verdicts.push(v);
            continue;
        }
        let motion = match prev {
            Some((j, pb)) => check_spatiotemporal(&samples[j], &pb, s, &bbox),
            None => Verdict::Pass,
        };
        prev = Some((i, bbox));
        verdicts.push(if motion.is_usable() { boxed } else { motion });
    }
    let verdicts = apply_margins(&verdicts);
    let times: Vec<i64> = samples.iter().map(|s| s.t).collect();
    let clips = segment_clips(&times, &verdicts, frequency);

    let mut totals = ReportTotals {
        samples: samples.len(),
        clips: clips.len(),
        clip_samples: clips.iter().map(|c| c.samples).sum(),
        ..ReportTotals::default()
    };
    for v in &verdicts {
        match v {
            Verdict::Pass => totals.pass += 1,
            Verdict::Repaired { .. } => totals.repaired += 1,
            Verdict::Fail { reason } => {
                totals.fail += 1;
                *totals.by_reason.entry(reason.name().to_string()).or_default() += 1;
            }
        }
    }
    Ok(ValidationReport {
        frequency,
        samples: samples
            .iter()
            .zip(&verdicts)
            .enumerate()
            .map(|(index, (s, &verdict))| SampleReport { index, t: s.t, verdict })
            .collect(),
        clips,
        totals,
    })
}

/// Timestamp of sample `k` in a run at `frequency` starting from `t0`.
pub fn sample_time(t0: i64, k: u64, frequency: Frequency) -> i64 {
    t0 + (k as i128 * US_PER_S as i128 * frequency.den() as i128 / frequency.num() as i128) as i64
}
