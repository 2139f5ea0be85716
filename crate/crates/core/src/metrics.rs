//! Landmark error, box overlap and single-class average precision.

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("crop must have positive area, got {w}x{h}")]
    EmptyCrop { w: f64, h: f64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("prediction `{0}` has no matching ground truth")]
    Unmatched(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Point = [f64; 2];

/// Axis-aligned box `(x1, y1)`-`(x2, y2)` in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from(v: [f64; 4]) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn is_well_ordered(&self) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point {
        [(self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0]
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x1 && p[0] <= self.x2 && p[1] >= self.y1 && p[1] <= self.y2
    }
}

/// Five predicted landmarks and the size of the crop the model saw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkPrediction {
    pub points: [Point; 5],
    pub crop_w: f64,
    pub crop_h: f64,
}

/// Normalised mean error in percent: mean point distance over
/// `sqrt(crop_w * crop_h)`, times 100.
pub fn nme(pred: &LandmarkPrediction, gt: &[Point; 5]) -> Result<f64, MetricsError> {
    if !(pred.crop_w > 0.0 && pred.crop_h > 0.0) {
        return Err(MetricsError::EmptyCrop {
            w: pred.crop_w,
            h: pred.crop_h,
        });
    }
    let sum: f64 = pred
        .points
        .iter()
        .zip(gt)
        .map(|(p, g)| (p[0] - g[0]).hypot(p[1] - g[1]))
        .sum();
    let mean = sum / pred.points.len() as f64;
    Ok(100.0 * mean / (pred.crop_w * pred.crop_h).sqrt())
}

/// Mean of per-sample NME, or `None` for no samples.
pub fn mean_nme<'a>(
    pairs: impl IntoIterator<Item = (&'a LandmarkPrediction, &'a [Point; 5])>,
) -> Result<Option<f64>, MetricsError> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (p, g) in pairs {
        total += nme(p, g)?;
        n += 1;
    }
    Ok((n > 0).then(|| total / n as f64))
}

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub confidence: f64,
}

pub const MAP_IOU_THRESHOLD: f64 = 0.5;

/// Average precision at IoU 0.5 over a set of images.
///
/// Detections from all images are ranked by confidence; each claims the
/// unmatched ground truth in its image with the highest IoU, if that IoU is at
/// least 0.5. Precision is integrated over recall under its monotone envelope.
/// Returns 0 when there is no ground truth.
pub fn map50(detections: &[Vec<Detection>], ground_truth: &[Vec<BoundingBox>]) -> f64 {
    let total_gt: usize = ground_truth.iter().map(Vec::len).sum();
    if total_gt == 0 {
        return 0.0;
    }
    let mut ranked: Vec<(usize, &Detection)> = detections
        .iter()
        .enumerate()
        .flat_map(|(img, ds)| ds.iter().map(move |d| (img, d)))
        .collect();
    ranked.sort_by(|a, b| b.1.confidence.total_cmp(&a.1.confidence));

    let mut claimed: Vec<Vec<bool>> = ground_truth.iter().map(|g| vec![false; g.len()]).collect();
    let mut tp = 0usize;
    let mut curve = Vec::with_capacity(ranked.len());
    for (k, (img, det)) in ranked.iter().enumerate() {
        let gts = ground_truth.get(*img).map(Vec::as_slice).unwrap_or(&[]);
        let best = gts
            .iter()
            .enumerate()
            .filter(|(j, _)| !claimed[*img][*j])
            .map(|(j, g)| (j, iou(&det.bbox, g)))
            .filter(|&(_, o)| o >= MAP_IOU_THRESHOLD)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((j, _)) = best {
            claimed[*img][j] = true;
            tp += 1;
        }
        curve.push((tp as f64 / total_gt as f64, tp as f64 / (k + 1) as f64));
    }

    let mut ap = 0.0;
    let mut envelope = 0.0f64;
    for i in (0..curve.len()).rev() {
        envelope = envelope.max(curve[i].1);
        let lower = if i == 0 { 0.0 } else { curve[i - 1].0 };
        ap += (curve[i].0 - lower) * envelope;
    }
    ap.clamp(0.0, 1.0)
}

/// One line of a detection file: `{"image": id, "box": [...], "confidence": c}`.
/// Ground-truth lines omit `confidence`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
}

/// One line of a landmark file. Ground-truth lines may omit the crop size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkRecord {
    pub id: String,
    pub points: [Point; 5],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_w: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crop_h: Option<f64>,
}

/// Parses JSON lines, skipping blank lines.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, MetricsError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| MetricsError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Groups detection and ground-truth records by image id (in first-seen order).
pub fn group_by_image(
    detections: &[DetectionRecord],
    ground_truth: &[DetectionRecord],
) -> (Vec<Vec<Detection>>, Vec<Vec<BoundingBox>>) {
    let mut index = std::collections::HashMap::new();
    for r in ground_truth.iter().chain(detections) {
        let next = index.len();
        index.entry(r.image.as_str()).or_insert(next);
    }
    let mut gts: Vec<Vec<BoundingBox>> = vec![Vec::new(); index.len()];
    let mut dets: Vec<Vec<Detection>> = vec![Vec::new(); index.len()];
    for r in ground_truth {
        gts[index[r.image.as_str()]].push(r.bbox);
    }
    for r in detections {
        dets[index[r.image.as_str()]].push(Detection {
            bbox: r.bbox,
            confidence: r.confidence.unwrap_or(0.0),
        });
    }
    (dets, gts)
}

/// Pairs predictions with ground truth by id and averages their NME.
pub fn landmark_nme(predictions: &[LandmarkRecord], ground_truth: &[LandmarkRecord]) -> Result<Option<f64>, MetricsError> {
    let gt: std::collections::HashMap<&str, &[Point; 5]> =
        ground_truth.iter().map(|r| (r.id.as_str(), &r.points)).collect();
    let mut pairs = Vec::with_capacity(predictions.len());
    for p in predictions {
        let g = gt.get(p.id.as_str()).ok_or_else(|| MetricsError::Unmatched(p.id.clone()))?;
        pairs.push((
            LandmarkPrediction {
                points: p.points,
                crop_w: p.crop_w.unwrap_or(0.0),
                crop_h: p.crop_h.unwrap_or(0.0),
            },
            *g,
        ));
    }
    mean_nme(pairs.iter().map(|(p, g)| (p, *g)))
}

/// Summary written by the metrics command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nme_percent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub landmark_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map50: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub images: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BoundingBox {
        BoundingBox::new(x1, y1, x2, y2)
    }

    #[test]
    fn nme_cases() {
        let gt = [[10.0, 10.0], [30.0, 10.0], [20.0, 20.0], [12.0, 30.0], [28.0, 30.0]];
        let same = LandmarkPrediction {
            points: gt,
            crop_w: 100.0,
            crop_h: 100.0,
        };
        assert_eq!(nme(&same, &gt).unwrap(), 0.0);
        let shifted = LandmarkPrediction {
            points: gt.map(|p| [p[0] + 3.0, p[1] + 4.0]),
            ..same.clone()
        };
        assert!((nme(&shifted, &gt).unwrap() - 5.0).abs() < 1e-12);
        let bad = LandmarkPrediction {
            crop_w: 0.0,
            ..same
        };
        assert!(nme(&bad, &gt).is_err());
    }

    #[test]
    fn iou_cases() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &bx(20.0, 20.0, 30.0, 30.0)), 0.0);
        assert_eq!(iou(&a, &bx(10.0, 0.0, 20.0, 10.0)), 0.0);
        assert_eq!(iou(&a, &bx(5.0, 0.0, 15.0, 10.0)), 1.0 / 3.0);
    }

    #[test]
    fn map_cases() {
        let g = vec![vec![bx(0.0, 0.0, 10.0, 10.0), bx(20.0, 0.0, 30.0, 10.0)]];
        let det = |b: BoundingBox, c| Detection { bbox: b, confidence: c };
        let perfect = vec![vec![det(g[0][0], 0.9), det(g[0][1], 0.8)]];
        assert_eq!(map50(&perfect, &g), 1.0);
        assert_eq!(map50(&[vec![]], &g), 0.0);
        let mixed = vec![vec![
            det(g[0][0], 0.9),
            det(bx(50.0, 50.0, 60.0, 60.0), 0.8),
            det(g[0][1], 0.7),
        ]];
        assert!((map50(&mixed, &g) - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
        assert_eq!(map50(&mixed, &[vec![]]), 0.0);
    }

    #[test]
    fn duplicate_detection_is_false_positive() {
        let g = vec![vec![bx(0.0, 0.0, 10.0, 10.0)]];
        let d = vec![vec![
            Detection { bbox: g[0][0], confidence: 0.9 },
            Detection { bbox: g[0][0], confidence: 0.8 },
        ]];
        assert_eq!(map50(&d, &g), 1.0);
        let late = vec![vec![
            Detection { bbox: bx(40.0, 40.0, 50.0, 50.0), confidence: 0.9 },
            Detection { bbox: g[0][0], confidence: 0.8 },
        ]];
        assert_eq!(map50(&late, &g), 0.5);
    }

    #[test]
    fn jsonl_grouping() {
        let dets: Vec<DetectionRecord> = read_jsonl(
            "{\"image\":\"b\",\"box\":[0,0,10,10],\"confidence\":0.5}\n\n{\"image\":\"a\",\"box\":[0,0,1,1],\"confidence\":0.9}\n"
                .as_bytes(),
        )
        .unwrap();
        let gts: Vec<DetectionRecord> =
            read_jsonl("{\"image\":\"a\",\"box\":[0,0,1,1]}\n".as_bytes()).unwrap();
        let (d, g) = group_by_image(&dets, &gts);
        assert_eq!(g, vec![vec![bx(0.0, 0.0, 1.0, 1.0)], vec![]]);
        assert_eq!(d[1][0].confidence, 0.5);
        assert_eq!(map50(&d, &g), 1.0);
        assert!(matches!(
            read_jsonl::<DetectionRecord>("{\"image\":1}".as_bytes()),
            Err(MetricsError::Parse { line: 1, .. })
        ));
    }
}
