use rayon::prelude::*;
use serde::Serialize;

use super::{DecayMap, Histogram};
use crate::events::SensorGeometry;
use crate::grid::{Grid, Rect};

/// Uniform lattice of square patches covering the sensor. The last row and
/// column are truncated when the sensor size is not a multiple of the patch
/// side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatchGrid {
    pub geometry: SensorGeometry,
    pub patch_size: usize,
    pub rows: usize,
    pub cols: usize,
    /// Method-specific patch statistic, row-major.
    pub scores: Vec<f64>,
    /// Decay factor per patch, row-major.
    pub decays: Vec<f64>,
}

impl PatchGrid {
    /// Lattice with zero scores and unit decays.
    pub fn layout(geometry: SensorGeometry, patch_size: usize) -> Self {
        let patch_size = patch_size.max(1);
        let cols = geometry.width.div_ceil(patch_size);
        let rows = geometry.height.div_ceil(patch_size);
        Self {
            geometry,
            patch_size,
            rows,
            cols,
            scores: vec![0.0; rows * cols],
            decays: vec![1.0; rows * cols],
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell(&self, row: usize, col: usize) -> Rect {
        let p = self.patch_size;
        Rect::new(
            col * p,
            row * p,
            ((col + 1) * p).min(self.geometry.width),
            ((row + 1) * p).min(self.geometry.height),
        )
    }

    /// Cell rectangles in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| self.cell(r, c)))
    }

    pub fn decay(&self, row: usize, col: usize) -> f64 {
        self.decays[row * self.cols + col]
    }

    /// Pixel coordinates of the cell centres along x and y.
    pub fn centers(&self) -> (Vec<f64>, Vec<f64>) {
        let xs = (0..self.cols).map(|c| self.cell(0, c).center().0).collect();
        let ys = (0..self.rows).map(|r| self.cell(r, 0).center().1).collect();
        (xs, ys)
    }
}

/// Events per pixel per second in every patch, from unsigned counts and the
/// true (possibly truncated) patch area.
pub fn patch_event_rates(hist: &Histogram, dt: f64, patch_size: usize) -> Vec<f64> {
    let grid = PatchGrid::layout(hist.geometry(), patch_size);
    let mut counts = vec![0u64; grid.len()];
    let p = grid.patch_size;
    for y in 0..hist.counts.height() {
        let row = hist.counts.row(y);
        let base = (y / p) * grid.cols;
        for (c, chunk) in row.chunks(p).enumerate() {
            counts[base + c] += chunk.iter().map(|&v| v as u64).sum::<u64>();
        }
    }
    grid.cells()
        .zip(counts)
        .map(|(rect, n)| (n as f64 / rect.area() as f64) / dt)
        .collect()
}

/// Bilinear interpolation between values sampled at patch centres.
/// Outside the outermost centres the nearest centre value is held.
#[derive(Clone, Debug)]
pub struct BilinearField<'a> {
    values: &'a [f64],
    cols: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

/// Neighbouring sample indices and the fractional position between them.
fn bracket(centers: &[f64], p: f64) -> (usize, usize, f64) {
    let n = centers.len();
    if n == 1 || p <= centers[0] {
        return (0, 0, 0.0);
    }
    if p >= centers[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let hi = centers.partition_point(|&c| c <= p);
    let lo = hi - 1;
    (lo, hi, (p - centers[lo]) / (centers[hi] - centers[lo]))
}

/// `a + t (b - a)`, kept inside `[min(a, b), max(a, b)]`.
#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    let v = a + t * (b - a);
    v.clamp(a.min(b), a.max(b))
}

impl<'a> BilinearField<'a> {
    pub fn new(grid: &'a PatchGrid) -> Self {
        let (xs, ys) = grid.centers();
        Self {
            values: &grid.decays,
            cols: grid.cols,
            xs,
            ys,
        }
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Value at a fractional pixel position.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let (c0, c1, tx) = bracket(&self.xs, x);
        let (r0, r1, ty) = bracket(&self.ys, y);
        let top = lerp(self.at(r0, c0), self.at(r0, c1), tx);
        let bottom = lerp(self.at(r1, c0), self.at(r1, c1), tx);
        lerp(top, bottom, ty)
    }

    /// Evaluates every pixel. Rows are blended horizontally once per patch
    /// row, then each pixel takes one vertical blend; the arithmetic matches
    /// [`BilinearField::sample`] exactly.
    pub fn rasterize(&self, width: usize, height: usize, parallel: bool) -> Grid<f64> {
        let columns: Vec<(usize, usize, f64)> =
            (0..width).map(|x| bracket(&self.xs, x as f64)).collect();
        let blended: Vec<Vec<f64>> = (0..self.ys.len())
            .map(|r| {
                columns
                    .iter()
                    .map(|&(c0, c1, tx)| lerp(self.at(r, c0), self.at(r, c1), tx))
                    .collect()
            })
            .collect();
        let mut out = Grid::new(width, height);
        let fill_row = |(y, row): (usize, &mut [f64])| {
            let (r0, r1, ty) = bracket(&self.ys, y as f64);
            let (top, bottom) = (&blended[r0], &blended[r1]);
            for x in 0..row.len() {
                row[x] = lerp(top[x], bottom[x], ty);
            }
        };
        if parallel {
            out.as_mut_slice()
                .par_chunks_mut(width)
                .enumerate()
                .for_each(fill_row);
        } else {
            out.as_mut_slice()
                .chunks_mut(width)
                .enumerate()
                .for_each(fill_row);
        }
        out
    }
}

/// Smooth per-pixel decay field from the patch decays.
pub fn interpolate_decay_map(grid: &PatchGrid) -> DecayMap {
    interpolate_with(grid, false)
}

pub(crate) fn interpolate_with(grid: &PatchGrid, parallel: bool) -> DecayMap {
    DecayMap {
        values: BilinearField::new(grid).rasterize(grid.geometry.width, grid.geometry.height, parallel),
    }
}
