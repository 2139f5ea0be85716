use rayon::prelude::*;

use crate::grid::{Grid, Rect};

/// Standard deviation of the smoothing Gaussian, pixels.
pub const LOG_SIGMA: f64 = 0.25;

/// 3x3 Laplacian-of-Gaussian kernel, row-major.
///
/// The 5-point Laplacian convolved with a normalised 3x3 Gaussian of
/// sigma 0.25, truncated to 3x3. With `e = exp(-1 / (2 sigma^2))`,
/// `g0 = 1 / (1 + 2e)` and `g1 = e g0`:
///
/// * edge   = `g0^2 + 2 g1^2 - 4 g0 g1`
/// * corner = `2 g0 g1 - 4 g1^2`
/// * centre = `-4 (edge + corner)`
///
/// The centre absorbs the mass lost to truncation so the kernel sums to zero
/// and flat regions produce no response.
pub const LOG_KERNEL: [[f64; 3]; 3] = [
    [LOG_CORNER, LOG_EDGE, LOG_CORNER],
    [LOG_EDGE, LOG_CENTER, LOG_EDGE],
    [LOG_CORNER, LOG_EDGE, LOG_CORNER],
];

const LOG_EDGE: f64 = 0.9973196717128388;
const LOG_CORNER: f64 = 0.0006695763423450463;
const LOG_CENTER: f64 = -3.991956992220735;

/// Convolves the histogram with [`LOG_KERNEL`], treating pixels beyond the
/// border as zero.
pub fn log_edge_map(values: &Grid<i32>) -> Grid<f64> {
    log_edge_map_with(values, false)
}

pub(crate) fn log_edge_map_with(values: &Grid<i32>, parallel: bool) -> Grid<f64> {
    let (w, h) = values.shape();
    let mut out = Grid::new(w, h);
    let src = values.as_slice();
    let row = |(y, dst): (usize, &mut [f64])| edge_row(src, w, h, y, dst);
    if parallel {
        out.as_mut_slice().par_chunks_mut(w).enumerate().for_each(row);
    } else {
        out.as_mut_slice().chunks_mut(w).enumerate().for_each(row);
    }
    out
}

fn edge_row(src: &[i32], w: usize, h: usize, y: usize, dst: &mut [f64]) {
    let row = |sy: usize| &src[sy * w..(sy + 1) * w];
    let mid = row(y);
    let up = (y > 0).then(|| row(y - 1));
    let down = (y + 1 < h).then(|| row(y + 1));
    let at = |r: Option<&[i32]>, x: isize| -> i64 {
        match r {
            Some(r) if x >= 0 && (x as usize) < w => r[x as usize] as i64,
            _ => 0,
        }
    };
    // Neighbour sums are exact in integers; one multiply per kernel weight.
    let slow = |x: usize| {
        let xi = x as isize;
        let edges = at(up, xi) + at(down, xi) + at(Some(mid), xi - 1) + at(Some(mid), xi + 1);
        let corners = at(up, xi - 1) + at(up, xi + 1) + at(down, xi - 1) + at(down, xi + 1);
        LOG_EDGE * edges as f64 + LOG_CORNER * corners as f64 + LOG_CENTER * mid[x] as f64
    };
    if w < 3 {
        for (x, out) in dst.iter_mut().enumerate() {
            *out = slow(x);
        }
        return;
    }
    dst[0] = slow(0);
    dst[w - 1] = slow(w - 1);
    match (up, down) {
        (Some(u), Some(d)) => {
            for x in 1..w - 1 {
                let edges = u[x] as i64 + d[x] as i64 + mid[x - 1] as i64 + mid[x + 1] as i64;
                let corners = u[x - 1] as i64 + u[x + 1] as i64 + d[x - 1] as i64 + d[x + 1] as i64;
                dst[x] = LOG_EDGE * edges as f64 + LOG_CORNER * corners as f64 + LOG_CENTER * mid[x] as f64;
            }
        }
        _ => {
            for (x, out) in dst.iter_mut().enumerate().take(w - 1).skip(1) {
                *out = slow(x);
            }
        }
    }
}

/// Mean absolute edge response over the patch.
pub fn log_patch_score(edge_map: &Grid<f64>, patch: Rect) -> f64 {
    edge_map.mean_abs(patch)
}
