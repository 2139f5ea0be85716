//! Patch scoring by high-frequency spectral energy, with a quadtree that
//! refines only where the score stays low.

mod quadtree;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Grid, Rect};

pub use quadtree::{nonrecursive_fft_grid, rasterize_quadtree, recursive_fft_grid, QuadTreeNode};
pub(crate) use quadtree::{nonrecursive_fft_grid_with, recursive_fft_grid_with};

/// `|FFT2|^2` of a patch with the zero-frequency bin moved to
/// `(height / 2, width / 2)`. The forward transform is unnormalised, so the
/// total equals `N * sum(h^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum {
    pub values: Grid<f64>,
}

impl PowerSpectrum {
    pub fn total(&self) -> f64 {
        self.values.as_slice().iter().sum()
    }
}

/// Which centred spectrum bins survive the high-pass: `false` for bins whose
/// Euclidean distance to the centre is at most `radius * max(height, width)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HighPassMask {
    pub height: usize,
    pub width: usize,
    pub radius: f64,
    /// Centred layout, row-major.
    pub keep: Grid<bool>,
    /// Same mask in unshifted frequency order, stored column-major to match
    /// the transform buffer.
    keep_unshifted_t: Vec<bool>,
    kept: usize,
}

#[inline]
fn centered_offset(u: usize, n: usize) -> i64 {
    ((u + n / 2) % n) as i64 - (n / 2) as i64
}

impl HighPassMask {
    pub fn new(height: usize, width: usize, radius: f64) -> Self {
        let limit = radius * height.max(width) as f64;
        let limit_sq = limit * limit;
        let keep = Grid::from_fn(width, height, |x, y| {
            let dy = y as i64 - (height / 2) as i64;
            let dx = x as i64 - (width / 2) as i64;
            ((dx * dx + dy * dy) as f64) > limit_sq
        });
        let mut keep_unshifted_t = Vec::with_capacity(width * height);
        for u in 0..width {
            let dx = centered_offset(u, width);
            for v in 0..height {
                let dy = centered_offset(v, height);
                keep_unshifted_t.push(((dx * dx + dy * dy) as f64) > limit_sq);
            }
        }
        let kept = keep.as_slice().iter().filter(|&&k| k).count();
        Self {
            height,
            width,
            radius,
            keep,
            keep_unshifted_t,
            kept,
        }
    }

    pub fn kept_bins(&self) -> usize {
        self.kept
    }
}

/// Shared high-pass masks and FFT plans. Lookups take a read lock; each key
/// is built and inserted at most once.
pub struct SpectralCache {
    masks: RwLock<HashMap<(usize, usize, u64), Arc<HighPassMask>>>,
    plans: RwLock<HashMap<usize, Arc<dyn Fft<f64>>>>,
    planner: Mutex<FftPlanner<f64>>,
}

impl std::fmt::Debug for SpectralCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralCache")
            .field("masks", &self.masks.read().map(|m| m.len()).unwrap_or(0))
            .finish()
    }
}

impl Default for SpectralCache {
    fn default() -> Self {
        Self {
            masks: RwLock::default(),
            plans: RwLock::default(),
            planner: Mutex::new(FftPlanner::new()),
        }
    }
}

impl SpectralCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache used by the convenience functions.
    pub fn global() -> &'static SpectralCache {
        static CACHE: OnceLock<SpectralCache> = OnceLock::new();
        CACHE.get_or_init(SpectralCache::new)
    }

    pub fn mask(&self, height: usize, width: usize, radius: f64) -> Arc<HighPassMask> {
        let key = (height, width, radius.to_bits());
        if let Some(m) = self.masks.read().expect("mask cache poisoned").get(&key) {
            return Arc::clone(m);
        }
        let mut masks = self.masks.write().expect("mask cache poisoned");
        Arc::clone(
            masks
                .entry(key)
                .or_insert_with(|| Arc::new(HighPassMask::new(height, width, radius))),
        )
    }

    pub fn cached_masks(&self) -> usize {
        self.masks.read().expect("mask cache poisoned").len()
    }

    fn plan(&self, len: usize) -> Arc<dyn Fft<f64>> {
        if let Some(p) = self.plans.read().expect("plan cache poisoned").get(&len) {
            return Arc::clone(p);
        }
        let mut plans = self.plans.write().expect("plan cache poisoned");
        Arc::clone(plans.entry(len).or_insert_with(|| {
            self.planner
                .lock()
                .expect("planner poisoned")
                .plan_fft_forward(len)
        }))
    }

    /// Unshifted power spectrum in column-major order (`[u * height + v]`).
    fn power_t(&self, height: usize, width: usize, sample: impl Fn(usize, usize) -> f64) -> Vec<f64> {
        let mut rows: Vec<Complex<f64>> = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                rows.push(Complex::new(sample(x, y), 0.0));
            }
        }
        self.plan(width).process(&mut rows);
        let mut cols = vec![Complex::new(0.0, 0.0); width * height];
        for y in 0..height {
            for x in 0..width {
                cols[x * height + y] = rows[y * width + x];
            }
        }
        self.plan(height).process(&mut cols);
        cols.into_iter().map(|c| c.norm_sqr()).collect()
    }

    /// High-frequency energy fraction of the patch given by `sample`, or 1
    /// when the patch carries no energy.
    fn hf_fraction(&self, height: usize, width: usize, radius: f64, sample: impl Fn(usize, usize) -> f64) -> f64 {
        let power = self.power_t(height, width, sample);
        let mask = self.mask(height, width, radius);
        let mut total = 0.0;
        let mut high = 0.0;
        for (p, &keep) in power.iter().zip(&mask.keep_unshifted_t) {
            total += p;
            if keep {
                high += p;
            }
        }
        if total > 0.0 {
            (high / total).min(1.0)
        } else {
            1.0
        }
    }

    /// Raw high-frequency fraction of a histogram region. All-zero regions
    /// skip the transform.
    pub fn region_score(&self, values: &Grid<i32>, region: Rect, radius: f64) -> f64 {
        let any = (region.y0..region.y1).any(|y| values.row(y)[region.x0..region.x1].iter().any(|&v| v != 0));
        if !any {
            return 1.0;
        }
        self.hf_fraction(region.height(), region.width(), radius, |x, y| {
            *values.get(region.x0 + x, region.y0 + y) as f64
        })
    }
}

pub fn power_spectrum(patch: &Grid<f64>) -> PowerSpectrum {
    let (w, h) = patch.shape();
    let power = SpectralCache::global().power_t(h, w, |x, y| *patch.get(x, y));
    let values = Grid::from_fn(w, h, |x, y| {
        let u = (x + w - w / 2) % w;
        let v = (y + h - h / 2) % h;
        power[u * h + v]
    });
    PowerSpectrum { values }
}

/// Fraction of spectral energy outside the low-frequency disc of radius
/// `r * max(height, width)`. A patch with no energy scores 1. With `invert`
/// the result is `1 - fraction`.
pub fn fft_decay(patch: &Grid<f64>, r: f64, invert: bool) -> f64 {
    let (w, h) = patch.shape();
    let any = patch.as_slice().iter().any(|&v| v != 0.0);
    let d = if any {
        SpectralCache::global().hf_fraction(h, w, r, |x, y| *patch.get(x, y))
    } else {
        1.0
    };
    if invert {
        1.0 - d
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_offsets_follow_fftshift() {
        assert_eq!((0..4).map(|u| centered_offset(u, 4)).collect::<Vec<_>>(), vec![0, 1, -2, -1]);
        assert_eq!((0..5).map(|u| centered_offset(u, 5)).collect::<Vec<_>>(), vec![0, 1, 2, -2, -1]);
    }

    #[test]
    fn constant_patch_has_single_centre_bin() {
        let p = Grid::filled(6, 4, 2.0);
        let s = power_spectrum(&p);
        assert!((*s.values.get(3, 2) - (2.0 * 24.0f64).powi(2)).abs() < 1e-9);
        let rest: f64 = s.total() - s.values.get(3, 2);
        assert!(rest.abs() < 1e-9);
        assert!(fft_decay(&p, 0.25, false) < 1e-12);
    }

    #[test]
    fn zero_patch_scores_one() {
        let p = Grid::new(8, 8);
        assert_eq!(fft_decay(&p, 0.25, false), 1.0);
        assert_eq!(fft_decay(&p, 0.25, true), 0.0);
        assert!(power_spectrum(&p).values.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_counts_kept_bins() {
        let mut p = Grid::new(8, 8);
        *p.get_mut(3, 5) = 1.0;
        let kept = (0..8i64)
            .flat_map(|y| (0..8i64).map(move |x| ((x - 4).pow(2) + (y - 4).pow(2)) as f64))
            .filter(|&d2| d2 > 4.0)
            .count();
        assert!((fft_decay(&p, 0.25, false) - kept as f64 / 64.0).abs() < 1e-12);
        assert_eq!(SpectralCache::new().mask(8, 8, 0.25).kept_bins(), kept);
    }

    #[test]
    fn radius_extremes() {
        let m0 = HighPassMask::new(5, 7, 0.0);
        assert_eq!(m0.kept_bins(), 34);
        assert!(!*m0.keep.get(3, 2));
        assert_eq!(HighPassMask::new(5, 7, 1.0).kept_bins(), 0);
    }

    #[test]
    fn mask_cache_inserts_once() {
        let cache = SpectralCache::new();
        let a = cache.mask(6, 6, 0.1);
        let b = cache.mask(6, 6, 0.1);
        assert!(Arc::ptr_eq(&a, &b));
        cache.mask(6, 7, 0.1);
        cache.mask(6, 6, 0.2);
        assert_eq!(cache.cached_masks(), 3);
    }
}
