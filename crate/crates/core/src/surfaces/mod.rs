//! Dense frame representations built window by window: the signed histogram,
//! the globally decayed surface and the three locally adaptive variants.

mod decay;
mod log;
mod patches;
mod pipeline;

use thiserror::Error;

use crate::config::ConfigError;
use crate::events::{EventError, EventWindow, SensorGeometry};
use crate::grid::Grid;

pub use decay::{er_decay, global_decay_factor, log_decay, ER_RATE_FLOOR};
pub use log::{log_edge_map, log_patch_score, LOG_KERNEL, LOG_SIGMA};
pub use patches::{interpolate_decay_map, patch_event_rates, BilinearField, PatchGrid};
pub use pipeline::{
    build_representation, clip_normalize, clip_normalize_value, er_patch_grid,
    er_patch_grid_from_rates, log_patch_grid, update_surface, warm_up, Pipeline, StepOutput,
    WARM_UP_WINDOWS,
};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("warm-up needs {needed} windows but only {available} were available")]
    WarmUpShortfall { needed: usize, available: usize },
    #[error(transparent)]
    Event(#[from] EventError),
}

/// Per-pixel signed polarity sums of one window, plus the raw event counts
/// used for rate estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub values: Grid<i32>,
    pub counts: Grid<u32>,
    pub window_index: u64,
}

impl Histogram {
    pub fn zeros(geometry: SensorGeometry, window_index: u64) -> Self {
        Self {
            values: Grid::new(geometry.width, geometry.height),
            counts: Grid::new(geometry.width, geometry.height),
            window_index,
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        SensorGeometry {
            width: self.values.width(),
            height: self.values.height(),
        }
    }

    pub fn total_events(&self) -> u64 {
        self.counts.as_slice().iter().map(|&c| c as u64).sum()
    }
}

/// Signed sum of polarities per pixel. Events must lie inside `geometry`.
pub fn accumulate_histogram(window: &EventWindow, geometry: SensorGeometry) -> Histogram {
    let mut h = Histogram::zeros(geometry, window.index);
    let w = geometry.width;
    let values = h.values.as_mut_slice();
    let counts = h.counts.as_mut_slice();
    for e in &window.events {
        let i = e.y as usize * w + e.x as usize;
        values[i] += e.p.sign();
        counts[i] += 1;
    }
    h
}

/// Per-pixel decay factors in `[0, 1]`, same shape as the sensor.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayMap {
    pub values: Grid<f64>,
}

impl DecayMap {
    pub fn constant(geometry: SensorGeometry, d: f64) -> Self {
        Self {
            values: Grid::filled(geometry.width, geometry.height, d),
        }
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .as_slice()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// The persistent integrated surface carried between windows.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceState {
    pub values: Grid<f64>,
    pub last_window_index: Option<u64>,
    pub warmup_remaining: usize,
}

impl SurfaceState {
    pub fn new(geometry: SensorGeometry) -> Self {
        Self::with_warm_up(geometry, 0)
    }

    pub fn with_warm_up(geometry: SensorGeometry, warmup: usize) -> Self {
        Self {
            values: Grid::new(geometry.width, geometry.height),
            last_window_index: None,
            warmup_remaining: warmup,
        }
    }

    pub fn is_warm(&self) -> bool {
        self.warmup_remaining == 0
    }
}
