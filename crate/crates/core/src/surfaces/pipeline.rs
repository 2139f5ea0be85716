use rayon::prelude::*;

use super::decay::{er_decay, global_decay_factor, log_decay};
use super::log::log_edge_map_with;
use super::patches::{interpolate_with, patch_event_rates};
use super::{accumulate_histogram, DecayMap, Histogram, PatchGrid, SurfaceError, SurfaceState};
use crate::config::{Method, RepresentationConfig};
use crate::events::{elapsed_dt, EventWindow, SensorGeometry};
use crate::grid::Grid;
use crate::spectral::{
    nonrecursive_fft_grid_with, recursive_fft_grid_with, QuadTreeNode, SpectralCache,
};

/// Windows consumed to build up state before the first emitted frame.
pub const WARM_UP_WINDOWS: usize = 5;

/// Everything produced while integrating one window.
#[derive(Clone, Debug)]
pub struct StepOutput {
    pub histogram: Histogram,
    /// The decay field that multiplied the previous surface.
    pub decay: DecayMap,
    /// Patch statistics for the adaptive methods.
    pub patches: Option<PatchGrid>,
    /// Subdivision tree for the recursive spectral method.
    pub tree: Option<QuadTreeNode>,
}

/// `S <- H + d * S`, pixel by pixel.
pub fn update_surface(state: &mut SurfaceState, hist: &Histogram, decay: &DecayMap) -> Result<(), SurfaceError> {
    update_with(state, hist, decay, false)
}

fn check_shape(expected: (usize, usize), found: (usize, usize)) -> Result<(), SurfaceError> {
    if expected == found {
        Ok(())
    } else {
        Err(SurfaceError::ShapeMismatch { expected, found })
    }
}

fn update_with(state: &mut SurfaceState, hist: &Histogram, decay: &DecayMap, parallel: bool) -> Result<(), SurfaceError> {
    check_shape(state.values.shape(), hist.values.shape())?;
    check_shape(state.values.shape(), decay.values.shape())?;
    let s = state.values.as_mut_slice();
    let h = hist.values.as_slice();
    let d = decay.values.as_slice();
    let kernel = |(s, (&h, &d)): (&mut f64, (&i32, &f64))| *s = h as f64 + d * *s;
    if parallel {
        s.par_iter_mut().zip(h.par_iter().zip(d.par_iter())).for_each(kernel);
    } else {
        s.iter_mut().zip(h.iter().zip(d.iter())).for_each(kernel);
    }
    state.last_window_index = Some(hist.window_index);
    Ok(())
}

/// Event-rate patch decays for one window.
pub fn er_patch_grid(hist: &Histogram, dt: f64, config: &RepresentationConfig) -> PatchGrid {
    let geometry = hist.geometry();
    let rates = patch_event_rates(hist, dt, config.patch_size(geometry));
    er_patch_grid_from_rates(geometry, rates, dt, config)
}

/// Event-rate patch decays from precomputed rates (row-major, one per patch).
pub fn er_patch_grid_from_rates(
    geometry: SensorGeometry,
    rates: Vec<f64>,
    dt: f64,
    config: &RepresentationConfig,
) -> PatchGrid {
    let mut grid = PatchGrid::layout(geometry, config.patch_size(geometry));
    assert_eq!(rates.len(), grid.len(), "one rate per patch");
    grid.decays = rates
        .iter()
        .map(|&rate| er_decay(rate, config.lambda0, dt, config.tau, config.er_ratio_mode))
        .collect();
    grid.scores = rates;
    grid
}

/// LoG patch scores and their sigmoid decays.
pub fn log_patch_grid(hist: &Histogram, config: &RepresentationConfig) -> PatchGrid {
    log_patch_grid_with(hist, config, false)
}

fn log_patch_grid_with(hist: &Histogram, config: &RepresentationConfig, parallel: bool) -> PatchGrid {
    let geometry = hist.geometry();
    let edges = log_edge_map_with(&hist.values, parallel);
    let mut grid = PatchGrid::layout(geometry, config.patch_size(geometry));
    let cells: Vec<_> = grid.cells().collect();
    grid.scores = if parallel {
        cells.par_iter().map(|&c| edges.mean_abs(c)).collect()
    } else {
        cells.iter().map(|&c| edges.mean_abs(c)).collect()
    };
    grid.decays = grid
        .scores
        .iter()
        .map(|&s| log_decay(s, config.tau, config.a))
        .collect();
    grid
}

/// Integrates one window into `state` with the configured method.
///
/// `prev` times the decay interval; without it one window period is assumed.
/// The histogram method is the zero-decay case: the surface becomes the
/// window's histogram and the reported decay map is all zeros.
pub fn build_representation(
    state: &mut SurfaceState,
    window: &EventWindow,
    prev: Option<&EventWindow>,
    config: &RepresentationConfig,
) -> Result<StepOutput, SurfaceError> {
    let geometry = SensorGeometry {
        width: state.values.width(),
        height: state.values.height(),
    };
    build_with(state, window, prev, config, geometry, false, SpectralCache::global())
}

fn build_with(
    state: &mut SurfaceState,
    window: &EventWindow,
    prev: Option<&EventWindow>,
    config: &RepresentationConfig,
    geometry: SensorGeometry,
    parallel: bool,
    cache: &SpectralCache,
) -> Result<StepOutput, SurfaceError> {
    config.validate_for(geometry)?;
    let dt = match prev {
        Some(p) => elapsed_dt(p, window)?,
        None => 1.0 / window.frequency().as_f64(),
    };
    let histogram = accumulate_histogram(window, geometry);
    let mut patches = None;
    let mut tree = None;
    let decay = match config.method {
        Method::Histogram => {
            let decay = DecayMap::constant(geometry, 0.0);
            for (s, &h) in state.values.as_mut_slice().iter_mut().zip(histogram.values.as_slice()) {
                *s = h as f64;
            }
            state.last_window_index = Some(window.index);
            state.warmup_remaining = state.warmup_remaining.saturating_sub(1);
            return Ok(StepOutput {
                histogram,
                decay,
                patches,
                tree,
            });
        }
        Method::GlobalLi => DecayMap::constant(geometry, global_decay_factor(dt, config.tau)?),
        Method::LadsEr => {
            let grid = er_patch_grid(&histogram, dt, config);
            let map = interpolate_with(&grid, parallel);
            patches = Some(grid);
            map
        }
        Method::LadsLog => {
            let grid = log_patch_grid_with(&histogram, config, parallel);
            let map = interpolate_with(&grid, parallel);
            patches = Some(grid);
            map
        }
        Method::LadsFft => {
            let grid = if config.fft_recursive {
                let (t, grid) = recursive_fft_grid_with(&histogram, config, cache, parallel);
                tree = Some(t);
                grid
            } else {
                nonrecursive_fft_grid_with(&histogram, config, cache, parallel)
            };
            let map = interpolate_with(&grid, parallel);
            patches = Some(grid);
            map
        }
    };
    update_with(state, &histogram, &decay, parallel)?;
    state.warmup_remaining = state.warmup_remaining.saturating_sub(1);
    Ok(StepOutput {
        histogram,
        decay,
        patches,
        tree,
    })
}

/// `clamp(v, -clip, clip) / clip`.
#[inline]
pub fn clip_normalize_value(v: f64, clip: f64) -> f64 {
    v.clamp(-clip, clip) / clip
}

/// Saturates the surface to `[-clip, clip]` and scales it into `[-1, 1]`.
pub fn clip_normalize(values: &Grid<f64>, clip: f64) -> Grid<f32> {
    values.map(|&v| clip_normalize_value(v, clip) as f32)
}

/// Runs the first `n` windows through a fresh state and returns it.
pub fn warm_up<'a>(
    windows: impl IntoIterator<Item = &'a EventWindow>,
    n: usize,
    config: &RepresentationConfig,
    geometry: SensorGeometry,
) -> Result<SurfaceState, SurfaceError> {
    let mut p = Pipeline::new(config.clone(), geometry)?;
    let mut seen = 0;
    for w in windows.into_iter().take(n) {
        p.step(w)?;
        seen += 1;
    }
    if seen < n {
        return Err(SurfaceError::WarmUpShortfall {
            needed: n,
            available: seen,
        });
    }
    Ok(p.state)
}

/// Sequential integrator for one stream: owns the surface and remembers the
/// previous window's timing.
#[derive(Debug)]
pub struct Pipeline {
    config: RepresentationConfig,
    geometry: SensorGeometry,
    state: SurfaceState,
    prev: Option<EventWindow>,
    parallel: bool,
    cache: &'static SpectralCache,
}

impl Pipeline {
    pub fn new(config: RepresentationConfig, geometry: SensorGeometry) -> Result<Self, SurfaceError> {
        config.validate_for(geometry)?;
        Ok(Self {
            config,
            geometry,
            state: SurfaceState::new(geometry),
            prev: None,
            parallel: false,
            cache: SpectralCache::global(),
        })
    }

    /// Scores patches and interpolates rows on the rayon pool. Output is
    /// bit-identical to the sequential path.
    pub fn parallel(mut self, on: bool) -> Self {
        self.parallel = on;
        self
    }

    pub fn config(&self) -> &RepresentationConfig {
        &self.config
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn state(&self) -> &SurfaceState {
        &self.state
    }

    pub fn into_state(self) -> SurfaceState {
        self.state
    }

    pub fn step(&mut self, window: &EventWindow) -> Result<StepOutput, SurfaceError> {
        let out = build_with(
            &mut self.state,
            window,
            self.prev.as_ref(),
            &self.config,
            self.geometry,
            self.parallel,
            self.cache,
        )?;
        self.prev = Some(window.timing_only());
        Ok(out)
    }

    /// Current surface, clipped and scaled into `[-1, 1]`.
    pub fn frame(&self) -> Grid<f32> {
        clip_normalize(&self.state.values, self.config.clip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Dataset;
    use crate::events::{window_events, Event, Frequency, Polarity};

    fn geom() -> SensorGeometry {
        SensorGeometry::new(16, 12).unwrap()
    }

    fn windows() -> Vec<EventWindow> {
        let events: Vec<Event> = (0..300)
            .map(|i| Event::new((i * 7 % 16) as u16, (i * 5 % 12) as u16, i * 1_000, Polarity::from_sign(i % 3 != 0)))
            .collect();
        window_events(&events, Frequency::hz(30), 0).unwrap()
    }

    #[test]
    fn zero_prior_gives_histogram() {
        let w = &windows()[0];
        let h = accumulate_histogram(w, geom());
        let mut s = SurfaceState::new(geom());
        update_surface(&mut s, &h, &DecayMap::constant(geom(), 0.7)).unwrap();
        assert_eq!(s.values, h.values.map(|&v| v as f64));
    }

    #[test]
    fn shape_mismatch() {
        let mut s = SurfaceState::new(geom());
        let h = Histogram::zeros(SensorGeometry::new(3, 3).unwrap(), 0);
        assert!(matches!(
            update_surface(&mut s, &h, &DecayMap::constant(geom(), 1.0)),
            Err(SurfaceError::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn histogram_method_matches_accumulation() {
        let ws = windows();
        let c = RepresentationConfig::from_preset(Method::Histogram, Dataset::Fes, 30.0);
        let mut p = Pipeline::new(c, geom()).unwrap();
        for w in &ws {
            let out = p.step(w).unwrap();
            assert_eq!(p.state().values, accumulate_histogram(w, geom()).values.map(|&v| v as f64));
            assert!(out.decay.values.as_slice().iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn clip() {
        assert_eq!(clip_normalize_value(7.0, 5.0), 1.0);
        assert_eq!(clip_normalize_value(-2.5, 5.0), -0.5);
        let x = 3.3;
        let once = clip_normalize_value(x, 5.0);
        assert_eq!(clip_normalize_value(once * 5.0, 5.0), once);
    }

    #[test]
    fn warm_up_equivalence() {
        let ws = windows();
        assert!(ws.len() >= 6);
        for method in Method::ALL {
            let c = RepresentationConfig::from_preset(method, Dataset::Blink, 30.0);
            let mut p = Pipeline::new(c.clone(), geom()).unwrap();
            for w in &ws[..6] {
                p.step(w).unwrap();
            }
            let warmed = warm_up(&ws[..5], 5, &c, geom()).unwrap();
            let mut state = warmed;
            build_representation(&mut state, &ws[5], Some(&ws[4]), &c).unwrap();
            assert_eq!(&state, p.state(), "{method}");
        }
    }

    #[test]
    fn warm_up_edge_cases() {
        let c = RepresentationConfig::default();
        assert_eq!(warm_up(&[], 0, &c, geom()).unwrap(), SurfaceState::new(geom()));
        let empty: Vec<EventWindow> = (0..5).map(|k| EventWindow::empty(k, Frequency::hz(30), 0)).collect();
        let s = warm_up(&empty, 5, &c, geom()).unwrap();
        assert!(s.values.as_slice().iter().all(|&v| v == 0.0));
        assert!(matches!(
            warm_up(&empty[..3], 5, &c, geom()),
            Err(SurfaceError::WarmUpShortfall { needed: 5, available: 3 })
        ));
    }

    #[test]
    fn parallel_path_is_bit_identical() {
        let ws = windows();
        for method in Method::ALL {
            let c = RepresentationConfig::from_preset(method, Dataset::Fes, 30.0);
            let mut a = Pipeline::new(c.clone(), geom()).unwrap();
            let mut b = Pipeline::new(c, geom()).unwrap().parallel(true);
            for w in &ws {
                let da = a.step(w).unwrap().decay;
                let db = b.step(w).unwrap().decay;
                assert_eq!(da, db);
            }
            assert_eq!(a.state(), b.state());
        }
    }
}
