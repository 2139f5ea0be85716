//! Seeded synthetic event streams for tests and benchmarks.
//!
//! Scenes model a sensor that emits a fixed number of events
//! (`events_per_change`) each time a pixel switches between the dark
//! background and a bright feature, with the sign of the switch as polarity.
//! Event times are jittered uniformly inside the interval where the switch
//! happens.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::{Event, Polarity, SensorGeometry, US_PER_S};
use crate::grid::Rect;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    /// A vertical edge sweeping back and forth across the middle half of
    /// the rows, between 1/8 and 7/8 of the width.
    MovingEdge,
    /// A face that slides down into place, holds still, then blinks once.
    Blink,
    /// Spatially and temporally uniform Poisson noise at `noise_rate`.
    StaticNoise,
    /// One defective pixel firing at `hot_pixel_rate`, alternating polarity.
    HotPixel,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [
        SceneKind::MovingEdge,
        SceneKind::Blink,
        SceneKind::StaticNoise,
        SceneKind::HotPixel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::MovingEdge => "moving_edge",
            SceneKind::Blink => "blink",
            SceneKind::StaticNoise => "static_noise",
            SceneKind::HotPixel => "hot_pixel",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scene `{s}`"))
    }
}

/// Timeline of the blink scene, in seconds from stream start.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlinkTiming {
    /// The face slides down into its resting place during `[0, motion_end_s)`.
    pub motion_end_s: f64,
    pub blink_start_s: f64,
    pub close_s: f64,
    pub open_s: f64,
}

impl BlinkTiming {
    pub fn blink_end_s(&self) -> f64 {
        self.blink_start_s + self.close_s + self.open_s
    }
}

impl Default for BlinkTiming {
    fn default() -> Self {
        Self {
            motion_end_s: 0.3,
            blink_start_s: 1.0,
            close_s: 0.1,
            open_s: 0.15,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneParams {
    pub events_per_change: u32,
    /// ev/px/s for `static_noise`.
    pub noise_rate: f64,
    /// px/s for `moving_edge`.
    pub edge_speed: f64,
    /// ev/s for `hot_pixel`.
    pub hot_pixel_rate: f64,
    pub blink: BlinkTiming,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self {
            events_per_change: 2,
            noise_rate: 1.0,
            edge_speed: 240.0,
            hot_pixel_rate: 2000.0,
            blink: BlinkTiming::default(),
        }
    }
}

impl SceneParams {
    /// Region that `moving_edge` may touch.
    pub fn edge_band(geometry: SensorGeometry) -> Rect {
        let (w, h) = (geometry.width, geometry.height);
        Rect::new(w / 8, h / 4, (7 * w / 8).max(w / 8 + 1).min(w), (3 * h / 4).max(h / 4 + 1).min(h))
    }

    pub fn hot_pixel(geometry: SensorGeometry) -> (u16, u16) {
        ((geometry.width / 3) as u16, (geometry.height / 3) as u16)
    }
}

/// Pixel layout of the blink scene's face at its resting position.
#[derive(Clone, Debug)]
pub struct BlinkLayout {
    /// Face outline ring; quiet after the approach motion.
    pub outline: Vec<(usize, usize)>,
    /// All bright features (outline, eye rims, brows, nose, mouth).
    pub features: Vec<(usize, usize)>,
    /// Eye interiors swept by the lids.
    pub eyes: [Rect; 2],
    /// Vertical distance the face travels during the approach.
    pub approach_px: usize,
}

impl BlinkLayout {
    pub fn new(geometry: SensorGeometry) -> Self {
        let (w, h) = (geometry.width as f64, geometry.height as f64);
        let s = (w / 480.0).min(h / 360.0);
        let (cx, cy) = (w / 2.0, h / 2.0);
        let mut features = HashSet::new();
        let mut outline = HashSet::new();
        let put = |set: &mut HashSet<(usize, usize)>, x: f64, y: f64| {
            let (xi, yi) = (x.round(), y.round());
            if xi >= 0.0 && yi >= 0.0 && xi < w && yi < h {
                set.insert((xi as usize, yi as usize));
            }
        };

        let (rx, ry) = (90.0 * s, 115.0 * s);
        let steps = (2.0 * std::f64::consts::PI * ry * 2.0).ceil() as usize + 8;
        for i in 0..steps {
            let th = i as f64 / steps as f64 * 2.0 * std::f64::consts::PI;
            for d in [0.0, 1.0] {
                put(&mut outline, cx + (rx - d) * th.cos(), cy + (ry - d) * th.sin());
            }
        }
        features.extend(outline.iter().copied());

        let eye_w = (34.0 * s).round().max(2.0) as usize;
        let eye_h = (14.0 * s).round().max(2.0) as usize;
        let eye_rect = |ecx: f64| {
            let x0 = (ecx - eye_w as f64 / 2.0).round().max(0.0) as usize;
            let y0 = (cy - 30.0 * s - eye_h as f64 / 2.0).round().max(0.0) as usize;
            Rect::new(
                x0,
                y0,
                (x0 + eye_w).min(geometry.width),
                (y0 + eye_h).min(geometry.height),
            )
        };
        let eyes = [eye_rect(cx - 38.0 * s), eye_rect(cx + 38.0 * s)];
        for eye in &eyes {
            // rim one pixel outside the interior
            let (x0, y0) = (eye.x0 as f64 - 1.0, eye.y0 as f64 - 1.0);
            let (x1, y1) = (eye.x1 as f64, eye.y1 as f64);
            let mut x = x0;
            while x <= x1 {
                put(&mut features, x, y0);
                put(&mut features, x, y1);
                x += 1.0;
            }
            let mut y = y0;
            while y <= y1 {
                put(&mut features, x0, y);
                put(&mut features, x1, y);
                y += 1.0;
            }
            // brow
            let by = y0 - 10.0 * s;
            let mut x = x0 - 3.0 * s;
            while x <= x1 + 3.0 * s {
                put(&mut features, x, by);
                put(&mut features, x, by - 1.0);
                x += 1.0;
            }
        }
        let mut y = cy - 10.0 * s;
        while y <= cy + 25.0 * s {
            put(&mut features, cx, y);
            y += 1.0;
        }
        let mut x = cx - 30.0 * s;
        while x <= cx + 30.0 * s {
            put(&mut features, x, cy + 55.0 * s);
            put(&mut features, x, cy + 56.0 * s);
            x += 1.0;
        }

        let mut features: Vec<_> = features.into_iter().collect();
        features.sort_unstable();
        let mut outline: Vec<_> = outline.into_iter().collect();
        outline.sort_unstable();
        Self {
            outline,
            features,
            eyes,
            approach_px: (24.0 * s).round().max(1.0) as usize,
        }
    }
}

/// Generates `scene` with default parameters. Deterministic per seed.
pub fn synthesize_stream(
    scene: SceneKind,
    geometry: SensorGeometry,
    duration_s: f64,
    seed: u64,
) -> Vec<Event> {
    synthesize_stream_with(scene, &SceneParams::default(), geometry, duration_s, seed)
}

pub fn synthesize_stream_with(
    scene: SceneKind,
    params: &SceneParams,
    geometry: SensorGeometry,
    duration_s: f64,
    seed: u64,
) -> Vec<Event> {
    assert!(duration_s > 0.0, "duration must be positive");
    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(seed),
        end_us: (duration_s * US_PER_S as f64).round() as i64,
        events: Vec::new(),
    };
    match scene {
        SceneKind::MovingEdge => gen.moving_edge(params, geometry),
        SceneKind::Blink => gen.blink(params, geometry),
        SceneKind::StaticNoise => gen.static_noise(params, geometry),
        SceneKind::HotPixel => gen.hot_pixel(params, geometry),
    }
    gen.finish()
}

/// Composite of `moving_edge` and `blink` used for construction-time benchmarks.
pub fn benchmark_scene(geometry: SensorGeometry, duration_s: f64, seed: u64) -> Vec<Event> {
    let mut events = synthesize_stream(SceneKind::MovingEdge, geometry, duration_s, seed);
    events.extend(synthesize_stream(
        SceneKind::Blink,
        geometry,
        duration_s,
        seed.wrapping_add(1),
    ));
    events.sort_by_key(|e| e.t);
    events
}

struct Generator {
    rng: ChaCha8Rng,
    end_us: i64,
    events: Vec<Event>,
}

impl Generator {
    /// Emits `n` events at pixel `(x, y)` jittered over `[t0_s, t1_s)`.
    fn burst(&mut self, x: usize, y: usize, n: u32, positive: bool, t0_s: f64, t1_s: f64) {
        for _ in 0..n {
            let t = t0_s + self.rng.random::<f64>() * (t1_s - t0_s);
            let t_us = (t * US_PER_S as f64).floor() as i64;
            if t_us >= 0 && t_us < self.end_us {
                self.events
                    .push(Event::new(x as u16, y as u16, t_us, Polarity::from_sign(positive)));
            }
        }
    }

    fn moving_edge(&mut self, params: &SceneParams, geometry: SensorGeometry) {
        let band = SceneParams::edge_band(geometry);
        let span = band.width() as f64;
        let col_dt = 1.0 / params.edge_speed;
        let end_s = self.end_us as f64 / US_PER_S as f64;
        let mut leg_start = 0.0;
        let mut rightward = true;
        while leg_start < end_s {
            for i in 0..band.width() {
                let c = if rightward { band.x0 + i } else { band.x1 - 1 - i };
                let t0 = leg_start + i as f64 * col_dt;
                if t0 >= end_s {
                    break;
                }
                for y in band.y0..band.y1 {
                    self.burst(c, y, params.events_per_change, rightward, t0, t0 + col_dt);
                }
            }
            leg_start += span * col_dt;
            rightward = !rightward;
        }
    }

    fn blink(&mut self, params: &SceneParams, geometry: SensorGeometry) {
        let layout = BlinkLayout::new(geometry);
        let timing = params.blink;
        let n = params.events_per_change;

        // approach: the feature set slides down one pixel per step
        let steps = layout.approach_px as i64;
        let step_dt = timing.motion_end_s / steps as f64;
        let shifted = |offset: i64| -> HashSet<(usize, usize)> {
            layout
                .features
                .iter()
                .filter_map(|&(x, y)| {
                    let sy = y as i64 + offset;
                    (sy >= 0 && (sy as usize) < geometry.height).then_some((x, sy as usize))
                })
                .collect()
        };
        let mut prev = shifted(-steps);
        for j in 1..=steps {
            let curr = shifted(-steps + j);
            let t0 = (j - 1) as f64 * step_dt;
            let mut on: Vec<_> = curr.difference(&prev).copied().collect();
            let mut off: Vec<_> = prev.difference(&curr).copied().collect();
            on.sort_unstable();
            off.sort_unstable();
            for (x, y) in on {
                self.burst(x, y, n, true, t0, t0 + step_dt);
            }
            for (x, y) in off {
                self.burst(x, y, n, false, t0, t0 + step_dt);
            }
            prev = curr;
        }

        // blink: the lid brightens rows top-down, then uncovers them bottom-up
        for eye in layout.eyes {
            let rows = eye.height() as f64;
            let close_dt = timing.close_s / rows;
            let open_dt = timing.open_s / rows;
            for (r, y) in (eye.y0..eye.y1).enumerate() {
                let tc = timing.blink_start_s + r as f64 * close_dt;
                let to = timing.blink_start_s
                    + timing.close_s
                    + (eye.height() - 1 - r) as f64 * open_dt;
                for x in eye.x0..eye.x1 {
                    self.burst(x, y, n, true, tc, tc + close_dt);
                    self.burst(x, y, n, false, to, to + open_dt);
                }
            }
        }
    }

    fn static_noise(&mut self, params: &SceneParams, geometry: SensorGeometry) {
        let duration = self.end_us as f64 / US_PER_S as f64;
        let mean = params.noise_rate * geometry.area() as f64 * duration;
        if mean <= 0.0 {
            return;
        }
        let count = Poisson::new(mean).expect("finite rate").sample(&mut self.rng) as u64;
        for _ in 0..count {
            let x = self.rng.random_range(0..geometry.width) as u16;
            let y = self.rng.random_range(0..geometry.height) as u16;
            let t = self.rng.random_range(0..self.end_us);
            let p = Polarity::from_sign(self.rng.random_bool(0.5));
            self.events.push(Event::new(x, y, t, p));
        }
    }

    fn hot_pixel(&mut self, params: &SceneParams, geometry: SensorGeometry) {
        let (x, y) = SceneParams::hot_pixel(geometry);
        let period = US_PER_S as f64 / params.hot_pixel_rate;
        let mut k = 0u64;
        loop {
            let t = (k as f64 * period).round() as i64;
            if t >= self.end_us {
                break;
            }
            self.events
                .push(Event::new(x, y, t, Polarity::from_sign(k % 2 == 0)));
            k += 1;
        }
    }

    fn finish(mut self) -> Vec<Event> {
        self.events.sort_by_key(|e| e.t);
        self.events
    }
}
