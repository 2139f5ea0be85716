//! Construction-time benchmark: per-window wall time of each representation
//! on a seeded synthetic scene.

use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::config::{Dataset, Method, RepresentationConfig};
use crate::events::{benchmark_scene, window_stream, EventError, EventWindow, Frequency, SensorGeometry, Tail};
use crate::surfaces::{Pipeline, SurfaceError};

pub const MIN_MEASURED_WINDOWS: usize = 30;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown bench method `{0}`")]
    UnknownMethod(String),
    #[error("at least {MIN_MEASURED_WINDOWS} measured windows are required, got {0}")]
    TooFewWindows(usize),
    #[error("no methods or frequencies selected")]
    Empty,
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Event(#[from] EventError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    /// Times an empty step; bounds the harness overhead.
    Noop,
    Histogram,
    GlobalLi,
    LadsEr,
    LadsLog,
    LadsFft,
    LadsFftNonrecursive,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 7] = [
        BenchMethod::Noop,
        BenchMethod::Histogram,
        BenchMethod::GlobalLi,
        BenchMethod::LadsEr,
        BenchMethod::LadsLog,
        BenchMethod::LadsFft,
        BenchMethod::LadsFftNonrecursive,
    ];

    pub const DEFAULT: [BenchMethod; 6] = [
        BenchMethod::Histogram,
        BenchMethod::GlobalLi,
        BenchMethod::LadsEr,
        BenchMethod::LadsLog,
        BenchMethod::LadsFft,
        BenchMethod::LadsFftNonrecursive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Noop => "noop",
            BenchMethod::Histogram => "histogram",
            BenchMethod::GlobalLi => "global_li",
            BenchMethod::LadsEr => "lads_er",
            BenchMethod::LadsLog => "lads_log",
            BenchMethod::LadsFft => "lads_fft",
            BenchMethod::LadsFftNonrecursive => "lads_fft_nonrecursive",
        }
    }

    /// Preset configuration for the method, or `None` for the no-op.
    pub fn config(self, dataset: Dataset, hz: f64) -> Option<RepresentationConfig> {
        let method = match self {
            BenchMethod::Noop => return None,
            BenchMethod::Histogram => Method::Histogram,
            BenchMethod::GlobalLi => Method::GlobalLi,
            BenchMethod::LadsEr => Method::LadsEr,
            BenchMethod::LadsLog => Method::LadsLog,
            BenchMethod::LadsFft | BenchMethod::LadsFftNonrecursive => Method::LadsFft,
        };
        let mut c = RepresentationConfig::from_preset(method, dataset, hz);
        c.fft_recursive = self != BenchMethod::LadsFftNonrecursive;
        Some(c)
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMethod {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| BenchError::UnknownMethod(s.to_string()))
    }
}

#[derive(Clone, Debug)]
pub struct BenchOptions {
    pub methods: Vec<BenchMethod>,
    pub frequencies: Vec<Frequency>,
    pub warmup_windows: usize,
    pub measured_windows: usize,
    pub geometry: SensorGeometry,
    pub dataset: Dataset,
    pub seed: u64,
    /// Also run the rayon patch path and report it as separate rows.
    pub parallel: bool,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            methods: BenchMethod::DEFAULT.to_vec(),
            frequencies: vec![Frequency::hz(30), Frequency::hz(240)],
            warmup_windows: 5,
            measured_windows: 60,
            geometry: SensorGeometry::vga_480x360(),
            dataset: Dataset::Fes,
            seed: 0x1ad5,
            parallel: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub method: BenchMethod,
    pub frequency_hz: f64,
    pub parallel: bool,
    /// Representation construction only.
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    /// Construction plus clip and normalise.
    pub inclusive_mean_ms: f64,
    pub windows: usize,
    pub events: u64,
    pub machine: String,
}

/// Mean, median and nearest-rank 95th percentile.
pub fn summarize(samples_ms: &[f64]) -> (f64, f64, f64) {
    if samples_ms.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let mut s = samples_ms.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let mean = s.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    };
    let rank = (0.95 * n as f64).ceil() as usize;
    (mean, median, s[rank.clamp(1, n) - 1])
}

pub fn machine_descriptor() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|t| {
            t.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split_once(':'))
                .map(|(_, v)| v.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{cpu}; {threads} threads; {}-{}; rayon {} workers",
        std::env::consts::OS,
        std::env::consts::ARCH,
        rayon::current_num_threads()
    )
}

/// Windows of the benchmark scene, long enough for `n` windows.
pub fn scene_windows(
    geometry: SensorGeometry,
    frequency: Frequency,
    n: usize,
    seed: u64,
) -> Result<Vec<EventWindow>, EventError> {
    let duration = (n as f64 + 1.0) / frequency.as_f64();
    let events = benchmark_scene(geometry, duration, seed);
    window_stream(events.into_iter().map(Ok), frequency, 0)
        .with_tail(Tail::Unbounded)
        .take(n)
        .collect()
}

struct Lane {
    method: BenchMethod,
    pipeline: Option<Pipeline>,
    exclusive: Vec<f64>,
    inclusive: Vec<f64>,
}

/// Runs every method over the same pre-windowed scene. Methods advance in
/// lockstep, one window at a time, so slow drift in machine load spreads
/// evenly across them. Only `Pipeline::step` (and, for the inclusive figure,
/// the clip and normalise after it) sits inside the timed region.
pub fn run_bench(opts: &BenchOptions) -> Result<Vec<BenchResult>, BenchError> {
    if opts.measured_windows < MIN_MEASURED_WINDOWS {
        return Err(BenchError::TooFewWindows(opts.measured_windows));
    }
    if opts.methods.is_empty() || opts.frequencies.is_empty() {
        return Err(BenchError::Empty);
    }
    let machine = machine_descriptor();
    let modes: &[bool] = if opts.parallel { &[false, true] } else { &[false] };
    let mut results = Vec::new();
    for &freq in &opts.frequencies {
        let hz = freq.as_f64();
        let total = opts.warmup_windows + opts.measured_windows;
        let windows = scene_windows(opts.geometry, freq, total, opts.seed)?;
        let events: u64 = windows[opts.warmup_windows..].iter().map(|w| w.len() as u64).sum();
        for &parallel in modes {
            let mut lanes = Vec::new();
            for &method in &opts.methods {
                let pipeline = match method.config(opts.dataset, hz) {
                    Some(c) => Some(Pipeline::new(c, opts.geometry)?.parallel(parallel)),
                    None => None,
                };
                lanes.push(Lane {
                    method,
                    pipeline,
                    exclusive: Vec::with_capacity(opts.measured_windows),
                    inclusive: Vec::with_capacity(opts.measured_windows),
                });
            }
            for (i, w) in windows.iter().enumerate() {
                let measured = i >= opts.warmup_windows;
                for lane in &mut lanes {
                    let start = Instant::now();
                    let built = match lane.pipeline.as_mut() {
                        Some(p) => {
                            black_box(p.step(w)?);
                            Some(start.elapsed())
                        }
                        None => {
                            black_box(w);
                            None
                        }
                    };
                    if let Some(p) = &lane.pipeline {
                        black_box(p.frame());
                    }
                    let inclusive = start.elapsed();
                    if measured {
                        let exclusive = built.unwrap_or(inclusive);
                        lane.exclusive.push(exclusive.as_secs_f64() * 1e3);
                        lane.inclusive.push(inclusive.as_secs_f64() * 1e3);
                    }
                }
            }
            let mut rows: Vec<BenchResult> = lanes
                .into_iter()
                .map(|lane| {
                    let (mean_ms, median_ms, p95_ms) = summarize(&lane.exclusive);
                    let (inclusive_mean_ms, _, _) = summarize(&lane.inclusive);
                    BenchResult {
                        method: lane.method,
                        frequency_hz: hz,
                        parallel,
                        mean_ms,
                        median_ms,
                        p95_ms,
                        inclusive_mean_ms,
                        windows: lane.exclusive.len(),
                        events,
                        machine: machine.clone(),
                    }
                })
                .collect();
            rows.sort_by(|a, b| a.mean_ms.total_cmp(&b.mean_ms));
            results.extend(rows);
        }
    }
    Ok(results)
}

pub fn write_csv(w: impl Write, results: &[BenchResult]) -> Result<(), BenchError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in results {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_json(mut w: impl Write, results: &[BenchResult]) -> Result<(), BenchError> {
    serde_json::to_writer_pretty(&mut w, results).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Fixed-width text table for terminals.
pub fn format_table(results: &[BenchResult]) -> String {
    let mut out = format!(
        "{:<24} {:>8} {:>5} {:>10} {:>10} {:>10} {:>12}\n",
        "method", "hz", "par", "mean_ms", "median_ms", "p95_ms", "incl_mean_ms"
    );
    for r in results {
        out.push_str(&format!(
            "{:<24} {:>8} {:>5} {:>10.3} {:>10.3} {:>10.3} {:>12.3}\n",
            r.method.name(),
            r.frequency_hz,
            if r.parallel { "yes" } else { "no" },
            r.mean_ms,
            r.median_ms,
            r.p95_ms,
            r.inclusive_mean_ms
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in BenchMethod::ALL {
            assert_eq!(m.name().parse::<BenchMethod>().unwrap(), m);
        }
        assert!(matches!("fft".parse::<BenchMethod>(), Err(BenchError::UnknownMethod(_))));
        assert!(!BenchMethod::DEFAULT.contains(&BenchMethod::Noop));
    }

    #[test]
    fn summary_statistics() {
        let (mean, median, p95) = summarize(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!((mean, median, p95), (2.5, 2.5, 4.0));
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(summarize(&s).2, 95.0);
    }

    #[test]
    fn rejects_short_runs() {
        let opts = BenchOptions {
            measured_windows: 29,
            ..BenchOptions::default()
        };
        assert!(matches!(run_bench(&opts), Err(BenchError::TooFewWindows(29))));
    }

    #[test]
    fn small_run_shapes() {
        let opts = BenchOptions {
            methods: vec![BenchMethod::Noop, BenchMethod::Histogram, BenchMethod::LadsFft],
            frequencies: vec![Frequency::hz(240)],
            measured_windows: 30,
            geometry: SensorGeometry::new(96, 72).unwrap(),
            parallel: true,
            ..BenchOptions::default()
        };
        let r = run_bench(&opts).unwrap();
        assert_eq!(r.len(), 6);
        assert!(r.iter().all(|x| x.windows == 30 && x.mean_ms >= 0.0 && x.p95_ms >= x.median_ms.min(x.p95_ms)));
        let mut csv = Vec::new();
        write_csv(&mut csv, &r).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 7);
        let again = run_bench(&opts).unwrap();
        assert_eq!(r[0].events, again[0].events);
    }
}
