//! Event stream ingestion, fixed-duration windowing and synthetic scenes.

mod io;
mod synth;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{
    read_event_stream, write_binary, write_csv, write_event_file, BinaryEventReader,
    CsvEventReader, EventFormat, EventStream, PolarityConvention, ReadOptions, BINARY_MAGIC,
};
pub use synth::{
    benchmark_scene, synthesize_stream, synthesize_stream_with, BlinkLayout, SceneKind,
    SceneParams,
};
pub use window::{elapsed_dt, window_events, window_stream, EventWindow, Tail, WindowStream};

/// Microseconds per second. Timestamps are integer microseconds everywhere.
pub const US_PER_S: i64 = 1_000_000;

#[derive(Debug, Error)]
pub enum EventError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("byte offset {offset}: {message}")]
    Binary { offset: u64, message: String },
    #[error("event {index}: coordinate ({x}, {y}) outside {width}x{height} sensor")]
    OutOfBounds {
        index: u64,
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("event {index}: timestamp {t} precedes previous timestamp {prev}")]
    NonMonotonic { index: u64, t: i64, prev: i64 },
    #[error("event {index}: timestamp {t} precedes window origin {t0}")]
    BeforeOrigin { index: u64, t: i64, t0: i64 },
    #[error("event {index}: polarity {value} not allowed under {convention} convention")]
    Polarity {
        index: u64,
        value: i64,
        convention: PolarityConvention,
    },
    #[error("window ordering: {0}")]
    Ordering(String),
    #[error("invalid sensor geometry {width}x{height}")]
    InvalidGeometry { width: usize, height: usize },
    #[error("invalid frequency: {0}")]
    InvalidFrequency(String),
    #[error("csv event streams need an explicit sensor geometry")]
    MissingGeometry,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EventError {
    /// True for failures of the underlying reader rather than of the content.
    pub fn is_io(&self) -> bool {
        matches!(self, EventError::Io(_))
    }
}

/// Sign of a brightness change.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    #[inline]
    pub fn sign(self) -> i32 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Polarity::Positive
        } else {
            Polarity::Negative
        }
    }
}

/// A single sensor sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    /// Microseconds.
    pub t: i64,
    pub p: Polarity,
}

impl Event {
    pub fn new(x: u16, y: u16, t: i64, p: Polarity) -> Self {
        Self { x, y, t, p }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: usize,
    pub height: usize,
}

impl SensorGeometry {
    pub fn new(width: usize, height: usize) -> Result<Self, EventError> {
        if width == 0 || height == 0 || width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(EventError::InvalidGeometry { width, height });
        }
        Ok(Self { width, height })
    }

    /// Gen3-class sensor resolution used by the face datasets.
    pub fn vga_480x360() -> Self {
        Self {
            width: 480,
            height: 360,
        }
    }

    #[inline]
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

/// Positive rational window rate in Hz, `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Frequency {
    num: u64,
    den: u64,
}

impl Frequency {
    pub fn new(num: u64, den: u64) -> Result<Self, EventError> {
        if num == 0 || den == 0 {
            return Err(EventError::InvalidFrequency(format!("{num}/{den}")));
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn hz(hz: u64) -> Self {
        Self::new(hz, 1).expect("frequency must be positive")
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Window length in (possibly fractional) microseconds.
    pub fn period_us(&self) -> f64 {
        (US_PER_S as u64 * self.den) as f64 / self.num as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Frequency {
    type Err = EventError;

    /// Accepts `30`, `29.97` or `30000/1001`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || EventError::InvalidFrequency(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Frequency::new(n, d).map_err(|_| bad());
        }
        if let Some((int, frac)) = s.split_once('.') {
            if frac.is_empty() || frac.len() > 9 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            let scale = 10u64.pow(frac.len() as u32);
            let int: u64 = if int.is_empty() {
                0
            } else {
                int.parse().map_err(|_| bad())?
            };
            let frac: u64 = frac.parse().map_err(|_| bad())?;
            let num = int
                .checked_mul(scale)
                .and_then(|v| v.checked_add(frac))
                .ok_or_else(bad)?;
            return Frequency::new(num, scale).map_err(|_| bad());
        }
        let n = s.parse().map_err(|_| bad())?;
        Frequency::new(n, 1).map_err(|_| bad())
    }
}

impl TryFrom<String> for Frequency {
    type Error = EventError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        value.parse()
    }
}

impl From<Frequency> for String {
    fn from(value: Frequency) -> Self {
        value.to_string()
    }
}
