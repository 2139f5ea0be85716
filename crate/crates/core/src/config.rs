//! Representation parameters, dataset presets and the `key = value` override format.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::events::SensorGeometry;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Histogram,
    GlobalLi,
    LadsEr,
    LadsLog,
    LadsFft,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Histogram,
        Method::GlobalLi,
        Method::LadsEr,
        Method::LadsLog,
        Method::LadsFft,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Histogram => "histogram",
            Method::GlobalLi => "global_li",
            Method::LadsEr => "lads_er",
            Method::LadsLog => "lads_log",
            Method::LadsFft => "lads_fft",
        }
    }

    /// Methods whose decay varies per patch.
    pub fn is_adaptive(self) -> bool {
        matches!(self, Method::LadsEr | Method::LadsLog | Method::LadsFft)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| ConfigError::BadValue {
                key: "method".into(),
                value: s.into(),
            })
    }
}

/// Direction of the event-rate ratio in the ER decay exponent.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErRatioMode {
    /// `lambda_P / lambda0`: busy patches forget faster, idle patches hold.
    #[default]
    Prose,
    /// `lambda0 / lambda_P` with the rate clamped below at 1e-9.
    Printed,
}

impl FromStr for ErRatioMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "prose" => Ok(ErRatioMode::Prose),
            "printed" => Ok(ErRatioMode::Printed),
            _ => Err(ConfigError::BadValue {
                key: "er_ratio_mode".into(),
                value: s.into(),
            }),
        }
    }
}

impl fmt::Display for ErRatioMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErRatioMode::Prose => "prose",
            ErRatioMode::Printed => "printed",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    Fes,
    Blink,
}

impl FromStr for Dataset {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fes" => Ok(Dataset::Fes),
            "blink" => Ok(Dataset::Blink),
            _ => Err(ConfigError::BadValue {
                key: "dataset".into(),
                value: s.into(),
            }),
        }
    }
}

/// One row of the tuned parameter table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    /// Time constant shared by global LI and ER, seconds.
    pub tau: f64,
    /// Reference event rate, events per pixel per second.
    pub lambda0: f64,
    /// LoG score at which the sigmoid is centred.
    pub log_tau: f64,
    pub a: f64,
    pub r: f64,
    #[serde(rename = "T_d")]
    pub t_d: f64,
}

impl Preset {
    /// Tuned values for `dataset` at 30 or 240 Hz. Other rates use the row of
    /// the nearer of the two (split at 135 Hz).
    pub fn lookup(dataset: Dataset, hz: f64) -> Preset {
        let high = hz >= 135.0;
        match (dataset, high) {
            (Dataset::Fes, false) => Preset {
                tau: 0.05,
                lambda0: 16.0,
                log_tau: 12.5,
                a: 0.25,
                r: 0.25,
                t_d: 0.5,
            },
            (Dataset::Fes, true) => Preset {
                r: 0.05,
                ..Preset::lookup(Dataset::Fes, 30.0)
            },
            (Dataset::Blink, _) => Preset {
                tau: 0.2,
                lambda0: 2.0,
                log_tau: 7.5,
                a: 0.75,
                r: 0.01,
                t_d: 0.9,
            },
        }
    }
}

/// Method selector plus every tunable parameter.
///
/// `tau` is in seconds for `global_li`/`lads_er` and in LoG-score units for
/// `lads_log`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationConfig {
    pub method: Method,
    pub tau: f64,
    pub lambda0: f64,
    pub a: f64,
    pub sigma: f64,
    pub r: f64,
    #[serde(alias = "T_d")]
    pub t_d: f64,
    pub patch_divisor: usize,
    pub er_ratio_mode: ErRatioMode,
    pub fft_invert: bool,
    /// Quadtree subdivision (`true`) or the flat minimum-size grid.
    pub fft_recursive: bool,
    pub clip: f64,
}

impl Default for RepresentationConfig {
    fn default() -> Self {
        Self::from_preset(Method::GlobalLi, Dataset::Fes, 30.0)
    }
}

impl RepresentationConfig {
    pub fn from_preset(method: Method, dataset: Dataset, hz: f64) -> Self {
        let p = Preset::lookup(dataset, hz);
        let tau = match method {
            Method::LadsLog => p.log_tau,
            _ => p.tau,
        };
        Self {
            method,
            tau,
            lambda0: p.lambda0,
            a: p.a,
            sigma: 0.25,
            r: p.r,
            t_d: p.t_d,
            patch_divisor: 8,
            er_ratio_mode: ErRatioMode::Prose,
            fft_invert: false,
            fft_recursive: true,
            clip: 5.0,
        }
    }

    /// Side of the square scoring patch: `ceil(max(width, height) / patch_divisor)`.
    pub fn patch_size(&self, geometry: SensorGeometry) -> usize {
        geometry.width.max(geometry.height).div_ceil(self.patch_divisor.max(1))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    field,
                    reason: format!("{v} is not a positive finite number"),
                })
            }
        }
        fn unit(field: &'static str, v: f64) -> Result<(), ConfigError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::Invalid {
                    field,
                    reason: format!("{v} is outside [0, 1]"),
                })
            }
        }
        positive("tau", self.tau)?;
        positive("lambda0", self.lambda0)?;
        positive("a", self.a)?;
        positive("sigma", self.sigma)?;
        positive("clip", self.clip)?;
        unit("r", self.r)?;
        unit("t_d", self.t_d)?;
        if self.patch_divisor == 0 {
            return Err(ConfigError::Invalid {
                field: "patch_divisor",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Checks that also depend on the sensor size.
    pub fn validate_for(&self, geometry: SensorGeometry) -> Result<(), ConfigError> {
        self.validate()?;
        if self.method == Method::LadsFft && self.patch_size(geometry) < 2 {
            return Err(ConfigError::Invalid {
                field: "patch_divisor",
                reason: format!(
                    "minimum FFT patch size must be at least 2 px, got {}",
                    self.patch_size(geometry)
                ),
            });
        }
        Ok(())
    }

    /// Sets one parameter from its textual form. Accepts the names used by
    /// the config file and by query strings.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
        };
        let num = || value.parse::<f64>().map_err(|_| bad());
        let flag = || match value {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(bad()),
        };
        match key {
            "method" => self.method = value.parse()?,
            "tau" => self.tau = num()?,
            "lambda0" => self.lambda0 = num()?,
            "a" => self.a = num()?,
            "sigma" => self.sigma = num()?,
            "r" => self.r = num()?,
            "t_d" | "T_d" => self.t_d = num()?,
            "patch_divisor" => self.patch_divisor = value.parse().map_err(|_| bad())?,
            "er_ratio_mode" => self.er_ratio_mode = value.parse()?,
            "fft_invert" => self.fft_invert = flag()?,
            "fft_recursive" => self.fft_recursive = flag()?,
            "clip" => self.clip = num()?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.into(),
                })
            }
        }
        Ok(())
    }

    /// Applies a plain-text `key = value` file. `#` starts a comment.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), ConfigError> {
        for (line, key, value) in parse_key_values(text)? {
            self.set(&key, &value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                ConfigError::BadValue { key, value } => ConfigError::Syntax {
                    line,
                    message: format!("bad value `{value}` for `{key}`"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    /// Stable `key=value&...` rendering, used as a cache key and echoed to clients.
    pub fn canonical_query(&self) -> String {
        format!(
            "method={}&tau={}&lambda0={}&a={}&sigma={}&r={}&t_d={}&patch_divisor={}&er_ratio_mode={}&fft_invert={}&fft_recursive={}&clip={}",
            self.method,
            self.tau,
            self.lambda0,
            self.a,
            self.sigma,
            self.r,
            self.t_d,
            self.patch_divisor,
            self.er_ratio_mode,
            self.fft_invert,
            self.fft_recursive,
            self.clip
        )
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
/// Returns `(line number, key, value)` triples.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "empty key or value".into(),
            });
        }
        out.push((line, key.to_string(), value.to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_values() {
        let fes = Preset::lookup(Dataset::Fes, 30.0);
        assert_eq!(
            (fes.tau, fes.lambda0, fes.log_tau, fes.a, fes.r, fes.t_d),
            (0.05, 16.0, 12.5, 0.25, 0.25, 0.5)
        );
        assert_eq!(Preset::lookup(Dataset::Fes, 240.0).r, 0.05);
        let blink = Preset::lookup(Dataset::Blink, 240.0);
        assert_eq!(
            (blink.tau, blink.lambda0, blink.log_tau, blink.a, blink.r, blink.t_d),
            (0.2, 2.0, 7.5, 0.75, 0.01, 0.9)
        );
    }

    #[test]
    fn preset_picks_tau_per_method() {
        assert_eq!(RepresentationConfig::from_preset(Method::LadsLog, Dataset::Fes, 30.0).tau, 12.5);
        assert_eq!(RepresentationConfig::from_preset(Method::LadsEr, Dataset::Blink, 30.0).tau, 0.2);
        assert_eq!(RepresentationConfig::from_preset(Method::GlobalLi, Dataset::Fes, 240.0).tau, 0.05);
    }

    #[test]
    fn patch_size_is_an_eighth_of_the_long_side() {
        let c = RepresentationConfig::default();
        assert_eq!(c.patch_size(SensorGeometry::vga_480x360()), 60);
        assert_eq!(c.patch_size(SensorGeometry::new(346, 260).unwrap()), 44);
    }

    #[test]
    fn validation() {
        let mut c = RepresentationConfig::default();
        assert!(c.validate().is_ok());
        c.tau = 0.0;
        assert!(matches!(c.validate(), Err(ConfigError::Invalid { field: "tau", .. })));
        let mut c = RepresentationConfig::default();
        c.r = 1.5;
        assert!(c.validate().is_err());
        let mut c = RepresentationConfig::default();
        c.patch_divisor = 0;
        assert!(c.validate().is_err());
        let mut c = RepresentationConfig::from_preset(Method::LadsFft, Dataset::Fes, 30.0);
        c.patch_divisor = 500;
        assert!(c.validate_for(SensorGeometry::vga_480x360()).is_err());
    }

    #[test]
    fn override_file() {
        let mut c = RepresentationConfig::default();
        c.apply_overrides("# tuned\nmethod = lads_log\n\ntau=7.5  # centre\nT_d = 0.9\nfft_invert = true\n")
            .unwrap();
        assert_eq!(c.method, Method::LadsLog);
        assert_eq!(c.tau, 7.5);
        assert_eq!(c.t_d, 0.9);
        assert!(c.fft_invert);

        let err = c.apply_overrides("tau = 1\nbogus = 2\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "bogus".into()
            }
        );
        assert!(matches!(c.apply_overrides("tau 1"), Err(ConfigError::Syntax { line: 1, .. })));
        assert!(matches!(c.apply_overrides("tau = x"), Err(ConfigError::Syntax { line: 1, .. })));
    }

    #[test]
    fn canonical_query_round_trips() {
        let mut c = RepresentationConfig::from_preset(Method::LadsFft, Dataset::Blink, 240.0);
        c.tau = 0.1 + 0.2;
        let mut d = RepresentationConfig::from_preset(Method::Histogram, Dataset::Fes, 30.0);
        for pair in c.canonical_query().split('&') {
            let (k, v) = pair.split_once('=').unwrap();
            d.set(k, v).unwrap();
        }
        assert_eq!(c, d);
    }

    #[test]
    fn json_round_trip() {
        let c = RepresentationConfig::from_preset(Method::LadsEr, Dataset::Fes, 30.0);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<RepresentationConfig>(&text).unwrap(), c);
    }
}
