use crate::config::{ConfigError, ErRatioMode};

/// Lower bound on the patch rate when it sits in a denominator.
pub const ER_RATE_FLOOR: f64 = 1e-9;

/// `exp(-dt / tau)`.
pub fn global_decay_factor(dt: f64, tau: f64) -> Result<f64, ConfigError> {
    if !(tau > 0.0) {
        return Err(ConfigError::Invalid {
            field: "tau",
            reason: format!("{tau} must be positive"),
        });
    }
    Ok((-dt / tau).exp())
}

/// Event-rate decay for one patch.
pub fn er_decay(rate: f64, lambda0: f64, dt: f64, tau: f64, mode: ErRatioMode) -> f64 {
    let ratio = match mode {
        ErRatioMode::Prose => rate / lambda0,
        ErRatioMode::Printed => lambda0 / rate.max(ER_RATE_FLOOR),
    };
    (-(dt / tau) * ratio).exp()
}

/// Sigmoid falloff of the LoG patch score: 1 at zero, about one half at `tau`.
pub fn log_decay(score: f64, tau: f64, a: f64) -> f64 {
    if a * (score - tau) > 700.0 {
        return 0.0;
    }
    let d = (1.0 + (-a * tau).exp()) / (1.0 + (-a * (tau - score)).exp());
    d.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global() {
        assert_eq!(global_decay_factor(0.0, 0.05).unwrap(), 1.0);
        assert!((global_decay_factor(0.2, 0.2).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((global_decay_factor(1.0 / 30.0, 0.05).unwrap() - 0.513_417_119_032_592).abs() < 1e-12);
        assert!(global_decay_factor(1.0, 0.0).is_err());
        assert!(global_decay_factor(1.0, f64::NAN).is_err());
    }

    #[test]
    fn er_modes() {
        let g = global_decay_factor(1.0 / 30.0, 0.05).unwrap();
        for mode in [ErRatioMode::Prose, ErRatioMode::Printed] {
            assert_eq!(er_decay(16.0, 16.0, 1.0 / 30.0, 0.05, mode), g);
        }
        assert_eq!(er_decay(0.0, 16.0, 1.0 / 30.0, 0.05, ErRatioMode::Prose), 1.0);
        assert!((er_decay(32.0, 16.0, 1.0 / 30.0, 0.05, ErRatioMode::Prose) - 0.263_597_138_115_727_7).abs() < 1e-12);
        assert_eq!(er_decay(0.0, 16.0, 1.0 / 30.0, 0.05, ErRatioMode::Printed), 0.0);
    }

    #[test]
    fn log_sigmoid() {
        assert_eq!(log_decay(0.0, 12.5, 0.25), 1.0);
        assert!((log_decay(12.5, 12.5, 0.25) - 0.521_968_466_811_703_7).abs() < 1e-12);
        assert!(log_decay(1000.0, 12.5, 0.25) < 1e-100);
        assert_eq!(log_decay(4000.0, 12.5, 0.25), 0.0);
        assert!(log_decay(400.0, 12.5, 0.25) < 1e-40);
    }
}
