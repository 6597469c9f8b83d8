use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Relative slack used when snapping `t / δ` and `t / T` to integers, so
/// that grid times like `3000 × 0.001` land on the observation or period
/// boundary they represent.
const SNAP: f64 = 1e-9;

/// Periodically intermittent control with sampled observations.
///
/// Control is active on `[nT, nT + θ)` for every period `n ≥ phase_start`,
/// and the controller reads state and mode at the instants `kδ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "theta")]
    pub width: f64,
    #[serde(rename = "delta")]
    pub obs_gap: f64,
    #[serde(default)]
    pub phase_start: u64,
}

impl ControlSchedule {
    pub fn new(period: f64, width: f64, obs_gap: f64) -> Result<Self> {
        let s = Self {
            period,
            width,
            obs_gap,
            phase_start: 0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_phase_start(mut self, n0: u64) -> Self {
        self.phase_start = n0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period > 0.0) || !self.period.is_finite() {
            return Err(validation(format!("period T = {} must be positive", self.period)));
        }
        if !(self.width >= 0.0 && self.width <= self.period) {
            return Err(validation(format!(
                "control width theta = {} must lie in [0, T = {}]",
                self.width, self.period
            )));
        }
        if !(self.obs_gap > 0.0) || !self.obs_gap.is_finite() {
            return Err(validation(format!("observation gap delta = {} must be positive", self.obs_gap)));
        }
        if self.width > 0.0 && self.obs_gap > self.width * (1.0 + SNAP) {
            return Err(validation(format!(
                "observation gap delta = {} exceeds the control width theta = {}",
                self.obs_gap, self.width
            )));
        }
        Ok(())
    }

    /// `I(t)`: whether control is switched on at time `t`.
    pub fn indicator_at(&self, t: f64) -> bool {
        if self.width <= 0.0 {
            return false;
        }
        let r = t / self.period;
        let n = snapped_floor(r);
        if n < self.phase_start as f64 {
            return false;
        }
        let phase = t - n * self.period;
        phase < self.width && (self.width - phase) > SNAP * self.period
    }

    /// Index `⌊t/δ⌋` of the latest observation at or before `t`.
    pub fn observation_index(&self, t: f64) -> u64 {
        snapped_floor(t / self.obs_gap).max(0.0) as u64
    }

    /// `v(t) = ⌊t/δ⌋ δ`.
    pub fn observation_time(&self, t: f64) -> f64 {
        self.observation_index(t) as f64 * self.obs_gap
    }

    pub fn duty_ratio(&self) -> f64 {
        self.width / self.period
    }
}

/// `floor(r)`, except that values within rounding of an integer snap to it.
fn snapped_floor(r: f64) -> f64 {
    let n = r.round();
    if (r - n).abs() <= SNAP * r.abs().max(1.0) {
        n
    } else {
        r.floor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn indicator_examples() {
        let s = ControlSchedule::new(1.0, 0.2, 0.1).unwrap();
        assert!(s.indicator_at(0.1));
        assert!(!s.indicator_at(0.5));
        assert!(!s.indicator_at(0.2));
        assert!(s.indicator_at(1.0));
        let always = ControlSchedule::new(1.0, 1.0, 0.1).unwrap();
        for t in [0.0, 0.3, 0.999, 1.0, 17.4] {
            assert!(always.indicator_at(t));
        }
        let never = ControlSchedule::new(1.0, 0.0, 0.1).unwrap();
        assert!(!never.indicator_at(0.0));
    }

    #[test]
    fn observation_time_floor() {
        let s = ControlSchedule::new(1.0, 0.2, 0.1).unwrap();
        assert!((s.observation_time(0.2357) - 0.2).abs() < 1e-15);
        // 0.3 / 0.1 evaluates to 2.9999999999999996 in floating point.
        assert_eq!(s.observation_index(0.3), 3);
    }

    #[test]
    fn phase_start_skips_first_period() {
        let s = ControlSchedule::new(1.0, 0.5, 0.1).unwrap().with_phase_start(1);
        assert!(!s.indicator_at(0.1));
        assert!(s.indicator_at(1.1));
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(ControlSchedule::new(1.0, 1.5, 0.1).is_err());
        assert!(ControlSchedule::new(1.0, 0.5, 0.0).is_err());
        assert!(ControlSchedule::new(1.0, 0.05, 0.1).is_err());
        assert!(ControlSchedule::new(0.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn indicator_integrates_to_n_theta() {
        let s = ControlSchedule::new(1.0, 0.37, 0.01).unwrap();
        let dt = 1e-5;
        let n_periods = 5;
        let steps = (n_periods as f64 / dt).round() as usize;
        let on = (0..steps).filter(|&k| s.indicator_at(k as f64 * dt)).count();
        let integral = on as f64 * dt;
        assert!((integral - n_periods as f64 * 0.37).abs() < 2.0 * n_periods as f64 * dt);
    }

    proptest! {
        #[test]
        fn observation_time_is_idempotent(t in 0.0f64..1e4, delta in 1e-4f64..1.0) {
            let s = ControlSchedule { period: 1.0, width: 1.0, obs_gap: delta, phase_start: 0 };
            let v = s.observation_time(t);
            prop_assert_eq!(s.observation_time(v), v);
            prop_assert!(v <= t * (1.0 + 1e-9) + 1e-12);
            prop_assert!(t < v + delta);
        }
    }
}
