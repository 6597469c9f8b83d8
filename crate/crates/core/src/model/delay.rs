//! Time-varying delay `h(t)` and its occupation-rate constant `h*`.

use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{validation, Result};

pub type DelayFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum DelayKind {
    Constant(f64),
    /// On `[kP, (k+1)P)`: `h(t) = base + amplitude · (-1)^k · (t - kP)`.
    ///
    /// Rising and falling ramps alternate, and `h` jumps back to `base` at
    /// every multiple of the period.
    Sawtooth {
        base: f64,
        amplitude: f64,
        period: f64,
    },
    Callback(DelayFn),
}

impl fmt::Debug for DelayKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            Self::Sawtooth {
                base,
                amplitude,
                period,
            } => f
                .debug_struct("Sawtooth")
                .field("base", base)
                .field("amplitude", amplitude)
                .field("period", period)
                .finish(),
            Self::Callback(_) => f.write_str("Callback(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DelayFunction {
    pub kind: DelayKind,
    /// `h'`, the positive lower bound of the delay.
    pub h_lower: f64,
    /// `τ`, the upper bound of the delay and the history length.
    pub h_upper: f64,
    /// User-supplied `h*`. Wins over any numerical estimate.
    pub h_star: Option<f64>,
}

impl DelayFunction {
    pub fn constant(value: f64) -> Result<Self> {
        Self::new(DelayKind::Constant(value), value, value, Some(1.0))
    }

    /// Sawtooth delay with bounds derived from its ramps.
    pub fn sawtooth(base: f64, amplitude: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(validation("sawtooth period must be positive"));
        }
        let swing = amplitude.abs() * period;
        Self::new(
            DelayKind::Sawtooth {
                base,
                amplitude,
                period,
            },
            base - swing,
            base + swing,
            None,
        )
    }

    pub fn new(kind: DelayKind, h_lower: f64, h_upper: f64, h_star: Option<f64>) -> Result<Self> {
        if !(h_lower > 0.0) || !(h_upper >= h_lower) || !h_upper.is_finite() {
            return Err(validation(format!(
                "delay bounds must satisfy 0 < h' <= tau, got h' = {h_lower}, tau = {h_upper}"
            )));
        }
        if let Some(hs) = h_star {
            if !(hs >= 1.0) || !hs.is_finite() {
                return Err(validation(format!("h* must be finite and >= 1, got {hs}")));
            }
        }
        Ok(Self {
            kind,
            h_lower,
            h_upper,
            h_star,
        })
    }

    pub fn with_h_star(mut self, h_star: f64) -> Result<Self> {
        if !(h_star >= 1.0) || !h_star.is_finite() {
            return Err(validation(format!("h* must be finite and >= 1, got {h_star}")));
        }
        self.h_star = Some(h_star);
        Ok(self)
    }

    /// `h(t)`.
    pub fn at(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::Constant(c) => *c,
            DelayKind::Sawtooth {
                base,
                amplitude,
                period,
            } => {
                let k = (t / period).floor();
                let s = t - k * period;
                let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                base + amplitude * sign * s
            }
            DelayKind::Callback(f) => f(t),
        }
    }

    pub fn tau(&self) -> f64 {
        self.h_upper
    }

    /// The supplied `h*`, or the branch estimate over four delay periods.
    pub fn h_star_or_estimate(&self) -> Result<f64> {
        match self.h_star {
            Some(h) => Ok(h),
            None => Ok(h_star_estimate(self, self.default_horizon(), 1e-4)?.branch),
        }
    }

    pub(crate) fn default_horizon(&self) -> f64 {
        match &self.kind {
            DelayKind::Sawtooth { period, .. } => 4.0 * period,
            _ => 4.0 * self.h_upper.max(1.0),
        }
    }
}

/// Numerical estimates of the occupation-rate constant of `t ↦ t - h(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HStarEstimate {
    /// `1 / min slope of t - h(t)` over continuous pieces: the density of a
    /// single monotone branch.
    pub branch: f64,
    /// Largest binned occupation density of `t - h(t)` counting every branch
    /// that lands in the bin. Exceeds `branch` when a downward jump of `h`
    /// makes two branches cover the same values.
    pub occupation: f64,
}

/// Estimates `h*` by sampling `h` on `[0, horizon]` at spacing `resolution`.
///
/// Consecutive samples whose delay changes by more than `resolution` (slope
/// above one) are treated as straddling a jump and do not enter the slope
/// minimum.
pub fn h_star_estimate(delay: &DelayFunction, horizon: f64, resolution: f64) -> Result<HStarEstimate> {
    if !(resolution > 0.0) || !(horizon > resolution) {
        return Err(validation("h* estimate needs 0 < resolution < horizon"));
    }
    let n = (horizon / resolution).round() as usize;
    let tol = 1e-12 * (1.0 + delay.h_upper);
    let mut shifted = Vec::with_capacity(n + 1);
    let mut delays = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * resolution;
        let h = delay.at(t);
        if !(h >= delay.h_lower - tol && h <= delay.h_upper + tol) {
            return Err(validation(format!(
                "delay h({t}) = {h} leaves [{}, {}]",
                delay.h_lower, delay.h_upper
            )));
        }
        delays.push(h);
        shifted.push(t - h);
    }

    let mut min_slope = f64::INFINITY;
    let mut jumps = 0usize;
    for k in 0..n {
        if (delays[k + 1] - delays[k]).abs() > resolution {
            jumps += 1;
            continue;
        }
        min_slope = min_slope.min((shifted[k + 1] - shifted[k]) / resolution);
    }
    if jumps * 100 > n || !(min_slope > 0.0) {
        return Err(validation(
            "t - h(t) is not increasing on its continuous pieces; h* is unbounded",
        ));
    }

    let width = 100.0 * resolution;
    let lo = shifted.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = shifted.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let n_bins = ((hi - lo) / width).floor() as usize + 1;
    let mut bins = vec![0usize; n_bins];
    for &s in &shifted {
        bins[((s - lo) / width).floor() as usize] += 1;
    }
    // Edge bins are only partially covered, which can only under-count.
    let occupation = bins.iter().copied().max().unwrap_or(0) as f64 * resolution / width;

    Ok(HStarEstimate {
        branch: 1.0 / min_slope,
        occupation,
    })
}
