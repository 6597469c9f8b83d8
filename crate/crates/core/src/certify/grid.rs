//! Grid and ray checks of pointwise polynomial inequalities `lhs ≤ rhs`.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Square box `[-R, R]²` sampled with `points` values per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub radius: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            radius: 5.0,
            points: 401,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(validation(format!("grid radius {} must be positive", self.radius)));
        }
        if self.points < 2 {
            return Err(validation("grid needs at least two points per axis"));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        let n = self.points;
        (0..n)
            .map(|k| -self.radius + 2.0 * self.radius * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// Differences below `REL_TOL·(|lhs| + |rhs|) + ABS_TOL` count as rounding.
pub const REL_TOL: f64 = 1e-10;
pub const ABS_TOL: f64 = 1e-12;

/// Radii multiples and angle count of the asymptotic ray check.
const RAY_SCALES: [f64; 3] = [10.0, 100.0, 1000.0];
const RAY_ANGLES: usize = 720;

/// Outcome of one inequality checked for one mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub name: String,
    /// One-based mode, absent for mode-free checks.
    pub mode: Option<usize>,
    pub pass: bool,
    /// Largest `lhs - rhs` on the grid; `≤ 0` means the inequality holds.
    pub worst_violation: f64,
    pub worst_at: [f64; 2],
    /// Largest `(lhs - rhs) / (|lhs| + |rhs|)` on rays far outside the box.
    pub asymptotic_worst: f64,
    pub asymptotic_pass: bool,
}

fn is_violation(lhs: f64, rhs: f64) -> bool {
    let d = lhs - rhs;
    !(d <= REL_TOL * (lhs.abs() + rhs.abs()) + ABS_TOL) || !d.is_finite()
}

/// Checks `f(x, y) = (lhs, rhs)` on the box and along rays at large radii.
pub fn check_2d(
    name: &str,
    mode: Option<usize>,
    grid: &GridSpec,
    f: impl Fn(f64, f64) -> (f64, f64),
) -> InequalityReport {
    let axis = grid.axis();
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = [0.0, 0.0];
    for &x in &axis {
        for &y in &axis {
            let (lhs, rhs) = f(x, y);
            let d = lhs - rhs;
            if d > worst || d.is_nan() {
                worst = d;
                worst_at = [x, y];
            }
            if is_violation(lhs, rhs) {
                pass = false;
            }
        }
    }
    let mut asym_worst = f64::NEG_INFINITY;
    let mut asym_pass = true;
    for scale in RAY_SCALES {
        let s = scale * grid.radius;
        for k in 0..RAY_ANGLES {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / RAY_ANGLES as f64;
            let (lhs, rhs) = f(s * phi.cos(), s * phi.sin());
            let denom = lhs.abs() + rhs.abs();
            let rel = if denom > 0.0 { (lhs - rhs) / denom } else { 0.0 };
            if rel > asym_worst || rel.is_nan() {
                asym_worst = rel;
            }
            if is_violation(lhs, rhs) {
                asym_pass = false;
            }
        }
    }
    InequalityReport {
        name: name.to_string(),
        mode,
        pass: pass && asym_pass,
        worst_violation: worst,
        worst_at,
        asymptotic_worst: asym_worst,
        asymptotic_pass: asym_pass,
    }
}

/// One-dimensional version for inequalities in `x` alone.
pub fn check_1d(name: &str, grid: &GridSpec, f: impl Fn(f64) -> (f64, f64)) -> InequalityReport {
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = [0.0, 0.0];
    for x in grid.axis() {
        let (lhs, rhs) = f(x);
        let d = lhs - rhs;
        if d > worst || d.is_nan() {
            worst = d;
            worst_at = [x, 0.0];
        }
        if is_violation(lhs, rhs) {
            pass = false;
        }
    }
    let mut asym_worst = f64::NEG_INFINITY;
    let mut asym_pass = true;
    for scale in RAY_SCALES {
        for x in [-scale * grid.radius, scale * grid.radius] {
            let (lhs, rhs) = f(x);
            let denom = lhs.abs() + rhs.abs();
            let rel = if denom > 0.0 { (lhs - rhs) / denom } else { 0.0 };
            asym_worst = asym_worst.max(rel);
            if is_violation(lhs, rhs) {
                asym_pass = false;
            }
        }
    }
    InequalityReport {
        name: name.to_string(),
        mode: None,
        pass: pass && asym_pass,
        worst_violation: worst,
        worst_at,
        asymptotic_worst: asym_worst,
        asymptotic_pass: asym_pass,
    }
}
