use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Polynomial growth and Khasminskii-type constants.
///
/// `|f| ≤ K(|x| + |y| + |x|^q1 + |y|^q2)`, `|g| ≤ K(|x| + |y| + |x|^q3 + |y|^q4)`,
/// `xᵀf + (q-1)/2 |g|² ≤ K(|x|² + |y|²) - α₁|x|^p + α₂|y|^p`, `|u(x)| ≤ L|x|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthParams {
    #[serde(rename = "K")]
    pub k: f64,
    pub p: f64,
    pub q: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub q4: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

impl GrowthParams {
    pub fn max_growth_exponent(&self) -> f64 {
        self.q1.max(self.q2).max(self.q3).max(self.q4)
    }

    /// Checks positivity, `q1 > 1`, `q2 ≥ 1`, and the admissible `(p, q)` range.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("K", self.k),
            ("p", self.p),
            ("q", self.q),
            ("q1", self.q1),
            ("q2", self.q2),
            ("q3", self.q3),
            ("q4", self.q4),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("L", self.l),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(validation(format!("growth parameter {name} = {v} must be positive")));
            }
        }
        if !(self.q1 > 1.0) {
            return Err(validation(format!("q1 = {} must exceed 1", self.q1)));
        }
        if !(self.q2 >= 1.0) {
            return Err(validation(format!("q2 = {} must be at least 1", self.q2)));
        }
        let m = self.max_growth_exponent();
        let q_floor = (2.0 * m).max(self.p + self.q1 - 1.0);
        if !(self.q > q_floor) {
            return Err(validation(format!(
                "q = {} must exceed max(2 max(q1..q4), p + q1 - 1) = {q_floor}",
                self.q
            )));
        }
        let p_floor = 2.0 * m - self.q1 + 1.0;
        if !(self.p >= p_floor) {
            return Err(validation(format!(
                "p = {} must be at least 2 max(q1..q4) - q1 + 1 = {p_floor}",
                self.p
            )));
        }
        Ok(())
    }
}
