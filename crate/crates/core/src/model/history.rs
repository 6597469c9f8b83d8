use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Initial segment `ξ` on `[-τ, 0]` together with the initial mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HistoryValues {
    Constant(Vec<f64>),
    /// Piecewise-linear knots `(t, x)` sorted by time.
    Table(Vec<(f64, Vec<f64>)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialHistory {
    pub values: HistoryValues,
    /// Initial mode, zero-based.
    pub r0: usize,
}

impl InitialHistory {
    pub fn constant(x0: Vec<f64>, r0: usize) -> Self {
        Self {
            values: HistoryValues::Constant(x0),
            r0,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.values {
            HistoryValues::Constant(v) => v.len(),
            HistoryValues::Table(knots) => knots.first().map_or(0, |(_, v)| v.len()),
        }
    }

    /// Checks the history is finite and defined on all of `[-tau, 0]`.
    pub fn validate(&self, tau: f64) -> Result<()> {
        match &self.values {
            HistoryValues::Constant(v) => {
                if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
                    return Err(validation("constant history must be a finite, nonempty vector"));
                }
            }
            HistoryValues::Table(knots) => {
                let (Some(first), Some(last)) = (knots.first(), knots.last()) else {
                    return Err(validation("history table is empty"));
                };
                let dim = first.1.len();
                if dim == 0 {
                    return Err(validation("history table rows must be nonempty"));
                }
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(validation("history table times must be strictly increasing"));
                    }
                }
                for (t, v) in knots {
                    if v.len() != dim || !t.is_finite() || v.iter().any(|x| !x.is_finite()) {
                        return Err(validation("history table rows must be finite with equal length"));
                    }
                }
                if first.0 > -tau + 1e-12 * tau.max(1.0) || last.0 < 0.0 {
                    return Err(validation(format!(
                        "history table covers [{}, {}] but must cover [-{tau}, 0]",
                        first.0, last.0
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes `ξ(s)` into `out` for `s ≤ 0`.
    pub fn eval_into(&self, s: f64, out: &mut [f64]) {
        match &self.values {
            HistoryValues::Constant(v) => out.copy_from_slice(v),
            HistoryValues::Table(knots) => {
                let idx = knots.partition_point(|(t, _)| *t <= s);
                if idx == 0 {
                    out.copy_from_slice(&knots[0].1);
                } else if idx == knots.len() {
                    out.copy_from_slice(&knots[idx - 1].1);
                } else {
                    let (t0, v0) = &knots[idx - 1];
                    let (t1, v1) = &knots[idx];
                    let w = (s - t0) / (t1 - t0);
                    for (o, (a, b)) in out.iter_mut().zip(v0.iter().zip(v1)) {
                        *o = a + w * (b - a);
                    }
                }
            }
        }
    }

    /// `sup |ξ(s)|` over the segment, used to detect the zero history.
    pub fn sup_norm(&self) -> f64 {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        match &self.values {
            HistoryValues::Constant(v) => norm(v),
            HistoryValues::Table(knots) => knots.iter().map(|(_, v)| norm(v)).fold(0.0, f64::max),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_interpolates_linearly() {
        let h = InitialHistory {
            values: HistoryValues::Table(vec![(-0.2, vec![0.0]), (0.0, vec![1.0])]),
            r0: 0,
        };
        h.validate(0.2).unwrap();
        let mut out = [0.0];
        h.eval_into(-0.05, &mut out);
        assert!((out[0] - 0.75).abs() < 1e-12);
        h.eval_into(0.0, &mut out);
        assert_eq!(out[0], 1.0);
    }

    #[test]
    fn table_must_cover_segment() {
        let h = InitialHistory {
            values: HistoryValues::Table(vec![(-0.1, vec![0.0]), (0.0, vec![1.0])]),
            r0: 0,
        };
        assert!(h.validate(0.2).is_err());
    }

    #[test]
    fn non_finite_constant_rejected() {
        assert!(InitialHistory::constant(vec![f64::NAN], 0).validate(1.0).is_err());
    }
}
