use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::matrix::SquareMatrix;

/// Transition-rate matrix of the switching chain.
///
/// Off-diagonal entries are nonnegative jump rates. The diagonal is rebuilt
/// as minus the off-diagonal row sum on construction, so rows sum to zero
/// up to rounding in the additions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SquareMatrix", into = "SquareMatrix")]
pub struct GeneratorMatrix {
    rates: SquareMatrix,
}

impl GeneratorMatrix {
    pub fn new(rates: SquareMatrix) -> Result<Self> {
        let n = rates.dim();
        let mut rates = rates;
        for i in 0..n {
            let mut off = 0.0;
            let mut scale = rates[(i, i)].abs();
            for j in (0..n).filter(|&j| j != i) {
                let r = rates[(i, j)];
                if !r.is_finite() || r < 0.0 {
                    return Err(validation(format!(
                        "generator entry ({}, {}) = {r} must be a finite nonnegative rate",
                        i + 1,
                        j + 1
                    )));
                }
                off += r;
                scale = scale.max(r);
            }
            let diag = rates[(i, i)];
            if !diag.is_finite() || diag > 0.0 {
                return Err(validation(format!(
                    "generator diagonal entry {} = {diag} must be nonpositive",
                    i + 1
                )));
            }
            if (diag + off).abs() > 1e-9 * (1.0 + scale) {
                return Err(validation(format!(
                    "generator row {} sums to {} instead of 0",
                    i + 1,
                    diag + off
                )));
            }
            rates[(i, i)] = -off;
        }
        Ok(Self { rates })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(SquareMatrix::from_rows(rows)?)
    }

    /// Single-mode chain with no switching.
    pub fn trivial() -> Self {
        Self {
            rates: SquareMatrix::zeros(1),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.rates.dim()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.rates[(i, j)]
    }

    /// Total exit rate `-γ_ii` of mode `i`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.rates[(i, i)]
    }

    /// `min_i γ_ii`, the most negative diagonal entry.
    pub fn min_diagonal(&self) -> f64 {
        (0..self.n_modes())
            .map(|i| self.rates[(i, i)])
            .fold(f64::INFINITY, f64::min)
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.rates
    }
}

impl TryFrom<SquareMatrix> for GeneratorMatrix {
    type Error = crate::Error;

    fn try_from(m: SquareMatrix) -> Result<Self> {
        Self::new(m)
    }
}

impl From<GeneratorMatrix> for SquareMatrix {
    fn from(g: GeneratorMatrix) -> Self {
        g.rates
    }
}
