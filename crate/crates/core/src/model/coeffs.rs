//! Drift, diffusion and control coefficients, per mode.
//!
//! Scalar systems are described by monomial tables in `(x, y)`, where `y`
//! is the delayed state. Everything the certificate needs (exact evaluation
//! of the generator applied to a Lyapunov candidate, leading-order behaviour)
//! is computable from these tables. General `n`-dimensional systems can be
//! supplied as callbacks; those simulate fine but cannot be certified.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{config, validation, Error, Result};

/// One term `coef · x^x_pow · y^y_pow`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub x_pow: u32,
    pub y_pow: u32,
    pub coef: f64,
}

/// Polynomial in the current state `x` and the delayed state `y`.
///
/// Serialized as an object keyed by `"i,j"` power pairs, e.g.
/// `{"1,0": 0.5, "3,0": -12.0}` for `0.5 x - 12 x³`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Poly2 {
    terms: Vec<Monomial>,
}

impl Poly2 {
    pub fn new(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut merged: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for m in terms {
            *merged.entry((m.x_pow, m.y_pow)).or_insert(0.0) += m.coef;
        }
        Self {
            terms: merged
                .into_iter()
                .filter(|&(_, c)| c != 0.0)
                .map(|((x_pow, y_pow), coef)| Monomial { x_pow, y_pow, coef })
                .collect(),
        }
    }

    /// Convenience constructor from `(x_pow, y_pow, coef)` triples.
    pub fn from_terms(terms: &[(u32, u32, f64)]) -> Self {
        Self::new(terms.iter().map(|&(x_pow, y_pow, coef)| Monomial { x_pow, y_pow, coef }))
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * x.powi(m.x_pow as i32) * y.powi(m.y_pow as i32))
            .sum()
    }

    /// Coefficient of the constant term, which must be zero for `0` to be an
    /// equilibrium.
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|m| m.x_pow == 0 && m.y_pow == 0)
            .map_or(0.0, |m| m.coef)
    }

    /// Total degree of the highest monomial (0 for the zero polynomial).
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|m| m.x_pow + m.y_pow)
            .max()
            .unwrap_or(0)
    }
}

impl TryFrom<BTreeMap<String, f64>> for Poly2 {
    type Error = Error;

    fn try_from(table: BTreeMap<String, f64>) -> Result<Self> {
        let mut terms = Vec::with_capacity(table.len());
        for (key, coef) in table {
            let (a, b) = key
                .split_once(',')
                .ok_or_else(|| config(format!("monomial key {key:?} is not of the form \"i,j\"")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| config(format!("monomial key {key:?} has a non-integer power")))
            };
            terms.push(Monomial {
                x_pow: parse(a)?,
                y_pow: parse(b)?,
                coef,
            });
        }
        Ok(Self::new(terms))
    }
}

impl From<Poly2> for BTreeMap<String, f64> {
    fn from(p: Poly2) -> Self {
        p.terms
            .iter()
            .map(|m| (format!("{},{}", m.x_pow, m.y_pow), m.coef))
            .collect()
    }
}

/// Coefficients of one mode of a scalar polynomial system.
///
/// Control is linear state feedback `u(x) = control_gain · x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarModeCoeffs {
    pub drift: Poly2,
    pub diffusion: Poly2,
    pub control_gain: f64,
}

pub type DriftFn = Arc<dyn Fn(&[f64], &[f64], usize, f64, &mut [f64]) + Send + Sync>;
/// Writes the `dim × noise_dim` diffusion matrix in row-major order.
pub type DiffusionFn = Arc<dyn Fn(&[f64], &[f64], usize, f64, &mut [f64]) + Send + Sync>;
pub type ControlFn = Arc<dyn Fn(&[f64], usize, f64, &mut [f64]) + Send + Sync>;

/// Opaque `n`-dimensional coefficients. Simulation only.
#[derive(Clone)]
pub struct CallbackModel {
    pub dim: usize,
    pub noise_dim: usize,
    pub n_modes: usize,
    pub drift: DriftFn,
    pub diffusion: DiffusionFn,
    pub control: ControlFn,
    /// Lipschitz bound `L` of the control, if known.
    pub control_bound: Option<f64>,
}

impl fmt::Debug for CallbackModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackModel")
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("n_modes", &self.n_modes)
            .finish_non_exhaustive()
    }
}

impl CallbackModel {
    /// A model with zero control; set `control` afterwards to add feedback.
    pub fn new(dim: usize, noise_dim: usize, n_modes: usize, drift: DriftFn, diffusion: DiffusionFn) -> Self {
        Self {
            dim,
            noise_dim,
            n_modes,
            drift,
            diffusion,
            control: Arc::new(|_, _, _, out: &mut [f64]| out.fill(0.0)),
            control_bound: Some(0.0),
        }
    }

    pub fn with_control(mut self, control: ControlFn, bound: Option<f64>) -> Self {
        self.control = control;
        self.control_bound = bound;
        self
    }
}

#[derive(Debug, Clone)]
pub enum ModeCoefficients {
    Polynomial(Vec<ScalarModeCoeffs>),
    Callback(CallbackModel),
}

impl ModeCoefficients {
    pub fn n_modes(&self) -> usize {
        match self {
            Self::Polynomial(modes) => modes.len(),
            Self::Callback(cb) => cb.n_modes,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polynomial(_) => 1,
            Self::Callback(cb) => cb.dim,
        }
    }

    pub fn noise_dim(&self) -> usize {
        match self {
            Self::Polynomial(_) => 1,
            Self::Callback(cb) => cb.noise_dim,
        }
    }

    pub fn polynomial(&self) -> Result<&[ScalarModeCoeffs]> {
        match self {
            Self::Polynomial(modes) => Ok(modes),
            Self::Callback(_) => Err(Error::Unsupported(
                "callback coefficients cannot be bounded; use a polynomial model".into(),
            )),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Self::Polynomial(modes) => {
                for (i, m) in modes.iter().enumerate() {
                    if m.drift.constant_term() != 0.0 || m.diffusion.constant_term() != 0.0 {
                        return Err(validation(format!(
                            "mode {}: drift and diffusion must vanish at the origin",
                            i + 1
                        )));
                    }
                    if !m.control_gain.is_finite() {
                        return Err(validation(format!("mode {}: control gain is not finite", i + 1)));
                    }
                }
                Ok(())
            }
            Self::Callback(cb) => {
                if cb.dim == 0 || cb.noise_dim == 0 || cb.n_modes == 0 {
                    return Err(validation("callback model needs positive dimensions and mode count"));
                }
                Ok(())
            }
        }
    }
}
