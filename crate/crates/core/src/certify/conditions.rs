//! Design conditions on the controlled coefficients: the two-row
//! dissipativity bounds with their M-matrix weights, the Khasminskii bound,
//! and the Lyapunov-operator inequalities with the `W` sandwich.

use serde::{Deserialize, Serialize};

use super::grid::{check_1d, check_2d, GridSpec, InequalityReport};
use super::mmatrix::{is_nonsingular_m_matrix, leading_minors, solve_weights};
use crate::error::{validation, Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::{GeneratorMatrix, GrowthParams, ScalarModeCoeffs, SystemSpec};

/// Per-mode constants of the two dissipativity rows.
///
/// Row 1 bounds `x(f + u) + ½g²`, row 2 bounds `x(f + u) + (q₁/2)g²`, each
/// by `k|x|² + l|y|² − β|x|^p + g|y|^p`. The `g` fields are the `γ_{ji}`
/// constants, renamed so they cannot be confused with generator entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cond41Mode {
    pub k1: f64,
    pub l1: f64,
    pub beta1: f64,
    pub g1: f64,
    pub k2: f64,
    pub l2: f64,
    pub beta2: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Condition41Data {
    pub modes: Vec<Cond41Mode>,
}

impl Condition41Data {
    pub fn validate(&self, n_modes: usize) -> Result<()> {
        if self.modes.len() != n_modes {
            return Err(validation(format!(
                "{} rows of dissipativity constants for {n_modes} modes",
                self.modes.len()
            )));
        }
        for (i, m) in self.modes.iter().enumerate() {
            let nonneg = [m.l1, m.beta1, m.g1, m.l2, m.beta2, m.g2];
            if nonneg.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || !m.k1.is_finite() || !m.k2.is_finite() {
                return Err(validation(format!(
                    "mode {}: l, beta, g must be nonnegative and k finite",
                    i + 1
                )));
            }
        }
        Ok(())
    }
}

/// `W(x) = Σ c·|x|^e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsTerm {
    pub power: f64,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AbsPoly {
    pub terms: Vec<AbsTerm>,
}

impl AbsPoly {
    pub fn new(terms: &[(f64, f64)]) -> Self {
        Self {
            terms: terms.iter().map(|&(power, coef)| AbsTerm { power, coef }).collect(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let a = x.abs();
        self.terms.iter().map(|t| t.coef * a.powf(t.power)).sum()
    }
}

/// Constants of the Lyapunov-operator inequalities.
///
/// `gamma1..gamma3` are tuning constants, `gamma4..gamma6` bound the
/// controlled operator, `gamma4p..gamma6p` the uncontrolled one, and
/// `gamma7`, `gamma8` sandwich `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition42Data {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    pub gamma4: f64,
    pub gamma5: f64,
    pub gamma6: f64,
    pub gamma7: f64,
    pub gamma8: f64,
    pub gamma4p: f64,
    pub gamma5p: f64,
    pub gamma6p: f64,
    #[serde(rename = "W")]
    pub w: AbsPoly,
}

impl Condition42Data {
    /// `γ̄ = 2(γ₅ ∨ γ₆ ∨ γ′₅ ∨ γ′₆)`.
    pub fn gamma_bar(&self) -> f64 {
        2.0 * self.gamma5.max(self.gamma6).max(self.gamma5p).max(self.gamma6p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("gamma3", self.gamma3),
            ("gamma4", self.gamma4),
            ("gamma5", self.gamma5),
            ("gamma6", self.gamma6),
            ("gamma7", self.gamma7),
            ("gamma8", self.gamma8),
            ("gamma4p", self.gamma4p),
            ("gamma5p", self.gamma5p),
            ("gamma6p", self.gamma6p),
        ];
        for (name, v) in all {
            if !(v > 0.0) || !v.is_finite() {
                return Err(validation(format!("{name} = {v} must be positive")));
            }
        }
        if self.w.terms.is_empty() {
            return Err(validation("W needs at least one term"));
        }
        Ok(())
    }
}

/// M-matrix weights `θ = 𝒜₁⁻¹1`, `θ̄ = 𝒜₂⁻¹1` and their extremes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weights {
    pub a1_matrix: Vec<Vec<f64>>,
    pub a2_matrix: Vec<Vec<f64>>,
    pub a1_minors: Vec<f64>,
    pub a2_minors: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_bar: Vec<f64>,
    /// `min θᵢ`.
    pub a1: f64,
    /// `max θᵢ`.
    pub a2: f64,
    /// `max θ̄ᵢ`.
    pub a3: f64,
}

/// `𝒜₁ = −2 diag(k₁) − Γ` and `𝒜₂ = −(q₁ + 1) diag(k₂) − Γ`.
pub fn weight_matrices(generator: &GeneratorMatrix, cond41: &Condition41Data, q1: f64) -> (SquareMatrix, SquareMatrix) {
    let k1: Vec<f64> = cond41.modes.iter().map(|m| -2.0 * m.k1).collect();
    let k2: Vec<f64> = cond41.modes.iter().map(|m| -(q1 + 1.0) * m.k2).collect();
    let g = generator.matrix();
    (SquareMatrix::from_diagonal(&k1).sub(g), SquareMatrix::from_diagonal(&k2).sub(g))
}

pub fn solve_condition41_weights(generator: &GeneratorMatrix, cond41: &Condition41Data, q1: f64) -> Result<Weights> {
    cond41.validate(generator.n_modes())?;
    let (a1m, a2m) = weight_matrices(generator, cond41, q1);
    for (name, a) in [("A1", &a1m), ("A2", &a2m)] {
        if !is_nonsingular_m_matrix(a) {
            return Err(Error::Certificate(format!(
                "{name} = {a:?} is not a nonsingular M-matrix (leading minors {:?})",
                leading_minors(a)
            )));
        }
    }
    let theta = solve_weights(&a1m)?;
    let theta_bar = solve_weights(&a2m)?;
    Ok(Weights {
        a1_minors: leading_minors(&a1m),
        a2_minors: leading_minors(&a2m),
        a1_matrix: a1m.to_rows(),
        a2_matrix: a2m.to_rows(),
        a1: theta.iter().copied().fold(f64::INFINITY, f64::min),
        a2: theta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        a3: theta_bar.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        theta,
        theta_bar,
    })
}

/// A scalar inequality `lhs < rhs` with its evaluated sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarCheck {
    pub name: String,
    pub expression: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl ScalarCheck {
    pub fn strict(name: &str, expression: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            expression: expression.to_string(),
            lhs,
            rhs,
            pass: lhs < rhs,
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaReport {
    /// `ζ₁ … ζ₆`.
    pub zeta: [f64; 6],
    pub checks: Vec<ScalarCheck>,
    pub pass: bool,
}

/// `ζ₁ … ζ₆` and the four inequalities they must satisfy.
///
/// The fourth inequality is read as `ζ₅ > ζ₆ (q₁ + p h*)/(p + q₁ − 1)`.
pub fn zeta_constants(weights: &Weights, cond41: &Condition41Data, growth: &GrowthParams, h_star: f64) -> ZetaReport {
    let (th, tb) = (&weights.theta, &weights.theta_bar);
    let q1 = growth.q1;
    let p = growth.p;
    let max_over = |f: &dyn Fn(usize) -> f64| (0..th.len()).map(f).fold(f64::NEG_INFINITY, f64::max);
    let min_over = |f: &dyn Fn(usize) -> f64| (0..th.len()).map(f).fold(f64::INFINITY, f64::min);
    let m = &cond41.modes;
    let z1 = 2.0 * max_over(&|i| th[i] * m[i].l1);
    let z2 = 2.0 * min_over(&|i| th[i] * m[i].beta1);
    let z3 = 2.0 * max_over(&|i| th[i] * m[i].g1);
    let z4 = (q1 + 1.0) * max_over(&|i| tb[i] * m[i].l2);
    let z5 = (q1 + 1.0) * min_over(&|i| tb[i] * m[i].beta2);
    let z6 = (q1 + 1.0) * max_over(&|i| tb[i] * m[i].g2);
    let checks = vec![
        ScalarCheck::strict("zeta1", "h* zeta1 < 1", h_star * z1, 1.0),
        ScalarCheck::strict("zeta2", "h* zeta3 < zeta2", h_star * z3, z2),
        ScalarCheck::strict(
            "zeta4",
            "zeta4 (q1 - 1 + 2 h*) / (q1 + 1) < 1",
            z4 * (q1 - 1.0 + 2.0 * h_star) / (q1 + 1.0),
            1.0,
        ),
        ScalarCheck::strict(
            "zeta5",
            "zeta6 (q1 + p h*) / (p + q1 - 1) < zeta5",
            z6 * (q1 + p * h_star) / (p + q1 - 1.0),
            z5,
        ),
    ];
    let pass = checks.iter().all(|c| c.pass);
    ZetaReport {
        zeta: [z1, z2, z3, z4, z5, z6],
        checks,
        pass,
    }
}

/// Grid results for a family of pointwise inequalities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub name: String,
    pub grid: GridSpec,
    pub pass: bool,
    /// Largest `lhs − rhs` over every inequality and mode.
    pub worst_violation: f64,
    pub checks: Vec<InequalityReport>,
    pub scalar_checks: Vec<ScalarCheck>,
}

impl ConditionReport {
    fn new(name: &str, grid: GridSpec, checks: Vec<InequalityReport>, scalar_checks: Vec<ScalarCheck>) -> Self {
        let pass = checks.iter().all(|c| c.pass) && scalar_checks.iter().all(|c| c.pass);
        let worst_violation = checks
            .iter()
            .map(|c| c.worst_violation)
            .fold(f64::NEG_INFINITY, f64::max);
        Self {
            name: name.to_string(),
            grid,
            pass,
            worst_violation,
            checks,
            scalar_checks,
        }
    }
}

fn scalar_modes(spec: &SystemSpec) -> Result<&[ScalarModeCoeffs]> {
    spec.polynomial_modes()
}

/// Grid check of both dissipativity rows for every mode.
pub fn verify_condition41(spec: &SystemSpec, cond41: &Condition41Data, grid: &GridSpec) -> Result<ConditionReport> {
    let modes = scalar_modes(spec)?;
    let growth = spec.growth()?;
    grid.validate()?;
    cond41.validate(modes.len())?;
    let (p, q1) = (growth.p, growth.q1);
    let mut checks = Vec::new();
    for (i, (mc, c)) in modes.iter().zip(&cond41.modes).enumerate() {
        let drift = |x: f64, y: f64| x * (mc.drift.eval(x, y) + mc.control_gain * x);
        checks.push(check_2d("row1", Some(i + 1), grid, |x, y| {
            let g = mc.diffusion.eval(x, y);
            let lhs = drift(x, y) + 0.5 * g * g;
            let rhs = c.k1 * x * x + c.l1 * y * y - c.beta1 * x.abs().powf(p) + c.g1 * y.abs().powf(p);
            (lhs, rhs)
        }));
        checks.push(check_2d("row2", Some(i + 1), grid, |x, y| {
            let g = mc.diffusion.eval(x, y);
            let lhs = drift(x, y) + 0.5 * q1 * g * g;
            let rhs = c.k2 * x * x + c.l2 * y * y - c.beta2 * x.abs().powf(p) + c.g2 * y.abs().powf(p);
            (lhs, rhs)
        }));
    }
    Ok(ConditionReport::new("condition41", *grid, checks, Vec::new()))
}

/// Grid check of `x f + ((q − 1)/2) g² ≤ K(|x|² + |y|²) − α₁|x|^p + α₂|y|^p`.
pub fn verify_khasminskii(spec: &SystemSpec, grid: &GridSpec) -> Result<ConditionReport> {
    let modes = scalar_modes(spec)?;
    let g = *spec.growth()?;
    grid.validate()?;
    let checks = modes
        .iter()
        .enumerate()
        .map(|(i, mc)| {
            check_2d("khasminskii", Some(i + 1), grid, |x, y| {
                let gv = mc.diffusion.eval(x, y);
                let lhs = x * mc.drift.eval(x, y) + 0.5 * (g.q - 1.0) * gv * gv;
                let rhs = g.k * (x * x + y * y) - g.alpha1 * x.abs().powf(g.p) + g.alpha2 * y.abs().powf(g.p);
                (lhs, rhs)
            })
        })
        .collect();
    Ok(ConditionReport::new("khasminskii", *grid, checks, Vec::new()))
}

/// Lyapunov operator of `U(x, i) = θᵢ|x|² + θ̄ᵢ|x|^{q₁+1}` for a scalar mode.
///
/// With `controlled` false the control term is dropped.
pub fn lyapunov_operator(
    spec: &SystemSpec,
    weights: &Weights,
    q1: f64,
    mode: usize,
    x: f64,
    y: f64,
    controlled: bool,
) -> Result<f64> {
    let modes = scalar_modes(spec)?;
    let mc = modes
        .get(mode)
        .ok_or_else(|| Error::Config(format!("unknown mode index {mode}")))?;
    Ok(operator(mc, &spec.generator, weights, q1, mode, x, y, controlled))
}

#[allow(clippy::too_many_arguments)]
fn operator(
    mc: &ScalarModeCoeffs,
    generator: &GeneratorMatrix,
    w: &Weights,
    q1: f64,
    i: usize,
    x: f64,
    y: f64,
    controlled: bool,
) -> f64 {
    let u = if controlled { mc.control_gain * x } else { 0.0 };
    let xf = x * (mc.drift.eval(x, y) + u);
    let g2 = mc.diffusion.eval(x, y).powi(2);
    let ax = x.abs();
    let mut v = 2.0 * w.theta[i] * (xf + 0.5 * g2) + (q1 + 1.0) * w.theta_bar[i] * ax.powf(q1 - 1.0) * (xf + 0.5 * q1 * g2);
    for j in 0..generator.n_modes() {
        v += generator.rate(i, j) * (w.theta[j] * x * x + w.theta_bar[j] * ax.powf(q1 + 1.0));
    }
    v
}

/// Grid check of the controlled and uncontrolled operator bounds, the `W`
/// sandwich, and `1 ∧ γ₄ > γ̄ h*`.
pub fn verify_condition42(
    spec: &SystemSpec,
    weights: &Weights,
    cond42: &Condition42Data,
    h_star: f64,
    grid: &GridSpec,
) -> Result<ConditionReport> {
    let modes = scalar_modes(spec)?;
    let growth = *spec.growth()?;
    grid.validate()?;
    cond42.validate()?;
    let q1 = growth.q1;
    let e = q1 + growth.p - 1.0;
    let c = cond42;
    let w = |v: f64| c.w.eval(v);
    let mut checks = Vec::new();
    for (i, mc) in modes.iter().enumerate() {
        checks.push(check_2d("controlled", Some(i + 1), grid, |x, y| {
            let f = mc.drift.eval(x, y);
            let g = mc.diffusion.eval(x, y);
            let ax = x.abs();
            let lu = operator(mc, &spec.generator, weights, q1, i, x, y, true);
            let obs = 2.0 * weights.theta[i] * ax + (q1 + 1.0) * weights.theta_bar[i] * ax.powf(q1);
            let lhs = lu + c.gamma1 * obs * obs + c.gamma2 * f * f + c.gamma3 * g * g;
            let rhs = -c.gamma4 * x * x + c.gamma5 * y * y - w(x) + c.gamma6 * w(y);
            (lhs, rhs)
        }));
        checks.push(check_2d("uncontrolled", Some(i + 1), grid, |x, y| {
            let lu = operator(mc, &spec.generator, weights, q1, i, x, y, false);
            let rhs = c.gamma4p * x * x + c.gamma5p * y * y - w(x) + c.gamma6p * w(y);
            (lu, rhs)
        }));
    }
    checks.push(check_1d("W_lower", grid, |x| (c.gamma7 * x.abs().powf(e), w(x))));
    checks.push(check_1d("W_upper", grid, |x| {
        (w(x), c.gamma8 * (x * x + x.abs().powf(e)))
    }));
    let gbh = c.gamma_bar() * h_star;
    let scalar = vec![ScalarCheck::strict(
        "gamma_bar",
        "gamma_bar h* < min(1, gamma4)",
        gbh,
        c.gamma4.min(1.0),
    )];
    Ok(ConditionReport::new("condition42", *grid, checks, scalar))
}
