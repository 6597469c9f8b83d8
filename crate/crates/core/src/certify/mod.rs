//! Stability certificate for the intermittently controlled system.
//!
//! [`certify`] runs every check in order: M-matrix weights and `ζ`
//! constants, grid verification of the dissipativity, Khasminskii and
//! Lyapunov-operator inequalities, the observation-gap bound, the constant
//! chain at the chosen `ε`, the certified rate and its optimum over `ε`,
//! and the moment-boundedness condition.

mod boundedness;
mod conditions;
mod constants;
mod grid;
mod gronwall;
mod mmatrix;

pub use boundedness::{boundedness_certificate, BoundednessCertificate};
pub use conditions::{
    lyapunov_operator, solve_condition41_weights, verify_condition41, verify_condition42, verify_khasminskii,
    weight_matrices, zeta_constants, AbsPoly, AbsTerm, Cond41Mode, Condition41Data, Condition42Data, ConditionReport,
    ScalarCheck, Weights, ZetaReport,
};
pub use constants::{
    certified_rate, delta_bound, moment_rate_table, optimize_epsilon, rate_formula, CConstants, CertifiedRate,
    DeltaBound, DeltaBoundInputs, EpsilonOptimum, QbarRate, RateInputs,
};
pub use grid::{check_1d, check_2d, GridSpec, InequalityReport, REL_TOL};
pub use gronwall::{gronwall_alpha, gronwall_bound, gronwall_oracle, GronwallOutcome};
pub use mmatrix::{is_nonsingular_m_matrix, is_nonsingular_m_matrix_rows, leading_minors, solve_weights};

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::model::{h_star_estimate, HStarEstimate, SystemSpec};

fn default_qbar() -> Vec<f64> {
    vec![2.0]
}

/// User-supplied constants for the certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateInputs {
    pub cond41: Condition41Data,
    pub cond42: Condition42Data,
    /// Observation gap to certify. Falls back to the schedule's gap.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Fixed `ε`. When absent the optimizing `ε` is used.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_qbar")]
    pub qbar: Vec<f64>,
}

/// Control timing the certificate is evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyTarget {
    #[serde(rename = "T")]
    pub period: f64,
    pub theta: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaTable {
    #[serde(flatten)]
    pub values: Condition42Data,
    pub gamma_bar: f64,
    pub gamma_bar_h_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub pass: bool,
    pub failures: Vec<String>,
    pub target: CertifyTarget,
    pub n_modes: usize,
    pub h_star: f64,
    pub h_star_supplied: bool,
    /// Numerical estimate for comparison; informational only.
    pub h_star_estimate: Option<HStarEstimate>,
    pub tau: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub min_generator_diagonal: f64,
    pub cond41: Condition41Data,
    pub weights: Weights,
    pub zeta: ZetaReport,
    pub condition41: ConditionReport,
    pub khasminskii: ConditionReport,
    pub condition42: ConditionReport,
    pub gammas: GammaTable,
    pub delta_bound: Option<DeltaBound>,
    pub delta_admissible: bool,
    pub epsilon: f64,
    pub epsilon_optimized: bool,
    pub constants: CConstants,
    pub rate: CertifiedRate,
    pub rate_table: Vec<QbarRate>,
    pub optimum: Option<EpsilonOptimum>,
    pub boundedness: BoundednessCertificate,
}

impl StabilityCertificate {
    /// Certified mean-square rate, if any.
    pub fn mu(&self) -> Option<f64> {
        self.rate.mu
    }

    /// Certified exponent for `E|x|^q̄`, if any.
    pub fn rate_for(&self, qbar: f64, q: f64) -> Option<f64> {
        let mu = self.rate.mu?;
        (qbar >= 2.0 && qbar < q).then(|| (q - qbar) / (q - 2.0) * mu)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the full certificate for `spec` at the given control timing.
pub fn certify(spec: &SystemSpec, inputs: &CertificateInputs, target: CertifyTarget) -> Result<StabilityCertificate> {
    spec.polynomial_modes()?;
    let growth = *spec.growth()?;
    if !(target.period > 0.0) || !(target.theta >= 0.0 && target.theta <= target.period) || !(target.delta > 0.0) {
        return Err(validation(format!(
            "need T > 0, 0 <= theta <= T and delta > 0, got {target:?}"
        )));
    }
    inputs.grid.validate()?;
    for &qb in &inputs.qbar {
        if !(qb >= 2.0 && qb < growth.q) {
            return Err(validation(format!("qbar = {qb} outside [2, q = {})", growth.q)));
        }
    }
    let mut failures = Vec::new();

    let h_star = spec.delay.h_star_or_estimate()?;
    let h_star_supplied = spec.delay.h_star.is_some();
    let h_star_est = h_star_estimate(&spec.delay, spec.delay.default_horizon(), 1e-4).ok();
    let tau = spec.delay.tau();
    let l = growth.l;
    let min_diag = spec.generator.min_diagonal();

    let weights = solve_condition41_weights(&spec.generator, &inputs.cond41, growth.q1)?;
    let zeta = zeta_constants(&weights, &inputs.cond41, &growth, h_star);
    for c in zeta.checks.iter().filter(|c| !c.pass) {
        failures.push(format!("{} fails: {} ({} vs {})", c.name, c.expression, c.lhs, c.rhs));
    }

    let grid = inputs.grid;
    let condition41 = verify_condition41(spec, &inputs.cond41, &grid)?;
    let khasminskii = verify_khasminskii(spec, &grid)?;
    let condition42 = verify_condition42(spec, &weights, &inputs.cond42, h_star, &grid)?;
    for r in [&condition41, &khasminskii, &condition42] {
        if !r.pass {
            failures.push(format!("{} fails (worst violation {:.6e})", r.name, r.worst_violation));
        }
    }

    let c42 = &inputs.cond42;
    let gamma_bar = c42.gamma_bar();
    let delta_bound = match delta_bound(&DeltaBoundInputs {
        l,
        gamma1: c42.gamma1,
        gamma2: c42.gamma2,
        gamma3: c42.gamma3,
        min_diag,
        gamma4: c42.gamma4,
        gamma_bar,
        h_star,
    }) {
        Ok(b) => Some(b),
        Err(Error::Certificate(msg)) => {
            failures.push(msg);
            None
        }
        Err(e) => return Err(e),
    };
    let delta_admissible = delta_bound.is_some_and(|b| target.delta > 0.0 && target.delta < b.delta_max);
    if let Some(b) = &delta_bound {
        if !delta_admissible {
            failures.push(format!(
                "delta {} exceeds delta_max {:.6e}",
                target.delta, b.delta_max
            ));
        }
    }

    let rate_inputs = RateInputs::new(c42, &weights, l, min_diag, target.delta, tau, h_star);
    let optimum = optimize_epsilon(&rate_inputs, target.theta, target.period).ok();
    let (epsilon, epsilon_optimized) = match (inputs.epsilon, &optimum) {
        (Some(e), _) => (e, false),
        (None, Some(o)) => (o.epsilon, true),
        (None, None) => (rate_inputs.epsilon_cap().min(1.0), false),
    };
    let constants = rate_inputs.c_constants(epsilon);
    for r in &constants.reasons {
        failures.push(format!("constant chain infeasible: {r}"));
    }
    let rate = certified_rate(epsilon, constants.c5, target.period, target.theta);
    if rate.mu.is_none() {
        failures.push(format!(
            "theta {} <= theta_threshold {:.4}",
            target.theta, rate.theta_threshold
        ));
    }
    let rate_table = match rate.mu {
        Some(mu) => moment_rate_table(mu, growth.q, &inputs.qbar)?,
        None => Vec::new(),
    };

    let boundedness = boundedness_certificate(&growth, h_star, tau)?;
    if !boundedness.condition {
        failures.push(format!("moment boundedness margin {} is not positive", boundedness.margin));
    }

    Ok(StabilityCertificate {
        pass: failures.is_empty(),
        failures,
        target,
        n_modes: spec.n_modes(),
        h_star,
        h_star_supplied,
        h_star_estimate: h_star_est,
        tau,
        l,
        min_generator_diagonal: min_diag,
        cond41: inputs.cond41.clone(),
        weights,
        zeta,
        condition41,
        khasminskii,
        condition42,
        gammas: GammaTable {
            values: c42.clone(),
            gamma_bar,
            gamma_bar_h_star: gamma_bar * h_star,
        },
        delta_bound,
        delta_admissible,
        epsilon,
        epsilon_optimized,
        constants,
        rate,
        rate_table,
        optimum,
        boundedness,
    })
}
