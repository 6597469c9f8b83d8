//! Observation-gap bound, the constant chain `C₁ … C₅`, the certified rate
//! and its maximization over `ε`.

use serde::Serialize;

use super::conditions::{Condition42Data, Weights};
use crate::error::{validation, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBoundInputs {
    pub l: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
    /// `min γ_ii ≤ 0` over the generator diagonal.
    pub min_diag: f64,
    pub gamma4: f64,
    /// `γ̄ = 2(γ₅ ∨ γ₆ ∨ γ′₅ ∨ γ′₆)`.
    pub gamma_bar: f64,
    pub h_star: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBound {
    /// The three candidate bounds, in the order `√(γ₁γ₂)/(2L)`,
    /// `γ₁γ₃/(2L²)`, and the generator-dependent root.
    pub terms: [f64; 3],
    pub delta_max: f64,
    /// Zero-based index of the smallest term.
    pub binding: usize,
}

/// Largest admissible observation gap.
pub fn delta_bound(inp: &DeltaBoundInputs) -> Result<DeltaBound> {
    let l = inp.l;
    if !(l > 0.0) || !(inp.gamma1 > 0.0) || !(inp.gamma2 > 0.0) || !(inp.gamma3 > 0.0) {
        return Err(validation("L and gamma1..gamma3 must be positive"));
    }
    if !(inp.min_diag <= 0.0) {
        return Err(validation("min generator diagonal must be nonpositive"));
    }
    let slack = inp.gamma4 - inp.gamma_bar * inp.h_star;
    if !(slack > 0.0) {
        return Err(Error::Certificate(format!(
            "gamma4 - gamma_bar h* = {slack} leaves no margin for the observation gap"
        )));
    }
    let l2 = l * l;
    let l4 = l2 * l2;
    let t1 = (inp.gamma1 * inp.gamma2).sqrt() / (2.0 * l);
    let t2 = inp.gamma1 * inp.gamma3 / (2.0 * l2);
    let inner = l2.min(inp.gamma1 * slack);
    let t3 = (inp.min_diag + (inp.min_diag * inp.min_diag + 16.0 * l4 * inner).sqrt()) / (16.0 * l4);
    let terms = [t1, t2, t3];
    let (binding, &delta_max) = terms
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three terms");
    Ok(DeltaBound {
        terms,
        delta_max,
        binding,
    })
}

/// Everything the constant chain depends on besides `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateInputs {
    pub gamma1: f64,
    pub gamma4: f64,
    pub gamma5: f64,
    pub gamma6: f64,
    pub gamma7: f64,
    pub gamma4p: f64,
    pub gamma5p: f64,
    pub gamma6p: f64,
    pub l: f64,
    pub min_diag: f64,
    pub a2: f64,
    pub a3: f64,
    pub delta: f64,
    pub tau: f64,
    pub h_star: f64,
}

impl RateInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(cond42: &Condition42Data, weights: &Weights, l: f64, min_diag: f64, delta: f64, tau: f64, h_star: f64) -> Self {
        Self {
            gamma1: cond42.gamma1,
            gamma4: cond42.gamma4,
            gamma5: cond42.gamma5,
            gamma6: cond42.gamma6,
            gamma7: cond42.gamma7,
            gamma4p: cond42.gamma4p,
            gamma5p: cond42.gamma5p,
            gamma6p: cond42.gamma6p,
            l,
            min_diag,
            a2: weights.a2,
            a3: weights.a3,
            delta,
            tau,
            h_star,
        }
    }

    /// Upper limit `(L² + 2 min γ_ii δ − 16L⁴δ²)/(2L²δ)` on `ε`.
    pub fn epsilon_cap(&self) -> f64 {
        let (l2, d) = (self.l * self.l, self.delta);
        (l2 + 2.0 * self.min_diag * d - 16.0 * l2 * l2 * d * d) / (2.0 * l2 * d)
    }

    /// `C₁ … C₅` at `ε` with feasibility flags.
    pub fn c_constants(&self, eps: f64) -> CConstants {
        let l4 = self.l.powi(4);
        let d = self.delta;
        let grow = self.h_star * (eps * self.tau).exp();
        let obs_loss = (8.0 * l4 * d * d - self.min_diag * d) / self.gamma1;
        let w_loss = eps * self.a3 / self.gamma7;
        let c1 = self.gamma4 - obs_loss - eps * (self.a2 + self.a3) - self.gamma5 * grow;
        let c2 = 1.0 - self.gamma6 * grow - w_loss;
        let c3 = 1.0 - w_loss - self.gamma6p * grow;
        let c4 = self.gamma5.max(self.gamma6).max(self.gamma5p).max(self.gamma6p) * grow;
        let c5 = self.gamma4p + eps * (self.a2 + self.a3) + (self.gamma5p - self.gamma6p) * grow + 1.0 - w_loss;
        let cap = self.epsilon_cap();
        let mut reasons = Vec::new();
        if !(eps > 0.0) {
            reasons.push(format!("epsilon = {eps} must be positive"));
        }
        if eps > cap {
            reasons.push(format!("epsilon = {eps} exceeds the cap {cap}"));
        }
        for (name, v) in [("C1", c1), ("C2", c2), ("C3", c3), ("C5", c5)] {
            if !(v > 0.0) {
                reasons.push(format!("{name} = {v} is not positive"));
            }
        }
        let c123 = c1.min(c2).min(c3);
        if !(c4 <= c123) {
            reasons.push(format!("C4 = {c4} exceeds min(C1, C2, C3) = {c123}"));
        }
        CConstants {
            epsilon: eps,
            epsilon_cap: cap,
            c1,
            c2,
            c3,
            c4,
            c5,
            c123_min: c123,
            feasible: reasons.is_empty(),
            reasons,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CConstants {
    pub epsilon: f64,
    pub epsilon_cap: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    /// `C₁ ∧ C₂ ∧ C₃`.
    pub c123_min: f64,
    pub feasible: bool,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifiedRate {
    /// `(1 − ε/C₅)T`.
    pub theta_threshold: f64,
    /// `ε − C₅(1 − θ/T)` when `θ` exceeds the threshold.
    pub mu: Option<f64>,
}

/// Mean-square rate for control width `theta`.
///
/// Evaluated as `C₅(θ − θ_thr)/T`, algebraically equal to
/// `ε − C₅(1 − θ/T)`, so the rate vanishes exactly at the threshold.
pub fn certified_rate(eps: f64, c5: f64, period: f64, theta: f64) -> CertifiedRate {
    let theta_threshold = (1.0 - eps / c5) * period;
    let mu = (theta > theta_threshold).then(|| c5 * (theta - theta_threshold) / period);
    CertifiedRate { theta_threshold, mu }
}

/// The rate as a function of `θ` without the threshold cut-off.
pub fn rate_formula(eps: f64, c5: f64, period: f64, theta: f64) -> f64 {
    let theta_threshold = (1.0 - eps / c5) * period;
    c5 * (theta - theta_threshold) / period
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonOptimum {
    pub epsilon: f64,
    pub mu: f64,
    pub constants: CConstants,
    /// Upper end of the scanned interval: the first `ε` at which
    /// `min(C₁, C₂, C₃)` or `C₅` stops being positive, or the cap.
    pub scan_upper: f64,
    /// True when the optimum sits on the edge of the feasible set.
    pub on_boundary: bool,
}

const SCAN_POINTS: usize = 1000;
const GOLDEN_TOL: f64 = 1e-12;

/// Maximizes `μ(ε) = ε − C₅(ε)(1 − θ/T)` over feasible `ε`.
///
/// A `10³`-point scan locates the best feasible grid point; golden-section
/// search refines it inside its bracket, and bisection refines the feasible
/// edge when a neighbouring grid point is infeasible.
pub fn optimize_epsilon(inp: &RateInputs, theta: f64, period: f64) -> Result<EpsilonOptimum> {
    let objective = |eps: f64| -> Option<f64> {
        let c = inp.c_constants(eps);
        if !c.feasible {
            return None;
        }
        certified_rate(eps, c.c5, period, theta).mu
    };
    let cap = inp.epsilon_cap();
    if !(cap > 0.0) {
        return Err(Error::Certificate(format!("epsilon cap {cap} is not positive")));
    }
    let upper = positivity_edge(inp, cap);
    let mut best: Option<(usize, f64)> = None;
    let eps_at = |k: usize| upper * k as f64 / SCAN_POINTS as f64;
    let values: Vec<Option<f64>> = (0..=SCAN_POINTS).map(|k| if k == 0 { None } else { objective(eps_at(k)) }).collect();
    for (k, v) in values.iter().enumerate() {
        if let Some(mu) = v {
            if best.is_none_or(|(_, b)| *mu > b) {
                best = Some((k, *mu));
            }
        }
    }
    let Some((k, _)) = best else {
        return Err(Error::Certificate(format!(
            "no feasible epsilon in (0, {upper}] for theta = {theta}"
        )));
    };
    let mut candidates = vec![eps_at(k)];
    let left_ok = values[k - 1].is_some();
    let right_ok = k < SCAN_POINTS && values[k + 1].is_some();
    let a = if left_ok {
        eps_at(k - 1)
    } else {
        let edge = bisect_edge(&objective, eps_at(k - 1), eps_at(k));
        candidates.push(edge);
        edge
    };
    let b = if right_ok {
        eps_at(k + 1)
    } else if k < SCAN_POINTS {
        let edge = bisect_edge(&objective, eps_at(k + 1), eps_at(k));
        candidates.push(edge);
        edge
    } else {
        candidates.push(upper);
        upper
    };
    if b > a {
        candidates.push(golden_max(&|e| objective(e).unwrap_or(f64::NEG_INFINITY), a, b));
    }
    let (epsilon, mu) = candidates
        .into_iter()
        .filter_map(|e| objective(e).map(|m| (e, m)))
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("grid optimum is feasible");
    let step = upper / SCAN_POINTS as f64;
    let on_boundary = objective(epsilon + step * 1e-6).is_none() || objective(epsilon - step * 1e-6).is_none();
    Ok(EpsilonOptimum {
        epsilon,
        mu,
        constants: inp.c_constants(epsilon),
        scan_upper: upper,
        on_boundary,
    })
}

/// First `ε` where `min(C₁, C₂, C₃, C₅)` turns nonpositive, capped.
///
/// `C₁`, `C₂`, `C₃` decrease in `ε`, so beyond this point nothing is
/// feasible and the scan can stop there.
fn positivity_edge(inp: &RateInputs, cap: f64) -> f64 {
    let g = |e: f64| {
        let c = inp.c_constants(e);
        c.c123_min.min(c.c5)
    };
    if g(cap) > 0.0 {
        return cap;
    }
    let mut hi = 1e-6_f64.min(cap);
    while hi < cap && g(hi) > 0.0 {
        hi = (hi * 2.0).min(cap);
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    hi
}

/// Bisection between an infeasible and a feasible point; returns the
/// feasible side of the edge.
fn bisect_edge(objective: &dyn Fn(f64) -> Option<f64>, bad: f64, good: f64) -> f64 {
    let (mut bad, mut good) = (bad, good);
    for _ in 0..200 {
        let mid = 0.5 * (bad + good);
        if objective(mid).is_some() {
            good = mid;
        } else {
            bad = mid;
        }
        if (good - bad).abs() <= 1e-15 * good.abs().max(1e-300) {
            break;
        }
    }
    good
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL * (a.abs() + b.abs()).max(1e-300) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QbarRate {
    pub qbar: f64,
    pub rate: f64,
}

/// `((q − q̄)/(q − 2)) μ` for each `q̄ ∈ [2, q)`.
pub fn moment_rate_table(mu: f64, q: f64, qbars: &[f64]) -> Result<Vec<QbarRate>> {
    qbars
        .iter()
        .map(|&qbar| {
            if !(qbar >= 2.0 && qbar < q) {
                return Err(validation(format!("qbar = {qbar} outside [2, q = {q})")));
            }
            Ok(QbarRate {
                qbar,
                rate: (q - qbar) / (q - 2.0) * mu,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_inputs() -> RateInputs {
        RateInputs {
            gamma1: 1.0,
            gamma4: 0.981294,
            gamma5: 0.06143,
            gamma6: 0.123112,
            gamma7: 1.39289664,
            gamma4p: 0.13,
            gamma5p: 0.05985,
            gamma6p: 0.123160,
            l: 9.0,
            min_diag: -2.0,
            a2: 0.066996,
            a3: 0.033628,
            delta: 1e-5,
            tau: 0.2,
            h_star: 20.0 / 19.0,
        }
    }

    fn example_delta() -> DeltaBoundInputs {
        DeltaBoundInputs {
            l: 9.0,
            gamma1: 1.0,
            gamma2: 0.001,
            gamma3: 0.002,
            min_diag: -2.0,
            gamma4: 0.981294,
            gamma_bar: 0.273689 * 19.0 / 20.0,
            h_star: 20.0 / 19.0,
        }
    }

    #[test]
    fn example_delta_bound() {
        let b = delta_bound(&example_delta()).unwrap();
        let hand = 0.002 / 162.0;
        assert_eq!(b.binding, 1);
        assert!(((b.delta_max - hand) / hand).abs() < 1e-12);
        assert!((b.delta_max - 1.2346e-5).abs() < 1e-9);
        assert!(1e-5 < b.delta_max);
        let t1 = (0.001f64).sqrt() / 18.0;
        assert!((b.terms[0] - t1).abs() < 1e-15);
    }

    #[test]
    fn delta_bound_shrinks_with_l() {
        let mut prev = f64::INFINITY;
        for l in [9.0, 90.0, 900.0] {
            let b = delta_bound(&DeltaBoundInputs { l, ..example_delta() }).unwrap();
            assert!(b.delta_max < prev);
            prev = b.delta_max;
        }
    }

    #[test]
    fn exhausted_margin_is_an_error() {
        let r = delta_bound(&DeltaBoundInputs {
            gamma4: 0.2,
            ..example_delta()
        });
        assert!(matches!(r, Err(Error::Certificate(_))));
    }

    #[test]
    fn example_constants_at_one() {
        let c = example_inputs().c_constants(1.0);
        assert!(c.feasible, "{c:?}");
        assert!((c.c123_min - 0.8017).abs() < 1e-3, "{c:?}");
        assert!((c.c4 - 0.1583).abs() < 1e-3);
        assert!((c.c5 - 1.1251).abs() < 1e-3);
    }

    #[test]
    fn zero_epsilon_limit() {
        let inp = example_inputs();
        let c = inp.c_constants(1e-12);
        let lim = inp.gamma4 - (8.0 * 9f64.powi(4) * 1e-10 + 2.0 * 1e-5) / 1.0 - inp.gamma5 * inp.h_star;
        assert!((c.c1 - lim).abs() < 1e-10);
    }

    #[test]
    fn example_rate() {
        let c = example_inputs().c_constants(1.0);
        let r = certified_rate(1.0, c.c5, 1.0, 0.2);
        assert!((r.mu.unwrap() - 0.0999).abs() < 1e-4);
        assert!((r.theta_threshold - 0.1112).abs() < 1e-4);
        let full = certified_rate(1.0, c.c5, 1.0, 1.0);
        assert!((full.mu.unwrap() - 1.0).abs() < 1e-12);
        assert!(certified_rate(1.0, c.c5, 1.0, 0.05).mu.is_none());
    }

    #[test]
    fn full_width_optimum_is_on_the_boundary() {
        let inp = example_inputs();
        let opt = optimize_epsilon(&inp, 1.0, 1.0).unwrap();
        assert!((opt.mu - opt.epsilon).abs() < 1e-9);
        assert!(opt.on_boundary);
        assert!(!inp.c_constants(opt.epsilon * (1.0 + 1e-6)).feasible);
    }

    #[test]
    fn optimum_is_locally_optimal() {
        let inp = example_inputs();
        for theta in [0.2, 0.4, 0.6, 0.8] {
            let opt = optimize_epsilon(&inp, theta, 1.0).unwrap();
            assert!(opt.constants.feasible);
            for f in [0.9, 1.1] {
                let e = opt.epsilon * f;
                let c = inp.c_constants(e);
                if c.feasible {
                    if let Some(mu) = certified_rate(e, c.c5, 1.0, theta).mu {
                        assert!(mu <= opt.mu + 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn rate_table() {
        let t = moment_rate_table(0.0999, 7.0, &[2.0, 4.5, 6.999999]).unwrap();
        assert!((t[0].rate - 0.0999).abs() < 1e-15);
        assert!((t[1].rate - 0.04995).abs() < 1e-15);
        assert!(t[2].rate < 1e-7);
        assert!(moment_rate_table(0.1, 7.0, &[7.0]).is_err());
        assert!(moment_rate_table(0.1, 7.0, &[1.5]).is_err());
    }

    proptest! {
        #[test]
        fn rate_is_increasing_in_theta(eps in 0.01f64..3.0, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
            let c5 = example_inputs().c_constants(eps).c5;
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            prop_assume!(hi > lo);
            let a = rate_formula(eps, c5, 1.0, lo);
            let b = rate_formula(eps, c5, 1.0, hi);
            prop_assert!(b > a);
            prop_assert!(((b - a) / (hi - lo) - c5).abs() < 1e-6 * c5);
        }

        #[test]
        fn rate_vanishes_at_threshold(eps in 0.01f64..3.0, period in 0.5f64..4.0) {
            let c5 = example_inputs().c_constants(eps).c5;
            let thr = certified_rate(eps, c5, period, 0.0).theta_threshold;
            prop_assert_eq!(rate_formula(eps, c5, period, thr), 0.0);
            prop_assert!(certified_rate(eps, c5, period, thr).mu.is_none());
        }

        #[test]
        fn delta_bound_monotone(g2 in 1e-4f64..0.1, g3 in 1e-4f64..0.1, bump in 1.0f64..3.0) {
            let base = DeltaBoundInputs { gamma2: g2, gamma3: g3, ..example_delta() };
            let d0 = delta_bound(&base).unwrap().delta_max;
            let d2 = delta_bound(&DeltaBoundInputs { gamma2: g2 * bump, ..base }).unwrap().delta_max;
            let d3 = delta_bound(&DeltaBoundInputs { gamma3: g3 * bump, ..base }).unwrap().delta_max;
            let dl = delta_bound(&DeltaBoundInputs { l: 9.0 * bump, ..base }).unwrap().delta_max;
            prop_assert!(d2 >= d0 && d3 >= d0 && dl <= d0);
        }
    }
}
