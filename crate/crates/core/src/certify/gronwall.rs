//! Numerical check of the discrete Gronwall-type recursion behind the
//! moment bound.
//!
//! With `α = C₃δ(e^{λδ} − 1)/λ` the recursion `b_k = C₁ + (C₂/λ)e^{kλδ} +
//! αS_k`, `S_{k+1} = S_k + b_k` is iterated in its equality form, and
//! `a_k = e^{−kλδ} b_k` is compared with
//! `C₁ + (C₂/λ)(e^{λδ} − 1)/(e^{λδ} − 1 − α)`.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum GronwallOutcome {
    /// Every `a_k` stayed below the bound; `max_ratio = max a_k / bound`.
    Holds { max_ratio: f64 },
    Violated { step: usize, value: f64, bound: f64 },
    /// The contraction `e^{−λδ}(1 + α) < 1` fails, so no bound is claimed.
    Inconclusive { contraction: f64 },
}

impl GronwallOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, Self::Holds { .. })
    }
}

/// `α = C₃δ(e^{λδ} − 1)/λ`.
pub fn gronwall_alpha(c3: f64, lambda: f64, delta: f64) -> f64 {
    c3 * delta * (lambda * delta).exp_m1() / lambda
}

pub fn gronwall_bound(c1: f64, c2: f64, c3: f64, lambda: f64, delta: f64) -> f64 {
    let alpha = gronwall_alpha(c3, lambda, delta);
    let em1 = (lambda * delta).exp_m1();
    c1 + c2 / lambda * em1 / (em1 - alpha)
}

pub fn gronwall_oracle(c1: f64, c2: f64, c3: f64, lambda: f64, delta: f64, n_steps: usize) -> GronwallOutcome {
    let alpha = gronwall_alpha(c3, lambda, delta);
    let decay = (-lambda * delta).exp();
    let contraction = decay * (1.0 + alpha);
    if !(contraction < 1.0) || !(lambda > 0.0) || !(delta > 0.0) {
        return GronwallOutcome::Inconclusive { contraction };
    }
    let bound = gronwall_bound(c1, c2, c3, lambda, delta);
    // Scaled state: s_k = e^{−kλδ} S_k, so nothing overflows for long runs.
    let mut s = 0.0;
    let mut max_ratio: f64 = 0.0;
    for k in 0..=n_steps {
        let a = c1 * (-(k as f64) * lambda * delta).exp() + c2 / lambda + alpha * s;
        if a > bound * (1.0 + 1e-12) {
            return GronwallOutcome::Violated { step: k, value: a, bound };
        }
        max_ratio = max_ratio.max(a / bound);
        s = decay * (s + a);
    }
    GronwallOutcome::Holds { max_ratio }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Unscaled recursion for short runs.
    fn direct(c1: f64, c2: f64, c3: f64, lambda: f64, delta: f64, n: usize) -> Vec<f64> {
        let alpha = gronwall_alpha(c3, lambda, delta);
        let mut s = 0.0;
        let mut out = Vec::new();
        for k in 0..=n {
            let b = c1 + c2 / lambda * (k as f64 * lambda * delta).exp() + alpha * s;
            out.push((-(k as f64) * lambda * delta).exp() * b);
            s += b;
        }
        out
    }

    #[test]
    fn unit_parameters_hold() {
        let r = gronwall_oracle(1.0, 1.0, 1.0, 1.0, 0.01, 10_000);
        assert!(r.holds(), "{r:?}");
    }

    #[test]
    fn scaled_matches_direct() {
        let (c1, c2, c3, l, d) = (2.0, 0.5, 3.0, 1.5, 0.02);
        let a = direct(c1, c2, c3, l, d, 200);
        let alpha = gronwall_alpha(c3, l, d);
        let decay = (-l * d).exp();
        let mut s = 0.0;
        for (k, ak) in a.iter().enumerate() {
            let scaled = c1 * (-(k as f64) * l * d).exp() + c2 / l + alpha * s;
            assert!((scaled - ak).abs() < 1e-10 * ak.abs());
            s = decay * (s + scaled);
        }
    }

    #[test]
    fn no_coupling_is_exact() {
        let (c1, c2, l, d) = (1.0, 2.0, 0.5, 0.1);
        for (k, a) in direct(c1, c2, 0.0, l, d, 50).iter().enumerate() {
            let exact = c1 * (-(k as f64) * l * d).exp() + c2 / l;
            assert!((a - exact).abs() < 1e-12);
        }
        assert!(gronwall_oracle(c1, c2, 0.0, l, d, 1000).holds());
    }

    #[test]
    fn violated_precondition_is_inconclusive() {
        let r = gronwall_oracle(1.0, 1.0, 1e4, 1.0, 0.1, 10);
        assert!(matches!(r, GronwallOutcome::Inconclusive { .. }));
    }

    #[test]
    fn random_draws_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut done = 0;
        while done < 20 {
            let c1 = rng.random_range(0.01..10.0);
            let c2 = rng.random_range(0.01..10.0);
            let c3 = rng.random_range(0.0..10.0);
            let l: f64 = rng.random_range(0.05..5.0);
            let d: f64 = rng.random_range(1e-4..0.1);
            if !((-l * d).exp() * (1.0 + gronwall_alpha(c3, l, d)) < 1.0) {
                continue;
            }
            let r = gronwall_oracle(c1, c2, c3, l, d, 10_000);
            assert!(r.holds(), "{r:?} for {c1} {c2} {c3} {l} {d}");
            done += 1;
        }
    }
}
