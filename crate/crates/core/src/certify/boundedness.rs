//! Moment boundedness of the controlled system and its decay exponent `λ`.

use serde::Serialize;

use crate::error::{validation, Result};
use crate::model::GrowthParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundednessCertificate {
    /// `α₁ − α₂ (q − 2 + p h*)/(p + q − 2) > 0`.
    pub condition: bool,
    pub margin: f64,
    /// `q α₁ − α₂ q (q − 2)/(p + q − 2)`.
    pub alpha_bar1: f64,
    /// `α₂ p q/(p + q − 2)`.
    pub alpha_bar2: f64,
    /// Root of `ᾱ₁ − λ = h* e^{λτ}(ᾱ₂ + λ)` when the condition holds.
    pub lambda: Option<f64>,
    pub residual: Option<f64>,
}

const BISECT_TOL: f64 = 1e-14;

pub fn boundedness_certificate(growth: &GrowthParams, h_star: f64, tau: f64) -> Result<BoundednessCertificate> {
    growth.validate()?;
    if !(h_star >= 1.0) || !(tau > 0.0) {
        return Err(validation(format!("need h* >= 1 and tau > 0, got {h_star}, {tau}")));
    }
    let (p, q, a1, a2) = (growth.p, growth.q, growth.alpha1, growth.alpha2);
    let margin = a1 - a2 * (q - 2.0 + p * h_star) / (p + q - 2.0);
    let alpha_bar1 = q * a1 - a2 * q * (q - 2.0) / (p + q - 2.0);
    let alpha_bar2 = a2 * p * q / (p + q - 2.0);
    let condition = margin > 0.0;
    let residual_at = |l: f64| alpha_bar1 - l - h_star * (l * tau).exp() * (alpha_bar2 + l);
    let (lambda, residual) = if condition {
        // residual(0) = q · margin > 0 and residual(ᾱ₁) < 0; the residual is
        // strictly decreasing in between.
        let (mut lo, mut hi) = (0.0, alpha_bar1);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if residual_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECT_TOL * hi {
                break;
            }
        }
        let l = 0.5 * (lo + hi);
        (Some(l), Some(residual_at(l)))
    } else {
        (None, None)
    };
    Ok(BoundednessCertificate {
        condition,
        margin,
        alpha_bar1,
        alpha_bar2,
        lambda,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> GrowthParams {
        GrowthParams {
            k: 1.85,
            p: 4.0,
            q: 7.0,
            q1: 3.0,
            q2: 3.0,
            q3: 2.0,
            q4: 2.0,
            alpha1: 11.875,
            alpha2: 2.58,
            l: 9.0,
        }
    }

    #[test]
    fn example_margin_and_root() {
        let b = boundedness_certificate(&example(), 20.0 / 19.0, 0.2).unwrap();
        let hand = 11.875 - 2.58 * (5.0 + 80.0 / 19.0) / 9.0;
        assert!((b.margin - hand).abs() < 1e-12);
        assert!((b.margin - 9.23).abs() < 0.01);
        assert!(b.condition);
        assert!(b.residual.unwrap().abs() < 1e-8);
        assert!(b.lambda.unwrap() > 0.0);
    }

    #[test]
    fn alpha2_zero_limit() {
        // The validated parameters must be positive, so approach zero.
        let g = GrowthParams {
            alpha2: 1e-300,
            ..example()
        };
        let b = boundedness_certificate(&g, 1.0, 0.2).unwrap();
        assert!((b.margin - g.alpha1).abs() < 1e-12);
        let l = b.lambda.unwrap();
        let res = b.alpha_bar1 - l - (l * 0.2).exp() * l;
        assert!(res.abs() < 1e-8);
    }

    #[test]
    fn failing_condition_reports_margin() {
        let g = GrowthParams {
            alpha2: 20.0,
            ..example()
        };
        let b = boundedness_certificate(&g, 20.0 / 19.0, 0.2).unwrap();
        assert!(!b.condition && b.margin < 0.0 && b.lambda.is_none());
    }
}
