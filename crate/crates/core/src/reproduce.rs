//! The built-in example's published quantities next to recomputed ones.

use serde::Serialize;

use crate::certify::{certify, CertifyTarget, RateInputs};
use crate::error::Result;
use crate::preset::example5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproRow {
    pub quantity: String,
    pub computed: String,
    pub published: String,
    pub tolerance: Option<f64>,
    pub pass: bool,
}

fn numeric(quantity: &str, computed: &[f64], published: &[f64], tol: f64) -> ReproRow {
    let pass = computed.len() == published.len() && computed.iter().zip(published).all(|(c, p)| (c - p).abs() <= tol);
    let show = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(", ");
    ReproRow {
        quantity: quantity.to_string(),
        computed: show(computed),
        published: show(published),
        tolerance: Some(tol),
        pass,
    }
}

fn check(quantity: &str, computed: String, pass: bool) -> ReproRow {
    ReproRow {
        quantity: quantity.to_string(),
        computed,
        published: "holds".into(),
        tolerance: None,
        pass,
    }
}

/// Recomputes the example's weights, `ζ` checks, `γ` table, `δ_max`, the
/// constant chain at `ε = 1`, the threshold, the rate at `θ = 0.2` and the
/// best rate over `ε` at `θ = 0.6`.
pub fn reproduce_example5() -> Result<Vec<ReproRow>> {
    let ex = example5();
    let base = certify(&ex.system, &ex.certificate, CertifyTarget {
        period: 1.0,
        theta: 0.2,
        delta: 1e-5,
    })?;
    let w = &base.weights;
    let g = &base.gammas.values;
    let mut rows = vec![
        numeric("theta weights", &w.theta, &[0.067, 0.063], 1e-3),
        numeric("theta_bar weights", &w.theta_bar, &[0.0336, 0.0313], 1e-3),
    ];
    for c in &base.zeta.checks {
        rows.push(check(
            &format!("{}: {}", c.name, c.expression),
            format!("{:.6} vs {:.6}", c.lhs, c.rhs),
            c.pass,
        ));
    }
    rows.push(check(
        "conditions on [-5, 5]^2",
        format!(
            "condition41 {}, Khasminskii {}, condition42 {}",
            base.condition41.pass, base.khasminskii.pass, base.condition42.pass
        ),
        base.condition41.pass && base.khasminskii.pass && base.condition42.pass,
    ));
    rows.extend([
        numeric("gamma4", &[g.gamma4], &[0.981294], 1e-6),
        numeric("gamma5", &[g.gamma5], &[0.06143], 1e-6),
        numeric("gamma6", &[g.gamma6], &[0.123112], 1e-4),
        numeric("gamma6'", &[g.gamma6p], &[0.123160], 1e-4),
        numeric("gamma7", &[g.gamma7], &[1.39289664], 1e-8),
        numeric("gamma8", &[g.gamma8], &[2.86509864], 1e-8),
        numeric("gamma_bar h*", &[base.gammas.gamma_bar_h_star], &[0.273689], 1e-4),
    ]);
    let delta_max = base.delta_bound.map_or(f64::NAN, |b| b.delta_max);
    rows.push(check(
        "delta = 1e-5 admissible",
        format!("delta_max = {delta_max:.6e}"),
        base.delta_admissible,
    ));
    let c = &base.constants;
    rows.extend([
        numeric("C1^C2^C3 (eps = 1)", &[c.c123_min], &[0.8017], 1e-3),
        numeric("C4 (eps = 1)", &[c.c4], &[0.1583], 1e-3),
        numeric("C5 (eps = 1)", &[c.c5], &[1.1251], 1e-3),
        numeric("theta threshold", &[base.rate.theta_threshold], &[0.1112], 1e-4),
        numeric("mu (theta = 0.2)", &[base.mu().unwrap_or(f64::NAN)], &[0.0999], 1e-4),
    ]);

    let inp = RateInputs::new(
        &ex.certificate.cond42,
        w,
        base.l,
        base.min_generator_diagonal,
        1e-5,
        base.tau,
        base.h_star,
    );
    let best = crate::certify::optimize_epsilon(&inp, 0.6, 1.0).map_or(f64::NAN, |o| o.mu);
    rows.push(numeric("max over eps of mu (theta = 0.6)", &[best], &[0.9550], 5e-3));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_match_except_known_gaps() {
        let rows = reproduce_example5().unwrap();
        let failing: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.quantity.as_str()).collect();
        assert_eq!(failing, ["gamma_bar h*", "max over eps of mu (theta = 0.6)"]);
        assert!(rows.iter().any(|r| r.quantity == "mu (theta = 0.2)" && r.pass));
    }
}
