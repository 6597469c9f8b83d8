//! The system definition: coefficients per mode, the switching generator,
//! the delay, growth constants, and the initial segment.

mod coeffs;
mod delay;
mod generator;
mod growth;
mod history;
mod schedule;

pub use coeffs::{
    CallbackModel, ControlFn, DiffusionFn, DriftFn, ModeCoefficients, Monomial, Poly2, ScalarModeCoeffs,
};
pub use delay::{h_star_estimate, DelayFn, DelayFunction, DelayKind, HStarEstimate};
pub use generator::GeneratorMatrix;
pub use growth::GrowthParams;
pub use history::{HistoryValues, InitialHistory};
pub use schedule::ControlSchedule;

use crate::error::{config, validation, Error, Result};

/// A complete hybrid stochastic delay system.
///
/// Modes are zero-based in the API (`0..n_modes`); files and reports number
/// them from 1.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub generator: GeneratorMatrix,
    pub coeffs: ModeCoefficients,
    pub delay: DelayFunction,
    /// Required for certification, optional for simulation.
    pub growth: Option<GrowthParams>,
    pub history: InitialHistory,
}

impl SystemSpec {
    pub fn new(
        generator: GeneratorMatrix,
        coeffs: ModeCoefficients,
        delay: DelayFunction,
        growth: Option<GrowthParams>,
        history: InitialHistory,
    ) -> Result<Self> {
        let spec = Self {
            generator,
            coeffs,
            delay,
            growth,
            history,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.generator.n_modes();
        if self.coeffs.n_modes() != n {
            return Err(config(format!(
                "{} coefficient tables for a {n}-mode generator",
                self.coeffs.n_modes()
            )));
        }
        self.coeffs.validate()?;
        if self.history.r0 >= n {
            return Err(config(format!("initial mode {} outside 1..={n}", self.history.r0 + 1)));
        }
        if self.history.dim() != self.dim() {
            return Err(config(format!(
                "history has dimension {} but the state has dimension {}",
                self.history.dim(),
                self.dim()
            )));
        }
        self.history.validate(self.delay.tau())?;
        if let Some(g) = &self.growth {
            g.validate()?;
            let worst = self.control_lipschitz();
            if let Some(worst) = worst {
                if worst > g.l * (1.0 + 1e-12) {
                    return Err(validation(format!(
                        "control gain norm {worst} exceeds the declared bound L = {}",
                        g.l
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n_modes(&self) -> usize {
        self.generator.n_modes()
    }

    pub fn dim(&self) -> usize {
        self.coeffs.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.coeffs.noise_dim()
    }

    /// Largest control Lipschitz constant across modes, when known.
    pub fn control_lipschitz(&self) -> Option<f64> {
        match &self.coeffs {
            ModeCoefficients::Polynomial(modes) => {
                Some(modes.iter().map(|m| m.control_gain.abs()).fold(0.0, f64::max))
            }
            ModeCoefficients::Callback(cb) => cb.control_bound,
        }
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(config(format!(
                "unknown mode index {mode} (system has {} modes, zero-based)",
                self.n_modes()
            )));
        }
        Ok(())
    }

    fn check_dims(&self, x: &[f64], name: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(config(format!(
                "{name} has dimension {}, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// `f(x, y, i, t)`.
    pub fn eval_drift(&self, x: &[f64], y: &[f64], mode: usize, t: f64) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        self.check_dims(x, "x")?;
        self.check_dims(y, "y")?;
        let mut out = vec![0.0; self.dim()];
        self.drift_into(x, y, mode, t, &mut out);
        Ok(out)
    }

    /// `g(x, y, i, t)` as a row-major `dim × noise_dim` matrix.
    pub fn eval_diffusion(&self, x: &[f64], y: &[f64], mode: usize, t: f64) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        self.check_dims(x, "x")?;
        self.check_dims(y, "y")?;
        let mut out = vec![0.0; self.dim() * self.noise_dim()];
        self.diffusion_into(x, y, mode, t, &mut out);
        Ok(out)
    }

    /// `u(z, j, t)` for an observed state `z` and observed mode `j`.
    pub fn eval_control(&self, z: &[f64], mode: usize, t: f64) -> Result<Vec<f64>> {
        self.check_mode(mode)?;
        self.check_dims(z, "z")?;
        let mut out = vec![0.0; self.dim()];
        self.control_into(z, mode, t, &mut out);
        Ok(out)
    }

    /// `h(t)`.
    pub fn delay_at(&self, t: f64) -> f64 {
        self.delay.at(t)
    }

    pub(crate) fn drift_into(&self, x: &[f64], y: &[f64], mode: usize, t: f64, out: &mut [f64]) {
        match &self.coeffs {
            ModeCoefficients::Polynomial(modes) => out[0] = modes[mode].drift.eval(x[0], y[0]),
            ModeCoefficients::Callback(cb) => (cb.drift)(x, y, mode, t, out),
        }
    }

    pub(crate) fn diffusion_into(&self, x: &[f64], y: &[f64], mode: usize, t: f64, out: &mut [f64]) {
        match &self.coeffs {
            ModeCoefficients::Polynomial(modes) => out[0] = modes[mode].diffusion.eval(x[0], y[0]),
            ModeCoefficients::Callback(cb) => (cb.diffusion)(x, y, mode, t, out),
        }
    }

    pub(crate) fn control_into(&self, z: &[f64], mode: usize, t: f64, out: &mut [f64]) {
        match &self.coeffs {
            ModeCoefficients::Polynomial(modes) => out[0] = modes[mode].control_gain * z[0],
            ModeCoefficients::Callback(cb) => (cb.control)(z, mode, t, out),
        }
    }

    /// The scalar polynomial tables, or an error for callback models.
    pub fn polynomial_modes(&self) -> Result<&[ScalarModeCoeffs]> {
        self.coeffs.polynomial()
    }

    pub fn growth(&self) -> Result<&GrowthParams> {
        self.growth
            .as_ref()
            .ok_or_else(|| Error::Certificate("growth parameters are required".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset;
    use proptest::prelude::*;

    #[test]
    fn drift_examples() {
        let spec = preset::example5().system;
        let f = spec.eval_drift(&[1.0], &[1.0], 0, 0.0).unwrap()[0];
        assert!((f - (-10.8)).abs() < 1e-12);
        let f = spec.eval_drift(&[1.0], &[0.0], 1, 0.0).unwrap()[0];
        assert!((f - (-14.2)).abs() < 1e-12);
        for i in 0..2 {
            assert_eq!(spec.eval_drift(&[0.0], &[0.0], i, 3.0).unwrap()[0], 0.0);
        }
    }

    #[test]
    fn diffusion_examples() {
        let spec = preset::example5().system;
        let g = spec.eval_diffusion(&[5.0], &[1.0], 0, 0.0).unwrap()[0];
        assert!((g - 0.9).abs() < 1e-12);
        let g = spec.eval_diffusion(&[-1.0], &[2.0], 1, 0.0).unwrap()[0];
        assert!((g - 3.4).abs() < 1e-12);
        assert_eq!(spec.eval_diffusion(&[3.0], &[0.0], 1, 0.0).unwrap()[0], 0.0);
    }

    #[test]
    fn control_examples() {
        let spec = preset::example5().system;
        assert_eq!(spec.eval_control(&[1.0], 0, 0.0).unwrap()[0], -8.0);
        assert_eq!(spec.eval_control(&[-2.0], 1, 0.0).unwrap()[0], 18.0);
        assert_eq!(spec.eval_control(&[0.0], 1, 0.0).unwrap()[0], 0.0);
    }

    #[test]
    fn unknown_mode_is_config_error() {
        let spec = preset::example5().system;
        assert!(matches!(spec.eval_drift(&[1.0], &[1.0], 2, 0.0), Err(Error::Config(_))));
        assert!(matches!(spec.eval_control(&[1.0], 5, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn control_gain_above_l_is_rejected() {
        let mut spec = preset::example5().system;
        if let ModeCoefficients::Polynomial(modes) = &mut spec.coeffs {
            modes[1].control_gain = -10.0;
        }
        assert!(spec.validate().is_err());
    }

    proptest! {
        #[test]
        fn growth_bounds_hold(x in -20.0f64..20.0, y in -20.0f64..20.0, t in 0.0f64..10.0, mode in 0usize..2) {
            let spec = preset::example5().system;
            // K = 1.85 in the preset is the dissipativity constant; the
            // growth bound needs the largest monomial coefficient, 15.
            let g = GrowthParams { k: 15.0, ..spec.growth.unwrap() };
            let f = spec.eval_drift(&[x], &[y], mode, t).unwrap()[0];
            let gg = spec.eval_diffusion(&[x], &[y], mode, t).unwrap()[0];
            let (ax, ay) = (x.abs(), y.abs());
            prop_assert!(f.abs() <= g.k * (ax + ay + ax.powf(g.q1) + ay.powf(g.q2)) * (1.0 + 1e-12));
            prop_assert!(gg.abs() <= g.k * (ax + ay + ax.powf(g.q3) + ay.powf(g.q4)) * (1.0 + 1e-12));
        }

        #[test]
        fn control_is_bounded_by_l(z in -1e3f64..1e3, mode in 0usize..2) {
            let spec = preset::example5().system;
            let l = spec.growth.unwrap().l;
            let u = spec.eval_control(&[z], mode, 0.0).unwrap()[0];
            prop_assert!(u.abs() <= l * z.abs());
        }
    }
}
