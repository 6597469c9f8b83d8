//! JSON system description.
//!
//! ```json
//! {
//!   "generator": [[-2, 2], [1, -1]],
//!   "modes": [
//!     {"drift": {"1,0": 0.5, "3,0": -12}, "diffusion": {"0,1": 0.4}, "control_gain": -8},
//!     {"drift": {"1,0": 0.8, "3,0": -15}, "diffusion": {"0,1": 0.5}, "control_gain": -9}
//!   ],
//!   "delay": {"kind": "sawtooth", "base": 0.15, "amplitude": 0.05, "period": 1, "h_star": 1.0526},
//!   "growth": {"K": 1.85, "p": 4, "q": 7, "q1": 3, "q2": 3, "q3": 2, "q4": 2,
//!              "alpha1": 11.875, "alpha2": 2.58, "L": 9},
//!   "history": {"constant": [1.0], "r0": 1},
//!   "schedule": {"T": 1, "theta": 0.2, "delta": 0.01}
//! }
//! ```
//!
//! Monomial keys are `"i,j"` for `x^i y^j`. Modes in files are one-based.
//! An optional `certificate` object carries the constants read by
//! [`crate::certify::certify`].

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::certify::CertificateInputs;
use crate::error::{config, Error, Result};
use crate::model::{
    ControlSchedule, DelayFunction, DelayKind, GeneratorMatrix, GrowthParams, HistoryValues, InitialHistory,
    ModeCoefficients, ScalarModeCoeffs, SystemSpec,
};
use crate::preset::Preset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayShape {
    Constant { value: f64 },
    Sawtooth { base: f64, amplitude: f64, period: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayConfig {
    #[serde(flatten)]
    pub shape: DelayShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_lower: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_upper: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryConfig {
    #[serde(flatten)]
    pub values: HistoryValues,
    /// One-based initial mode.
    #[serde(default = "one")]
    pub r0: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub generator: Vec<Vec<f64>>,
    pub modes: Vec<ScalarModeCoeffs>,
    pub delay: DelayConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthParams>,
    pub history: HistoryConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ControlSchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateInputs>,
}

/// A validated system plus whatever schedule and certificate data came
/// with it.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub system: SystemSpec,
    pub schedule: Option<ControlSchedule>,
    pub certificate: Option<CertificateInputs>,
}

impl From<Preset> for Scenario {
    fn from(p: Preset) -> Self {
        Self {
            name: p.name.to_string(),
            system: p.system,
            schedule: Some(p.schedule),
            certificate: Some(p.certificate),
        }
    }
}

impl SystemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config(format!("invalid configuration: {e}")))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn into_scenario(self, name: &str) -> Result<Scenario> {
        let generator = GeneratorMatrix::from_rows(&self.generator).map_err(as_config)?;
        let delay = match self.delay.shape {
            DelayShape::Constant { value } => DelayFunction::new(
                DelayKind::Constant(value),
                self.delay.h_lower.unwrap_or(value),
                self.delay.h_upper.unwrap_or(value),
                Some(self.delay.h_star.unwrap_or(1.0)),
            ),
            DelayShape::Sawtooth {
                base,
                amplitude,
                period,
            } => DelayFunction::sawtooth(base, amplitude, period).and_then(|d| {
                DelayFunction::new(
                    d.kind,
                    self.delay.h_lower.unwrap_or(d.h_lower),
                    self.delay.h_upper.unwrap_or(d.h_upper),
                    self.delay.h_star,
                )
            }),
        }
        .map_err(as_config)?;
        if self.history.r0 == 0 {
            return Err(config("history.r0 is one-based"));
        }
        let history = InitialHistory {
            values: self.history.values,
            r0: self.history.r0 - 1,
        };
        if let Some(s) = &self.schedule {
            s.validate().map_err(as_config)?;
        }
        let system = SystemSpec::new(
            generator,
            ModeCoefficients::Polynomial(self.modes),
            delay,
            self.growth,
            history,
        )
        .map_err(as_config)?;
        Ok(Scenario {
            name: name.to_string(),
            system,
            schedule: self.schedule,
            certificate: self.certificate,
        })
    }

    /// The file form of a polynomial scenario.
    pub fn from_scenario(s: &Scenario) -> Result<Self> {
        let modes = s.system.polynomial_modes()?.to_vec();
        let d = &s.system.delay;
        let shape = match &d.kind {
            DelayKind::Constant(value) => DelayShape::Constant { value: *value },
            DelayKind::Sawtooth {
                base,
                amplitude,
                period,
            } => DelayShape::Sawtooth {
                base: *base,
                amplitude: *amplitude,
                period: *period,
            },
            DelayKind::Callback(_) => return Err(config("callback delays have no file form")),
        };
        Ok(Self {
            generator: s.system.generator.matrix().to_rows(),
            modes,
            delay: DelayConfig {
                shape,
                h_lower: Some(d.h_lower),
                h_upper: Some(d.h_upper),
                h_star: d.h_star,
            },
            growth: s.system.growth,
            history: HistoryConfig {
                values: s.system.history.values.clone(),
                r0: s.system.history.r0 + 1,
            },
            schedule: s.schedule,
            certificate: s.certificate.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => config(other.to_string()),
    }
}

/// Loads a scenario from a JSON file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("config").to_string();
    SystemConfig::from_path(path)?.into_scenario(&name)
}
