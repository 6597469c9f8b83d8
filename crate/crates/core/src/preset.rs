//! The two-mode scalar example with cubic drift, quadratic diffusion and a
//! sawtooth delay, stabilized by `u = −8x` and `u = −9x`.

use crate::certify::{AbsPoly, CertificateInputs, Cond41Mode, Condition41Data, Condition42Data, GridSpec};
use crate::model::{
    ControlSchedule, DelayFunction, GeneratorMatrix, GrowthParams, InitialHistory, ModeCoefficients, Poly2,
    ScalarModeCoeffs, SystemSpec,
};

/// A system together with a default schedule and certificate constants.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub system: SystemSpec,
    /// Defaults for simulation: `T = 1`, `θ = 0.2`, `δ = 0.01`.
    pub schedule: ControlSchedule,
    /// Certificate constants, certified at `δ = 10⁻⁵` and `ε = 1`.
    pub certificate: CertificateInputs,
}

pub const PRESET_NAMES: &[&str] = &["example5"];

pub fn by_name(name: &str) -> Option<Preset> {
    match name {
        "example5" => Some(example5()),
        _ => None,
    }
}

pub fn example5() -> Preset {
    let generator = GeneratorMatrix::from_rows(&[vec![-2.0, 2.0], vec![1.0, -1.0]]).expect("valid generator");
    let modes = vec![
        ScalarModeCoeffs {
            drift: Poly2::from_terms(&[(1, 0, 0.5), (3, 0, -12.0), (0, 1, 0.2), (0, 3, 0.5)]),
            diffusion: Poly2::from_terms(&[(0, 1, 0.4), (0, 2, 0.5)]),
            control_gain: -8.0,
        },
        ScalarModeCoeffs {
            drift: Poly2::from_terms(&[(1, 0, 0.8), (3, 0, -15.0), (0, 1, 0.4), (0, 3, 0.8)]),
            diffusion: Poly2::from_terms(&[(0, 1, 0.5), (0, 2, 0.6)]),
            control_gain: -9.0,
        },
    ];
    let delay = DelayFunction::sawtooth(0.15, 0.05, 1.0)
        .and_then(|d| d.with_h_star(20.0 / 19.0))
        .expect("valid delay");
    let growth = GrowthParams {
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
    };
    let system = SystemSpec::new(
        generator,
        ModeCoefficients::Polynomial(modes),
        delay,
        Some(growth),
        InitialHistory::constant(vec![1.0], 0),
    )
    .expect("valid example system");

    let cond41 = Condition41Data {
        modes: vec![
            Cond41Mode {
                k1: -7.4,
                l1: 0.26,
                beta1: 11.875,
                g1: 0.625,
                k2: -7.4,
                l2: 0.58,
                beta2: 11.875,
                g2: 1.125,
            },
            Cond41Mode {
                k1: -8.0,
                l1: 0.45,
                beta1: 14.8,
                g1: 0.96,
                k2: -8.0,
                l2: 0.95,
                beta2: 14.8,
                g2: 1.68,
            },
        ],
    };
    let (g1, g2, g3) = (1.0, 0.001, 0.002);
    let cond42 = Condition42Data {
        gamma1: g1,
        gamma2: g2,
        gamma3: g3,
        gamma4: 0.9996 - 0.017956 * g1 - 0.35 * g2,
        gamma5: 0.05985 + 0.48 * g2 + 0.55 * g3,
        gamma6: (0.181345 - 1.4 * g2 + 0.66 * g3) / 1.472202,
        gamma7: 1.54896 - 0.01806336 * g1 - 138.0 * g2,
        gamma8: 3.021162 - 0.01806336 * g1 - 138.0 * g2,
        gamma4p: 0.13,
        gamma5p: 0.05985,
        gamma6p: 0.181345 / 1.472202,
        w: AbsPoly::new(&[(4.0, 1.472202), (6.0, 1.54896 - 0.01806336 * g1 - 138.0 * g2)]),
    };
    Preset {
        name: "example5",
        system,
        schedule: ControlSchedule::new(1.0, 0.2, 0.01).expect("valid schedule"),
        certificate: CertificateInputs {
            cond41,
            cond42,
            delta: Some(1e-5),
            epsilon: Some(1.0),
            grid: GridSpec::default(),
            qbar: vec![2.0, 4.0],
        },
    }
}
