//! Hybrid stochastic delay systems under periodically intermittent
//! feedback control with sampled state and mode observations.
//!
//! The crate simulates
//!
//! ```text
//! dx = [f(x, x(t − h(t)), r(t), t) + u(x(v(t)), r(v(t)), t) I(t)] dt
//!      + g(x, x(t − h(t)), r(t), t) dB(t)
//! ```
//!
//! where `r` is a continuous-time Markov chain, `v(t) = ⌊t/δ⌋δ` is the last
//! observation instant and `I` switches the control on for `[nT, nT + θ)`,
//! and computes a stability certificate: the observation gap `δ_max`, the
//! minimum control width and the certified moment decay rate.
//!
//! ```
//! use hybrid_sdde::certify::{certify, CertifyTarget};
//! use hybrid_sdde::preset::example5;
//!
//! let ex = example5();
//! let target = CertifyTarget { period: 1.0, theta: 0.2, delta: 1e-5 };
//! let cert = certify(&ex.system, &ex.certificate, target).unwrap();
//! assert!(cert.pass);
//! assert!((cert.mu().unwrap() - 0.0999).abs() < 1e-4);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod error;
pub mod markov;
pub mod matrix;
pub mod model;
pub mod moments;
pub mod preset;
pub mod reproduce;
pub mod rng;
pub mod simulate;
pub mod svg;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/markov.md")]
    mod markov {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/certificate.md")]
    mod certificate {}
    #[doc = include_str!("../../../book/src/moments.md")]
    mod moments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
