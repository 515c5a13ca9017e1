//! Monte Carlo simulation and verification tools for scalar conservation laws
//! with degenerate diffusion, multiplicative Brownian noise and
//! compensated-Poisson jumps:
//!
//! ```text
//! du + div f(u) dt = ΔΦ(u) dt + σ(u) dW + ∫_E η(u; z) Ñ(dz, dt)
//! ```
//!
//! The crate is organised bottom-up: [`model`] holds coefficients and scalar
//! calculus, [`noise`] the seeded driving noise, [`solver`] the explicit
//! finite-volume scheme, [`functionals`] the a-priori quantities and defect
//! measures, [`verify`] the entropy and stability checks, and [`harness`] the
//! configuration, ensembles and recipes.

pub mod error;
pub mod functionals;
pub mod harness;
pub mod model;
pub mod noise;
pub mod quadrature;
pub mod solver;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
