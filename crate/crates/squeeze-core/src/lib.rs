//! Numerical laboratory for middle-dimensional symplectic nonsqueezing.
//!
//! The crate verifies, at desk scale, the linear behavior of 2k-dimensional
//! projections of balls under symplectic maps and probes where it breaks
//! nonlinearly:
//!
//! - [`geom`]: the symplectic form Ω, Pfaffians, wedge norms, the comass
//!   (Wirtinger) inequality, and subspaces with complexity diagnostics;
//! - [`linear`]: random (unitary-)symplectic matrices, exact projected-ball
//!   volumes, and the nonsqueezing verifier with its equality
//!   characterization;
//! - [`maps`]: the nonlinear zoo (bump-profile shear, generating-function
//!   shear, radial twist) with exact Jacobians and middle Jacobians;
//! - [`volume`]: a deterministic cell-marking estimator for projected
//!   volumes of nonlinear images;
//! - [`dist`]: maximal expanding distributions, Lie brackets, and Frobenius
//!   involutivity residuals.
//!
//! Randomized routines take explicit seeds and are bit-reproducible across
//! thread counts; batch work parallelizes through [`exec`].

pub mod dist;
pub mod error;
pub mod exec;
pub mod expm;
pub mod geom;
pub mod linear;
pub mod maps;
pub mod numdiff;
pub mod rng;
pub mod volume;

pub use error::{Error, Result};
