//! Oscillatory shear flow with spatially varying complex viscosity.
//!
//! Modules build on each other bottom up: [`viscosity`] supplies the
//! constitutive data, [`oned_solvers`] the flux-form discretization, and the
//! worked examples ([`stokes2`], [`couette`], [`toeplitz`]) are evaluated by
//! the operator diagnostics in [`diagnostics`]. [`verify`] bundles the
//! executable acceptance checks used by the CLI and the test suite.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod couette;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod oned_solvers;
pub mod stokes2;
pub mod toeplitz;
pub mod verify;
pub mod viscosity;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
