//! Jeans instability on an expanding Newtonian background.
//!
//! The crate evolves the fractional density perturbation `ϱ = δρ/ρ₀` of a
//! polytropic gas on the three-torus, both in physical time and through the
//! five-component Fuchsian reformulation, and provides the machinery needed
//! to check the quantitative statements about it numerically:
//!
//! * [`background`]: the exact expanding background and its constants.
//! * [`spectral`]: Fourier fields on the torus, derivatives and Sobolev norms.
//! * [`modes`]: closed-form eigenmode evolution and the Jeans classifier.
//! * [`fuchsian`]: the singular first-order system, its energy and bounds.
//! * [`direct`]: method-of-lines integration of the second-order equation.
//! * [`initial`]: deterministic generators for admissible initial data.
//! * [`verify`]: the verification checks shared by the test suite and CLI.
//!
//! ```
//! use jeans::background::{background_state, PhysicalParams};
//!
//! let params = PhysicalParams::default();
//! let bg = background_state(8.0, &params).unwrap();
//! assert!((bg.a - 4.0).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod background;
pub mod direct;
mod error;
pub mod fuchsian;
pub mod initial;
pub mod modes;
pub mod ode;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
