//! Peeling processes of Boltzmann planar maps.
//!
//! Given a face-weight sequence `q`, this crate solves for the constants
//! `c_+` and `r`, builds the two-sided step law `nu` of the associated random
//! walk, simulates the perimeter and volume processes of finite pointed
//! Boltzmann maps and of the infinite Boltzmann planar map, and checks the
//! analytic formulas against exact enumeration of small maps.
//!
//! Module map:
//!
//! - [`hfun`]: the special functions `h_r^(k)(l)`.
//! - [`weights`]: weight sequences, the `q <-> nu` dictionary, presets.
//! - [`criticality`]: the `(c_+, r)` solver and admissibility classification.
//! - [`walk`]: the negative half of `nu` and the derived constants.
//! - [`oracle`]: loop-equation enumeration and rotation-system brute force.
//! - [`peeling`]: Doob-transformed perimeter chains and volume increments.
//! - [`scaling`]: Monte Carlo checks of the scaling limits.

pub mod criticality;
pub mod error;
pub mod hfun;
pub mod oracle;
pub mod peeling;
pub mod quad;
pub mod rational;
pub mod rng;
pub mod scaling;
pub mod walk;
pub mod weights;

pub use error::{Error, Result};
