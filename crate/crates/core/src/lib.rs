//! Finite-dimensional Lie algebroids in a single global chart.
//!
//! The crate is organised bottom-up:
//!
//! - [`expr`]: symbolic scalar expressions with exact differentiation,
//! - [`algebroid`]: anchors, structure functions, the section bracket and the
//!   standard examples (tangent, Nijenhuis, Poisson cotangent),
//! - [`calculus`]: forms on sections, the Lie derivative, the exterior
//!   differential, pullbacks and the morphism test,
//! - [`prolongation`]: the prolongation of an algebroid along a trivial
//!   fibration and prolonged morphisms,
//! - [`limits`]: direct systems of algebroids with bonding maps,
//! - [`mechanics`]: Hamilton equations on algebroid duals and an RK4 driver.
//!
//! Identities are checked by evaluating residual expressions at a fixed
//! low-discrepancy sample of the chart, see [`sampling`] and [`report`].

pub mod algebroid;
pub mod calculus;
mod error;
pub mod expr;
pub mod limits;
pub mod mechanics;
pub mod prolongation;
pub mod random;
pub mod report;
pub mod sampling;
pub mod schema;
pub mod suite;

pub use algebroid::{Algebroid, Section, VectorField};
pub use calculus::{BundleMorphism, QForm};
pub use error::{Error, Result};
pub use expr::Expr;
pub use report::{CheckConfig, CheckRecord, Checked, VerificationReport};
