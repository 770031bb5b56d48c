//! Chern–Weil index densities on Hermitian charts.
//!
//! The crate builds connections, torsion and curvature of a Hermitian metric
//! by finite differences, assembles the Todd and Â-genus index densities and
//! integrates their top components over chart parameterizations.

pub mod calculus;
pub mod catalog;
pub mod characteristic;
pub mod error;
pub mod exterior;
pub mod geometry;
pub mod quadrature;

pub use error::{Error, Result};
