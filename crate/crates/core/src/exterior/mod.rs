//! Graded exterior algebra of pointwise forms on `R^{2n}` and analytic
//! functions of nilpotent matrices of even forms.

pub mod complex_basis;
mod form;
mod matrix;
mod series;

pub use form::{PolyForm, MAX_DIM, PRUNE_REL};
pub use matrix::{exp_even, trlog_apply, MatrixPolyForm, NILPOTENT_TOL};
pub use series::ScalarSeries;
