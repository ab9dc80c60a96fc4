//! Numerical toolkit for conformally flat scalar-flat metrics `u^{4/(n-2)} g`
//! singular on compact sets, and for certifying when such metrics are
//! complete through Wolff potentials, Bessel capacities and ray lengths.

pub mod capacity;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod measure;
pub mod metric;
pub mod potential;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{Error, Result};
