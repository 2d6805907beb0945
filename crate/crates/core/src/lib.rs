//! Numerical and exact-arithmetic laboratory for an integer-valued ergodic
//! sum that satisfies the lattice local central limit theorem.
//!
//! * [`lattice`]: finitely supported integer laws, convolution, Fourier inversion.
//! * [`construction`]: parameters, index windows and building-block laws.
//! * [`analysis`]: characteristic-function products, LLT scans and bound checks.
//! * [`montecarlo`]: seeded sampling oracle for the triangular array.
//! * [`castle`]: exact cutting-and-stacking model of the coding step.
//! * [`report`]: CSV/JSON experiment records.

pub mod analysis;
pub mod castle;
pub mod construction;
pub mod error;
pub mod lattice;
pub mod montecarlo;
pub mod numeric;
pub mod report;

pub use error::{Error, Result};
