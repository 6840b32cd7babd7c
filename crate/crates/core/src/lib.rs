//! Exact matrix-product steady state of the boundary-driven spin-1
//! Lai–Sutherland chain, a brute-force Liouvillian cross-check, and
//! transfer-matrix observables.

pub mod aux;
pub mod error;
pub mod mpo;
pub mod observables;
pub mod oracle;
pub mod physical;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};
pub use report::CheckReport;
pub use scalar::{Coefficient, ExactScalar, GaussInt, Monomial, NumericScalar};
