//! Low-lying eigenvalues of non-local Schrödinger operators `ψ(D) + V`
//! and the closed-form Weyl-type bounds that bracket them.

pub mod asymptotics;
pub mod discretize;
pub mod eigensolve;
pub mod error;
pub mod operators;
pub mod quad;
pub mod rates;
pub mod ritz;
pub mod serde_ext;

pub use error::{Error, Result};
