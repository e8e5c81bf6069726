//! Symbols, jump kernels, potentials and reference functions.

mod kernel;
mod potential;
mod reference;
mod symbol;

pub use kernel::{stable_symbol_constant, GeneralKernel, JumpKernel, PairFn};
pub use potential::Potential;
pub use reference::{ClassReport, ReferenceFunction};
pub use symbol::{Symbol, SymbolTerm, LEGENDRE_FREQUENCY_CAP};

pub(crate) use symbol::golden_max;
