//! Periodic grids and the two discretizations of `ψ(D) + V`: a Fourier
//! multiplier and a sparse real-space stiffness matrix.

mod cells;
mod grid;
mod multiplier;
mod stiffness;

pub use grid::BoxGrid;
pub use multiplier::MultiplierOperator;
pub use stiffness::{truncation_shift_bound, StiffnessMatrix, BANDWIDTH_CAP};

