//! Lowest eigenvalues of symmetric operators, matrix-free or dense.

mod dense;
mod lanczos;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use dense::{dense_lowest, DENSE_LIMIT};
pub use lanczos::{check_symmetry, lanczos_lowest, LanczosOptions};

/// Action of a real symmetric matrix.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// `y ← A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Symmetric operator given by a closure.
pub struct FnOperator<F> {
    pub dim: usize,
    pub action: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> SymmetricOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.action)(x, y)
    }
}

impl SymmetricOperator for nalgebra::DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self[(i, j)] * x[j];
            }
            *yi = acc;
        }
    }
}

/// Sorted eigenvalues with convergence metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// `‖A x − λ x‖` for each returned pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub solver: String,
    pub seed: Option<u64>,
    pub tolerance: f64,
    /// Digest of the problem that produced the spectrum (empty if unset).
    pub problem_digest: String,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.problem_digest = digest.into();
        self
    }

    /// Adds `shift` to every eigenvalue.
    pub fn shifted(mut self, shift: f64) -> Self {
        self.eigenvalues.iter_mut().for_each(|v| *v += shift);
        self
    }

    /// CSV with columns `n,lambda,residual`; floats in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,lambda,residual\n");
        for (i, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            out.push_str(&format!("{},{l:?},{r:?}\n", i + 1));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("spectrum serialises")
    }

    /// SHA-256 of the eigenvalue bit patterns.
    pub fn values_digest(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.eigenvalues {
            h.update(v.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}
