use nalgebra::DMatrix;

use super::Spectrum;
use crate::error::{invalid, Error, Result};

/// Largest dense problem accepted.
pub const DENSE_LIMIT: usize = 4096;

/// Below this size eigenvectors are formed so residuals are measured.
const VECTOR_LIMIT: usize = 1024;

/// Lowest `k` eigenvalues of a symmetric matrix by full decomposition.
pub fn dense_lowest(matrix: &DMatrix<f64>, k: usize) -> Result<Spectrum> {
    let n = matrix.nrows();
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { dim: n, limit: DENSE_LIMIT });
    }
    if n != matrix.ncols() {
        return Err(invalid("matrix must be square"));
    }
    if k == 0 || k > n {
        return Err(invalid(format!("requested {k} eigenvalues of a {n}×{n} matrix")));
    }
    let scale = matrix.amax().max(f64::MIN_POSITIVE);
    for i in 0..n {
        for j in 0..i {
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                return Err(invalid("matrix is not symmetric"));
            }
        }
    }
    let (values, residuals) = if n <= VECTOR_LIMIT {
        let eig = matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
        let residuals = order[..k]
            .iter()
            .map(|&i| {
                let v = eig.eigenvectors.column(i);
                (matrix * v - v * eig.eigenvalues[i]).norm()
            })
            .collect();
        (values, residuals)
    } else {
        let mut all: Vec<f64> = matrix.symmetric_eigenvalues().iter().copied().collect();
        all.sort_by(f64::total_cmp);
        // backward-stable bound on the residual of the reduction
        let bound = f64::EPSILON * n as f64 * matrix.norm();
        (all[..k].to_vec(), vec![bound; k])
    };
    Ok(Spectrum {
        eigenvalues: values,
        residuals,
        iterations: 1,
        solver: "dense".into(),
        seed: None,
        tolerance: f64::EPSILON * n as f64 * scale,
        problem_digest: String::new(),
    })
}
