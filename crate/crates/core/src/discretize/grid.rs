use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Periodic box `[−L, L)^d` with `N` points per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    pub d: usize,
    pub half_length: f64,
    pub points: usize,
}

impl BoxGrid {
    pub fn new(d: usize, half_length: f64, points: usize) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if points < 8 || points % 2 != 0 {
            return Err(invalid(format!("points per axis must be even and ≥ 8, got {points}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(invalid("box half-length must be positive"));
        }
        Ok(Self { d, half_length, points })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    /// Number of grid points, `N^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.d as i32)
    }

    /// `x_j = −L + j h` along one axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    /// Per-axis indices of flat index `i` (row-major, last axis fastest).
    pub fn unflatten(&self, i: usize) -> [usize; 2] {
        if self.d == 1 {
            [i, 0]
        } else {
            [i / self.points, i % self.points]
        }
    }

    pub fn flatten(&self, idx: [usize; 2]) -> usize {
        if self.d == 1 {
            idx[0]
        } else {
            idx[0] * self.points + idx[1]
        }
    }

    /// Coordinates of flat index `i` (unused axes are zero).
    pub fn point(&self, i: usize) -> [f64; 2] {
        let idx = self.unflatten(i);
        let mut p = [0.0; 2];
        for a in 0..self.d {
            p[a] = self.coordinate(idx[a]);
        }
        p
    }

    /// Signed lattice index of FFT bin `k`: `k` for `k < N/2`, else `k − N`.
    pub fn signed_index(&self, k: usize) -> i64 {
        let n = self.points as i64;
        let k = k as i64;
        if k < n / 2 {
            k
        } else {
            k - n
        }
    }

    /// Frequency `ξ = (π/L)·k` of FFT bin `k` along one axis.
    pub fn frequency(&self, k: usize) -> f64 {
        PI / self.half_length * self.signed_index(k) as f64
    }

    /// Frequency vector of flat FFT index `i`.
    pub fn wave_vector(&self, i: usize) -> [f64; 2] {
        let idx = self.unflatten(i);
        let mut xi = [0.0; 2];
        for a in 0..self.d {
            xi[a] = self.frequency(idx[a]);
        }
        xi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let g = BoxGrid::new(2, 4.0, 8).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.len(), 64);
        assert_eq!(g.point(9), [-3.0, -3.0]);
        assert_eq!(g.frequency(5), -3.0 * PI / 4.0);
        assert_eq!(g.flatten(g.unflatten(37)), 37);
        assert!(BoxGrid::new(3, 1.0, 8).is_err());
        assert!(BoxGrid::new(1, 1.0, 7).is_err());
    }
}
