use std::io::{self, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::cells::CellMoments;
use super::BoxGrid;
use crate::eigensolve::SymmetricOperator;
use crate::error::{invalid, Error, Result};
use crate::operators::{JumpKernel, Potential};

/// Default cap on the stencil half-width `⌊κ/h⌋`.
pub const BANDWIDTH_CAP: usize = 1024;

/// Sparse matrix of the discrete form
/// `Σ_i Σ_{m≠0} w(i, m) (f_i − f_{i+m})² + h^d Σ_i V_i f_i²`, stored as `A + D`.
///
/// Applying it divides by `h^d`, so eigenvalues approximate those of the
/// continuum operator.
#[derive(Debug, Clone)]
pub struct StiffnessMatrix {
    grid: BoxGrid,
    bandwidth: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    potential: Vec<f64>,
}

fn order_range(kernel: &JumpKernel) -> (f64, f64) {
    match kernel {
        JumpKernel::LevyStable { alpha, .. } => (*alpha, *alpha),
        JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => {
            (*alpha0, alpha0 + beta1 / beta2.ln().sqrt())
        }
        JumpKernel::General(g) => g.order_bounds,
    }
}

struct Assembler<'a> {
    grid: &'a BoxGrid,
    kernel: &'a JumpKernel,
    moments: CellMoments,
    offsets: Vec<[i64; 2]>,
    h: f64,
}

impl Assembler<'_> {
    fn neighbour(&self, i: usize, e: [i64; 2]) -> usize {
        let n = self.grid.points as i64;
        let idx = self.grid.unflatten(i);
        let mut out = [0usize; 2];
        for a in 0..self.grid.d {
            out[a] = (idx[a] as i64 + e[a]).rem_euclid(n) as usize;
        }
        self.grid.flatten(out)
    }

    /// Weight of the ordered pair `(p, p + e)`, with `p + e` left unwrapped.
    fn weight(&self, p: usize, e: [i64; 2]) -> f64 {
        let d = self.grid.d;
        let x = self.grid.point(p);
        let mut y = x;
        for a in 0..d {
            y[a] += e[a] as f64 * self.h;
        }
        let (x, y) = (&x[..d], &y[..d]);
        let cheb = e[0].abs().max(e[1].abs());
        let len2 = (e[0] * e[0] + e[1] * e[1]) as f64;
        if cheb >= 2 {
            let r = self.h * len2.sqrt();
            return self.h.powi(2 * d as i32) * self.kernel.eval_unchecked(x, y, r);
        }
        let alpha = self.kernel.order(x, y);
        let n = self.kernel.amplitude(x, y);
        let [own, edge, corner] = self.moments.at(alpha);
        let scale = n * self.h.powf(d as f64 - alpha);
        if len2 == 1.0 {
            scale * (edge + own / (2 * d) as f64)
        } else {
            scale * corner / len2
        }
    }

    fn row(&self, i: usize) -> (Vec<usize>, Vec<f64>) {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(self.offsets.len() + 1);
        let mut diag = 0.0;
        for &e in &self.offsets {
            let j = self.neighbour(i, e);
            // evaluate each unordered pair from its smaller index so both rows agree
            let w = if i < j { self.weight(i, e) } else { self.weight(j, [-e[0], -e[1]]) };
            diag += 2.0 * w;
            entries.push((j, -2.0 * w));
        }
        entries.push((i, diag));
        entries.sort_unstable_by_key(|(c, _)| *c);
        entries.into_iter().unzip()
    }
}

impl StiffnessMatrix {
    pub fn assemble(grid: BoxGrid, kernel: &JumpKernel, potential: &Potential) -> Result<Self> {
        Self::assemble_with_cap(grid, kernel, potential, BANDWIDTH_CAP)
    }

    pub fn assemble_with_cap(
        grid: BoxGrid,
        kernel: &JumpKernel,
        potential: &Potential,
        cap: usize,
    ) -> Result<Self> {
        kernel.validate(grid.d)?;
        potential.validate()?;
        let d = grid.d;
        let kappa = kernel.kappa();
        if !kappa.is_finite() {
            return Err(invalid("stiffness assembly needs a finite kernel range"));
        }
        let h = grid.spacing();
        let bandwidth = (kappa / h).floor() as usize;
        if kappa >= grid.half_length {
            return Err(Error::BandwidthExceeded { bandwidth, cap: grid.points / 2 - 1 });
        }
        if bandwidth > cap {
            return Err(Error::BandwidthExceeded { bandwidth, cap });
        }
        let b = bandwidth as i64;
        let mut offsets = Vec::new();
        let second = if d == 2 { -b..=b } else { 0..=0 };
        for e0 in -b..=b {
            for e1 in second.clone() {
                let len2 = (e0 * e0 + e1 * e1) as f64;
                if len2 > 0.0 && h * len2.sqrt() <= kappa {
                    offsets.push([e0, e1]);
                }
            }
        }
        let (lo, hi) = order_range(kernel);
        let asm = Assembler { grid: &grid, kernel, moments: CellMoments::new(d, lo, hi), offsets, h };
        let rows: Vec<(Vec<usize>, Vec<f64>)> = (0..grid.len()).into_par_iter().map(|i| asm.row(i)).collect();
        let mut row_ptr = Vec::with_capacity(grid.len() + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        for (c, v) in rows {
            cols.extend(c);
            vals.extend(v);
            row_ptr.push(cols.len());
        }
        let vol = grid.cell_volume();
        let potential = (0..grid.len()).map(|i| vol * potential.eval(&grid.point(i)[..d])).collect();
        Ok(Self { grid, bandwidth, row_ptr, cols, vals, potential })
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    /// Stencil half-width `⌊κ/h⌋`.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Entry `(A + D)_{ij}`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let a = match self.cols[s..e].binary_search(&j) {
            Ok(k) => self.vals[s + k],
            Err(_) => 0.0,
        };
        if i == j {
            a + self.potential[i]
        } else {
            a
        }
    }

    fn kinetic_row(&self, i: usize, x: &[f64]) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[s..e].iter().zip(&self.vals[s..e]).map(|(&c, v)| v * x[c]).sum()
    }

    /// `fᵀ A f`, the jump part of the discrete form.
    pub fn kinetic_form(&self, f: &[f64]) -> f64 {
        (0..f.len()).into_par_iter().map(|i| f[i] * self.kinetic_row(i, f)).sum()
    }

    /// `fᵀ (A + D) f`.
    pub fn form_value(&self, f: &[f64]) -> f64 {
        self.kinetic_form(f) + f.iter().zip(&self.potential).map(|(a, v)| v * a * a).sum::<f64>()
    }

    /// `(A + D) / h^d` as a dense matrix.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let inv = 1.0 / self.grid.cell_volume();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = inv * self.vals[k];
            }
            m[(i, i)] += inv * self.potential[i];
        }
        m
    }

    /// `row col value` lines of `A + D`, one per stored entry.
    pub fn write_coo(&self, mut w: impl Write) -> io::Result<()> {
        for i in 0..self.grid.len() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k];
                let v = if i == j { self.vals[k] + self.potential[i] } else { self.vals[k] };
                writeln!(w, "{i} {j} {v:?}")?;
            }
        }
        Ok(())
    }
}

impl SymmetricOperator for StiffnessMatrix {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let inv = 1.0 / self.grid.cell_volume();
        y.par_iter_mut()
            .enumerate()
            .for_each(|(i, yi)| *yi = inv * (self.kinetic_row(i, x) + self.potential[i] * x[i]));
    }
}

/// Bound on how far eigenvalues move when the kernel is cut at `κ'`:
/// `4 ∫_{|z|>κ'} sup_x J(x, x+z) dz`.
pub fn truncation_shift_bound(kernel: &JumpKernel, kappa_prime: f64, d: usize) -> Result<f64> {
    Ok(4.0 * kernel.tail_mass(kappa_prime, d)?)
}
