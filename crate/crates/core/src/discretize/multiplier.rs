use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::BoxGrid;
use crate::eigensolve::SymmetricOperator;
use crate::error::{invalid, Result};
use crate::operators::{JumpKernel, Potential, Symbol};

/// `f ↦ F⁻¹(m · F f) + V f` on a periodic grid.
#[derive(Clone)]
pub struct MultiplierOperator {
    grid: BoxGrid,
    multiplier: Vec<f64>,
    potential: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MultiplierOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MultiplierOperator").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl MultiplierOperator {
    /// Operator from raw samples: `multiplier` in FFT order, `potential` at grid points.
    pub fn from_samples(grid: BoxGrid, multiplier: Vec<f64>, potential: Vec<f64>) -> Result<Self> {
        if multiplier.len() != grid.len() || potential.len() != grid.len() {
            return Err(invalid("sample vectors must match the grid size"));
        }
        if multiplier[0] != 0.0 || multiplier.iter().any(|m| !(*m >= 0.0)) {
            return Err(invalid("multiplier must be nonnegative and vanish at zero frequency"));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points);
        let inverse = planner.plan_fft_inverse(grid.points);
        Ok(Self { grid, multiplier, potential, forward, inverse })
    }

    /// `m_k = scale · ψ(ξ_k)`.
    pub fn from_symbol(grid: BoxGrid, symbol: &Symbol, scale: f64, potential: &Potential) -> Result<Self> {
        symbol.validate(grid.d)?;
        potential.validate()?;
        if !(scale > 0.0) {
            return Err(invalid("symbol scale must be positive"));
        }
        let d = grid.d;
        let m = (0..grid.len()).map(|i| scale * symbol.eval(&grid.wave_vector(i)[..d])).collect();
        let v = (0..grid.len()).map(|i| potential.eval(&grid.point(i)[..d])).collect();
        Self::from_samples(grid, m, v)
    }

    /// Form multiplier of an untruncated stable kernel.
    pub fn from_kernel(grid: BoxGrid, kernel: &JumpKernel, potential: &Potential) -> Result<Self> {
        kernel.validate(grid.d)?;
        potential.validate()?;
        let psi = kernel.form_multiplier(grid.d)?;
        let d = grid.d;
        let m = (0..grid.len()).map(|i| psi(&grid.wave_vector(i)[..d])).collect();
        let v = (0..grid.len()).map(|i| potential.eval(&grid.point(i)[..d])).collect();
        Self::from_samples(grid, m, v)
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn multiplier(&self) -> &[f64] {
        &self.multiplier
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    /// Same operator with `V` replaced by `V + shift`.
    pub fn with_potential_shift(&self, shift: f64) -> Self {
        let mut out = self.clone();
        out.potential.iter_mut().for_each(|v| *v += shift);
        out
    }

    /// Same operator with `V` scaled by `factor`.
    pub fn with_potential_scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.potential.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Largest multiplier sample; eigenvalues near it feel the grid cutoff.
    pub fn spectral_ceiling(&self) -> f64 {
        self.multiplier.iter().copied().fold(0.0, f64::max)
    }

    fn transform_rows(&self, buf: &mut [Complex<f64>], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
    }

    fn transpose(&self, buf: &[Complex<f64>], out: &mut [Complex<f64>]) {
        let n = self.grid.points;
        for r in 0..n {
            for c in 0..n {
                out[c * n + r] = buf[r * n + c];
            }
        }
    }

    /// `ψ(D) f`, without the potential.
    pub fn apply_kinetic(&self, f: &[f64], out: &mut [f64]) {
        let n = self.grid.points;
        let total = self.grid.len();
        let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let norm = 1.0 / total as f64;
        if self.grid.d == 1 {
            self.transform_rows(&mut buf, &self.forward);
            buf.iter_mut().zip(&self.multiplier).for_each(|(b, m)| *b *= m * norm);
            self.transform_rows(&mut buf, &self.inverse);
        } else {
            let mut tmp = vec![Complex::new(0.0, 0.0); total];
            self.transform_rows(&mut buf, &self.forward);
            self.transpose(&buf, &mut tmp);
            self.transform_rows(&mut tmp, &self.forward);
            // tmp[k2·N + k1] holds the coefficient of (k1, k2)
            for k2 in 0..n {
                for k1 in 0..n {
                    tmp[k2 * n + k1] *= self.multiplier[k1 * n + k2] * norm;
                }
            }
            self.transform_rows(&mut tmp, &self.inverse);
            self.transpose(&tmp, &mut buf);
            self.transform_rows(&mut buf, &self.inverse);
        }
        out.iter_mut().zip(&buf).for_each(|(o, b)| *o = b.re);
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; f.len()];
        SymmetricOperator::apply(self, f, &mut out);
        out
    }

    /// `h^d Σ f·(Hf)`, the discrete form of `f`.
    pub fn quadratic_form(&self, f: &[f64]) -> f64 {
        let hf = self.apply(f);
        self.grid.cell_volume() * f.iter().zip(&hf).map(|(a, b)| a * b).sum::<f64>()
    }
}

impl SymmetricOperator for MultiplierOperator {
    fn dim(&self) -> usize {
        self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_kinetic(x, y);
        y.iter_mut().zip(x).zip(&self.potential).for_each(|((yi, xi), v)| *yi += v * xi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn op(d: usize, v: Potential) -> MultiplierOperator {
        let grid = BoxGrid::new(d, 5.0, 16).unwrap();
        MultiplierOperator::from_symbol(grid, &Symbol::IsotropicStable { alpha: 1.3 }, 1.0, &v).unwrap()
    }

    #[test]
    fn constants_are_annihilated() {
        for d in [1, 2] {
            let h = op(d, Potential::Power { c: 1.0, theta: 2.0 }).with_potential_scale(0.0);
            let out = h.apply(&vec![1.0; h.dim()]);
            assert!(out.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn plane_waves_are_eigenfunctions() {
        for d in [1, 2] {
            let h = op(d, Potential::Power { c: 1.0, theta: 2.0 }).with_potential_scale(0.0);
            let g = h.grid().clone();
            for k in [3usize, 7, 11] {
                let xi = g.wave_vector(k * if d == 2 { 17 } else { 1 } % g.len());
                let f: Vec<f64> = (0..g.len())
                    .map(|i| {
                        let x = g.point(i);
                        (xi[0] * x[0] + xi[1] * x[1]).cos()
                    })
                    .collect();
                let psi = Symbol::IsotropicStable { alpha: 1.3 }.eval(&xi[..d]);
                let out = h.apply(&f);
                for (o, fi) in out.iter().zip(&f) {
                    assert!((o - psi * fi).abs() < 1e-10 * psi.max(1.0));
                }
            }
        }
    }

    #[test]
    fn operator_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [1, 2] {
            let h = op(d, Potential::Power { c: 0.5, theta: 2.0 });
            for _ in 0..10 {
                let f: Vec<f64> = (0..h.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let g: Vec<f64> = (0..h.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let a: f64 = h.apply(&f).iter().zip(&g).map(|(x, y)| x * y).sum();
                let b: f64 = f.iter().zip(h.apply(&g)).map(|(x, y)| x * y).sum();
                assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn samples_scale_homogeneously() {
        let grid = BoxGrid::new(1, 3.0, 64).unwrap();
        let sym = Symbol::IsotropicStable { alpha: 0.7 };
        let h = MultiplierOperator::from_symbol(grid.clone(), &sym, 1.0, &Potential::Power { c: 1.0, theta: 2.0 }).unwrap();
        // ψ(2ξ_k) = 2^α ψ(ξ_k) on lattice points k and 2k
        for k in 1..16 {
            let ratio = h.multiplier()[2 * k] / h.multiplier()[k];
            assert!((ratio - 2f64.powf(0.7)).abs() < 1e-12);
        }
    }
}
