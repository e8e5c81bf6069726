//! Upper bounds on eigenvalues from the explicit tent trial basis and the
//! variational (min-max) formula.

mod form;
mod tent;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use form::{
    correlation_form, direct_form, form_matrix, frequency_form, FormMatrix, FormRoute, QuadratureSettings,
    RitzProblem,
};
pub use tent::Tent;

use crate::eigensolve::{dense_lowest, Spectrum};
use crate::error::{invalid, Error, Result};
use crate::operators::{Potential, Symbol};
use crate::quad::least_squares;

/// Products of tents on the knots `ξ(k) = k^{α/(θ+α)}`, `k = 1..n+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBasis {
    pub n: usize,
    pub d: usize,
    pub theta: f64,
    pub alpha: f64,
    pub knots: Vec<f64>,
}

pub fn build_basis(n: usize, d: usize, theta: f64, alpha: f64) -> Result<TrialBasis> {
    if n == 0 {
        return Err(invalid("trial basis needs n ≥ 1"));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::UnsupportedDimension(d));
    }
    if !(theta > 0.0) || !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid("trial basis needs θ > 0 and α in (0, 2)"));
    }
    let e = alpha / (theta + alpha);
    let knots = (1..=n + 1).map(|k| (k as f64).powf(e)).collect();
    Ok(TrialBasis { n, d, theta, alpha, knots })
}

impl TrialBasis {
    /// `ξ(k)`, 1-based.
    pub fn knot(&self, k: usize) -> f64 {
        self.knots[k - 1]
    }

    /// Per-axis tent `h_k` on `[ξ(k), ξ(k+1)]`.
    pub fn tent(&self, k: usize) -> Tent {
        Tent { a: self.knot(k), b: self.knot(k + 1) }
    }

    /// `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// 1-based multi-index of basis function `i` (last axis fastest).
    pub fn index(&self, i: usize) -> Vec<usize> {
        if self.d == 1 {
            vec![i + 1]
        } else {
            vec![i / self.n + 1, i % self.n + 1]
        }
    }

    /// Per-axis tents of `u_k`.
    pub fn function(&self, i: usize) -> Vec<Tent> {
        self.index(i).into_iter().map(|k| self.tent(k)).collect()
    }

    pub fn eval(&self, i: usize, x: &[f64]) -> f64 {
        self.function(i).iter().zip(x).map(|(t, xi)| t.eval(*xi)).product()
    }

    /// `I_k = Π Δ_i³ / 12`.
    pub fn norm(&self, i: usize) -> f64 {
        self.function(i).iter().map(Tent::square_norm).product()
    }

    pub fn norms(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.norm(i)).collect()
    }

    /// Range of `(ξ(k+1) − ξ(k)) k^{θ/(θ+α)}` over `k ≤ kmax`.
    pub fn spacing_band(theta: f64, alpha: f64, kmax: usize) -> (f64, f64) {
        let e = alpha / (theta + alpha);
        (1..=kmax)
            .map(|k| {
                let kf = k as f64;
                ((kf + 1.0).powf(e) - kf.powf(e)) * kf.powf(theta / (theta + alpha))
            })
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// Ritz values of a basis together with how they were obtained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RitzResult {
    pub source: String,
    pub spectrum: Spectrum,
    pub basis: TrialBasis,
    pub route: FormRoute,
    pub settings: QuadratureSettings,
}

impl RitzResult {
    /// `μ_max`, the bound on `λ_{n^d}`.
    pub fn max_value(&self) -> f64 {
        *self.spectrum.eigenvalues.last().expect("basis is nonempty")
    }

    pub fn to_csv(&self) -> String {
        self.spectrum.to_csv()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ritz result serialises")
    }
}

/// Ascending solutions of `A c = μ diag(I) c`.
pub fn ritz_values(a: &DMatrix<f64>, norms: &[f64]) -> Result<Spectrum> {
    let m = norms.len();
    if a.nrows() != m || a.ncols() != m {
        return Err(invalid("form matrix and norms disagree in size"));
    }
    if norms.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("trial norms must be positive"));
    }
    let s: Vec<f64> = norms.iter().map(|v| 1.0 / v.sqrt()).collect();
    let scaled = DMatrix::from_fn(m, m, |i, j| a[(i, j)] * s[i] * s[j]);
    let mut spec = dense_lowest(&scaled, m)?;
    spec.solver = "ritz".into();
    Ok(spec)
}

/// Builds the basis, assembles the form and solves for the Ritz values.
pub fn compute_ritz(basis: &TrialBasis, problem: &RitzProblem, settings: &QuadratureSettings) -> Result<RitzResult> {
    let form = form_matrix(basis, problem, settings)?;
    let spectrum = ritz_values(&form.matrix, &form.norms)?;
    Ok(RitzResult { source: "ritz".into(), spectrum, basis: basis.clone(), route: form.route, settings: *settings })
}

/// Log-log slope of `values` against `ns`.
pub fn scaling_slope(ns: &[usize], values: &[f64]) -> Result<f64> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(invalid("scaling fit needs matching lists of at least two points"));
    }
    let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(least_squares(&x, &y).0)
}

/// Slope of `log μ_max` against `log n` for `ψ = |ξ|^α`, `V = |x|^θ`.
pub fn ritz_scaling_check(theta: f64, alpha: f64, d: usize, n_list: &[usize], settings: &QuadratureSettings) -> Result<f64> {
    if n_list.len() < 4 || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n_list must be increasing with at least four entries"));
    }
    let problem = RitzProblem::Symbol {
        symbol: Symbol::IsotropicStable { alpha },
        potential: Potential::Power { c: 1.0, theta },
    };
    let maxima = n_list
        .iter()
        .map(|&n| Ok(compute_ritz(&build_basis(n, d, theta, alpha)?, &problem, settings)?.max_value()))
        .collect::<Result<Vec<f64>>>()?;
    scaling_slope(n_list, &maxima)
}
