use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Frequencies beyond this radius mark the conjugate as `+∞`.
pub const LEGENDRE_FREQUENCY_CAP: f64 = 1e6;

/// One term `c (Σ_j |ξ_j|^{a_j})^b` of an anisotropic symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub weight: f64,
    pub inner_exponents: Vec<f64>,
    pub outer: f64,
}

/// Negative definite symbol ψ of a translation-invariant jump operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Symbol {
    /// `ψ(ξ) = |ξ|^α`.
    IsotropicStable { alpha: f64 },
    /// `ψ(ξ) = Σ_i c_i (Σ_j |ξ_j|^{α_ij})^{β_i}`.
    AnisotropicSum { terms: Vec<SymbolTerm> },
}

impl Symbol {
    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            Symbol::IsotropicStable { alpha } => {
                let r2: f64 = xi.iter().map(|v| v * v).sum();
                if r2 == 0.0 {
                    0.0
                } else {
                    r2.powf(0.5 * alpha)
                }
            }
            Symbol::AnisotropicSum { terms } => terms
                .iter()
                .map(|t| {
                    let inner: f64 = xi
                        .iter()
                        .zip(&t.inner_exponents)
                        .map(|(x, a)| if *x == 0.0 { 0.0 } else { x.abs().powf(*a) })
                        .sum();
                    if inner == 0.0 {
                        0.0
                    } else {
                        t.weight * inner.powf(t.outer)
                    }
                })
                .sum(),
        }
    }

    /// Dimension fixed by the symbol, if any.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            Symbol::IsotropicStable { .. } => None,
            Symbol::AnisotropicSum { terms } => terms.first().map(|t| t.inner_exponents.len()),
        }
    }

    /// `(α′, α)` with `c₁|ξ|^α ≤ ψ(ξ) ≤ c₂(|ξ|^α + |ξ|^{α′})`: the extreme
    /// growth exponents of the symbol along coordinate rays.
    pub fn sandwich_exponents(&self) -> (f64, f64) {
        match self {
            Symbol::IsotropicStable { alpha } => (*alpha, *alpha),
            Symbol::AnisotropicSum { terms } => {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for t in terms {
                    for a in &t.inner_exponents {
                        lo = lo.min(t.outer * a);
                        hi = hi.max(t.outer * a);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Symbol::IsotropicStable { alpha } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid(format!("stable order {alpha} outside (0, 2)")));
                }
            }
            Symbol::AnisotropicSum { terms } => {
                if terms.is_empty() {
                    return Err(invalid("anisotropic symbol needs at least one term"));
                }
                for (i, t) in terms.iter().enumerate() {
                    if t.inner_exponents.len() != d {
                        return Err(invalid(format!(
                            "term {i} has {} inner exponents, dimension is {d}",
                            t.inner_exponents.len()
                        )));
                    }
                    if !(t.weight > 0.0 && t.outer > 0.0)
                        || t.inner_exponents.iter().any(|a| !(*a > 0.0))
                    {
                        return Err(invalid(format!("term {i} has a non-positive parameter")));
                    }
                    let amax = t.inner_exponents.iter().cloned().fold(0.0, f64::max);
                    if t.outer * amax >= 2.0 {
                        return Err(invalid(format!(
                            "term {i}: outer * max inner exponent = {} must be < 2",
                            t.outer * amax
                        )));
                    }
                }
            }
        }
        // growth exponent along sample rays must settle in (0, 2)
        for dir in sample_rays(d) {
            let e = self.ray_exponent(&dir, 1e6, 1e8);
            if !(e > 0.0 && e < 2.0) {
                return Err(invalid(format!("ray growth exponent {e} outside (0, 2)")));
            }
        }
        Ok(())
    }

    /// Log-log slope of `r ↦ ψ(r·dir)` between radii `r0` and `r1`.
    pub fn ray_exponent(&self, dir: &[f64], r0: f64, r1: f64) -> f64 {
        let at = |r: f64| {
            let xi: Vec<f64> = dir.iter().map(|u| u * r).collect();
            self.eval(&xi)
        };
        (at(r1).ln() - at(r0).ln()) / (r1.ln() - r0.ln())
    }

    /// Midpoint-convexity test on seeded random pairs across scales
    /// `10^-3 … 10^3`.
    pub fn check_convexity(&self, d: usize) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
        for sample in 0..2000 {
            let scale = 10f64.powf(rng.random_range(-3.0..3.0));
            let a: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
            let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            let (pa, pb, pm) = (self.eval(&a), self.eval(&b), self.eval(&m));
            let chord = 0.5 * (pa + pb);
            let defect = pm - chord;
            if defect > 1e-12 * chord.max(1e-300) {
                return Err(Error::NonConvexSymbol { defect, sample });
            }
        }
        Ok(())
    }

    /// Convex conjugate `ψ*(x) = sup_ξ (⟨x, ξ⟩ − ψ(ξ))`; `+∞` when the
    /// supremum runs past [`LEGENDRE_FREQUENCY_CAP`].
    pub fn legendre(&self, x: &[f64]) -> Result<f64> {
        let d = x.len();
        self.check_convexity(d)?;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        match (self, d) {
            (Symbol::IsotropicStable { .. }, _) | (_, 1) => {
                let dir: Vec<f64> = x.iter().map(|v| v / norm).collect();
                Ok(ray_sup(|xi| self.eval(xi), x, &dir))
            }
            (_, 2) => {
                let value_at = |phi: f64| {
                    let dir = [phi.cos(), phi.sin()];
                    ray_sup(|xi| self.eval(xi), x, &dir)
                };
                let steps = 720;
                let mut best = (0.0, 0);
                for i in 0..steps {
                    let v = value_at(2.0 * std::f64::consts::PI * i as f64 / steps as f64);
                    if v.is_infinite() {
                        return Ok(v);
                    }
                    if v > best.0 {
                        best = (v, i);
                    }
                }
                let h = 2.0 * std::f64::consts::PI / steps as f64;
                let c = best.1 as f64 * h;
                let (_, v) = golden_max(value_at, c - h, c + h, 1e-13);
                Ok(v.max(best.0))
            }
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }
}

/// `sup_{r ≥ 0} (r⟨x,u⟩ − ψ(r u))` for a concave ray profile.
fn ray_sup(psi: impl Fn(&[f64]) -> f64, x: &[f64], dir: &[f64]) -> f64 {
    let slope: f64 = x.iter().zip(dir).map(|(a, b)| a * b).sum();
    if slope <= 0.0 {
        return 0.0;
    }
    let f = |r: f64| {
        let xi: Vec<f64> = dir.iter().map(|u| u * r).collect();
        r * slope - psi(&xi)
    };
    let mut r = 1.0;
    let mut fr = f(r);
    let (lo, hi) = if fr <= 0.0 {
        (0.0, r)
    } else {
        loop {
            let next = 2.0 * r;
            let fnext = f(next);
            if fnext <= fr + 1e-14 * fr.abs() {
                break (0.5 * r, next);
            }
            if next > LEGENDRE_FREQUENCY_CAP {
                return f64::INFINITY;
            }
            r = next;
            fr = fnext;
        }
    };
    let (_, v) = golden_max(f, lo, hi, 1e-15);
    v.max(0.0)
}

/// Golden-section maximisation of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut e = a + g * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    for _ in 0..300 {
        if (b - a).abs() <= rel_tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc > fe {
            b = e;
            e = c;
            fe = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + g * (b - a);
            fe = f(e);
        }
    }
    if fc > fe {
        (c, fc)
    } else {
        (e, fe)
    }
}

fn sample_rays(d: usize) -> Vec<Vec<f64>> {
    match d {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..8)
            .map(|i| {
                let phi = std::f64::consts::PI * i as f64 / 8.0 + 0.1;
                let mut v = vec![0.0; d];
                v[0] = phi.cos();
                v[1] = phi.sin();
                v
            })
            .collect(),
    }
}
