use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::operators::{golden_max, Potential, Symbol};
use crate::quad::{half_line, log_space, GaussLegendre};

const GRID_POINTS: usize = 241;

/// Heat-trace lower bound `λ_n ≥ sup_t (1/2t) log((n+1)/(ρ₁(t)ρ₂(t)))`, with
/// `ρ₁(t) = (2π)^{−d}∫e^{−tψ}` and `ρ₂(t) = ∫e^{−2tV}`.
#[derive(Debug, Clone)]
pub struct HeatTrace {
    symbol: Symbol,
    /// Multiplies `ψ`; lets a kernel form `c·|ξ|^α` reuse the stable symbol.
    scale: f64,
    potential: Potential,
    d: usize,
    window: (f64, f64),
    grid: Vec<f64>,
    ln_rho: Vec<f64>,
}

/// `r > 0` with `f(r) = level` for increasing `f` on `(0, ∞)`.
fn level_radius(f: impl Fn(f64) -> f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (1.0, 1.0);
    while f(lo) > level && lo > 1e-300 {
        lo *= 0.5;
    }
    while f(hi) < level && hi < 1e300 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

impl HeatTrace {
    pub fn new(symbol: Symbol, scale: f64, potential: Potential, d: usize, window: (f64, f64)) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        symbol.validate(d)?;
        potential.validate()?;
        let (lo, hi) = window;
        if !(lo > 0.0 && hi > lo && scale > 0.0) {
            return Err(invalid("heat-trace window needs 0 < t_lo < t_hi and a positive scale"));
        }
        let mut trace = Self { symbol, scale, potential, d, window, grid: Vec::new(), ln_rho: Vec::new() };
        trace.grid = log_space(lo, hi, GRID_POINTS);
        trace.ln_rho = trace
            .grid
            .par_iter()
            .map(|&t| trace.rho1(t).ln() + trace.rho2(t).ln())
            .collect();
        Ok(trace)
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    fn radial_exp_integral(&self, rate: impl Fn(f64) -> f64, scale: f64) -> f64 {
        let weight = |r: f64| if self.d == 1 { 1.0 } else { r };
        half_line(|r| weight(r) * (-rate(r)).exp(), 0.0, scale, 1e-12).value
    }

    /// `(2π)^{−d} ∫ e^{−t ψ(ξ)} dξ`.
    pub fn rho1(&self, t: f64) -> f64 {
        let psi = |xi: &[f64]| self.scale * self.symbol.eval(xi);
        let along = |dir: [f64; 2]| {
            let ray = |r: f64| {
                let xi = [r * dir[0], r * dir[1]];
                t * psi(&xi[..self.d])
            };
            let scale = level_radius(&ray, 1.0);
            self.radial_exp_integral(ray, scale)
        };
        match (self.d, &self.symbol) {
            (1, _) => 2.0 * along([1.0, 0.0]) / (2.0 * PI),
            (_, Symbol::IsotropicStable { .. }) => 2.0 * PI * along([1.0, 0.0]) / (4.0 * PI * PI),
            _ => {
                // ψ is even and may be non-smooth on the axes: integrate each quadrant
                let gl = GaussLegendre::new(24);
                let mut acc = 0.0;
                for q in 0..2 {
                    let a = q as f64 * PI / 2.0;
                    acc += gl.integrate(a, a + PI / 2.0, |phi| along([phi.cos(), phi.sin()]));
                }
                2.0 * acc / (4.0 * PI * PI)
            }
        }
    }

    /// `∫ e^{−2tV(x)} dx`.
    pub fn rho2(&self, t: f64) -> f64 {
        let rate = |r: f64| 2.0 * t * self.potential.radial(r);
        let scale = self.potential.growth_phi_inverse(1.0 / (2.0 * t)).max(1e-12);
        let radial = self.radial_exp_integral(rate, scale);
        if self.d == 1 {
            2.0 * radial
        } else {
            2.0 * PI * radial
        }
    }

    /// `(1/2t) log((n+1)/(ρ₁ρ₂))` at a single `t`; a valid lower bound for every `t`.
    pub fn objective(&self, n: usize, t: f64) -> f64 {
        (((n + 1) as f64).ln() - self.rho1(t).ln() - self.rho2(t).ln()) / (2.0 * t)
    }

    /// Largest objective over the window, clamped at zero.
    pub fn bound(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(invalid("eigenvalue index starts at 1"));
        }
        let ln_n = ((n + 1) as f64).ln();
        let values: Vec<f64> = self
            .grid
            .iter()
            .zip(&self.ln_rho)
            .map(|(t, lr)| (ln_n - lr) / (2.0 * t))
            .collect();
        let (best, &val) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("grid is nonempty");
        if val <= 0.0 {
            return Ok(0.0);
        }
        if best == 0 || best == values.len() - 1 {
            return Err(Error::WindowTooNarrow { t: self.grid[best] });
        }
        let (a, b) = (self.grid[best - 1].ln(), self.grid[best + 1].ln());
        let (_, refined) = golden_max(|u| self.objective(n, u.exp()), a, b, 1e-10);
        Ok(val.max(refined))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator() -> HeatTrace {
        HeatTrace::new(
            Symbol::IsotropicStable { alpha: 1.0 },
            1.0,
            Potential::Power { c: 1.0, theta: 2.0 },
            1,
            (1e-4, 1e2),
        )
        .unwrap()
    }

    #[test]
    fn closed_form_traces() {
        let h = oscillator();
        for t in [0.01, 0.3, 2.0] {
            assert!((h.rho1(t) - 1.0 / (PI * t)).abs() < 1e-10 / t);
            let exact = (PI / (2.0 * t)).sqrt();
            assert!((h.rho2(t) - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn isotropic_2d_traces() {
        let h = HeatTrace::new(
            Symbol::IsotropicStable { alpha: 1.0 },
            1.0,
            Potential::Power { c: 1.0, theta: 2.0 },
            2,
            (1e-3, 1e1),
        )
        .unwrap();
        // (2π)^{-2}·2π/t² and π/(2t)
        let t = 0.7;
        assert!((h.rho1(t) - 1.0 / (2.0 * PI * t * t)).abs() < 1e-10);
        assert!((h.rho2(t) - PI / (2.0 * t)).abs() < 1e-10);
    }

    #[test]
    fn anisotropic_path_agrees_with_isotropic() {
        let iso = Symbol::IsotropicStable { alpha: 1.0 };
        let aniso = Symbol::AnisotropicSum {
            terms: vec![crate::operators::SymbolTerm {
                weight: 1.0,
                inner_exponents: vec![2.0, 2.0],
                outer: 0.5,
            }],
        };
        let v = Potential::Power { c: 1.0, theta: 2.0 };
        let a = HeatTrace::new(iso, 1.0, v.clone(), 2, (1e-2, 1.0)).unwrap();
        let b = HeatTrace::new(aniso, 1.0, v, 2, (1e-2, 1.0)).unwrap();
        assert!((a.rho1(0.3) - b.rho1(0.3)).abs() < 1e-9 * a.rho1(0.3));
    }

    #[test]
    fn bound_matches_fine_scan() {
        let h = oscillator();
        let n = 10;
        let got = h.bound(n).unwrap();
        // independent fine scan with the closed-form traces
        let mut best = f64::NEG_INFINITY;
        for t in log_space(1e-3, 10.0, 200_001) {
            let v = (11f64.ln() - (1.0 / (PI * t)).ln() - (PI / (2.0 * t)).sqrt().ln()) / (2.0 * t);
            best = best.max(v);
        }
        assert!((got - best).abs() < 1e-8 * best, "{got} vs {best}");
    }

    #[test]
    fn bound_is_monotone_in_n() {
        let h = oscillator();
        let vals: Vec<f64> = log_space(1.0, 1e4, 50).iter().map(|&n| h.bound(n as usize).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn narrow_window_is_reported() {
        let h = HeatTrace::new(
            Symbol::IsotropicStable { alpha: 1.0 },
            1.0,
            Potential::Power { c: 1.0, theta: 2.0 },
            1,
            (1.0, 2.0),
        )
        .unwrap();
        assert!(matches!(h.bound(1000), Err(Error::WindowTooNarrow { .. })));
    }
}
