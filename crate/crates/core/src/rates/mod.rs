//! Rate functions `Γ(r)`, `λ(t)` and the closed-form eigenvalue bounds.

mod bounds;
mod heat;

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

pub use bounds::{
    power_bound, power_exponent, rate_integral_lower, variable_order_delta_limit,
    variable_order_lower, BoundCurve, BoundSource, Direction,
};
pub use heat::HeatTrace;

use crate::error::{invalid, Error, Result};
use crate::operators::{JumpKernel, Potential, ReferenceFunction};
use crate::quad::{adaptive, least_squares, log_space};

/// Radius-to-order or level-to-radius map.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Ingredients of the rate criterion
/// `g(s) = s^{d/a(Φ⁻¹(2/s)+1)} φ(κ + Φ⁻¹(2/s))²`.
#[derive(Clone)]
pub struct RateProfile {
    /// `a(r) = inf_{|x|∨|y|≤r} α(x, y)`.
    pub a: ScalarFn,
    /// Generalised inverse of the potential growth function.
    pub phi_inv: ScalarFn,
    pub phi_ref: ReferenceFunction,
    pub kappa: f64,
    pub d: usize,
}

impl fmt::Debug for RateProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateProfile")
            .field("phi_ref", &self.phi_ref)
            .field("kappa", &self.kappa)
            .field("d", &self.d)
            .finish_non_exhaustive()
    }
}

/// Search window for `Γ`.
const S_LO: f64 = 1e-12;
const S_HI: f64 = 1e6;
const SCAN_POINTS: usize = 64;

impl RateProfile {
    fn with_order(d: usize, a: ScalarFn, potential: &Potential, phi_ref: ReferenceFunction, kappa: f64) -> Result<Self> {
        potential.validate()?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(invalid("rate offset κ must be positive and finite"));
        }
        let v = potential.clone();
        Ok(Self {
            a,
            phi_inv: Arc::new(move |r| v.growth_phi_inverse(r)),
            phi_ref,
            kappa,
            d,
        })
    }

    /// Constant order `a ≡ α`.
    pub fn constant_order(
        d: usize,
        alpha: f64,
        potential: &Potential,
        phi_ref: ReferenceFunction,
        kappa: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(invalid("order must lie in (0, 2)"));
        }
        Self::with_order(d, Arc::new(move |_| alpha), potential, phi_ref, kappa)
    }

    /// `a(r) = α₀ + β₁/√log(β₂ + 2r)`.
    pub fn variable_order(
        d: usize,
        (alpha0, beta1, beta2): (f64, f64, f64),
        potential: &Potential,
        phi_ref: ReferenceFunction,
        kappa: f64,
    ) -> Result<Self> {
        JumpKernel::VariableOrder { alpha0, beta1, beta2, kappa }.validate(d)?;
        let a = Arc::new(move |r: f64| alpha0 + beta1 / (beta2 + 2.0 * r).ln().sqrt());
        Self::with_order(d, a, potential, phi_ref, kappa)
    }

    /// Profile read off a kernel. An untruncated kernel dominates its own
    /// truncation at any range, so `κ = ∞` is replaced by `default_kappa`.
    pub fn from_kernel(
        kernel: &JumpKernel,
        d: usize,
        potential: &Potential,
        phi_ref: ReferenceFunction,
        default_kappa: f64,
    ) -> Result<Self> {
        kernel.validate(d)?;
        let kappa = if kernel.kappa().is_finite() { kernel.kappa() } else { default_kappa };
        match kernel {
            JumpKernel::LevyStable { alpha, .. } => {
                Self::constant_order(d, *alpha, potential, phi_ref, kappa)
            }
            JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => {
                Self::variable_order(d, (*alpha0, *beta1, *beta2), potential, phi_ref, kappa)
            }
            JumpKernel::General(g) => {
                // the declared lower order bound is below every a(r)
                Self::constant_order(d, g.order_bounds.0, potential, phi_ref, kappa)
            }
        }
    }

    /// `ln g(s)`.
    pub fn ln_criterion(&self, s: f64) -> f64 {
        let radius = (self.phi_inv)(2.0 / s);
        let order = (self.a)(radius + 1.0);
        self.d as f64 / order * s.ln() + 2.0 * self.phi_ref.ln_profile(self.kappa + radius, self.d)
    }
}

/// `Γ(r) = inf{s > 0 : g(s) ≥ 1/r}`: first crossing on a log grid, then
/// bisection in `ln s` to relative precision `1e-10`.
pub fn gamma_rate(profile: &RateProfile, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("rate argument must be positive"));
    }
    let target = -r.ln();
    let mut lo = S_LO;
    while profile.ln_criterion(lo) >= target {
        if lo < 1e-290 {
            return Err(Error::EmptyCriterion { r, lo, hi: S_HI });
        }
        lo *= 1e-6;
    }
    let grid = log_space(lo, S_HI, SCAN_POINTS);
    let hit = grid
        .iter()
        .position(|&s| profile.ln_criterion(s) >= target)
        .ok_or(Error::EmptyCriterion { r, lo, hi: S_HI })?;
    let (mut a, mut b) = (grid[hit - 1].ln(), grid[hit].ln());
    while b - a > 1e-11 {
        let m = 0.5 * (a + b);
        if profile.ln_criterion(m.exp()) >= target {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(b.exp())
}

/// `∫_t^∞ Γ(r)/r dr` for an arbitrary rate `Γ`: adaptive quadrature in
/// `ln r` up to `T = max(10⁶, 10⁴ t)` plus a power tail fitted on the last decade.
pub fn lambda_integral_with(gamma: impl Fn(f64) -> Result<f64>, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("λ argument must be positive"));
    }
    let upper = (1e4 * t).max(1e6);
    let failure = RefCell::new(None);
    let eval = |u: f64| match gamma(u.exp()) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let est = adaptive(&eval, t.ln(), upper.ln(), 0.0, 1e-9, 4000);
    let xs: Vec<f64> = log_space(upper / 10.0, upper, 11).iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = xs.iter().map(|&u| eval(u).ln()).collect();
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    if !est.converged {
        return Err(Error::QuadratureNotConverged { tol: 1e-9, change: est.error });
    }
    let (slope, intercept, _) = least_squares(&xs, &ys);
    if !(slope < 0.0) {
        return Err(Error::DivergentRate { exponent: slope });
    }
    let q = -slope;
    let tail = (intercept + slope * upper.ln()).exp() / q;
    Ok(est.value + tail)
}

/// `λ(t) = ∫_t^∞ Γ(r)/r dr` for a rate profile.
pub fn lambda_integral(profile: &RateProfile, t: f64) -> Result<f64> {
    lambda_integral_with(|r| gamma_rate(profile, r), t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator_profile(p: f64, kappa: f64) -> RateProfile {
        RateProfile::constant_order(
            1,
            1.0,
            &Potential::Power { c: 1.0, theta: 2.0 },
            ReferenceFunction::SimplePower { p },
            kappa,
        )
        .unwrap()
    }

    fn example_profile() -> RateProfile {
        RateProfile::variable_order(
            1,
            (1.0, 0.5, 3.0),
            &Potential::Power { c: 1.0, theta: 2.0 },
            ReferenceFunction::LogCorrected { k: 0, p: 4.0 },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn gamma_matches_direct_inversion() {
        // s·(1 + (1 + (2/s)^{1/2})²)^{−4} = 1/10, solved by plain bisection
        let g = |s: f64| s * (1.0 + (1.0 + (2.0 / s).sqrt()).powi(2)).powi(-4) - 0.1;
        let (mut a, mut b) = (1e-3f64, 1e6f64);
        for _ in 0..300 {
            let m = (a * b).sqrt();
            if g(m) >= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        let got = gamma_rate(&oscillator_profile(2.0, 1.0), 10.0).unwrap();
        assert!((got - b).abs() < 1e-9 * b, "{got} vs {b}");
    }

    #[test]
    fn gamma_is_nonincreasing() {
        let p = oscillator_profile(2.0, 1.0);
        assert!(gamma_rate(&p, 1.0).unwrap() >= gamma_rate(&p, 10.0).unwrap());
        let rs = log_space(1e-2, 1e8, 50);
        let vals: Vec<f64> = rs.iter().map(|&r| gamma_rate(&p, r).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gamma_vanishes_on_variable_order_profile() {
        let p = example_profile();
        let vals: Vec<f64> = (0..10).map(|k| gamma_rate(&p, 10f64.powi(k)).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        assert!(vals[9] < 1e-3 * vals[0]);
    }

    #[test]
    fn lambda_of_synthetic_power_rates() {
        for q in [0.25, 0.5, 1.0] {
            let got = lambda_integral_with(|r| Ok(r.powf(-q)), 1.0).unwrap();
            assert!((got - 1.0 / q).abs() < 1e-6 / q, "q={q}: {got}");
            let got = lambda_integral_with(|r| Ok(r.powf(-q)), 37.0).unwrap();
            let exact = 37f64.powf(-q) / q;
            assert!((got - exact).abs() < 1e-6 * exact);
        }
        assert!(matches!(
            lambda_integral_with(|r| Ok(r.powf(0.1)), 1.0),
            Err(Error::DivergentRate { .. })
        ));
    }

    #[test]
    fn lambda_is_decreasing() {
        let p = oscillator_profile(0.3, 1.0);
        let a = lambda_integral(&p, 1.0).unwrap();
        let b = lambda_integral(&p, 10.0).unwrap();
        let c = lambda_integral(&p, 1e3).unwrap();
        assert!(a > b && b > c, "{a} {b} {c}");
    }
}
