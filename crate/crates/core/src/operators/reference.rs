use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quad::{adaptive, log_space};

/// Radial reference function `φ(x) = φ(|x|)` used by the rate bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceFunction {
    /// `(1 + s²)^{−p}`.
    SimplePower { p: f64 },
    /// `(1+s²)^{−d/4} · [ (log^{k+1}(e^{k+1}+s²))^{p/2} · ∏_{i≤k} √log^i(e^i+s²) ]^{−1}`
    /// where `log^i` is the `i`-fold iterated logarithm.
    LogCorrected { k: u32, p: f64 },
}

/// Outcome of the numerical class-membership test.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassReport {
    /// `∫₀^∞ s^{d−1} φ(s)² ds` (quadrature plus extrapolated tail), `inf` when divergent.
    pub square_integral: f64,
    /// Decay exponent of the integrand in the first logarithmic variable
    /// where it is not borderline; the integral converges iff it exceeds 1.
    pub tail_exponent: f64,
    pub integrable: bool,
    /// Empirical doubling/derivative constant over the largest grid.
    pub constant: f64,
    pub constant_stable: bool,
    pub pass: bool,
}

/// `i`-fold iterated logarithm of `e^i + s²`, with `v = ln s`.
/// Works for arbitrarily large `v`.
fn iterated_log_at(i: u32, v: f64) -> f64 {
    let shift = i as f64;
    let mut x = if 2.0 * v > shift {
        2.0 * v + (shift - 2.0 * v).exp().ln_1p()
    } else {
        shift + (2.0 * v - shift).exp().ln_1p()
    };
    for _ in 1..i {
        x = x.ln();
    }
    x
}

/// Product `L_0 · L_1 ⋯ L_i` of the iterated logarithms of `e^i + s²`.
fn chain_product(i: u32, s: f64) -> f64 {
    let mut x = (i as f64).exp() + s * s;
    let mut prod = x;
    for _ in 0..i {
        x = x.ln();
        prod *= x;
    }
    prod
}

impl ReferenceFunction {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            ReferenceFunction::SimplePower { p } => {
                if !(p > d as f64 / 4.0) {
                    return Err(invalid(format!("reference exponent p = {p} must exceed d/4")));
                }
            }
            ReferenceFunction::LogCorrected { k, p } => {
                if !(p > 1.0) {
                    return Err(invalid("log-corrected reference needs p > 1"));
                }
                // the innermost iterated logarithm turns negative at s = 0 for k ≥ 3
                if k > 2 {
                    return Err(invalid("log-corrected reference is positive only for k ≤ 2"));
                }
            }
        }
        Ok(())
    }

    /// `ln φ(s)`.
    pub fn ln_profile(&self, s: f64, d: usize) -> f64 {
        match *self {
            ReferenceFunction::SimplePower { p } => -p * (s * s).ln_1p(),
            ReferenceFunction::LogCorrected { .. } => self.ln_profile_log(s.ln(), d),
        }
    }

    /// `ln φ(e^v)`; usable far beyond the range of `f64` radii.
    pub fn ln_profile_log(&self, v: f64, d: usize) -> f64 {
        let ln_one_plus = if v > 0.0 {
            2.0 * v + (-2.0 * v).exp().ln_1p()
        } else {
            (2.0 * v).exp().ln_1p()
        };
        match *self {
            ReferenceFunction::SimplePower { p } => -p * ln_one_plus,
            ReferenceFunction::LogCorrected { k, p } => {
                let mut acc = -(d as f64) / 4.0 * ln_one_plus;
                acc -= 0.5 * p * iterated_log_at(k + 1, v).ln();
                for i in 1..=k {
                    acc -= 0.5 * iterated_log_at(i, v).ln();
                }
                acc
            }
        }
    }

    pub fn profile(&self, s: f64, d: usize) -> f64 {
        self.ln_profile(s, d).exp()
    }

    /// `d/ds ln φ(s)`.
    pub fn ln_derivative(&self, s: f64, d: usize) -> f64 {
        match *self {
            ReferenceFunction::SimplePower { p } => -2.0 * p * s / (1.0 + s * s),
            ReferenceFunction::LogCorrected { k, p } => {
                // d/ds ln L_i(e^i+s²) = 2s / (L_0 L_1 ⋯ L_i)
                let dlog = |i: u32| 2.0 * s / chain_product(i, s);
                let mut acc = -(d as f64) / 4.0 * 2.0 * s / (1.0 + s * s);
                acc -= 0.5 * p * dlog(k + 1);
                for i in 1..=k {
                    acc -= 0.5 * dlog(i);
                }
                acc
            }
        }
    }

    /// `φ′(s)`.
    pub fn derivative(&self, s: f64, d: usize) -> f64 {
        self.profile(s, d) * self.ln_derivative(s, d)
    }

    /// `φ″(s)` by central differences of the analytic first derivative.
    pub fn second_derivative(&self, s: f64, d: usize) -> f64 {
        let h = 1e-5 * s.max(1.0);
        let lo = (s - h).max(0.0);
        (self.derivative(s + h, d) - self.derivative(lo, d)) / (s + h - lo)
    }

    /// Numerical test of square integrability and of the doubling/derivative
    /// condition `sup_r (|φ′(r)|(r + 1/r) + |φ″(r)|) + φ(s/2) ≤ c φ(s)`, with
    /// `r` ranging over the unit neighbourhood `[s−1, s+1] ∩ [0, ∞)`.
    pub fn check_class_s(&self, d: usize) -> ClassReport {
        let (tail_exponent, level) = self.tail_exponent(d);
        let integrable = tail_exponent > 1.0;
        let square_integral = if integrable {
            self.square_integral(d, tail_exponent, level)
        } else {
            f64::INFINITY
        };

        let coarse = self.doubling_sup(d, 1e-3, 1e6, 10_000);
        let fine = self.doubling_sup(d, 1e-3, 1e6, 20_000);
        let finer = self.doubling_sup(d, 1e-3, 1e7, 40_000);
        let stable = coarse.is_finite()
            && [fine, finer].iter().all(|v| (v - coarse).abs() <= 0.01 * coarse);
        let constant = coarse.max(fine).max(finer);
        let monotone = log_space(1e-3, 1e6, 2000)
            .iter()
            .all(|&s| self.ln_derivative(s, d) < 0.0);
        ClassReport {
            square_integral,
            tail_exponent,
            integrable,
            constant,
            constant_stable: stable,
            pass: integrable && stable && monotone,
        }
    }

    /// Local decay exponent of `G(u) = s^d φ(s)²` (`u = ln s`) at a far
    /// point. When it is borderline (≈ 1) the `1/u` factor is moved into the
    /// measure and the test repeats in `ln u`, then `ln ln u`.
    fn tail_exponent(&self, d: usize) -> (f64, usize) {
        const FAR: f64 = 1e12;
        let ln_g = |u: f64| self.ln_square_density(u, d);
        let mut exponent = 0.0;
        for level in 0..3usize {
            // H(w) = G(u)·u·ln u⋯ with u = exp^level(w)
            let ln_h = |w: f64| {
                let u = (0..level).fold(w, |x, _| x.exp());
                let mut acc = ln_g(u);
                let mut x = u;
                for _ in 0..level {
                    acc += x.ln();
                    x = x.ln();
                }
                acc
            };
            let w = (0..level).fold(FAR, |x, _| x.ln());
            let h = 1e-4 * w;
            exponent = -(ln_h(w + h) - ln_h(w - h)) / ((w + h).ln() - (w - h).ln());
            if (exponent - 1.0).abs() > 0.05 || level == 2 {
                return (exponent, level);
            }
        }
        (exponent, 2)
    }

    /// `ln(s^d φ(s)²)` at `s = e^u`, with the leading powers cancelled
    /// analytically so that huge `u` stays accurate.
    fn ln_square_density(&self, u: f64, d: usize) -> f64 {
        let df = d as f64;
        if u <= 0.0 {
            return df * u + 2.0 * self.ln_profile_log(u, d);
        }
        let small = (-2.0 * u).exp().ln_1p();
        match *self {
            ReferenceFunction::SimplePower { p } => (df - 4.0 * p) * u - 2.0 * p * small,
            ReferenceFunction::LogCorrected { k, p } => {
                let mut acc = -0.5 * df * small - p * iterated_log_at(k + 1, u).ln();
                for i in 1..=k {
                    acc -= iterated_log_at(i, u).ln();
                }
                acc
            }
        }
    }

    fn square_integral(&self, d: usize, q: f64, level: usize) -> f64 {
        let df = d as f64;
        let s0: f64 = 1e-3;
        let u_max: f64 = 60.0;
        let g = |u: f64| self.ln_square_density(u, d).exp();
        // ∫₀^{s0} s^{d−1}φ² with φ ≈ φ(0) near the origin
        let near = self.profile(0.0, d).powi(2) * s0.powf(df) / df;
        let body = adaptive(g, s0.ln(), u_max, 0.0, 1e-10, 4000).value;
        // tail in the level variable: ∫_W^∞ H ≈ H(W)·W/(q−1)
        let jacobian = match level {
            0 => u_max,
            1 => u_max * u_max.ln(),
            _ => u_max * u_max.ln() * u_max.ln().ln(),
        };
        let q = if level == 0 {
            let h = 1e-3 * u_max;
            let local = -(self.ln_square_density(u_max + h, d) - self.ln_square_density(u_max - h, d))
                / ((u_max + h).ln() - (u_max - h).ln());
            if local > 1.0 { local } else { q }
        } else {
            q
        };
        near + body + g(u_max) * jacobian / (q - 1.0)
    }

    fn doubling_sup(&self, d: usize, lo: f64, hi: f64, n: usize) -> f64 {
        let mut best: f64 = 0.0;
        for s in log_space(lo, hi, n) {
            let phi_s = self.profile(s, d);
            let mut inner: f64 = 0.0;
            let (a, b) = ((s - 1.0).max(0.0), s + 1.0);
            for j in 0..=16 {
                let r = (a + (b - a) * j as f64 / 16.0).max(1e-9);
                let v = self.derivative(r, d).abs() * (r + 1.0 / r)
                    + self.second_derivative(r, d).abs();
                inner = inner.max(v);
            }
            best = best.max((inner + self.profile(0.5 * s, d)) / phi_s);
        }
        best
    }
}
