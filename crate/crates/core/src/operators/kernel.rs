use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::quad::{adaptive, sphere_area, GaussLegendre};

/// Pointwise function of a pair of points.
pub type PairFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Stable-like kernel `n(x,y) |x−y|^{−(d+α(x,y))}` with user functions.
#[derive(Clone)]
pub struct GeneralKernel {
    pub order: PairFn,
    pub amplitude: PairFn,
    /// `ε ≤ n(x,y) ≤ 1/ε`.
    pub epsilon: f64,
    /// `α₁ ≤ α(x,y) ≤ α₂`.
    pub order_bounds: (f64, f64),
    pub kappa: f64,
}

impl fmt::Debug for GeneralKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralKernel")
            .field("epsilon", &self.epsilon)
            .field("order_bounds", &self.order_bounds)
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

/// Symmetric jump rate `J(x, y)` truncated at range `κ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum JumpKernel {
    /// `|x−y|^{−(d+α)} 1{|x−y| ≤ κ}`.
    LevyStable {
        alpha: f64,
        #[serde(default = "unbounded", with = "crate::serde_ext::extended")]
        kappa: f64,
    },
    /// Order `α₀ + β₁ / √log(β₂ + |x| + |y|)`.
    VariableOrder {
        alpha0: f64,
        beta1: f64,
        beta2: f64,
        #[serde(default = "unbounded", with = "crate::serde_ext::extended")]
        kappa: f64,
    },
    #[serde(skip)]
    General(GeneralKernel),
}

fn unbounded() -> f64 {
    f64::INFINITY
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

/// `∫_{R^d} (1 − cos z₁) |z|^{−d−α} dz`, so that the untruncated stable
/// kernel has form symbol `2·C·|ξ|^α`.
pub fn stable_symbol_constant(d: usize, alpha: f64) -> f64 {
    let df = d as f64;
    PI.powf(df / 2.0) * gamma(1.0 - alpha / 2.0)
        / (alpha * 2f64.powf(alpha - 1.0) * gamma((df + alpha) / 2.0))
}

impl JumpKernel {
    pub fn kappa(&self) -> f64 {
        match self {
            JumpKernel::LevyStable { kappa, .. } | JumpKernel::VariableOrder { kappa, .. } => *kappa,
            JumpKernel::General(g) => g.kappa,
        }
    }

    /// Same kernel with range `κ`.
    pub fn with_kappa(&self, kappa: f64) -> JumpKernel {
        let mut k = self.clone();
        match &mut k {
            JumpKernel::LevyStable { kappa: r, .. } | JumpKernel::VariableOrder { kappa: r, .. } => {
                *r = kappa
            }
            JumpKernel::General(g) => g.kappa = kappa,
        }
        k
    }

    /// Order `α(x, y)`.
    pub fn order(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            JumpKernel::LevyStable { alpha, .. } => *alpha,
            JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => {
                alpha0 + beta1 / (beta2 + (norm(x) + norm(y))).ln().sqrt()
            }
            JumpKernel::General(g) => (g.order)(x, y),
        }
    }

    /// Amplitude `n(x, y)`.
    pub fn amplitude(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            JumpKernel::General(g) => (g.amplitude)(x, y),
            _ => 1.0,
        }
    }

    /// Whether `J(x, y)` depends on `x − y` only.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self, JumpKernel::LevyStable { .. })
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let r = distance(x, y);
        if r == 0.0 {
            return Err(Error::CoincidentPoints);
        }
        Ok(self.eval_unchecked(x, y, r))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64], r: f64) -> f64 {
        if r > self.kappa() {
            return 0.0;
        }
        let d = x.len() as f64;
        self.amplitude(x, y) * r.powf(-(d + self.order(x, y)))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if !(self.kappa() > 0.0) {
            return Err(invalid("kernel range must be positive"));
        }
        match self {
            JumpKernel::LevyStable { alpha, .. } => {
                if !(*alpha > 0.0 && *alpha < 2.0) {
                    return Err(invalid(format!("stable order {alpha} outside (0, 2)")));
                }
            }
            JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => {
                if !(*alpha0 > 0.0 && *alpha0 < 2.0 && *beta1 > 0.0 && *beta2 > 1.0) {
                    return Err(invalid("need 0 < α₀ < 2, β₁ > 0, β₂ > 1"));
                }
                let top = alpha0 + beta1 / beta2.ln().sqrt();
                if top >= 2.0 {
                    return Err(invalid(format!("maximal order {top} must stay below 2")));
                }
            }
            JumpKernel::General(g) => {
                let (lo, hi) = g.order_bounds;
                if !(g.epsilon > 0.0 && g.epsilon < 1.0 && lo > 0.0 && lo <= hi && hi < 2.0) {
                    return Err(invalid("need 0 < ε < 1 and 0 < α₁ ≤ α₂ < 2"));
                }
                // spot-check symmetry and the amplitude/order bounds
                let pts: Vec<Vec<f64>> = (0..7)
                    .map(|i| (0..d).map(|j| (i as f64 - 3.0) * 0.7 + 0.3 * j as f64).collect())
                    .collect();
                for x in &pts {
                    for y in &pts {
                        let (a, n) = ((g.order)(x, y), (g.amplitude)(x, y));
                        if a != (g.order)(y, x) || n != (g.amplitude)(y, x) {
                            return Err(invalid("general kernel is not symmetric"));
                        }
                        if a < lo || a > hi || n < g.epsilon || n > 1.0 / g.epsilon {
                            return Err(invalid("general kernel violates its declared bounds"));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `sup_x J(x, x + z)` over `|z| = ρ`.
    pub fn sup_envelope(&self, rho: f64, d: usize) -> f64 {
        if rho > self.kappa() || rho <= 0.0 {
            return 0.0;
        }
        let df = d as f64;
        match self {
            JumpKernel::LevyStable { alpha, .. } => rho.powf(-(df + alpha)),
            JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => {
                if rho >= 1.0 {
                    rho.powf(-(df + alpha0))
                } else {
                    // |x| + |x+z| ≥ ρ, so the largest order is reached at x = −z/2
                    let top = alpha0 + beta1 / (beta2 + rho).ln().sqrt();
                    rho.powf(-(df + top))
                }
            }
            JumpKernel::General(g) => {
                let a = if rho < 1.0 { g.order_bounds.1 } else { g.order_bounds.0 };
                rho.powf(-(df + a)) / g.epsilon
            }
        }
    }

    /// Exponent `a` with `sup_x J(x, x+z) = c |z|^{−d−a}` for `|z| ≥ 1`.
    fn far_exponent(&self) -> (f64, f64) {
        match self {
            JumpKernel::LevyStable { alpha, .. } => (*alpha, 1.0),
            JumpKernel::VariableOrder { alpha0, .. } => (*alpha0, 1.0),
            JumpKernel::General(g) => (g.order_bounds.0, 1.0 / g.epsilon),
        }
    }

    /// `∫_{|z|>r} sup_x J(x, x+z) dz`.
    pub fn tail_mass(&self, r: f64, d: usize) -> Result<f64> {
        if !(r > 0.0) {
            return Err(invalid("tail radius must be positive"));
        }
        let kappa = self.kappa();
        if r >= kappa {
            return Ok(0.0);
        }
        let omega = sphere_area(d);
        let df = d as f64;
        let mut total = 0.0;
        // numeric part on (r, 1) for kernels whose envelope is not a pure power there
        let split = match self {
            JumpKernel::LevyStable { .. } => r,
            _ => r.max(1.0f64.min(kappa)),
        };
        if split > r {
            let est = adaptive(
                |rho| rho.powf(df - 1.0) * self.sup_envelope(rho, d),
                r,
                split,
                0.0,
                1e-12,
                2000,
            );
            if !est.converged {
                return Err(Error::DivergentTail { radius: r });
            }
            total += omega * est.value;
        }
        if split < kappa {
            let (a, c) = self.far_exponent();
            let lower = split.powf(-a);
            let upper = if kappa.is_finite() {
                kappa.powf(-a)
            } else if a > 0.0 {
                0.0
            } else {
                return Err(Error::DivergentTail { radius: r });
            };
            total += omega * c * (lower - upper) / a;
        }
        if !total.is_finite() {
            return Err(Error::DivergentTail { radius: r });
        }
        Ok(total)
    }

    /// Fourier multiplier of the form `∫∫ (f(x)−f(y))² J` for the
    /// untruncated stable kernel: `2 C_{d,α} |ξ|^α`.
    pub fn form_multiplier(&self, d: usize) -> Result<impl Fn(&[f64]) -> f64 + Send + Sync> {
        match self {
            JumpKernel::LevyStable { alpha, kappa } if kappa.is_infinite() => {
                let c = 2.0 * stable_symbol_constant(d, *alpha);
                let a = *alpha;
                Ok(move |xi: &[f64]| {
                    let r2: f64 = xi.iter().map(|v| v * v).sum();
                    if r2 == 0.0 {
                        0.0
                    } else {
                        c * r2.powf(0.5 * a)
                    }
                })
            }
            _ => Err(invalid(
                "a closed-form multiplier exists only for the untruncated stable kernel",
            )),
        }
    }

    /// `∫_{|z|≤1} |z| · |J(x,x+z) − J(x,x−z)| dz` at `x`.
    pub fn antisymmetry_defect(&self, x: &[f64]) -> f64 {
        self.radial_integral(x, 1.0, |rho, plus, minus| rho * (plus - minus).abs())
    }

    /// `∫ (|z|² ∧ 1) J(x, x+z) dz` at `x`, truncated at `|z| ≤ min(κ, 10⁴)`.
    pub fn small_jump_moment(&self, x: &[f64]) -> f64 {
        let outer = self.kappa().min(1e4);
        self.radial_integral(x, outer, |rho, plus, _| rho.min(1.0).powi(2) * plus)
    }

    fn radial_integral(&self, x: &[f64], outer: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let d = x.len();
        let at = |dir: &[f64], rho: f64| {
            let plus: Vec<f64> = x.iter().zip(dir).map(|(a, u)| a + rho * u).collect();
            let minus: Vec<f64> = x.iter().zip(dir).map(|(a, u)| a - rho * u).collect();
            let jp = self.eval_unchecked(x, &plus, rho);
            let jm = self.eval_unchecked(x, &minus, rho);
            f(rho, jp, jm) * rho.powi(d as i32 - 1)
        };
        let radial = |dir: &[f64]| {
            adaptive(|rho| at(dir, rho), 0.0, outer, 1e-14, 1e-9, 4000).value
        };
        match d {
            1 => radial(&[1.0]) + radial(&[-1.0]),
            _ => {
                let gl = GaussLegendre::new(32);
                gl.integrate(0.0, 2.0 * PI, |phi| radial(&[phi.cos(), phi.sin()]))
            }
        }
    }
}
