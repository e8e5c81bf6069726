use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Tent, TrialBasis};
use crate::error::{invalid, Error, Result};
use crate::operators::{stable_symbol_constant, JumpKernel, Potential, Symbol};
use crate::quad::{adaptive, GaussLegendre};

/// Continuum problem whose form the trial functions are fed into.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RitzProblem {
    /// `ψ(D) + V`.
    Symbol { symbol: Symbol, potential: Potential },
    /// Jump form of `J` plus `∫ V f²`.
    Kernel { kernel: JumpKernel, potential: Potential },
}

impl RitzProblem {
    pub fn potential(&self) -> &Potential {
        match self {
            RitzProblem::Symbol { potential, .. } | RitzProblem::Kernel { potential, .. } => potential,
        }
    }
}

/// How the jump part of the form is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormRoute {
    /// `(1/π) ∫₀^∞ m(ξ) cos(ξδ) T_u T_v dξ` with closed-form tent transforms (d = 1).
    Frequency,
    /// `∫ R(z) (2⟨u,v⟩ − C(z) − C(−z)) dz` with exact tent correlations `C`
    /// and a power jump density `R`.
    Correlation,
    /// `∫∫ (u(x+z)−u(x))(v(x+z)−v(x)) J(x, x+z)` by tensor quadrature (d = 1).
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Entries stop refining once a step changes them by less than this
    /// fraction of `√(A_kk A_k'k')`.
    pub rel_tol: f64,
    /// Largest frequency cutoff tried by the frequency route.
    pub max_cutoff: f64,
    /// Gauss nodes per angular interval in two dimensions.
    pub angular_nodes: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { rel_tol: 1e-8, max_cutoff: 1e7, angular_nodes: 16 }
    }
}

/// `A_{kk'} = E(u_k, u_k')` together with the norms `I_k = ∫ u_k²`.
#[derive(Debug, Clone)]
pub struct FormMatrix {
    pub matrix: DMatrix<f64>,
    pub norms: Vec<f64>,
    pub route: FormRoute,
}

/// `∫₀^{z₁} z^q h(z) dz` for a polynomial `h` of degree ≤ `deg`, from
/// Chebyshev samples.
fn power_weighted_polynomial(h: impl Fn(f64) -> f64, z1: f64, deg: usize, q: f64) -> f64 {
    let m = deg + 1;
    let t: Vec<f64> = (0..m).map(|j| 0.5 * (1.0 - (PI * (j as f64 + 0.5) / m as f64).cos())).collect();
    let vander = DMatrix::from_fn(m, m, |r, c| t[r].powi(c as i32));
    let y = DVector::from_iterator(m, t.iter().map(|&tj| h(z1 * tj)));
    let c = vander.lu().solve(&y).expect("Chebyshev Vandermonde is nonsingular");
    z1.powf(q + 1.0) * c.iter().enumerate().map(|(k, ck)| ck / (q + k as f64 + 1.0)).sum::<f64>()
}

/// `∫_lo^hi f` split into pieces with endpoint ratio ≤ 2, Gauss–Legendre on each.
fn graded(rule: &GaussLegendre, lo: f64, hi: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    let mut a = lo;
    while a < hi {
        let b = if a > 0.0 { (2.0 * a).min(hi) } else { hi };
        total += rule.integrate(a, b, f);
        a = b;
    }
    total
}

fn sorted_breaks(mut v: Vec<f64>, upper: f64) -> Vec<f64> {
    v.retain(|x| *x > 1e-14 && *x < upper);
    v.push(upper);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    v
}

fn knot_differences(u: &Tent, v: &Tent) -> Vec<f64> {
    let mut out = Vec::with_capacity(9);
    for a in u.knots() {
        for b in v.knots() {
            out.push((a - b).abs());
        }
    }
    out
}

fn span(u: &Tent, v: &Tent) -> f64 {
    (v.b - u.a).abs().max((u.b - v.a).abs())
}

/// Frequency-route jump form of two 1-D tents under multiplier `m`.
pub fn frequency_form(
    m: &(dyn Fn(f64) -> f64 + Sync),
    u: &Tent,
    v: &Tent,
    scale: Option<f64>,
    settings: &QuadratureSettings,
) -> Result<f64> {
    let delta = u.center() - v.center();
    let omega = delta.abs() + 0.5 * (u.width() + v.width());
    let panel = PI / omega;
    let rule = GaussLegendre::new(16);
    let f = |x: f64| m(x) * (x * delta).cos() * u.transform_amplitude(x) * v.transform_amplitude(x) / PI;
    let mut total = 0.0;
    let mut hi = panel;
    for _ in 0..60 {
        total += rule.integrate(0.5 * hi, hi, f);
        hi *= 0.5;
    }
    let panels = |from: f64, count: usize| -> f64 {
        (0..count).map(|j| rule.integrate(from + j as f64 * panel, from + (j + 1) as f64 * panel, f)).sum()
    };
    total += panels(panel, 15);
    let mut cut = 16.0 * panel;
    let scale = scale.unwrap_or(total.abs()).max(f64::MIN_POSITIVE);
    loop {
        let count = (cut / panel).round() as usize;
        let inc = panels(cut, count);
        total += inc;
        cut *= 2.0;
        if inc.abs() <= settings.rel_tol * scale {
            return Ok(total);
        }
        if cut > settings.max_cutoff {
            return Err(Error::QuadratureNotConverged { tol: settings.rel_tol, change: inc.abs() / scale });
        }
    }
}

/// Correlation-route jump form of `u = Π u_i`, `v = Π v_i` under the density
/// `amp · |z|^{−d−α} 1{|z| ≤ κ}`.
pub fn correlation_form(u: &[Tent], v: &[Tent], alpha: f64, amp: f64, kappa: f64, settings: &QuadratureSettings) -> f64 {
    let rule = GaussLegendre::new(16);
    let inner: f64 = u.iter().zip(v).map(|(a, b)| a.inner(b)).product();
    let g = |z: &[f64]| {
        let plus: f64 = (0..u.len()).map(|i| u[i].correlation(&v[i], z[i])).product();
        let minus: f64 = (0..u.len()).map(|i| u[i].correlation(&v[i], -z[i])).product();
        2.0 * inner - plus - minus
    };
    // ∫₀^∞ r^{−1−α} g(r e) dr along a unit direction, with `breaks` the
    // r-values where g changes polynomial piece and `reach` where it turns
    // constant
    let ray = |e: &[f64], breaks: Vec<f64>, reach: f64, deg: usize| {
        let upper = reach.min(kappa);
        let pts = sorted_breaks(breaks, upper);
        let at = |r: f64| g(&e.iter().map(|c| r * c).collect::<Vec<_>>());
        let mut total = power_weighted_polynomial(|r| at(r) / (r * r), pts[0], deg, 1.0 - alpha);
        for w in pts.windows(2) {
            total += graded(&rule, w[0], w[1], &|r: f64| r.powf(-1.0 - alpha) * at(r));
        }
        if kappa > reach {
            let far = if kappa.is_finite() { kappa.powf(-alpha) } else { 0.0 };
            total += 2.0 * inner * (reach.powf(-alpha) - far) / alpha;
        }
        total
    };
    if u.len() == 1 {
        let reach = span(&u[0], &v[0]);
        return 2.0 * amp * ray(&[1.0], knot_differences(&u[0], &v[0]), reach, 1);
    }
    let diffs: Vec<Vec<f64>> = (0..2)
        .map(|i| {
            let mut d = knot_differences(&u[i], &v[i]);
            d.push(span(&u[i], &v[i]));
            d.retain(|x| *x > 1e-14);
            d
        })
        .collect();
    let spans = [span(&u[0], &v[0]), span(&u[1], &v[1])];
    let mut angles = vec![0.0, 0.5 * PI, PI];
    for &b1 in &diffs[0] {
        for &b2 in &diffs[1] {
            let t = b2.atan2(b1);
            angles.push(t);
            angles.push(PI - t);
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let arule = GaussLegendre::new(settings.angular_nodes);
    let mut total = 0.0;
    for w in angles.windows(2) {
        total += arule.integrate(w[0], w[1], |t| {
            let e = [t.cos(), t.sin()];
            let ae = [e[0].abs(), e[1].abs()];
            let reach = (0..2).filter(|&i| ae[i] > 0.0).map(|i| spans[i] / ae[i]).fold(f64::INFINITY, f64::min);
            let breaks: Vec<f64> =
                (0..2).filter(|&i| ae[i] > 0.0).flat_map(|i| diffs[i].iter().map(move |b| b / ae[i])).collect();
            ray(&e, breaks, reach, 4)
        });
    }
    2.0 * amp * total
}

/// Direct-route jump form of two 1-D tents under a general kernel.
pub fn direct_form(u: &Tent, v: &Tent, kernel: &JumpKernel, scale: Option<f64>, settings: &QuadratureSettings) -> Result<f64> {
    let rule = GaussLegendre::new(8);
    let kappa = kernel.kappa();
    let mut knots: Vec<f64> = u.knots().into_iter().chain(v.knots()).collect();
    knots.sort_by(f64::total_cmp);
    let (kmin, kmax) = (knots[0], knots[knots.len() - 1]);
    let reach = kmax - kmin;
    let j = |x: f64, z: f64| kernel.eval_unchecked(&[x], &[x + z], z);
    let near = |z: f64| {
        let mut pts: Vec<f64> = knots.iter().flat_map(|k| [*k, k - z]).chain([0.0, -z]).collect();
        pts.retain(|x| *x >= kmin - z && *x <= kmax);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let f = |x: f64| (u.eval(x + z) - u.eval(x)) * (v.eval(x + z) - v.eval(x)) * j(x, z);
        pts.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum::<f64>()
    };
    let mut diffs = Vec::new();
    for a in &knots {
        for b in &knots {
            diffs.push((a - b).abs());
        }
    }
    if kappa < reach {
        diffs.push(kappa);
    }
    let upper = reach.min(kappa);
    let pts = sorted_breaks(diffs, upper);
    let (_, top) = match kernel {
        JumpKernel::LevyStable { alpha, .. } => (*alpha, *alpha),
        JumpKernel::VariableOrder { alpha0, beta1, beta2, .. } => (*alpha0, alpha0 + beta1 / beta2.ln().sqrt()),
        JumpKernel::General(g) => g.order_bounds,
    };
    // graded panels toward z = 0, where the integrand behaves like z^{1−α}
    let levels = (40.0 / (2.0 - top)).ceil() as usize;
    let mut total = 0.0;
    let mut hi = pts[0];
    for _ in 0..levels {
        total += rule.integrate(0.5 * hi, hi, near);
        hi *= 0.5;
    }
    for w in pts.windows(2) {
        total += graded(&rule, w[0], w[1], &near);
    }
    let lo = u.a.max(v.a);
    let hi = u.b.min(v.b);
    if hi > lo && kappa > reach {
        // beyond `reach` only the diagonal products survive
        let far = |z: f64| {
            let f = |x: f64| u.eval(x) * v.eval(x) * (j(x, z) + j(x - z, z));
            let mut pts = vec![lo, hi, u.center(), v.center()];
            pts.retain(|x| *x >= lo && *x <= hi);
            pts.sort_by(f64::total_cmp);
            pts.windows(2).map(|w| rule.integrate(w[0], w[1], f)).sum::<f64>()
        };
        let mass = u.inner(v).abs();
        let scale = scale.unwrap_or(total.abs()).max(f64::MIN_POSITIVE);
        let mut a = reach;
        loop {
            let b = (2.0 * a).min(kappa);
            let inc = rule.integrate(a.ln(), b.ln(), |t| {
                let z = t.exp();
                z * far(z)
            });
            total += inc;
            a = b;
            if a >= kappa {
                break;
            }
            if mass * kernel.tail_mass(a, 1)? <= settings.rel_tol * scale {
                break;
            }
            if a > 1e12 {
                return Err(Error::QuadratureNotConverged { tol: settings.rel_tol, change: inc.abs() / scale });
            }
        }
    }
    Ok(2.0 * total)
}

/// `∫ V u²` for a product of tents.
fn potential_term(f: &[Tent], potential: &Potential) -> f64 {
    let mut cuts = vec![];
    if let Potential::TwoSidedPower { radius, .. } = potential {
        cuts.extend([*radius, -*radius]);
    }
    let pieces = |t: &Tent| {
        let mut p: Vec<f64> = t.knots().into_iter().chain(cuts.iter().copied().filter(|c| *c > t.a && *c < t.b)).collect();
        p.sort_by(f64::total_cmp);
        p
    };
    let integrate = |g: &dyn Fn(f64) -> f64, t: &Tent| -> f64 {
        pieces(t).windows(2).map(|w| adaptive(g, w[0], w[1], 0.0, 1e-13, 400).value).sum()
    };
    if f.len() == 1 {
        integrate(&|x| potential.eval(&[x]) * f[0].eval(x).powi(2), &f[0])
    } else {
        integrate(
            &|x| f[0].eval(x).powi(2) * integrate(&|y| potential.eval(&[x, y]) * f[1].eval(y).powi(2), &f[1]),
            &f[0],
        )
    }
}

/// Jump-form evaluator chosen for a problem.
enum Jump {
    Frequency(Box<dyn Fn(f64) -> f64 + Send + Sync>),
    Correlation { alpha: f64, amp: f64, kappa: f64 },
    Direct(JumpKernel),
}

impl Jump {
    fn select(problem: &RitzProblem, d: usize) -> Result<Self> {
        match problem {
            RitzProblem::Symbol { symbol, .. } => {
                symbol.validate(d)?;
                if d == 1 {
                    let s = symbol.clone();
                    Ok(Jump::Frequency(Box::new(move |x| s.eval(&[x]))))
                } else if let Symbol::IsotropicStable { alpha } = symbol {
                    // ψ = |ξ|^α is the form of the density |z|^{−d−α} / (2C)
                    let amp = 0.5 / stable_symbol_constant(d, *alpha);
                    Ok(Jump::Correlation { alpha: *alpha, amp, kappa: f64::INFINITY })
                } else {
                    Err(invalid("two-dimensional Ritz forms need an isotropic symbol"))
                }
            }
            RitzProblem::Kernel { kernel, .. } => {
                kernel.validate(d)?;
                match kernel {
                    JumpKernel::LevyStable { kappa, .. } if d == 1 && kappa.is_infinite() => {
                        let m = kernel.form_multiplier(1)?;
                        Ok(Jump::Frequency(Box::new(move |x| m(&[x]))))
                    }
                    JumpKernel::LevyStable { alpha, kappa } => {
                        Ok(Jump::Correlation { alpha: *alpha, amp: 1.0, kappa: *kappa })
                    }
                    _ if d == 1 => Ok(Jump::Direct(kernel.clone())),
                    _ => Err(invalid("variable-order Ritz forms are one-dimensional only")),
                }
            }
        }
    }

    fn route(&self) -> FormRoute {
        match self {
            Jump::Frequency(_) => FormRoute::Frequency,
            Jump::Correlation { .. } => FormRoute::Correlation,
            Jump::Direct(_) => FormRoute::Direct,
        }
    }

    fn eval(&self, u: &[Tent], v: &[Tent], scale: Option<f64>, settings: &QuadratureSettings) -> Result<f64> {
        match self {
            Jump::Frequency(m) => frequency_form(m.as_ref(), &u[0], &v[0], scale, settings),
            Jump::Correlation { alpha, amp, kappa } => Ok(correlation_form(u, v, *alpha, *amp, *kappa, settings)),
            Jump::Direct(k) => direct_form(&u[0], &v[0], k, scale, settings),
        }
    }
}

/// Form matrix `A_{kk'} = E_J(u_k, u_k') + δ_{kk'} ∫ V u_k²` on the trial basis.
pub fn form_matrix(basis: &TrialBasis, problem: &RitzProblem, settings: &QuadratureSettings) -> Result<FormMatrix> {
    problem.potential().validate()?;
    let jump = Jump::select(problem, basis.d)?;
    let funcs: Vec<Vec<Tent>> = (0..basis.len()).map(|i| basis.function(i)).collect();
    let m = funcs.len();
    let diag: Vec<f64> =
        funcs.par_iter().map(|f| jump.eval(f, f, None, settings)).collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let off: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| jump.eval(&funcs[i], &funcs[j], Some((diag[i] * diag[j]).sqrt()), settings))
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = DMatrix::zeros(m, m);
    for (&(i, j), v) in pairs.iter().zip(&off) {
        matrix[(i, j)] = *v;
        matrix[(j, i)] = *v;
    }
    let pot: Vec<f64> = funcs.par_iter().map(|f| potential_term(f, problem.potential())).collect();
    for i in 0..m {
        matrix[(i, i)] = diag[i] + pot[i];
    }
    Ok(FormMatrix { matrix, norms: basis.norms(), route: jump.route() })
}
