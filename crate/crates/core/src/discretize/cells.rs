//! Second moments of cell pairs, `∫_{[0,1]^d} ∫_{m+[0,1]^d} |u − v|^p du dv`,
//! written as `∫ Λ(w − m) |w|^p dw` with the tent `Λ(w) = Π (1 − |w_i|)₊`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::quad::GaussLegendre;

/// 1-D moment; finite for `p > −1`.
pub(crate) fn tent_moment_1d(m: i64, p: f64) -> f64 {
    let g = |x: i64| (x.unsigned_abs() as f64).powf(p + 2.0) / ((p + 1.0) * (p + 2.0));
    g(m + 1) - 2.0 * g(m) + g(m - 1)
}

/// 2-D moment; finite for `p > −2`.
pub(crate) fn tent_moment_2d(m: [i64; 2], p: f64, rule: &GaussLegendre) -> f64 {
    let mut angles = vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2, 2.0 * PI];
    for a in -1..=1 {
        for b in -1..=1 {
            let q = [m[0] + a, m[1] + b];
            if q != [0, 0] {
                let t = (q[1] as f64).atan2(q[0] as f64);
                angles.push(if t < 0.0 { t + 2.0 * PI } else { t });
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    angles
        .windows(2)
        .map(|w| rule.integrate(w[0], w[1], |t| ray_integral(m, t, p)))
        .sum()
}

/// `∫₀^∞ Λ(r e − m) r^{1+p} dr` along direction angle `t`.
fn ray_integral(m: [i64; 2], t: f64, p: f64) -> f64 {
    let e = [t.cos(), t.sin()];
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut knots = Vec::with_capacity(4);
    for i in 0..2 {
        let mi = m[i] as f64;
        if e[i] == 0.0 {
            if m[i] != 0 {
                return 0.0;
            }
            continue;
        }
        let (a, b) = ((mi - 1.0) / e[i], (mi + 1.0) / e[i]);
        lo = lo.max(a.min(b));
        hi = hi.min(a.max(b));
        knots.push(mi / e[i]);
    }
    if !(hi > lo) {
        return 0.0;
    }
    let mut pts = vec![lo, hi];
    pts.extend(knots.into_iter().filter(|k| *k > lo && *k < hi));
    pts.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (r0, r1) = (w[0], w[1]);
        let mid = 0.5 * (r0 + r1);
        // product of the two linear factors: c0 + c1 r + c2 r²
        let mut c = [1.0, 0.0, 0.0];
        for i in 0..2 {
            if e[i] == 0.0 {
                continue;
            }
            let mi = m[i] as f64;
            let s = (mid * e[i] - mi).signum();
            let (a0, a1) = (1.0 + s * mi, -s * e[i]);
            c = [c[0] * a0, c[0] * a1 + c[1] * a0, c[1] * a1 + c[2] * a0];
        }
        for (k, ck) in c.iter().enumerate() {
            let q = k as f64 + 2.0 + p;
            total += ck * (r1.powf(q) - r0.powf(q)) / q;
        }
    }
    total
}

/// Moments the adjacent-cell weights need, as functions of the order `α`.
pub(crate) struct CellMoments {
    d: usize,
    lo: f64,
    step: f64,
    /// `(self, edge, corner)` at each tabulated order.
    table: Vec<[f64; 3]>,
}

const TABLE_NODES: usize = 97;

impl CellMoments {
    /// Moments for orders in `[lo, hi]`, with exponent `p = 2 − d − α`.
    pub(crate) fn new(d: usize, lo: f64, hi: f64) -> Self {
        if d == 1 || hi - lo < 1e-12 {
            let rule = GaussLegendre::new(20);
            return Self { d, lo, step: 0.0, table: vec![Self::direct(d, lo, &rule)] };
        }
        let rule = GaussLegendre::new(20);
        let step = (hi - lo) / (TABLE_NODES - 1) as f64;
        let table = (0..TABLE_NODES).map(|j| Self::direct(d, lo + j as f64 * step, &rule)).collect();
        Self { d, lo, step, table }
    }

    fn direct(d: usize, alpha: f64, rule: &GaussLegendre) -> [f64; 3] {
        let p = 2.0 - d as f64 - alpha;
        if d == 1 {
            [tent_moment_1d(0, p), tent_moment_1d(1, p), 0.0]
        } else {
            [
                tent_moment_2d([0, 0], p, rule),
                tent_moment_2d([1, 0], p, rule),
                tent_moment_2d([1, 1], p, rule),
            ]
        }
    }

    pub(crate) fn at(&self, alpha: f64) -> [f64; 3] {
        if self.d == 1 {
            let p = 1.0 - alpha;
            return [tent_moment_1d(0, p), tent_moment_1d(1, p), 0.0];
        }
        if self.table.len() == 1 {
            return self.table[0];
        }
        let t = (alpha - self.lo) / self.step;
        let j = (t.floor() as isize).clamp(1, TABLE_NODES as isize - 3) as usize;
        let mut out = [0.0; 3];
        for a in j - 1..=j + 2 {
            let mut l = 1.0;
            for b in j - 1..=j + 2 {
                if a != b {
                    l *= (t - b as f64) / (a as f64 - b as f64);
                }
            }
            for c in 0..3 {
                out[c] += l * self.table[a][c];
            }
        }
        out
    }
}
