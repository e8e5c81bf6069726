use serde::{Deserialize, Serialize};

/// `h(s) = min{(s − a)⁺, (b − s)⁺}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tent {
    pub a: f64,
    pub b: f64,
}

/// Two-point Gauss rule on `[lo, hi]`, exact for quadratics.
fn gauss2(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let m = 0.5 * (lo + hi);
    let r = 0.5 * (hi - lo) / 3f64.sqrt();
    0.5 * (hi - lo) * (f(m - r) + f(m + r))
}

impl Tent {
    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn knots(&self) -> [f64; 3] {
        [self.a, self.center(), self.b]
    }

    pub fn eval(&self, s: f64) -> f64 {
        (s - self.a).min(self.b - s).max(0.0)
    }

    /// `∫ h² = Δ³/12`.
    pub fn square_norm(&self) -> f64 {
        self.width().powi(3) / 12.0
    }

    /// Real factor `T` in `∫ h(s) e^{−iξs} ds = e^{−iξc} T(ξ)`:
    /// `T(ξ) = w² sinc²(ξw/2)` with half-width `w = Δ/2`.
    pub fn transform_amplitude(&self, xi: f64) -> f64 {
        let w = 0.5 * self.width();
        let x = 0.5 * xi * w;
        let sinc = if x.abs() < 1e-4 { 1.0 - x * x / 6.0 } else { x.sin() / x };
        w * w * sinc * sinc
    }

    /// `∫ h(s + z) g(s) ds`.
    pub fn correlation(&self, other: &Tent, z: f64) -> f64 {
        let lo = (self.a - z).max(other.a);
        let hi = (self.b - z).min(other.b);
        if hi <= lo {
            return 0.0;
        }
        let mut pts = [lo, self.center() - z, other.center(), hi];
        pts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in pts.windows(2) {
            let (p, q) = (w[0].max(lo), w[1].min(hi));
            if q > p {
                total += gauss2(p, q, |s| self.eval(s + z) * other.eval(s));
            }
        }
        total
    }

    pub fn inner(&self, other: &Tent) -> f64 {
        self.correlation(other, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::adaptive;

    #[test]
    fn square_norm_matches_quadrature() {
        for t in [Tent { a: 1.0, b: 1.2599 }, Tent { a: -0.3, b: 2.0 }] {
            let q = adaptive(|s| t.eval(s).powi(2), t.a, t.center(), 0.0, 1e-14, 100).value
                + adaptive(|s| t.eval(s).powi(2), t.center(), t.b, 0.0, 1e-14, 100).value;
            assert!((q - t.square_norm()).abs() < 1e-12 * q);
        }
    }

    #[test]
    fn transform_matches_numeric_transform() {
        let t = Tent { a: 1.3, b: 2.05 };
        let c = t.center();
        for j in 0..20 {
            let xi = 0.37 * j as f64 + 1e-3;
            // ∫ h(s) cos(ξ(s − c)) ds; the sine part vanishes by symmetry
            let f = |s: f64| t.eval(s) * (xi * (s - c)).cos();
            let q = adaptive(f, t.a, c, 0.0, 1e-14, 200).value + adaptive(f, c, t.b, 0.0, 1e-14, 200).value;
            let odd = |s: f64| t.eval(s) * (xi * (s - c)).sin();
            let o = adaptive(odd, t.a, c, 0.0, 1e-14, 200).value + adaptive(odd, c, t.b, 0.0, 1e-14, 200).value;
            assert!((q - t.transform_amplitude(xi)).abs() < 1e-10, "ξ={xi}");
            assert!(o.abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_matches_quadrature() {
        let u = Tent { a: 1.0, b: 1.6 };
        let v = Tent { a: 1.6, b: 2.5 };
        for &z in &[-1.2, -0.7, -0.1, 0.0, 0.25, 0.9] {
            let f = |s: f64| u.eval(s + z) * v.eval(s);
            let mut pts = vec![v.a, v.center(), v.b, u.a - z, u.center() - z, u.b - z];
            pts.sort_by(f64::total_cmp);
            let q: f64 = pts.windows(2).map(|w| adaptive(f, w[0], w[1], 0.0, 1e-14, 100).value).sum();
            assert!((q - u.correlation(&v, z)).abs() < 1e-14, "z={z}");
        }
        assert_eq!(u.inner(&v), 0.0);
    }
}
