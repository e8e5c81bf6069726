use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Radial confining potential `V(x) = v(|x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `c |x|^θ`.
    Power { c: f64, theta: f64 },
    /// `c₃|x|^{θ₁}` inside `radius`, then the larger of `c₃|x|^{θ₁}` and a
    /// `c₄`-branch continued from the crossover, so that
    /// `c₃|x|^{θ₁} ≤ V(x) ≤ c₄|x|^{θ₂}` for `|x| ≥ radius`.
    TwoSidedPower { c3: f64, theta1: f64, c4: f64, theta2: f64, radius: f64 },
}

impl Potential {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Potential::Power { c, theta } => {
                if !(c > 0.0 && theta > 0.0) {
                    return Err(invalid("power potential needs c > 0 and θ > 0"));
                }
            }
            Potential::TwoSidedPower { c3, theta1, c4, theta2, radius } => {
                if !(c3 > 0.0 && c4 > 0.0 && theta1 > 0.0 && theta2 >= theta1 && radius > 0.0) {
                    return Err(invalid("two-sided potential needs c₃, c₄ > 0, θ₂ ≥ θ₁ > 0, radius > 0"));
                }
                if c3 * radius.powf(theta1) > c4 * radius.powf(theta2) {
                    return Err(invalid("c₃R^θ₁ must not exceed c₄R^θ₂ at the crossover"));
                }
            }
        }
        Ok(())
    }

    /// Value at radius `r = |x|`.
    pub fn radial(&self, r: f64) -> f64 {
        match *self {
            Potential::Power { c, theta } => c * r.powf(theta),
            Potential::TwoSidedPower { c3, theta1, c4, theta2, radius } => {
                let low = c3 * r.powf(theta1);
                if r <= radius {
                    low
                } else {
                    let branch = c3 * radius.powf(theta1) + c4 * (r.powf(theta2) - radius.powf(theta2));
                    low.max(branch)
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.radial(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Exponent of the lower power envelope.
    pub fn lower_exponent(&self) -> f64 {
        match *self {
            Potential::Power { theta, .. } => theta,
            Potential::TwoSidedPower { theta1, .. } => theta1,
        }
    }

    /// `Φ(R) = inf_{|x| ≥ R} V(x)`; equal to `V` at radius `R` because the
    /// radial profile is nondecreasing.
    pub fn growth_phi(&self, r: f64) -> f64 {
        self.radial(r.max(0.0))
    }

    /// `Φ⁻¹(r) = inf{s ≥ 0 : Φ(s) ≥ r}`.
    pub fn growth_phi_inverse(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match *self {
            Potential::Power { c, theta } => (r / c).powf(1.0 / theta),
            Potential::TwoSidedPower { c3, theta1, .. } => {
                // Φ ≥ c₃ s^θ₁, so the answer is at most the pure-power inverse
                let mut hi = (r / c3).powf(1.0 / theta1);
                let mut lo = 0.0;
                if self.growth_phi(hi) < r {
                    hi *= 1.0 + 1e-12;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.growth_phi(mid) >= r {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn growth_examples() {
        let v = Potential::Power { c: 1.0, theta: 2.0 };
        assert_eq!(v.growth_phi(3.0), 9.0);
        assert_eq!(v.growth_phi_inverse(4.0), 2.0);
        assert_eq!(v.growth_phi_inverse(0.0), 0.0);
    }

    #[test]
    fn two_sided_envelopes() {
        let v = Potential::TwoSidedPower { c3: 1.0, theta1: 2.0, c4: 2.0, theta2: 3.0, radius: 1.0 };
        v.validate().unwrap();
        for r in [0.5, 1.0, 2.0, 7.0, 40.0] {
            let val = v.radial(r);
            assert!(val >= r * r);
            if r >= 1.0 {
                assert!(val <= 2.0 * r.powi(3) + 1e-12);
            }
        }
        for level in [0.1, 1.0, 5.0, 1e3] {
            let s = v.growth_phi_inverse(level);
            assert!(v.growth_phi(s) >= level);
            assert!(v.growth_phi(s * (1.0 - 1e-9)) < level);
        }
        let bad = Potential::TwoSidedPower { c3: 5.0, theta1: 2.0, c4: 1.0, theta2: 2.0, radius: 1.0 };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn inverse_undoes_phi(r in 1e-3f64..1e3, c in 0.1f64..10.0, theta in 0.5f64..4.0) {
            let v = Potential::Power { c, theta };
            let back = v.growth_phi_inverse(v.growth_phi(r));
            prop_assert!((back - r).abs() <= 1e-12 * r);
        }
    }
}
