use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{lambda_integral, HeatTrace, RateProfile};
use crate::error::{invalid, Error, Result};

/// `θα / (d(θ+α))`.
pub fn power_exponent(d: usize, theta: f64, alpha: f64) -> f64 {
    theta * alpha / (d as f64 * (theta + alpha))
}

fn check_power(d: usize, theta: f64, alpha: f64, delta: f64) -> Result<()> {
    if d == 0 || !(theta > 0.0) || !(alpha > 0.0 && alpha < 2.0) || !(delta > 0.0) {
        return Err(invalid("power bound needs d ≥ 1, θ > 0, α ∈ (0,2), δ > 0"));
    }
    Ok(())
}

/// `δ n^{θα/(d(θ+α))}`; the same curve serves as lower or upper bound.
pub fn power_bound(d: usize, theta: f64, alpha: f64, delta: f64, n: f64) -> Result<f64> {
    check_power(d, theta, alpha, delta)?;
    Ok(delta * n.powf(power_exponent(d, theta, alpha)))
}

/// Supremum of admissible `δ` in the variable-order lower bound:
/// `(dβ₁√θ/α₀²)·(d(α₀+θ)/(α₀θ))^{3/2}`.
pub fn variable_order_delta_limit(d: usize, theta: f64, alpha0: f64, beta1: f64) -> f64 {
    let df = d as f64;
    df * beta1 * theta.sqrt() / (alpha0 * alpha0) * (df * (alpha0 + theta) / (alpha0 * theta)).powf(1.5)
}

/// `c(δ) n^{θα₀/(d(θ+α₀))} exp(δ√log n)`.
pub fn variable_order_lower(
    d: usize,
    theta: f64,
    alpha0: f64,
    beta1: f64,
    delta: f64,
    c_delta: f64,
    n: f64,
) -> Result<f64> {
    check_power(d, theta, alpha0, c_delta)?;
    let limit = variable_order_delta_limit(d, theta, alpha0, beta1);
    if !(delta > 0.0 && delta < limit) {
        return Err(Error::InadmissibleDelta { delta, limit });
    }
    if !(n >= 1.0) {
        return Err(invalid("eigenvalue index starts at 1"));
    }
    Ok(c_delta * n.powf(power_exponent(d, theta, alpha0)) * (delta * n.ln().sqrt()).exp())
}

/// `δ₁ / λ(δ₂ n)`.
pub fn rate_integral_lower(profile: &RateProfile, delta1: f64, delta2: f64, n: f64) -> Result<f64> {
    if !(delta1 > 0.0 && delta2 > 0.0 && n >= 1.0) {
        return Err(invalid("need δ₁, δ₂ > 0 and n ≥ 1"));
    }
    Ok(delta1 / lambda_integral(profile, delta2 * n)?)
}

/// Which bound a curve realises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundSource {
    RateIntegral,
    PowerLower,
    PowerUpper,
    VariableOrderLower,
    HeatTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lower,
    Upper,
}

impl BoundSource {
    pub fn tag(self) -> &'static str {
        match self {
            BoundSource::RateIntegral => "rate-integral",
            BoundSource::PowerLower => "power-lower",
            BoundSource::PowerUpper => "power-upper",
            BoundSource::VariableOrderLower => "variable-order-lower",
            BoundSource::HeatTrace => "heat-trace",
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            BoundSource::PowerUpper => Direction::Upper,
            _ => Direction::Lower,
        }
    }
}

type Evaluator = Arc<dyn Fn(usize) -> Result<f64> + Send + Sync>;

/// `n ↦ bound` with the constants that produced it.
#[derive(Clone)]
pub struct BoundCurve {
    pub source: BoundSource,
    pub constants: BTreeMap<String, f64>,
    /// Smallest index at which the curve is asserted.
    pub min_n: usize,
    evaluator: Evaluator,
}

impl fmt::Debug for BoundCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundCurve")
            .field("source", &self.source)
            .field("constants", &self.constants)
            .field("min_n", &self.min_n)
            .finish_non_exhaustive()
    }
}

fn record(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl BoundCurve {
    pub fn power(d: usize, theta: f64, alpha: f64, delta: f64, direction: Direction) -> Result<Self> {
        check_power(d, theta, alpha, delta)?;
        let source = match direction {
            Direction::Lower => BoundSource::PowerLower,
            Direction::Upper => BoundSource::PowerUpper,
        };
        Ok(Self {
            source,
            constants: record(&[("d", d as f64), ("theta", theta), ("alpha", alpha), ("delta", delta)]),
            min_n: 1,
            evaluator: Arc::new(move |n| power_bound(d, theta, alpha, delta, n as f64)),
        })
    }

    pub fn variable_order(d: usize, theta: f64, alpha0: f64, beta1: f64, delta: f64, c_delta: f64) -> Result<Self> {
        // surface inadmissible δ at construction time
        variable_order_lower(d, theta, alpha0, beta1, delta, c_delta, 1.0)?;
        Ok(Self {
            source: BoundSource::VariableOrderLower,
            constants: record(&[
                ("d", d as f64),
                ("theta", theta),
                ("alpha0", alpha0),
                ("beta1", beta1),
                ("delta", delta),
                ("c_delta", c_delta),
            ]),
            min_n: 1,
            evaluator: Arc::new(move |n| variable_order_lower(d, theta, alpha0, beta1, delta, c_delta, n as f64)),
        })
    }

    pub fn rate_integral(profile: RateProfile, delta1: f64, delta2: f64) -> Result<Self> {
        if !(delta1 > 0.0 && delta2 > 0.0) {
            return Err(invalid("need δ₁, δ₂ > 0"));
        }
        Ok(Self {
            source: BoundSource::RateIntegral,
            constants: record(&[
                ("d", profile.d as f64),
                ("kappa", profile.kappa),
                ("delta1", delta1),
                ("delta2", delta2),
            ]),
            min_n: 1,
            evaluator: Arc::new(move |n| rate_integral_lower(&profile, delta1, delta2, n as f64)),
        })
    }

    pub fn heat_trace(trace: HeatTrace) -> Self {
        let (lo, hi) = trace.window();
        Self {
            source: BoundSource::HeatTrace,
            constants: record(&[("t_lo", lo), ("t_hi", hi)]),
            min_n: 1,
            evaluator: Arc::new(move |n| trace.bound(n)),
        }
    }

    pub fn direction(&self) -> Direction {
        self.source.direction()
    }

    pub fn eval(&self, n: usize) -> Result<f64> {
        (self.evaluator)(n)
    }

    /// Values at `ns`, evaluated in parallel, returned in input order.
    pub fn evaluate(&self, ns: &[usize]) -> Result<Vec<f64>> {
        ns.par_iter().map(|&n| self.eval(n)).collect()
    }

    /// First 16 hex digits of the SHA-256 of the canonical constants record.
    pub fn constants_digest(&self) -> String {
        let json = serde_json::to_string(&self.constants).expect("map of floats serialises");
        hex::encode(Sha256::digest(json.as_bytes()))[..16].to_string()
    }

    /// CSV with columns `n,bound,source,constants_digest`.
    pub fn to_csv(&self, ns: &[usize]) -> Result<String> {
        let values = self.evaluate(ns)?;
        let digest = self.constants_digest();
        let mut out = String::from("n,bound,source,constants_digest\n");
        for (n, v) in ns.iter().zip(values) {
            out.push_str(&format!("{n},{v:?},{},{digest}\n", self.source.tag()));
        }
        Ok(out)
    }

    pub fn to_json(&self, ns: &[usize]) -> Result<serde_json::Value> {
        let values = self.evaluate(ns)?;
        Ok(serde_json::json!({
            "source": self.source.tag(),
            "direction": self.direction(),
            "constants": self.constants,
            "constants_digest": self.constants_digest(),
            "min_n": self.min_n,
            "n": ns,
            "bound": values,
        }))
    }
}
