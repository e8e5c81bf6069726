use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fracspec::discretize::BoxGrid;
use fracspec::operators::{JumpKernel, Potential, ReferenceFunction, Symbol};

use crate::error::CliError;

/// Bumped whenever the layout of outputs or manifests changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemBlock,
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub bounds: BoundsBlock,
    #[serde(default)]
    pub ritz: RitzBlock,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// Exactly one of `symbol` and `kernel` is set.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Symbol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<JumpKernel>,
    pub potential: Potential,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub half_length: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub k: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        Self { k: 20, tol: 1e-8, seed: 0, max_iter: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Calibrate,
}

/// A bound constant, either fixed or fitted to the computed spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Constant {
    Value(f64),
    Keyword(Keyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    /// `δ n^e`; `"calibrate"` yields both a lower and an upper curve.
    Power {
        delta: Constant,
        #[serde(default = "lower")]
        side: Side,
    },
    VariableOrder { delta: f64, c_delta: f64 },
    RateIntegral {
        reference: ReferenceFunction,
        #[serde(default = "unit")]
        kappa: f64,
        #[serde(default = "unit")]
        delta1: f64,
        #[serde(default = "unit")]
        delta2: f64,
    },
    HeatTrace {
        #[serde(default = "t_lo")]
        t_lo: f64,
        #[serde(default = "t_hi")]
        t_hi: f64,
    },
}

fn lower() -> Side {
    Side::Lower
}

fn unit() -> f64 {
    1.0
}

fn t_lo() -> f64 {
    1e-6
}

fn t_hi() -> f64 {
    1e4
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsBlock {
    #[serde(rename = "curve")]
    pub curves: Vec<CurveSpec>,
    /// Largest index evaluated; defaults to `solver.k`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RitzBlock {
    pub n_list: Vec<usize>,
    pub rel_tol: f64,
    pub max_cutoff: f64,
    /// Ritz values must stay above `(1 − domination_tol) λ_j`.
    pub domination_tol: f64,
}

impl Default for RitzBlock {
    fn default() -> Self {
        Self { n_list: vec![4, 8, 16, 32], rel_tol: 1e-8, max_cutoff: 1e7, domination_tol: 0.01 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    /// Inclusive 1-based window; chosen from the spectrum when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[usize; 2]>,
    /// Expected slope checked by `report --check`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<f64>,
    pub tolerance: f64,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self { window: None, expect: None, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub format: Format,
    pub directory: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { format: Format::Csv, directory: "runs".into() }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::ConfigInvalid(msg.into())
}

impl RunConfig {
    /// Reads a TOML config, or the `parameters` of a JSON manifest.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let parse_error = |message: String| CliError::ConfigParse { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| parse_error(e.to_string()))?;
        let config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse_error(e.to_string()))?;
            let params = manifest.get("parameters").cloned().ok_or_else(|| parse_error("no `parameters` field".into()))?;
            serde_json::from_value(params).map_err(|e| parse_error(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_error(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.problem;
        let d = p.dimension;
        let wrap = |e: fracspec::Error| config_error(e.to_string());
        match (&p.symbol, &p.kernel) {
            (Some(s), None) => s.validate(d).map_err(wrap)?,
            (None, Some(k)) => k.validate(d).map_err(wrap)?,
            _ => return Err(config_error("problem: set exactly one of `symbol` and `kernel`")),
        }
        p.potential.validate().map_err(wrap)?;
        self.grid()?;
        let s = &self.solver;
        if s.k == 0 || !(s.tol > 0.0) || s.max_iter == 0 {
            return Err(config_error("solver: need k ≥ 1, tol > 0 and max_iter ≥ 1"));
        }
        if s.k > self.grid()?.len() {
            return Err(config_error("solver.k exceeds the number of grid points"));
        }
        let r = &self.ritz;
        if r.n_list.is_empty() || r.n_list.contains(&0) || r.n_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_error("ritz.n_list must be a nonempty increasing list of positive sizes"));
        }
        if !(r.rel_tol > 0.0 && r.max_cutoff > 0.0 && r.domination_tol >= 0.0) {
            return Err(config_error("ritz: rel_tol and max_cutoff must be positive, domination_tol nonnegative"));
        }
        if let Some([a, b]) = self.fit.window {
            if a == 0 || b <= a || b > s.k {
                return Err(config_error(format!("fit.window [{a}, {b}] must satisfy 1 ≤ a < b ≤ solver.k")));
            }
        }
        if !(self.fit.tolerance > 0.0) {
            return Err(config_error("fit.tolerance must be positive"));
        }
        if self.bounds.n_max == Some(0) {
            return Err(config_error("bounds.n_max must be positive"));
        }
        for c in &self.bounds.curves {
            match *c {
                CurveSpec::Power { delta: Constant::Value(v), .. } if !(v > 0.0) => {
                    return Err(config_error("bounds: power delta must be positive"))
                }
                CurveSpec::HeatTrace { t_lo, t_hi } if !(t_lo > 0.0 && t_hi > t_lo) => {
                    return Err(config_error("bounds: heat_trace needs 0 < t_lo < t_hi"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<BoxGrid, CliError> {
        BoxGrid::new(self.problem.dimension, self.grid.half_length, self.grid.points)
            .map_err(|e| config_error(format!("grid: {e}")))
    }

    /// Order `α` of the stable part, or `α₀` for a variable order.
    pub fn order(&self) -> Result<f64, CliError> {
        match (&self.problem.symbol, &self.problem.kernel) {
            (Some(Symbol::IsotropicStable { alpha }), _) => Ok(*alpha),
            (_, Some(JumpKernel::LevyStable { alpha, .. })) => Ok(*alpha),
            (_, Some(JumpKernel::VariableOrder { alpha0, .. })) => Ok(*alpha0),
            _ => Err(config_error("this command needs an isotropic stable symbol or a stable kernel")),
        }
    }

    /// Exponent `θ` of a power potential.
    pub fn theta(&self) -> Result<f64, CliError> {
        match self.problem.potential {
            Potential::Power { theta, .. } => Ok(theta),
            _ => Err(config_error("this bound needs a power potential")),
        }
    }

    /// Everything except the output block, as a JSON tree with sorted keys.
    pub fn parameters(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serialises");
        v.as_object_mut().expect("config is a table").remove("output");
        v
    }
}

/// SHA-256 over the compact JSON encoding; `serde_json` maps keep keys sorted.
pub fn digest_of(value: &serde_json::Value) -> String {
    hex::encode(Sha256::digest(value.to_string().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [problem]
        dimension = 1
        symbol = { kind = "isotropic_stable", alpha = 1 }
        potential = { kind = "power", c = 1, theta = 2 }

        [grid]
        half_length = 10
        points = 256
    "#;

    #[test]
    fn defaults_fill_optional_blocks() {
        let c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.validate().unwrap();
        assert_eq!(c.solver.k, 20);
        assert_eq!(c.ritz.n_list, vec![4, 8, 16, 32]);
        assert_eq!(c.output.format, Format::Csv);
        assert!(c.bounds.curves.is_empty());
    }

    #[test]
    fn constants_accept_numbers_and_calibrate() {
        let text = format!(
            "{MINIMAL}\n[[bounds.curve]]\nkind = \"power\"\ndelta = 0.5\nside = \"upper\"\n\
             [[bounds.curve]]\nkind = \"power\"\ndelta = \"calibrate\"\n"
        );
        let c: RunConfig = toml::from_str(&text).unwrap();
        assert!(matches!(c.bounds.curves[0], CurveSpec::Power { delta: Constant::Value(v), side: Side::Upper } if v == 0.5));
        assert!(matches!(c.bounds.curves[1], CurveSpec::Power { delta: Constant::Keyword(Keyword::Calibrate), .. }));
    }

    #[test]
    fn digest_ignores_output_and_layout() {
        let a: RunConfig = toml::from_str(MINIMAL).unwrap();
        let reordered = r#"
            [grid]
            points = 256
            half_length = 10.0

            [output]
            directory = "elsewhere"

            [problem]
            potential = { theta = 2.0, c = 1.0, kind = "power" }
            symbol = { alpha = 1.0, kind = "isotropic_stable" }
            dimension = 1
        "#;
        let b: RunConfig = toml::from_str(reordered).unwrap();
        assert_eq!(digest_of(&a.parameters()), digest_of(&b.parameters()));
        let mut c = a.clone();
        c.solver.seed = 3;
        assert_ne!(digest_of(&a.parameters()), digest_of(&c.parameters()));
    }

    #[test]
    fn inconsistent_blocks_are_rejected() {
        let mut c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.problem.kernel = Some(JumpKernel::LevyStable { alpha: 1.0, kappa: 4.0 });
        assert!(c.validate().is_err());
        let mut c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.fit.window = Some([5, 40]);
        assert!(c.validate().is_err());
        let mut c: RunConfig = toml::from_str(MINIMAL).unwrap();
        c.ritz.n_list = vec![8, 4];
        assert!(c.validate().is_err());
    }
}
