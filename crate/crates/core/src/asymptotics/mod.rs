//! Growth exponents of computed spectra and ordering checks against bound curves.

use serde::{Deserialize, Serialize};

use crate::eigensolve::Spectrum;
use crate::error::{invalid, Error, Result};
use crate::quad::least_squares;
use crate::rates::{BoundCurve, Direction};

/// Fewest points a fit window may hold.
pub const MIN_FIT_POINTS: usize = 10;

/// Least-squares line through `(log n, log λ_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    /// Inclusive 1-based index window.
    pub window: (usize, usize),
    pub points: usize,
}

impl FitResult {
    pub fn to_csv(&self) -> String {
        format!(
            "slope,intercept,std_error,n0,n1,points\n{:?},{:?},{:?},{},{},{}\n",
            self.slope, self.intercept, self.std_error, self.window.0, self.window.1, self.points
        )
    }
}

/// Fits `log λ_n = slope · log n + intercept` over `n ∈ [n₀, n₁]`.
pub fn fit_exponent(spectrum: &Spectrum, window: (usize, usize)) -> Result<FitResult> {
    let (n0, n1) = window;
    if n0 == 0 || n1 <= n0 || n1 > spectrum.len() {
        return Err(invalid(format!("window [{n0}, {n1}] does not fit a spectrum of {} values", spectrum.len())));
    }
    let points = n1 - n0 + 1;
    if points < MIN_FIT_POINTS {
        return Err(Error::WindowTooSmall { points, required: MIN_FIT_POINTS });
    }
    let values = &spectrum.eigenvalues[n0 - 1..n1];
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("eigenvalues in the fit window must be positive"));
    }
    let x: Vec<f64> = (n0..=n1).map(|n| (n as f64).ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept, std_error) = least_squares(&x, &y);
    Ok(FitResult { slope, intercept, std_error, window, points })
}

/// Drops the first 15% of indices and every index whose eigenvalue is
/// within 10% of the grid's spectral ceiling.
pub fn default_window(spectrum: &Spectrum, ceiling: f64) -> (usize, usize) {
    let len = spectrum.len();
    let n0 = ((0.15 * len as f64).ceil() as usize).max(1);
    let n1 = spectrum.eigenvalues.iter().take_while(|v| **v < 0.9 * ceiling).count();
    (n0, n1)
}

/// `(min, max)` of `λ_n / n^e` over the window.
pub fn calibrate_constants(spectrum: &Spectrum, exponent: f64, window: (usize, usize)) -> Result<(f64, f64)> {
    let (n0, n1) = window;
    if spectrum.is_empty() || !(exponent > 0.0) {
        return Err(invalid("calibration needs a nonempty spectrum and a positive exponent"));
    }
    if n0 == 0 || n1 < n0 || n1 > spectrum.len() {
        return Err(invalid(format!("window [{n0}, {n1}] does not fit a spectrum of {} values", spectrum.len())));
    }
    Ok((n0..=n1)
        .map(|n| spectrum.eigenvalues[n - 1] / (n as f64).powf(exponent))
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r))))
}

/// One ordering failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub source: String,
    pub direction: Direction,
    pub n: usize,
    pub bound: f64,
    pub lambda: f64,
}

/// Outcome of checking curves against a spectrum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl ViolationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// CSV with columns `source,direction,n,bound,lambda`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,direction,n,bound,lambda\n");
        for v in &self.violations {
            let dir = match v.direction {
                Direction::Lower => "lower",
                Direction::Upper => "upper",
            };
            out.push_str(&format!("{},{dir},{},{:?},{:?}\n", v.source, v.n, v.bound, v.lambda));
        }
        out
    }

    pub fn summary(&self) -> String {
        if self.is_clean() {
            format!("{} comparisons, no ordering violations", self.checked)
        } else {
            format!("{} comparisons, {} ordering violations", self.checked, self.violations.len())
        }
    }
}

/// Flags every `n` where a lower curve exceeds `λ_n` or an upper curve falls below it.
pub fn compare_bounds(spectrum: &Spectrum, curves: &[BoundCurve]) -> Result<ViolationReport> {
    let mut report = ViolationReport::default();
    for curve in curves {
        let ns: Vec<usize> = (curve.min_n.max(1)..=spectrum.len()).collect();
        let values = curve.evaluate(&ns)?;
        for (&n, bound) in ns.iter().zip(values) {
            let lambda = spectrum.eigenvalues[n - 1];
            report.checked += 1;
            let bad = match curve.direction() {
                Direction::Lower => bound > lambda,
                Direction::Upper => bound < lambda,
            };
            if bad {
                report.violations.push(Violation {
                    source: curve.source.tag().to_string(),
                    direction: curve.direction(),
                    n,
                    bound,
                    lambda,
                });
            }
        }
    }
    Ok(report)
}
