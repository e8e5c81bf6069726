use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{json, Value};

use fracspec::asymptotics::{calibrate_constants, compare_bounds, default_window, fit_exponent, FitResult};
use fracspec::discretize::{MultiplierOperator, StiffnessMatrix};
use fracspec::eigensolve::{lanczos_lowest, LanczosOptions, Spectrum};
use fracspec::operators::{stable_symbol_constant, JumpKernel, Symbol};
use fracspec::rates::{power_exponent, BoundCurve, Direction, HeatTrace, RateProfile};
use fracspec::ritz::{build_basis, compute_ritz, scaling_slope, QuadratureSettings, RitzProblem};

use crate::config::{Constant, CurveSpec, Format, RunConfig, Side};
use crate::error::CliError;
use crate::store::{Artifact, Output, Store};

pub struct Context {
    pub config: RunConfig,
    pub store: Store,
    pub format: Format,
}

pub struct SpectrumRun {
    pub artifact: Artifact,
    pub spectrum: Spectrum,
}

pub struct FitRun {
    pub artifact: Artifact,
    pub fit: FitResult,
}

pub struct BoundsRun {
    pub artifact: Artifact,
    pub curves: Vec<BoundCurve>,
}

pub struct RitzRun {
    pub artifact: Artifact,
    /// `(basis size, ascending Ritz values)`.
    pub runs: Vec<(usize, Vec<f64>)>,
    pub slope: Option<f64>,
}

fn pretty(v: &Value) -> Vec<u8> {
    (serde_json::to_string_pretty(v).expect("json value serialises") + "\n").into_bytes()
}

fn inputs(pairs: &[(&str, &Artifact)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, a)| (k.to_string(), a.digest.clone())).collect()
}

fn bad_file(artifact: &Artifact, what: &str) -> CliError {
    CliError::CacheCorrupt { dir: artifact.dir.display().to_string(), reason: format!("cannot read {what}") }
}

/// Data rows of a CSV written by this tool, split on commas.
fn csv_rows(text: &str) -> Vec<Vec<&str>> {
    text.lines().skip(1).filter(|l| !l.is_empty()).map(|l| l.split(',').collect()).collect()
}

fn parse<T: std::str::FromStr>(artifact: &Artifact, field: &str) -> Result<T, CliError> {
    field.parse().map_err(|_| bad_file(artifact, &format!("field `{field}`")))
}

/// `θα/(d(θ+α))` when the problem has a stable order and a power potential.
fn predicted_exponent(c: &RunConfig) -> Option<f64> {
    Some(power_exponent(c.problem.dimension, c.theta().ok()?, c.order().ok()?))
}

fn solve(c: &RunConfig) -> Result<(Spectrum, Option<f64>), CliError> {
    let grid = c.grid()?;
    let p = &c.problem;
    let s = &c.solver;
    let opts = LanczosOptions::new(s.k).tol(s.tol).seed(s.seed).max_iter(s.max_iter);
    let multiplier = match (&p.symbol, &p.kernel) {
        (Some(symbol), _) => Some(MultiplierOperator::from_symbol(grid.clone(), symbol, 1.0, &p.potential)?),
        (_, Some(k @ JumpKernel::LevyStable { kappa, .. })) if kappa.is_infinite() => {
            Some(MultiplierOperator::from_kernel(grid.clone(), k, &p.potential)?)
        }
        _ => None,
    };
    if let Some(op) = multiplier {
        let ceiling = op.spectral_ceiling();
        return Ok((lanczos_lowest(&op, &opts)?, Some(ceiling)));
    }
    let kernel = p.kernel.as_ref().expect("validated: symbol or kernel");
    let op = StiffnessMatrix::assemble(grid, kernel, &p.potential)?;
    Ok((lanczos_lowest(&op, &opts)?, None))
}

pub fn spectrum(ctx: &Context) -> Result<SpectrumRun, CliError> {
    let c = &ctx.config;
    let key = json!({ "problem": c.problem, "grid": c.grid, "solver": c.solver, "format": ctx.format });
    let name = format!("spectrum.{}", ctx.format.extension());
    let artifact = ctx.store.run("spectrum", &key, &c.parameters(), BTreeMap::new(), |digest| {
        let (spectrum, ceiling) = solve(c)?;
        let spectrum = spectrum.with_digest(digest);
        let body = match ctx.format {
            Format::Csv => spectrum.to_csv().into_bytes(),
            Format::Json => pretty(&spectrum.to_json()),
        };
        let summary = json!({
            "eigenvalues": spectrum.len(),
            "iterations": spectrum.iterations,
            "solver": spectrum.solver,
            "seed": spectrum.seed,
            "tolerance": spectrum.tolerance,
            "spectral_ceiling": ceiling,
            "values_digest": spectrum.values_digest(),
        });
        Ok(Output { files: vec![(name.clone(), body)], summary })
    })?;
    let text = artifact.read(&name)?;
    let spectrum = match ctx.format {
        Format::Json => serde_json::from_str(&text).map_err(|_| bad_file(&artifact, &name))?,
        Format::Csv => {
            let mut eigenvalues = Vec::new();
            let mut residuals = Vec::new();
            for row in csv_rows(&text) {
                if row.len() != 3 {
                    return Err(bad_file(&artifact, &name));
                }
                eigenvalues.push(parse(&artifact, row[1])?);
                residuals.push(parse(&artifact, row[2])?);
            }
            let s = artifact.summary();
            Spectrum {
                eigenvalues,
                residuals,
                iterations: s["iterations"].as_u64().unwrap_or(0) as usize,
                solver: s["solver"].as_str().unwrap_or("lanczos").into(),
                seed: s["seed"].as_u64(),
                tolerance: s["tolerance"].as_f64().unwrap_or(f64::NAN),
                problem_digest: artifact.digest.clone(),
            }
        }
    };
    Ok(SpectrumRun { artifact, spectrum })
}

pub fn fit(ctx: &Context, spec: &SpectrumRun) -> Result<FitRun, CliError> {
    let c = &ctx.config;
    let key = json!({ "spectrum": spec.artifact.digest, "fit": c.fit, "format": ctx.format });
    let artifact = ctx.store.run("fit", &key, &c.parameters(), inputs(&[("spectrum", &spec.artifact)]), |_| {
        let ceiling = spec.artifact.summary()["spectral_ceiling"].as_f64().unwrap_or(f64::INFINITY);
        let window = match c.fit.window {
            Some([a, b]) => (a, b),
            None => default_window(&spec.spectrum, ceiling),
        };
        let fit = fit_exponent(&spec.spectrum, window)?;
        let predicted = predicted_exponent(c);
        let body = match ctx.format {
            Format::Csv => fit.to_csv().into_bytes(),
            Format::Json => pretty(&json!({ "fit": fit, "predicted": predicted })),
        };
        let summary = json!({ "fit": fit, "predicted": predicted });
        Ok(Output { files: vec![(format!("fit.{}", ctx.format.extension()), body)], summary })
    })?;
    let fit = serde_json::from_value(artifact.summary()["fit"].clone()).map_err(|_| bad_file(&artifact, "fit summary"))?;
    Ok(FitRun { artifact, fit })
}

/// Whether any curve takes its constants from the computed spectrum.
pub fn needs_calibration(c: &RunConfig) -> bool {
    c.bounds.curves.iter().any(|s| matches!(s, CurveSpec::Power { delta: Constant::Keyword(_), .. }))
}

fn curve_error(e: fracspec::Error) -> CliError {
    CliError::ConfigInvalid(format!("bounds: {e}"))
}

fn heat_trace(c: &RunConfig, window: (f64, f64)) -> Result<HeatTrace, CliError> {
    let p = &c.problem;
    let d = p.dimension;
    let (symbol, scale) = match (&p.symbol, &p.kernel) {
        (Some(s), _) => (s.clone(), 1.0),
        (_, Some(JumpKernel::LevyStable { alpha, kappa })) if kappa.is_infinite() => {
            (Symbol::IsotropicStable { alpha: *alpha }, 2.0 * stable_symbol_constant(d, *alpha))
        }
        _ => {
            return Err(CliError::ConfigInvalid(
                "bounds: heat_trace needs a symbol or an untruncated stable kernel".into(),
            ))
        }
    };
    HeatTrace::new(symbol, scale, p.potential.clone(), d, window).map_err(curve_error)
}

/// Builds the configured curves; `calibration` supplies the spectrum and
/// fit window for `"calibrate"` constants.
pub fn build_curves(c: &RunConfig, calibration: Option<(&Spectrum, &FitResult)>) -> Result<Vec<BoundCurve>, CliError> {
    let d = c.problem.dimension;
    let mut curves = Vec::new();
    for spec in &c.bounds.curves {
        match spec {
            CurveSpec::Power { delta, side } => {
                let (theta, alpha) = (c.theta()?, c.order()?);
                match delta {
                    Constant::Value(v) => {
                        let dir = match side {
                            Side::Lower => Direction::Lower,
                            Side::Upper => Direction::Upper,
                        };
                        curves.push(BoundCurve::power(d, theta, alpha, *v, dir).map_err(curve_error)?);
                    }
                    Constant::Keyword(_) => {
                        let (s, f) = calibration.expect("calibrated curves are built with a spectrum");
                        let e = power_exponent(d, theta, alpha);
                        let (lo, hi) = calibrate_constants(s, e, f.window)?;
                        // the constants only envelope the fit window, so start there
                        for (delta, dir) in [(lo, Direction::Lower), (hi, Direction::Upper)] {
                            let mut curve = BoundCurve::power(d, theta, alpha, delta, dir).map_err(curve_error)?;
                            curve.min_n = f.window.0;
                            curves.push(curve);
                        }
                    }
                }
            }
            CurveSpec::VariableOrder { delta, c_delta } => {
                let Some(JumpKernel::VariableOrder { alpha0, beta1, .. }) = &c.problem.kernel else {
                    return Err(CliError::ConfigInvalid("bounds: variable_order needs a variable-order kernel".into()));
                };
                let curve = BoundCurve::variable_order(d, c.theta()?, *alpha0, *beta1, *delta, *c_delta);
                curves.push(curve.map_err(curve_error)?);
            }
            CurveSpec::RateIntegral { reference, kappa, delta1, delta2 } => {
                reference.validate(d).map_err(curve_error)?;
                let v = &c.problem.potential;
                let profile = match (&c.problem.symbol, &c.problem.kernel) {
                    (Some(Symbol::IsotropicStable { alpha }), _) => {
                        RateProfile::constant_order(d, *alpha, v, reference.clone(), *kappa)
                    }
                    (_, Some(k)) => RateProfile::from_kernel(k, d, v, reference.clone(), *kappa),
                    _ => {
                        return Err(CliError::ConfigInvalid(
                            "bounds: rate_integral needs an isotropic symbol or a kernel".into(),
                        ))
                    }
                };
                curves.push(BoundCurve::rate_integral(profile.map_err(curve_error)?, *delta1, *delta2).map_err(curve_error)?);
            }
            CurveSpec::HeatTrace { t_lo, t_hi } => curves.push(BoundCurve::heat_trace(heat_trace(c, (*t_lo, *t_hi))?)),
        }
    }
    Ok(curves)
}

pub fn bounds(ctx: &Context, upstream: Option<(&SpectrumRun, &FitRun)>) -> Result<BoundsRun, CliError> {
    let c = &ctx.config;
    let curves = build_curves(c, upstream.map(|(s, f)| (&s.spectrum, &f.fit)))?;
    let n_max = c.bounds.n_max.unwrap_or(c.solver.k);
    let mut key = json!({ "problem": c.problem, "bounds": c.bounds, "n_max": n_max, "format": ctx.format });
    let mut recorded = BTreeMap::new();
    if let Some((s, f)) = upstream {
        key["calibration"] = json!({ "spectrum": s.artifact.digest, "fit": f.artifact.digest });
        recorded = inputs(&[("spectrum", &s.artifact), ("fit", &f.artifact)]);
    }
    let artifact = ctx.store.run("bounds", &key, &c.parameters(), recorded, |_| {
        let ns: Vec<usize> = (1..=n_max).collect();
        let body = match ctx.format {
            Format::Csv => {
                let mut out = String::from("n,bound,source,constants_digest\n");
                for curve in &curves {
                    out.extend(curve.to_csv(&ns)?.lines().skip(1).map(|l| format!("{l}\n")));
                }
                out.into_bytes()
            }
            Format::Json => {
                let all = curves.iter().map(|curve| curve.to_json(&ns)).collect::<fracspec::Result<Vec<_>>>()?;
                pretty(&json!({ "curves": all }))
            }
        };
        let summary: Vec<Value> = curves
            .iter()
            .map(|k| json!({ "source": k.source.tag(), "constants": k.constants, "constants_digest": k.constants_digest() }))
            .collect();
        Ok(Output { files: vec![(format!("bounds.{}", ctx.format.extension()), body)], summary: json!({ "curves": summary }) })
    })?;
    Ok(BoundsRun { artifact, curves })
}

fn ritz_problem(c: &RunConfig) -> RitzProblem {
    let potential = c.problem.potential.clone();
    match (&c.problem.symbol, &c.problem.kernel) {
        (Some(symbol), _) => RitzProblem::Symbol { symbol: symbol.clone(), potential },
        (_, Some(kernel)) => RitzProblem::Kernel { kernel: kernel.clone(), potential },
        _ => unreachable!("validated: symbol or kernel"),
    }
}

pub fn ritz(ctx: &Context) -> Result<RitzRun, CliError> {
    let c = &ctx.config;
    let key = json!({ "problem": c.problem, "ritz": c.ritz, "format": ctx.format });
    let artifact = ctx.store.run("ritz", &key, &c.parameters(), BTreeMap::new(), |_| {
        let d = c.problem.dimension;
        let (theta, alpha) = (c.problem.potential.lower_exponent(), c.order()?);
        let settings = QuadratureSettings { rel_tol: c.ritz.rel_tol, max_cutoff: c.ritz.max_cutoff, ..Default::default() };
        let problem = ritz_problem(c);
        let mut results = Vec::new();
        for &n in &c.ritz.n_list {
            results.push(compute_ritz(&build_basis(n, d, theta, alpha)?, &problem, &settings)?);
        }
        let maxima: Vec<f64> = results.iter().map(|r| r.max_value()).collect();
        let slope = if maxima.len() >= 2 { Some(scaling_slope(&c.ritz.n_list, &maxima)?) } else { None };
        let route = results[0].route;
        let files = match ctx.format {
            Format::Csv => {
                let mut values = String::from("basis_size,j,mu\n");
                let mut scaling = String::from("basis_size,mu_max\n");
                for (n, r) in c.ritz.n_list.iter().zip(&results) {
                    for (j, mu) in r.spectrum.eigenvalues.iter().enumerate() {
                        let _ = writeln!(values, "{n},{},{mu:?}", j + 1);
                    }
                    let _ = writeln!(scaling, "{n},{:?}", r.max_value());
                }
                vec![("ritz.csv".to_string(), values.into_bytes()), ("ritz_scaling.csv".to_string(), scaling.into_bytes())]
            }
            Format::Json => {
                let runs: Vec<Value> = c
                    .ritz
                    .n_list
                    .iter()
                    .zip(&results)
                    .map(|(n, r)| json!({ "basis_size": n, "values": r.spectrum.eigenvalues, "knots": r.basis.knots }))
                    .collect();
                let body = json!({
                    "route": route,
                    "settings": settings,
                    "runs": runs,
                    "scaling": { "basis_size": c.ritz.n_list, "mu_max": maxima, "slope": slope },
                });
                vec![("ritz.json".to_string(), pretty(&body))]
            }
        };
        let summary = json!({ "route": route, "slope": slope, "mu_max": maxima, "predicted": predicted_exponent(c) });
        Ok(Output { files, summary })
    })?;
    let slope = artifact.summary()["slope"].as_f64();
    let mut runs: Vec<(usize, Vec<f64>)> = Vec::new();
    match ctx.format {
        Format::Csv => {
            let text = artifact.read("ritz.csv")?;
            for row in csv_rows(&text) {
                if row.len() != 3 {
                    return Err(bad_file(&artifact, "ritz.csv"));
                }
                let n: usize = parse(&artifact, row[0])?;
                let mu: f64 = parse(&artifact, row[2])?;
                match runs.last_mut() {
                    Some((m, values)) if *m == n => values.push(mu),
                    _ => runs.push((n, vec![mu])),
                }
            }
        }
        Format::Json => {
            let body: Value = serde_json::from_str(&artifact.read("ritz.json")?).map_err(|_| bad_file(&artifact, "ritz.json"))?;
            for run in body["runs"].as_array().ok_or_else(|| bad_file(&artifact, "ritz.json"))? {
                let n = run["basis_size"].as_u64().ok_or_else(|| bad_file(&artifact, "ritz.json"))? as usize;
                let values = serde_json::from_value(run["values"].clone()).map_err(|_| bad_file(&artifact, "ritz.json"))?;
                runs.push((n, values));
            }
        }
    }
    Ok(RitzRun { artifact, runs, slope })
}

/// Number of leading eigenvalues compared against Ritz values.
const DOMINATION_DEPTH: usize = 10;

struct DominationRow {
    basis_size: usize,
    j: usize,
    mu: f64,
    lambda: f64,
    ok: bool,
}

/// Runs every stage and writes the comparison. Returns the report together
/// with the failed ordering, domination and slope checks.
pub fn report(ctx: &Context) -> Result<(Artifact, Vec<String>), CliError> {
    let c = &ctx.config;
    let spec = spectrum(ctx)?;
    let fitted = fit(ctx, &spec)?;
    let calibration = needs_calibration(c).then_some((&spec, &fitted));
    let bound_run = bounds(ctx, calibration)?;
    let ritz_run = ritz(ctx)?;
    let key = json!({ "parameters": c.parameters(), "format": ctx.format });
    let recorded = inputs(&[
        ("spectrum", &spec.artifact),
        ("fit", &fitted.artifact),
        ("bounds", &bound_run.artifact),
        ("ritz", &ritz_run.artifact),
    ]);
    let artifact = ctx.store.run("report", &key, &c.parameters(), recorded, |digest| {
        let lambda = &spec.spectrum.eigenvalues;
        let mut ordering = Vec::new();
        let mut violations = Vec::new();
        for curve in &bound_run.curves {
            let r = compare_bounds(&spec.spectrum, std::slice::from_ref(curve))?;
            ordering.push((curve.source.tag(), curve.direction(), curve.constants_digest(), r.checked, r.violations.len()));
            violations.extend(r.violations);
        }
        let floor = 1.0 - c.ritz.domination_tol;
        let rows: Vec<DominationRow> = ritz_run
            .runs
            .iter()
            .flat_map(|(n, mu)| {
                mu.iter().zip(lambda).take(DOMINATION_DEPTH).enumerate().map(move |(j, (&mu, &lambda))| DominationRow {
                    basis_size: *n,
                    j: j + 1,
                    mu,
                    lambda,
                    ok: mu >= floor * lambda,
                })
            })
            .collect();
        let predicted = predicted_exponent(c);
        let fit = &fitted.fit;
        let mut failures = Vec::new();
        if !violations.is_empty() {
            failures.push(format!("{} bound ordering violations", violations.len()));
        }
        let undominated = rows.iter().filter(|r| !r.ok).count();
        if undominated > 0 {
            failures.push(format!("{undominated} Ritz values below (1 − {}) λ_j", c.ritz.domination_tol));
        }
        if let Some(e) = c.fit.expect {
            if (fit.slope - e).abs() > c.fit.tolerance {
                failures.push(format!("fit slope {:.4} outside {e} ± {}", fit.slope, c.fit.tolerance));
            }
        }

        let mut text = String::new();
        let _ = writeln!(text, "fracspec report {}", &digest[..12]);
        let _ = writeln!(
            text,
            "spectrum: {} eigenvalues, lambda_1 = {:.6}, lambda_{} = {:.6} ({})",
            lambda.len(),
            lambda[0],
            lambda.len(),
            lambda[lambda.len() - 1],
            spec.spectrum.solver
        );
        let _ = write!(
            text,
            "fit: slope {:.4} ± {:.4} over n in [{}, {}]",
            fit.slope, fit.std_error, fit.window.0, fit.window.1
        );
        match predicted {
            Some(p) => {
                let _ = writeln!(text, ", predicted {p:.4}");
            }
            None => text.push('\n'),
        }
        let _ = writeln!(text, "\nbound ordering:");
        let _ = writeln!(text, "  {:<22} {:<9} {:>8} {:>10}", "source", "direction", "checked", "violations");
        for (source, dir, _, checked, bad) in &ordering {
            let dir = if *dir == Direction::Lower { "lower" } else { "upper" };
            let _ = writeln!(text, "  {source:<22} {dir:<9} {checked:>8} {bad:>10}");
        }
        if ordering.is_empty() {
            let _ = writeln!(text, "  (no curves configured)");
        }
        let _ = writeln!(text, "\nritz domination (mu_j >= {floor} lambda_j, j <= {DOMINATION_DEPTH}):");
        let _ = writeln!(text, "  {:>10} {:>3} {:>14} {:>14} {:>8}", "basis_size", "j", "mu", "lambda", "ratio");
        for r in &rows {
            let mark = if r.ok { "" } else { "  below" };
            let _ = writeln!(
                text,
                "  {:>10} {:>3} {:>14.6} {:>14.6} {:>8.4}{mark}",
                r.basis_size,
                r.j,
                r.mu,
                r.lambda,
                r.mu / r.lambda
            );
        }
        if let Some(s) = ritz_run.slope {
            let sizes: Vec<usize> = ritz_run.runs.iter().map(|(n, _)| *n).collect();
            let _ = writeln!(text, "ritz scaling: slope of log mu_max vs log n = {s:.4} over basis sizes {sizes:?}");
        }
        let _ = writeln!(text, "\nchecks: {}", if failures.is_empty() { "passed".to_string() } else { failures.join("; ") });

        let mut files = vec![("report.txt".to_string(), text.into_bytes())];
        match ctx.format {
            Format::Csv => {
                let mut table = String::from("source,direction,constants_digest,checked,violations\n");
                for (source, dir, digest, checked, bad) in &ordering {
                    let dir = if *dir == Direction::Lower { "lower" } else { "upper" };
                    let _ = writeln!(table, "{source},{dir},{digest},{checked},{bad}");
                }
                let mut dom = String::from("basis_size,j,mu,lambda,dominates\n");
                for r in &rows {
                    let _ = writeln!(dom, "{},{},{:?},{:?},{}", r.basis_size, r.j, r.mu, r.lambda, r.ok);
                }
                let report = fracspec::asymptotics::ViolationReport { checked: 0, violations: violations.clone() };
                files.push(("ordering.csv".into(), table.into_bytes()));
                files.push(("violations.csv".into(), report.to_csv().into_bytes()));
                files.push(("domination.csv".into(), dom.into_bytes()));
            }
            Format::Json => {
                let body = json!({
                    "fit": fit,
                    "predicted": predicted,
                    "ordering": ordering.iter().map(|(s, d, g, c, v)| json!({
                        "source": s, "direction": d, "constants_digest": g, "checked": c, "violations": v,
                    })).collect::<Vec<_>>(),
                    "violations": violations,
                    "domination": rows.iter().map(|r| json!({
                        "basis_size": r.basis_size, "j": r.j, "mu": r.mu, "lambda": r.lambda, "dominates": r.ok,
                    })).collect::<Vec<_>>(),
                    "ritz_slope": ritz_run.slope,
                    "failures": failures,
                });
                files.push(("report.json".into(), pretty(&body)));
            }
        }
        let summary = json!({
            "fit_slope": fit.slope,
            "predicted": predicted,
            "violations": violations.len(),
            "undominated": undominated,
            "ritz_slope": ritz_run.slope,
            "failures": failures,
        });
        Ok(Output { files, summary })
    })?;
    let failures = serde_json::from_value(artifact.summary()["failures"].clone())
        .map_err(|_| bad_file(&artifact, "report summary"))?;
    Ok((artifact, failures))
}
