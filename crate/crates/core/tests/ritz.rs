use fracspec::discretize::{BoxGrid, MultiplierOperator};
use fracspec::eigensolve::{lanczos_lowest, LanczosOptions};
use fracspec::operators::{stable_symbol_constant, JumpKernel, Potential, Symbol};
use fracspec::quad::adaptive;
use fracspec::ritz::{
    build_basis, compute_ritz, correlation_form, form_matrix, ritz_values, scaling_slope, FormRoute,
    QuadratureSettings, RitzProblem, TrialBasis,
};

fn oscillator(alpha: f64, theta: f64) -> RitzProblem {
    RitzProblem::Symbol { symbol: Symbol::IsotropicStable { alpha }, potential: Potential::Power { c: 1.0, theta } }
}

#[test]
fn knots_follow_the_power_law() {
    let b = build_basis(5, 1, 2.0, 1.0).unwrap();
    assert_eq!(b.knot(1), 1.0);
    assert!((b.knot(2) - 1.259921).abs() < 1e-6);
    assert!(b.knots.windows(2).all(|w| w[1] > w[0]));
    let (lo, hi) = TrialBasis::spacing_band(2.0, 1.0, 10_000);
    assert!(lo > 0.2 && hi < 0.5, "({lo}, {hi})");
}

#[test]
fn norms_match_quadrature() {
    let b = build_basis(4, 2, 2.0, 1.0).unwrap();
    for i in 0..b.len() {
        let f = b.function(i);
        let axis = |t: &fracspec::ritz::Tent| {
            adaptive(|s| t.eval(s).powi(2), t.a, t.center(), 0.0, 1e-15, 100).value
                + adaptive(|s| t.eval(s).powi(2), t.center(), t.b, 0.0, 1e-15, 100).value
        };
        let q = axis(&f[0]) * axis(&f[1]);
        assert!((q - b.norm(i)).abs() < 1e-12 * q);
    }
}

#[test]
fn distinct_trial_functions_are_orthogonal() {
    let b = build_basis(4, 1, 2.0, 1.0).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                let q = adaptive(|x| b.eval(i, &[x]) * b.eval(j, &[x]), 0.5, 3.0, 0.0, 1e-14, 1000).value;
                assert!(q.abs() < 1e-15);
            }
        }
    }
}

#[test]
fn form_matrix_is_symmetric_and_single_function_gives_rayleigh_quotient() {
    let b = build_basis(6, 1, 2.0, 1.0).unwrap();
    let f = form_matrix(&b, &oscillator(1.0, 2.0), &QuadratureSettings::default()).unwrap();
    assert_eq!(f.route, FormRoute::Frequency);
    assert!((&f.matrix - f.matrix.transpose()).amax() < 1e-10);
    let one = build_basis(1, 1, 2.0, 1.0).unwrap();
    let f1 = form_matrix(&one, &oscillator(1.0, 2.0), &QuadratureSettings::default()).unwrap();
    let mu = ritz_values(&f1.matrix, &f1.norms).unwrap();
    assert!((mu.eigenvalues[0] - f1.matrix[(0, 0)] / f1.norms[0]).abs() < 1e-12 * mu.eigenvalues[0]);
}

#[test]
fn potential_part_is_bounded_by_the_outer_knot() {
    let (theta, alpha) = (2.0, 1.0);
    for n in [4, 8, 16, 32] {
        let b = build_basis(n, 1, theta, alpha).unwrap();
        let only_v = RitzProblem::Kernel {
            kernel: JumpKernel::LevyStable { alpha, kappa: 1e-9 },
            potential: Potential::Power { c: 1.0, theta },
        };
        let f = form_matrix(&b, &only_v, &QuadratureSettings::default()).unwrap();
        let top = b.knot(n + 1).powf(theta);
        for k in 0..n {
            let ratio = f.matrix[(k, k)] / (f.norms[k] * top);
            assert!(ratio > 0.0 && ratio <= 1.0, "n={n} k={k}: {ratio}");
        }
    }
}

#[test]
fn diagonal_form_grows_like_the_predicted_power() {
    let (theta, alpha) = (2.0, 1.0);
    let e = theta * alpha / (theta + alpha);
    let mut ratios = Vec::new();
    for n in [4, 8, 16, 32] {
        let b = build_basis(n, 1, theta, alpha).unwrap();
        let f = form_matrix(&b, &oscillator(alpha, theta), &QuadratureSettings::default()).unwrap();
        let worst = (0..n).map(|k| f.matrix[(k, k)] / (f.norms[k] * (n as f64).powf(e))).fold(0.0, f64::max);
        ratios.push(worst);
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
    assert!(hi / lo < 3.0, "{ratios:?}");
}

#[test]
fn separated_functions_interact_only_through_the_tail() {
    let (theta, alpha) = (2.0, 1.0);
    let n = 16;
    let b = build_basis(n, 1, theta, alpha).unwrap();
    let kernel = JumpKernel::LevyStable { alpha, kappa: f64::INFINITY };
    let problem = RitzProblem::Kernel { kernel: kernel.clone(), potential: Potential::Power { c: 1.0, theta } };
    let f = form_matrix(&b, &problem, &QuadratureSettings::default()).unwrap();
    for i in 0..n {
        for j in i + 2..n {
            let gap = b.knot(j + 1) - b.knot(i + 2);
            let bound = 4.0 * kernel.tail_mass(gap, 1).unwrap() * (f.norms[i] * f.norms[j]).sqrt();
            assert!(f.matrix[(i, j)].abs() <= bound, "({i}, {j})");
        }
    }
}

#[test]
fn ritz_values_dominate_grid_eigenvalues() {
    let (theta, alpha) = (2.0, 1.0);
    let b = build_basis(16, 1, theta, alpha).unwrap();
    let r = compute_ritz(&b, &oscillator(alpha, theta), &QuadratureSettings::default()).unwrap();
    let grid = BoxGrid::new(1, 20.0, 2048).unwrap();
    let h = MultiplierOperator::from_symbol(grid, &Symbol::IsotropicStable { alpha }, 1.0, &Potential::Power { c: 1.0, theta })
        .unwrap();
    let reference = lanczos_lowest(&h, &LanczosOptions::new(10)).unwrap();
    for (mu, lambda) in r.spectrum.eigenvalues.iter().zip(&reference.eigenvalues) {
        assert!(*mu >= lambda * 0.99, "{mu} < {lambda}");
    }
    assert!(r.spectrum.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(r.to_json()["source"], "ritz");
}

#[test]
fn synthetic_scaling_slopes() {
    let ns = [4, 8, 16, 32];
    let mu: Vec<f64> = ns.iter().map(|&n| (n as f64).powf(2.0 / 3.0)).collect();
    assert!((scaling_slope(&ns, &mu).unwrap() - 2.0 / 3.0).abs() < 1e-12);
    let scaled: Vec<f64> = mu.iter().map(|v| 7.5 * v).collect();
    assert!((scaling_slope(&ns, &scaled).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

/// `(2π)^{−2} ∫ |ξ|^α T₁(ξ₁)² T₂(ξ₂)² dξ` in polar coordinates, over one quadrant times four.
fn fourier_diagonal_2d(alpha: f64, t: [fracspec::ritz::Tent; 2]) -> f64 {
    let radial = |phi: f64| {
        let (c, s) = (phi.cos(), phi.sin());
        let f = |r: f64| {
            r.powf(1.0 + alpha) * (t[0].transform_amplitude(r * c) * t[1].transform_amplitude(r * s)).powi(2)
        };
        adaptive(f, 0.0, 4000.0, 0.0, 1e-9, 20000).value
    };
    4.0 * adaptive(radial, 0.0, 0.5 * std::f64::consts::PI, 0.0, 1e-7, 2000).value
        / (4.0 * std::f64::consts::PI.powi(2))
}

#[test]
fn planar_correlation_route_matches_fourier_side() {
    let alpha = 0.5;
    let b = build_basis(3, 2, 2.0, alpha).unwrap();
    let f = b.function(4);
    let amp = 0.5 / stable_symbol_constant(2, alpha);
    let got = correlation_form(&f, &f, alpha, amp, f64::INFINITY, &QuadratureSettings::default());
    let want = fourier_diagonal_2d(alpha, [f[0], f[1]]);
    assert!((got - want).abs() < 2e-4 * want, "{got} vs {want}");
}

#[test]
fn planar_ritz_values_are_sorted_and_positive() {
    let b = build_basis(3, 2, 2.0, 1.0).unwrap();
    let r = compute_ritz(&b, &oscillator(1.0, 2.0), &QuadratureSettings::default()).unwrap();
    assert_eq!(r.route, FormRoute::Correlation);
    assert_eq!(r.spectrum.len(), 9);
    assert!(r.spectrum.eigenvalues[0] > 0.0);
}

#[test]
fn variable_order_uses_direct_route() {
    let b = build_basis(4, 1, 2.0, 1.0).unwrap();
    let problem = RitzProblem::Kernel {
        kernel: JumpKernel::VariableOrder { alpha0: 0.8, beta1: 0.3, beta2: 3.0, kappa: 4.0 },
        potential: Potential::Power { c: 1.0, theta: 2.0 },
    };
    let r = compute_ritz(&b, &problem, &QuadratureSettings::default()).unwrap();
    assert_eq!(r.route, FormRoute::Direct);
    assert!(r.spectrum.eigenvalues.iter().all(|v| *v > 0.0));
}
