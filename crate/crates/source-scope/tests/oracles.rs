// SPDX-License-Identifier: Apache-2.0

//! Frozen reference values from independent computations.
//!
//! The detector values for the three-intake reference experiment were
//! computed in 30-digit arithmetic (mpmath) directly from the mild solution
//! `⟨u(t), g⟩ = Σ_j ⟨h_j, g⟩ (e^{t - t_j} - e^{-ρ_j (t - t_j)}) / (1 + ρ_j)`
//! with adaptive quadrature for every time integral, sharing no code with the
//! crate. The remaining values are closed forms.

use std::f64::consts::PI;
use std::path::Path;

use approx::assert_relative_eq;
use num_complex::Complex64;
use source_scope::bounds::{
    bound_case_props, bound_thm1_coeff, bound_thm2_coeff, bound_thm2_rate, interval_index, ratio_gap,
    ratio_gap_limit, v_k, BoundInputs, CaseBound,
};
use source_scope::detect_alg2::{coefficient_factor, lipschitz_local, prony_rate_limit_check};
use source_scope::dynamics::{background_convolution, response_factor, BackgroundKind, ConvolutionQuadrature};
use source_scope::exec::Execution;
use source_scope::experiment::figures::ideal_variant;
use source_scope::experiment::{load_scenario, run_scenario, RunOptions, Scenario};
use source_scope::hilbert::{inner, GaussLegendre, Grid, GridFunction, Quadrature};
use source_scope::sampling::laplace_s;

fn reference_ideal(fine_steps: usize) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/paper_fig1_sinusoid.scenario");
    let mut s = ideal_variant(&load_scenario(&path).expect("scenario"));
    s.measurement.fine_steps = fine_steps;
    s
}

const RATES: [f64; 3] = [1.0, 2.0, 3.0];

/// `⟨h_j, g_i⟩` for sensors `1, x, x²` (rows) and the three contents.
const PROJECTIONS: [[f64; 3]; 3] = [
    [1.3790930823955808, 2.1036774620197413, 2.5],
    [0.90350603681927037, 0.95443322669009056, 1.3333333333333333],
    [0.66973282645179819, 0.59783406732095732, 0.91666666666666667],
];

/// Threshold detector coefficients `𝔪_{i+1} - 𝔪_{i-2}` per sensor and intake.
const ALG1_COEFFS: [[f64; 3]; 3] = [
    [1.3585667219700415, 2.0373485714041979, 2.3882065359153027],
    [0.89005829293951151, 0.92349593892136164, 1.2737697578284678],
    [0.65976455269272387, 0.57814034091675472, 0.87574067580398486],
];

/// Unclamped threshold-detector rate ratios on sensor `x²` for `N = 10, 100`.
const ALG1_RATIO: [[f64; 3]; 2] = [
    [0.99949238378633253, 2.0019223477940659, 2.9968884689788201],
    [0.99994923861123008, 2.0033596564443727, 3.0005516547727536],
];

/// Unclamped Prony–Laplace rate ratios per sensor and intake.
const ALG2_RATIO: [[f64; 3]; 3] = [
    [0.99501662508319464, 2.0513961126781805, 2.9830556033120223],
    [0.99501662508319464, 2.0831320541431973, 2.9814452839610236],
    [0.99501662508319464, 2.1020897090011225, 2.9804989657733483],
];

/// Prony–Laplace coefficients (each sensor with its own clamped rate).
const ALG2_COEFFS: [[f64; 3]; 3] = [
    [1.3789900378973985, 2.1009779052292847, 2.4974027824161137],
    [0.9034385277240851, 0.95279113731251777, 1.3319783445756465],
    [0.66968278466426482, 0.59664964799801246, 0.91574719059933506],
];

#[test]
fn reference_projections_match() {
    let s = reference_ideal(100);
    let built = s.build().expect("build");
    for (i, g) in built.sensors.iter().enumerate() {
        for (j, c) in built.model.catalysts.iter().enumerate() {
            assert_relative_eq!(inner(&c.h, g).unwrap(), PROJECTIONS[i][j], max_relative = 1e-13);
        }
    }
}

#[test]
fn threshold_detector_matches_exact_solution() {
    for (row, n) in [10usize, 100].into_iter().enumerate() {
        let s = reference_ideal(n);
        let opts = RunOptions { seed: None, algorithm: None, exec: Execution::Sequential };
        let report = run_scenario(&s, opts).expect("run");
        let events = &report.alg1.as_ref().expect("alg1").events;
        assert_eq!(events.len(), 3);
        for (j, e) in events.iter().enumerate() {
            assert_eq!(e.chosen_sensor, Some(2));
            assert_relative_eq!(e.rho_ratio.unwrap(), ALG1_RATIO[row][j], max_relative = 1e-7);
            let clamped = ALG1_RATIO[row][j].clamp(0.5, 3.0);
            assert_relative_eq!(e.rho_hat.unwrap(), clamped, max_relative = 1e-7);
            for i in 0..3 {
                assert_relative_eq!(e.coeff(i), ALG1_COEFFS[i][j], max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn prony_laplace_detector_matches_exact_solution() {
    let s = reference_ideal(100);
    let opts = RunOptions { seed: None, algorithm: None, exec: Execution::Sequential };
    let report = run_scenario(&s, opts).expect("run");
    let events = &report.alg2.as_ref().expect("alg2").events;
    assert_eq!(events.len(), 3);
    for (j, e) in events.iter().enumerate() {
        assert_eq!(e.rate_sensor, Some(0));
        for c in &e.coeffs {
            let i = c.sensor_id;
            assert!(c.passed_gate);
            assert_relative_eq!(c.rate_raw.unwrap(), ALG2_RATIO[i][j], max_relative = 1e-8);
            assert_relative_eq!(c.coeff, ALG2_COEFFS[i][j], max_relative = 1e-8);
        }
        let relative = (e.rho_tilde.unwrap() - RATES[j]).abs() / RATES[j];
        let expected = (ALG2_RATIO[0][j] - RATES[j]).abs() / RATES[j];
        assert_relative_eq!(relative, expected, max_relative = 1e-6);
    }
}

#[test]
fn ideal_reference_rate_errors() {
    // The first two agree with the published ideal errors 0.50% and 2.57%.
    let errs: Vec<f64> = (0..3).map(|j| (ALG2_RATIO[0][j] - RATES[j]).abs() / RATES[j]).collect();
    assert!((errs[0] - 0.0050).abs() < 5e-5);
    assert!((errs[1] - 0.0257).abs() < 5e-5);
    assert!((errs[2] - 0.00565).abs() < 5e-5);
}

#[test]
fn gauss_legendre_is_exact_for_polynomials() {
    for n in [1usize, 2, 5, 8, 16, 32] {
        let gl = GaussLegendre::new(n).unwrap();
        for p in 0..2 * n {
            let exact = (3f64.powi(p as i32 + 1) - (-1f64).powi(p as i32 + 1)) / (p as f64 + 1.0);
            let got = gl.integrate(-1.0, 3.0, |x| x.powi(p as i32));
            assert_relative_eq!(got, exact, max_relative = 1e-12, epsilon = 1e-12);
        }
    }
}

#[test]
fn inner_products_of_catalog_functions() {
    let grid = Grid::new(Quadrature::gauss_legendre(32, 8)).unwrap();
    let grid = std::sync::Arc::new(grid);
    let sin = GridFunction::from_fn(&grid, f64::sin).unwrap();
    let x2 = GridFunction::from_fn(&grid, |x| x * x).unwrap();
    let one = GridFunction::constant(&grid, 1.0);
    // ∫ x² sin x = 2 sin 1 + cos 1 - 2
    assert_relative_eq!(inner(&sin, &x2).unwrap(), 2.0 * 1f64.sin() + 1f64.cos() - 2.0, max_relative = 1e-14);
    assert_relative_eq!(x2.norm(), 1.0 / 5f64.sqrt(), max_relative = 1e-14);
    assert_relative_eq!(inner(&one, &sin).unwrap(), 1.0 - 1f64.cos(), max_relative = 1e-14);
    let trap = std::sync::Arc::new(Grid::new(Quadrature::trapezoid(1000)).unwrap());
    let x = GridFunction::from_fn(&trap, |x| x).unwrap();
    assert_relative_eq!(x.norm().powi(2), 1.0 / 3.0 + 1.0 / 6e6, max_relative = 1e-12);
}

#[test]
fn catalyst_response_closed_form() {
    // ∫_0^τ e^{a(τ-s)} e^{-ρs} ds
    for &(a, rho, tau) in &[(1.0f64, 2.0, 0.7), (-0.5, 0.5, 3.0), (-2.0, 2.0, 1.5), (0.0, 1.0, 2.0)] {
        let expected = if (a + rho) == 0.0 {
            tau * (-rho * tau).exp()
        } else {
            ((a * tau).exp() - (-rho * tau).exp()) / (a + rho)
        };
        assert_relative_eq!(response_factor(a, rho, tau), expected, max_relative = 1e-13);
    }
    assert_eq!(response_factor(1.0, 1.0, -1.0), 0.0);
}

#[test]
fn background_convolution_closed_forms() {
    let grid = Grid::standard();
    let profile = GridFunction::constant(&grid, 1.0);
    let q = ConvolutionQuadrature::default();
    let (a, l, t) = (1.0f64, 0.3f64, 4.2f64);
    let exp = source_scope::dynamics::BackgroundSource { kind: BackgroundKind::ExpDecay, lipschitz: l, profile: profile.clone() };
    // ∫_0^t e^{a(t-s)} e^{-Ls} ds
    let expected = ((a * t).exp() - (-l * t).exp()) / (a + l);
    assert_relative_eq!(background_convolution(&exp, a, t, &q).unwrap(), expected, max_relative = 1e-12);
    let sin = source_scope::dynamics::BackgroundSource { kind: BackgroundKind::Sinusoid, lipschitz: l, profile };
    // ∫_0^t e^{a(t-s)} sin(Ls) ds
    let expected = (l * (a * t).exp() - a * (l * t).sin() - l * (l * t).cos()) / (a * a + l * l);
    assert_relative_eq!(background_convolution(&sin, a, t, &q).unwrap(), expected, max_relative = 1e-12);
}

#[test]
fn laplace_rate_identity() {
    // For an intake on a step boundary the ideal ratio is (1 - e^{-ρβ})/β.
    for &(rho, beta) in &[(1.0, 0.01), (2.5, 0.05), (0.7, 0.2)] {
        let got = prony_rate_limit_check(rho, 3.0 * beta, 3, beta, 1);
        assert_relative_eq!(got, (1.0 - (-rho * beta).exp()) / beta, max_relative = 1e-10);
    }
    // The coefficient factor inverts the single-intake Laplace difference.
    let (rho, beta) = (1.7, 0.02);
    let s = laplace_s(1, beta);
    let diff = s * ((-2.0 * rho * beta).exp() - (-rho * beta).exp()) / (rho * (rho + s) * beta * beta);
    let f = coefficient_factor(rho, s, beta) * diff;
    assert_relative_eq!(f.re, 1.0, max_relative = 1e-13);
    assert!(f.im.abs() < 1e-13);
    assert_eq!(s, Complex64::new(0.0, 2.0 * PI / beta));
}

fn inputs(beta: f64, sigma: f64) -> BoundInputs {
    BoundInputs {
        beta,
        sigma,
        lipschitz: 0.01,
        lipschitz_local: 0.05,
        mass_bound: 3.0,
        sensor_bound: 1.0,
        separation: 2.0,
        rho_lo: 0.5,
        rho_hi: 3.0,
        g_norm: 0.6,
        ..BoundInputs::default()
    }
}

#[test]
fn threshold_coefficient_bound_tends_to_eight_sigma() {
    // With K = 1 every β-dependent term vanishes, leaving Q̃ + 2σ + 2Q → 8σ.
    let sigma = 1e-3;
    let b = inputs(1e-12, sigma);
    assert_relative_eq!(bound_thm1_coeff(&b), 8.0 * sigma, max_relative = 1e-6);
    let b = inputs(1e-3, sigma);
    assert!(bound_thm1_coeff(&b) > 8.0 * sigma);
}

#[test]
fn prony_laplace_bound_at_exact_rate() {
    // δ = 0: H‖g‖(e^{ρ̂β} - 1) + 2√2 β e^{3ρ̂β}(‖g‖(12L_ℓ/π + Hρ̂) + 6σ)
    let b = inputs(0.01, 1e-3);
    let expected = 3.0 * 0.6 * (0.03f64).exp_m1()
        + 2.0 * 2f64.sqrt() * 0.01 * (0.09f64).exp() * (0.6 * (12.0 / PI * 0.05 + 9.0) + 6e-3);
    assert_relative_eq!(bound_thm2_coeff(&b), expected, max_relative = 1e-14);
}

#[test]
fn prony_laplace_rate_bound_value() {
    let mut b = inputs(0.01, 1e-3);
    b.m_g = 2.0;
    let expected =
        (4.0 / PI * 0.05 * 0.6 * 1.09 + 4e-3 * 1.03) / 2.0 + 3.0 - (1.0 - (-0.03f64).exp()) / 0.01;
    assert_relative_eq!(bound_thm2_rate(&b).unwrap(), expected, max_relative = 1e-12);
    b.m_g = 1e-3;
    assert!(bound_thm2_rate(&b).is_err());
}

#[test]
fn case_bound_values() {
    let b = inputs(0.01, 1e-3);
    let expected = 8.0 * 2f64.sqrt() * 0.01 * (0.09f64).exp() * (3.0 / PI * 0.05 * 0.6 + 1e-3);
    assert_relative_eq!(bound_case_props(&b, CaseBound::CoeffZero), expected, max_relative = 1e-14);
    let expected = 2.0 * 2f64.sqrt() * 0.01 * (0.06f64).exp() * (0.6 * (8.0 / PI * 0.01 + 9.0) + 12e-3);
    assert_relative_eq!(bound_case_props(&b, CaseBound::NoRecovery), expected, max_relative = 1e-14);
}

#[test]
fn v_k_closed_form() {
    // Intake at 0.253 inside step 25 of β = 0.01.
    let (hg, rho, t, beta) = (-2.0, 1.5, 0.253, 0.01);
    let n = interval_index(t, beta);
    assert_eq!(n, 25);
    let avg = (1.0 - (-rho * beta).exp()) / (rho * beta);
    for k in [1, 2] {
        let lag = (n + k) as f64 * beta - t;
        assert_relative_eq!(v_k(hg, rho, t, n, k, beta), 2.0 * (1.0 - (-rho * lag).exp() * avg), max_relative = 1e-12);
    }
}

#[test]
fn interval_index_respects_float_boundaries() {
    assert_eq!(interval_index(2.54, 0.01), 254);
    assert_eq!(interval_index(4.78, 0.01), 478);
    assert_eq!(interval_index(0.0, 0.01), 0);
    assert_eq!(interval_index(0.3, 0.1), 2);
}

#[test]
fn ratio_gap_limits() {
    for &(a, beta) in &[(2.0, 0.1), (-0.5, 1.0), (0.5, 0.01)] {
        assert_relative_eq!(ratio_gap(a, beta, 1e9), ratio_gap_limit(a, beta), max_relative = 1e-6);
        assert!(ratio_gap(a, beta, 1e4) <= (a.abs() * beta).exp() - 1.0);
    }
    // f(x) = (e^{βx} - 1)/x: g_1(1) = |1 - f(1)/f(2)|
    let (beta, f) = (0.3f64, |x: f64| (0.3 * x).exp_m1() / x);
    assert_relative_eq!(ratio_gap(1.0, beta, 1.0), (1.0 - f(1.0) / f(2.0)).abs(), max_relative = 1e-14);
}

#[test]
fn local_lipschitz_reference_values() {
    use source_scope::detect_alg2::Alg2Params;
    let p = Alg2Params {
        k: 1,
        ell0: 2,
        beta: 0.01,
        sigma: 1e-3,
        separation: 2.0,
        mass_bound: 3.0,
        lipschitz: 0.01,
        rho_lo: 0.5,
        rho_hi: 3.0,
        sensors: vec![GridFunction::constant(&Grid::standard(), 1.0)],
    };
    let geometric = 1.0 - (-0.5 * 2.04f64).exp();
    assert_relative_eq!(lipschitz_local(2, 2, &p), 0.01 + 9.0 / geometric, max_relative = 1e-14);
    assert_relative_eq!(lipschitz_local(102, 2, &p), 0.01 + 9.0 * (-0.5f64).exp() / geometric, max_relative = 1e-14);
    assert_relative_eq!(p.lipschitz_max(), 0.01 + 9.0 * (0.01f64).exp() / geometric, max_relative = 1e-14);
}
