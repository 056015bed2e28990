// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: nine end-to-end criteria at fixed tolerances.
//!
//! Runs as a plain binary (`harness = false`) so that every criterion prints
//! exactly one `PASS` or `FAIL` line with its measured values, whether or not
//! earlier criteria failed. The process exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use source_scope::bounds::ratio_gap;
use source_scope::dynamics::{BackgroundKind, ConvolutionQuadrature, Trajectory};
use source_scope::exec::{with_threads, Execution};
use source_scope::experiment::figures::{ideal_variant, BETA_VALUES, L_VALUES, N_VALUES, SIGMA_VALUES};
use source_scope::experiment::scenario::FunctionSpec;
use source_scope::experiment::{
    emit_run, emit_sweeps, load_scenario, random_scenario, run_scenario, run_sweep, AlgorithmChoice, RunOptions,
    Scenario, SweepAxis,
};
use source_scope::sampling::{oracle_delta_laplace, oracle_m_expansion, NoiseMode, Sampler};

/// Relative rate errors of the Prony–Laplace detector reported for the
/// simulated case.
const REPORTED_SIM: [f64; 3] = [0.0101, 0.0487, 0.0230];
/// The same for `L = σ = 0`.
const REPORTED_IDEAL: [f64; 3] = [0.0050, 0.0257, 0.0174];

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn load(name: &str) -> Scenario {
    load_scenario(&scenario_path(name)).unwrap_or_else(|e| panic!("loading {name}: {e}"))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn opts(seed: Option<u64>, algorithm: AlgorithmChoice) -> RunOptions {
    RunOptions { seed, algorithm: Some(algorithm), exec: Execution::Parallel }
}

/// Criterion 1: three events per detector within `β` of the true intakes.
fn timing_recovery() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for name in ["paper_fig1.scenario", "paper_fig1_sinusoid.scenario"] {
        let s = load(name);
        let start = Instant::now();
        let report = run_scenario(&s, opts(None, AlgorithmChoice::Both)).expect("run");
        let elapsed = start.elapsed().as_secs_f64();
        let beta = report.beta;
        let truth: Vec<f64> = report.truth.catalysts.iter().map(|c| c.t_intake).collect();
        let check = |times: Vec<f64>| -> (bool, f64) {
            let worst = times.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            (times.len() == truth.len() && worst <= beta, worst)
        };
        let (ok1, w1) = check(report.alg1.as_ref().unwrap().events.iter().map(|e| e.t_hat).collect());
        let (ok2, w2) = check(report.alg2.as_ref().unwrap().events.iter().map(|e| e.t_hat).collect());
        let n1 = report.alg1.as_ref().unwrap().events.len();
        let n2 = report.alg2.as_ref().unwrap().events.len();
        pass &= ok1 && ok2 && elapsed < 10.0;
        details.push(format!(
            "{}: events {n1}/{n2}, max |t_hat - t| {w1:.2e}/{w2:.2e}, {elapsed:.2} s",
            s.name
        ));
    }
    outcome(pass, details.join("; "))
}

fn alg2_rate_errors(s: &Scenario, seed: Option<u64>) -> Vec<Option<f64>> {
    let report = run_scenario(s, opts(seed, AlgorithmChoice::Two)).expect("run");
    report.alg2.unwrap().metrics.rho_rel
}

fn within_factor(observed: f64, reported: f64, factor: f64) -> bool {
    observed >= reported / factor && observed <= reported * factor
}

/// Criterion 2: Prony–Laplace rate errors against the reported values.
fn alg2_rates() -> Outcome {
    let s = load("paper_fig1_sinusoid.scenario");
    let mut good = 0;
    let mut samples = Vec::new();
    for r in 0..10u64 {
        let errs = alg2_rate_errors(&s, Some(s.seed + r));
        let ok = errs
            .iter()
            .zip(REPORTED_SIM)
            .all(|(e, rep)| e.is_some_and(|e| within_factor(e, rep, 2.0)));
        good += ok as usize;
        samples.push(errs);
    }
    let fmt = |v: &[Option<f64>]| {
        v.iter().map(|e| e.map_or("-".into(), |e| format!("{:.2}%", 100.0 * e))).collect::<Vec<_>>().join("/")
    };
    let ideal = alg2_rate_errors(&ideal_variant(&s), None);
    let ideal_ok = ideal
        .iter()
        .zip(REPORTED_IDEAL)
        .all(|(e, rep)| e.is_some_and(|e| (e - rep).abs() <= 0.3 * rep));
    outcome(
        good >= 8 && ideal_ok,
        format!(
            "simulation: {good}/10 seeds within 2x of 1.01/4.87/2.30% (seed {} gives {}); ideal {} vs 0.50/2.57/1.74% ±30%: {}",
            s.seed,
            fmt(&samples[0]),
            fmt(&ideal),
            if ideal_ok { "ok" } else { "outside" }
        ),
    )
}

/// Criterion 3: every certificate on 200 random separated scenarios.
fn certificate_suite() -> Outcome {
    let results = Execution::Parallel.map(200, |i| {
        let s = random_scenario(i as u64);
        let r = run_scenario(&s, RunOptions { seed: None, algorithm: None, exec: Execution::Sequential });
        r.map(|r| {
            let failed: Vec<String> = r
                .certificates()
                .filter(|c| !c.satisfied)
                .map(|c| format!("seed {i} {} rhs {:.3e} observed {:.3e}", c.kind, c.rhs, c.observed))
                .collect();
            (r.certificates().count(), failed)
        })
    });
    let mut total = 0;
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((n, f)) => {
                total += n;
                failures.extend(f);
            }
            Err(e) => failures.push(format!("seed {i}: {e}")),
        }
    }
    let shown: Vec<_> = failures.iter().take(3).cloned().collect();
    outcome(
        failures.is_empty() && total > 0,
        format!("{} of {total} certificates satisfied{}", total - failures.len(), if shown.is_empty() {
            String::new()
        } else {
            format!("; first failures: {}", shown.join(", "))
        }),
    )
}

/// Largest deviation between sampled noiseless measurements and the
/// closed-form expansions over every index of a scenario.
fn oracle_gap(s: &Scenario) -> f64 {
    let mut s = s.clone();
    s.measurement.noise = NoiseMode::Zero;
    let built = s.build().expect("build");
    let traj = Trajectory::new(built.model.clone(), built.generator, s.horizon, ConvolutionQuadrature::default())
        .expect("trajectory");
    let cfg = built.measurement;
    let sampler = Sampler::new(&traj, &built.sensors, cfg).expect("sampler");
    let steps = cfg.steps() as i64;
    let gaps = Execution::Parallel.map(steps as usize, |n| {
        let n = n as i64;
        let step = sampler.step_values(n).expect("step");
        let mut worst = 0.0f64;
        for (i, g) in built.sensors.iter().enumerate() {
            let m = oracle_m_expansion(&built.model, g, n, &cfg).expect("oracle m");
            worst = worst.max((step.m[i] - m).abs());
            let d = oracle_delta_laplace(&built.model, g, n, &cfg).expect("oracle delta");
            let sampled = step.laplace[i] - Complex64::new(step.laplace0[i], 0.0);
            worst = worst.max((sampled - d).norm());
        }
        worst
    });
    gaps.into_iter().fold(0.0, f64::max)
}

fn single_catalyst(seed: u64) -> Scenario {
    let mut s = random_scenario(10_000 + seed);
    s.catalysts.truncate(1);
    let last = s.catalysts[0].t;
    s.horizon = last + 0.5;
    s
}

/// Criterion 4: noiseless measurements against the closed-form expansions.
fn oracle_equivalence() -> Outcome {
    let paper = oracle_gap(&load("paper_fig1.scenario"));
    let paper_sin = oracle_gap(&load("paper_fig1_sinusoid.scenario"));
    let singles = (0..20).map(|i| oracle_gap(&single_catalyst(i))).fold(0.0, f64::max);
    let worst = paper.max(paper_sin).max(singles);
    outcome(
        worst <= 1e-7,
        format!("max |sampled - oracle|: reference {paper:.2e} / {paper_sin:.2e}, 20 single-catalyst {singles:.2e}"),
    )
}

/// A catalyst-free scenario with adversarial alternating noise.
fn quiet_scenario(seed: u64) -> Scenario {
    let mut s = random_scenario(20_000 + seed);
    s.catalysts.clear();
    s.mass_bound = Some(2.5);
    s.horizon = 3.0;
    s.measurement.noise = NoiseMode::AdversarialAlternating;
    s.measurement.sigma = if seed % 2 == 0 { 1e-3 } else { 1e-2 };
    if s.background.kind == BackgroundKind::Zero {
        s.background.kind = BackgroundKind::Sinusoid;
        s.background.profile = FunctionSpec::X;
        s.background.lipschitz = 0.02;
    }
    s
}

/// Criterion 5: no detections without catalysts under adversarial noise.
fn no_false_alarm() -> Outcome {
    let counts = Execution::Parallel.map(50, |i| {
        let s = quiet_scenario(i as u64);
        let r = run_scenario(&s, RunOptions { seed: None, algorithm: None, exec: Execution::Sequential }).expect("run");
        (r.alg1.unwrap().events.len(), r.alg2.unwrap().events.len())
    });
    let (a, b) = counts.iter().fold((0, 0), |(a, b), c| (a + c.0, b + c.1));
    outcome(a == 0 && b == 0, format!("detections over 50 seeds: threshold {a}, Prony-Laplace {b}"))
}

/// Median reference-sensor coefficient error per axis value, for each
/// background and detector.
fn sweep_medians(base: &Scenario, axis: SweepAxis, values: &[f64]) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    for (label, kind) in [("exp", BackgroundKind::ExpDecay), ("sin", BackgroundKind::Sinusoid)] {
        let mut s = base.clone();
        s.background.kind = kind;
        let results = run_sweep(&s, axis, values, 10, AlgorithmChoice::Both, Execution::Parallel).expect("sweep");
        for r in results {
            let medians = r
                .summary()
                .iter()
                .map(|p| p.rel_coeff_err.map_or(f64::NAN, |s| s.median))
                .collect();
            out.push((format!("{label}/alg{}", r.algorithm), medians));
        }
    }
    out
}

fn fmt_series(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(",")
}

/// Criterion 6: error trends along β, σ and L.
fn trends() -> Outcome {
    let base = load("paper_fig1.scenario");
    let mut pass = true;
    let mut details = Vec::new();
    for (name, medians) in sweep_medians(&base, SweepAxis::Beta, &BETA_VALUES) {
        let ok = medians.windows(2).all(|w| w[1] >= w[0]);
        pass &= ok;
        details.push(format!("beta {name} [{}] {}", fmt_series(&medians), if ok { "monotone" } else { "NOT monotone" }));
    }
    for (name, medians) in sweep_medians(&base, SweepAxis::Sigma, &SIGMA_VALUES) {
        let ratio = medians[medians.len() - 1] / medians[0];
        pass &= ratio >= 10.0;
        details.push(format!("sigma {name} ratio {ratio:.2}"));
    }
    for (name, medians) in sweep_medians(&base, SweepAxis::L, &L_VALUES) {
        let max = medians.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = medians.iter().cloned().fold(f64::INFINITY, f64::min);
        let ratio = max / min;
        pass &= ratio <= 2.0;
        details.push(format!("L {name} max/min {ratio:.3}"));
    }
    outcome(pass, details.join("; "))
}

/// Criterion 7: threshold-detector rate errors against `N`, ideal case.
fn n_sweep() -> Outcome {
    let base = ideal_variant(&load("paper_fig1_sinusoid.scenario"));
    let results = run_sweep(&base, SweepAxis::N, &N_VALUES, 1, AlgorithmChoice::One, Execution::Parallel).expect("sweep");
    let summary = results[0].summary();
    let mut pass = true;
    let mut details = Vec::new();
    for j in 0..base.catalysts.len() {
        let errs: Vec<f64> = summary.iter().map(|p| p.rho_rel[j].map_or(f64::NAN, |s| s.median)).collect();
        let ok = errs.windows(2).all(|w| w[1] <= w[0]);
        pass &= ok;
        details.push(format!("rho{} [{}]{}", j + 1, fmt_series(&errs), if ok { "" } else { " increases" }));
    }
    outcome(pass, format!("N = 10,50,100,500: {}", details.join("; ")))
}

/// Criterion 8: `g_a` nondecreasing and below `e^{|a|β} - 1`.
fn monotonicity_lemma() -> Outcome {
    let xs: Vec<f64> = (0..=900).map(|i| 10f64.powf(-6.0 + 9.0 * i as f64 / 900.0)).collect();
    let mut violations = 0;
    let mut checked = 0;
    for a in [-2.0f64, -0.5, 0.5, 2.0] {
        for beta in [0.01, 0.1, 1.0] {
            let cap = (a.abs() * beta).exp_m1();
            let vals: Vec<f64> = xs.iter().map(|&x| ratio_gap(a, beta, x)).collect();
            for (i, v) in vals.iter().enumerate() {
                checked += 1;
                if !(*v <= cap) || (i > 0 && *v < vals[i - 1]) {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{violations} violations in {checked} points"))
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .expect("read dir")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).expect("read")))
        .collect();
    files.sort();
    files
}

fn artifacts(threads: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let s = load("paper_fig1.scenario");
    with_threads(threads, || {
        let report = run_scenario(&s, opts(Some(7), AlgorithmChoice::Both)).expect("run");
        emit_run(&report, dir).expect("emit");
        let sweeps = run_sweep(&s, SweepAxis::Beta, &[0.01, 0.02], 3, AlgorithmChoice::Both, Execution::Parallel)
            .expect("sweep");
        emit_sweeps(&sweeps, s.run.reference_sensor, dir, "").expect("emit sweeps");
    })
    .expect("pool");
    read_all(dir)
}

/// Criterion 9: byte-identical CSVs across repeated runs and thread counts.
fn determinism() -> Outcome {
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().expect("tempdir")).collect();
    let a = artifacts(1, dirs[0].path());
    let b = artifacts(4, dirs[1].path());
    let c = artifacts(4, dirs[2].path());
    let same = a == b && b == c && !a.is_empty();
    outcome(same, format!("{} CSV files compared across 1/4/4 threads", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("timing recovery", timing_recovery),
        ("Prony-Laplace rate errors", alg2_rates),
        ("certificate suite (200 random scenarios)", certificate_suite),
        ("oracle equivalence", oracle_equivalence),
        ("no false alarms", no_false_alarm),
        ("trend reproduction", trends),
        ("N sweep (ideal)", n_sweep),
        ("monotonicity lemma", monotonicity_lemma),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        failed += !o.pass as usize;
        println!(
            "{} criterion {}: {name} ({:.1} s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
