// SPDX-License-Identifier: Apache-2.0

//! The six figure analogs of the reference experiment.
//!
//! | file stem | content |
//! |---|---|
//! | `fig1_alg1_coefficients` | threshold-detector coefficients at `β` and `β/2` against the truth |
//! | `fig2_alg2_coefficients` | Prony–Laplace coefficients at `β` against the truth |
//! | `fig3_alg1_rate_vs_n` | threshold-detector rate errors against `N`, simulated and ideal (`L = σ = 0`) |
//! | `fig4_coeff_err_vs_beta` | reference-sensor coefficient error against `β` |
//! | `fig5_coeff_err_vs_l` | the same against `L` |
//! | `fig6_coeff_err_vs_sigma` | the same against `σ` |
//!
//! Figures 1, 2 and 4–6 run both the exponentially decaying and the sinusoidal
//! background with the scenario's profile. Every figure writes a CSV table and
//! an SVG plot; sweeps also write their per-run and summary tables.

use std::path::{Path, PathBuf};

use crate::dynamics::BackgroundKind;
use crate::exec::Execution;
use crate::bounds::match_window;
use crate::{Error, Result};

use super::output::{emit_sweeps, fmt_num, write_text};
use super::run::{run_scenario, RunOptions, RunReport};
use super::scenario::{AlgorithmChoice, FunctionSpec, Scenario};
use super::svg::{Figure, Marker, Panel, Series, Style, BLUE, GREEN, GREY, ORANGE, PINK};
use super::sweep::{run_sweep, Spread, SweepAxis, SweepResult};

/// Axis values of the `β` sweep.
pub const BETA_VALUES: [f64; 4] = [0.005, 0.01, 0.02, 0.05];
/// Axis values of the `L` sweep.
pub const L_VALUES: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
/// Axis values of the `σ` sweep.
pub const SIGMA_VALUES: [f64; 5] = [1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
/// Axis values of the `N` sweep.
pub const N_VALUES: [f64; 4] = [10.0, 50.0, 100.0, 500.0];

/// The two background variants, labelled for file names.
pub fn background_variants(base: &Scenario) -> Vec<(&'static str, Scenario)> {
    [("exp_decay", BackgroundKind::ExpDecay), ("sinusoid", BackgroundKind::Sinusoid)]
        .into_iter()
        .map(|(label, kind)| {
            let mut s = base.clone();
            if s.background.kind == BackgroundKind::Zero {
                s.background.profile = FunctionSpec::X;
            }
            s.background.kind = kind;
            (label, s)
        })
        .collect()
}

/// The scenario without background variation and without noise.
pub fn ideal_variant(base: &Scenario) -> Scenario {
    let mut s = base.clone();
    s.background.lipschitz = 0.0;
    s.measurement.sigma = 0.0;
    s
}

fn label(kind: BackgroundKind) -> &'static str {
    match kind {
        BackgroundKind::ExpDecay => "η = p e^(-Lt)",
        BackgroundKind::Sinusoid => "η = p sin(Lt)",
        BackgroundKind::Zero => "η = 0",
    }
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

/// Per catalyst and sensor: the true coefficient and the matched estimate.
fn coefficient_table(report: &RunReport, alg: u8, separation: f64) -> Vec<(usize, usize, f64, Option<f64>)> {
    let events: Vec<(f64, Vec<f64>)> = match alg {
        1 => report
            .alg1
            .iter()
            .flat_map(|o| o.events.iter().map(|e| (e.t_hat, e.coeffs.iter().map(|c| c.coeff).collect())))
            .collect(),
        _ => report
            .alg2
            .iter()
            .flat_map(|o| o.events.iter().map(|e| (e.t_hat, e.coeffs.iter().map(|c| c.coeff).collect())))
            .collect(),
    };
    let times: Vec<f64> = events.iter().map(|e| e.0).collect();
    let matches = report.truth.match_times(&times, match_window(report.beta, separation));
    let mut out = Vec::new();
    for (c, cat) in report.truth.catalysts.iter().enumerate() {
        let event = matches.iter().position(|m| *m == Some(c));
        for (s, truth) in cat.coeffs.iter().enumerate() {
            out.push((c, s, *truth, event.map(|e| events[e].1[s])));
        }
    }
    out
}

fn coefficient_figure(
    base: &Scenario,
    alg: u8,
    betas: &[f64],
    stem: &str,
    title: &str,
    outdir: &Path,
    exec: Execution,
) -> Result<Vec<PathBuf>> {
    let variants = background_variants(base);
    let jobs: Vec<(usize, f64)> = (0..variants.len()).flat_map(|v| betas.iter().map(move |&b| (v, b))).collect();
    let algorithm = if alg == 1 { AlgorithmChoice::One } else { AlgorithmChoice::Two };
    let reports = exec
        .map(jobs.len(), |i| {
            let (v, beta) = jobs[i];
            let mut s = variants[v].1.clone();
            s.measurement.beta = beta;
            run_scenario(&s, RunOptions { seed: None, algorithm: Some(algorithm), exec: Execution::Sequential })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut panels = Vec::new();
    let colors = [BLUE, GREEN, ORANGE];
    for (v, (vlabel, scenario)) in variants.iter().enumerate() {
        let tables: Vec<_> =
            jobs.iter().zip(&reports).filter(|(j, _)| j.0 == v).map(|(j, r)| (j.1, coefficient_table(r, alg, scenario.separation))).collect();
        for (beta, table) in &tables {
            for &(c, s, truth, est) in table {
                rows.push(vec![
                    vlabel.to_string(),
                    fmt_num(*beta),
                    (c + 1).to_string(),
                    (s + 1).to_string(),
                    fmt_num(truth),
                    est.map(fmt_num).unwrap_or_default(),
                ]);
            }
        }
        for c in 0..scenario.catalysts.len() {
            let truth_pts: Vec<(f64, f64)> = tables[0]
                .1
                .iter()
                .filter(|r| r.0 == c)
                .map(|r| ((r.1 + 1) as f64, r.2))
                .collect();
            let mut series = vec![Series {
                label: "truth ⟨h,g⟩".into(),
                color: PINK,
                style: Style::Markers(Marker::Plus),
                points: truth_pts,
            }];
            for (k, (beta, table)) in tables.iter().enumerate() {
                series.push(Series {
                    label: format!("estimate, β = {}", fmt_num(*beta)),
                    color: colors[k % colors.len()],
                    style: Style::Markers(Marker::Star),
                    points: table.iter().filter(|r| r.0 == c).filter_map(|r| Some(((r.1 + 1) as f64, r.3?))).collect(),
                });
            }
            panels.push(Panel {
                title: format!("h{} ({})", c + 1, label(scenario.background.kind)),
                x_label: "sensor".into(),
                y_label: "coefficient".into(),
                series,
                ..Panel::default()
            });
        }
    }
    let csv_path = outdir.join(format!("{stem}.csv"));
    write_text(&csv_path, &csv_text(&["background", "beta", "catalyst", "sensor_id", "truth", "estimate"], &rows))?;
    let svg_path = outdir.join(format!("{stem}.svg"));
    let columns = base.catalysts.len().max(1);
    write_text(&svg_path, &Figure { title: title.into(), columns, panels }.to_svg())?;
    Ok(vec![csv_path, svg_path])
}

fn spread_series(points: &[(f64, Option<Spread>)], color: &'static str, name: &str) -> Vec<Series> {
    let pick = |f: fn(&Spread) -> f64| -> Vec<(f64, f64)> {
        points.iter().filter_map(|(x, s)| Some((*x, f(s.as_ref()?)))).collect()
    };
    vec![
        Series { label: format!("{name} median"), color, style: Style::LineMarkers(Marker::Circle), points: pick(|s| s.median) },
        Series { label: format!("{name} min / max"), color: GREY, style: Style::Line, points: pick(|s| s.min) },
        Series { label: String::new(), color: GREY, style: Style::Line, points: pick(|s| s.max) },
    ]
}

fn error_panel(result: &SweepResult, title: String, x_label: &str) -> Panel {
    let pts: Vec<_> = result.summary().into_iter().map(|p| (p.value, p.rel_coeff_err)).collect();
    Panel {
        title,
        x_label: x_label.into(),
        y_label: "relative coefficient error".into(),
        log_x: true,
        log_y: true,
        series: spread_series(&pts, BLUE, "error"),
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep_figure(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    reps: usize,
    stem: &str,
    title: &str,
    outdir: &Path,
    exec: Execution,
) -> Result<Vec<PathBuf>> {
    let reference = base.run.reference_sensor;
    let mut paths = Vec::new();
    let mut by_alg: [Vec<Panel>; 2] = [Vec::new(), Vec::new()];
    for (vlabel, scenario) in background_variants(base) {
        let results = run_sweep(&scenario, axis, values, reps, AlgorithmChoice::Both, exec)?;
        paths.extend(emit_sweeps(&results, reference, outdir, &format!("{stem}_{vlabel}_"))?);
        for r in &results {
            let name = if r.algorithm == 1 { "threshold detector" } else { "Prony–Laplace detector" };
            by_alg[r.algorithm as usize - 1].push(error_panel(
                r,
                format!("{name}, {}", label(scenario.background.kind)),
                axis.as_str(),
            ));
        }
    }
    let [a, b] = by_alg;
    let panels: Vec<Panel> = a.into_iter().chain(b).collect();
    let svg_path = outdir.join(format!("{stem}.svg"));
    write_text(&svg_path, &Figure { title: title.into(), columns: 2, panels }.to_svg())?;
    paths.push(svg_path);
    Ok(paths)
}

fn rate_figure(base: &Scenario, reps: usize, outdir: &Path, exec: Execution) -> Result<Vec<PathBuf>> {
    let stem = "fig3_alg1_rate_vs_n";
    let reference = base.run.reference_sensor;
    let cases = [("simulation", base.clone(), reps), ("ideal", ideal_variant(base), 1)];
    let colors = [BLUE, GREEN, ORANGE, PINK];
    let mut paths = Vec::new();
    let mut panels = Vec::new();
    for (case, scenario, reps) in cases {
        let results = run_sweep(&scenario, SweepAxis::N, &N_VALUES, reps, AlgorithmChoice::One, exec)?;
        paths.extend(emit_sweeps(&results, reference, outdir, &format!("{stem}_{case}_"))?);
        let summary = results[0].summary();
        let series = (0..scenario.catalysts.len())
            .map(|j| Series {
                label: format!("ρ{}", j + 1),
                color: colors[j % colors.len()],
                style: Style::LineMarkers(Marker::Circle),
                points: summary.iter().filter_map(|p| Some((p.value, p.rho_rel[j]?.median))).collect(),
            })
            .collect();
        panels.push(Panel {
            title: format!("{case} ({})", label(scenario.background.kind)),
            x_label: "N".into(),
            y_label: "relative rate error".into(),
            log_x: true,
            log_y: true,
            series,
        });
    }
    let svg_path = outdir.join(format!("{stem}.svg"));
    let figure = Figure { title: "Threshold detector: decay-rate error against N".into(), columns: 2, panels };
    write_text(&svg_path, &figure.to_svg())?;
    paths.push(svg_path);
    Ok(paths)
}

/// Writes all figure analogs for `base` into `outdir`, with `reps` seeds per
/// sweep point, and returns the written paths.
pub fn reproduce_figures(base: &Scenario, outdir: &Path, reps: usize, exec: Execution) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let beta = base.measurement.beta;
    let mut paths = Vec::new();
    paths.extend(coefficient_figure(
        base,
        1,
        &[beta, beta / 2.0],
        "fig1_alg1_coefficients",
        "Threshold detector: coefficients per sensor",
        outdir,
        exec,
    )?);
    paths.extend(coefficient_figure(
        base,
        2,
        &[beta],
        "fig2_alg2_coefficients",
        "Prony–Laplace detector: coefficients per sensor",
        outdir,
        exec,
    )?);
    paths.extend(rate_figure(base, reps, outdir, exec)?);
    paths.extend(sweep_figure(
        base,
        SweepAxis::Beta,
        &BETA_VALUES,
        reps,
        "fig4_coeff_err_vs_beta",
        "Coefficient error against β",
        outdir,
        exec,
    )?);
    paths.extend(sweep_figure(
        base,
        SweepAxis::L,
        &L_VALUES,
        reps,
        "fig5_coeff_err_vs_l",
        "Coefficient error against L",
        outdir,
        exec,
    )?);
    paths.extend(sweep_figure(
        base,
        SweepAxis::Sigma,
        &SIGMA_VALUES,
        reps,
        "fig6_coeff_err_vs_sigma",
        "Coefficient error against σ",
        outdir,
        exec,
    )?);
    Ok(paths)
}
