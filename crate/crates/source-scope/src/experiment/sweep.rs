// SPDX-License-Identifier: Apache-2.0

//! Parameter sweeps with repeated seeds.
//!
//! Every `(value, repetition)` pair is an independent run with seed
//! `base + repetition`; pairs execute in parallel and are reported in
//! `(value, seed)` order.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::BackgroundKind;
use crate::exec::Execution;
use crate::{Error, Result};

use super::run::{run_scenario, Metrics, RunOptions};
use super::scenario::{AlgorithmChoice, Scenario};

/// The swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Time step `β`.
    Beta,
    /// Background Lipschitz constant `L`.
    L,
    /// Noise bound `σ`.
    Sigma,
    /// Fine subdivision `N`.
    N,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::L => "L",
            SweepAxis::Sigma => "sigma",
            SweepAxis::N => "N",
        }
    }

    /// Lower-case label for file names.
    pub fn file_label(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::L => "l",
            SweepAxis::Sigma => "sigma",
            SweepAxis::N => "n",
        }
    }

    /// Returns `scenario` with the axis set to `value`.
    pub fn apply(self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::input(format!("{} sweep value {value} must be finite and nonnegative", self.as_str())));
        }
        let mut s = scenario.clone();
        match self {
            SweepAxis::Beta => s.measurement.beta = value,
            SweepAxis::L => {
                if s.background.kind == BackgroundKind::Zero {
                    return Err(Error::input("an L sweep needs a nonzero background"));
                }
                s.background.lipschitz = value;
            }
            SweepAxis::Sigma => s.measurement.sigma = value,
            SweepAxis::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::input(format!("N must be a positive integer, got {value}")));
                }
                s.measurement.fine_steps = value as usize;
            }
        }
        Ok(s)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta" => Ok(SweepAxis::Beta),
            "L" | "l" => Ok(SweepAxis::L),
            "sigma" => Ok(SweepAxis::Sigma),
            "N" | "n" => Ok(SweepAxis::N),
            other => Err(Error::input(format!("unknown sweep axis `{other}` (expected beta, L, sigma or N)"))),
        }
    }
}

/// Parses `axis=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> Result<(SweepAxis, Vec<f64>)> {
    let (axis, values) =
        spec.split_once('=').ok_or_else(|| Error::input(format!("sweep `{spec}` is not of the form axis=v1,v2")))?;
    let axis: SweepAxis = axis.trim().parse()?;
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| Error::input(format!("sweep value `{v}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::input("a sweep needs at least one value"));
    }
    Ok((axis, values))
}

/// One run of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    /// Metrics of the run, or the error that stopped it.
    pub outcome: std::result::Result<Metrics, String>,
}

/// All runs of one detector along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    /// 1 or 2.
    pub algorithm: u8,
    /// Number of true intakes, i.e. rate and timing columns.
    pub catalysts: usize,
    pub rows: Vec<SweepRow>,
}

/// Median, minimum and maximum of the finite entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Spread {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Spread> {
        let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Spread { median, min: v[0], max: v[n - 1], count: n })
    }
}

/// Per-value aggregate of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub runs: usize,
    pub failed: usize,
    pub rel_coeff_err: Option<Spread>,
    pub rho_rel: Vec<Option<Spread>>,
    pub t_err: Vec<Option<Spread>>,
    /// Smallest pass rate over the repetitions.
    pub cert_pass_rate_min: Option<f64>,
}

impl SweepResult {
    /// Aggregates repetitions per axis value, in first-seen value order.
    pub fn summary(&self) -> Vec<SweepPoint> {
        let mut values: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !values.iter().any(|v| v.to_bits() == r.value.to_bits()) {
                values.push(r.value);
            }
        }
        values
            .into_iter()
            .map(|value| {
                let rows: Vec<&SweepRow> = self.rows.iter().filter(|r| r.value.to_bits() == value.to_bits()).collect();
                let ok: Vec<&Metrics> = rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
                SweepPoint {
                    value,
                    runs: rows.len(),
                    failed: rows.len() - ok.len(),
                    rel_coeff_err: Spread::of(ok.iter().map(|m| m.rel_coeff_err)),
                    rho_rel: (0..self.catalysts)
                        .map(|j| Spread::of(ok.iter().filter_map(|m| m.rho_rel.get(j).copied().flatten())))
                        .collect(),
                    t_err: (0..self.catalysts)
                        .map(|j| Spread::of(ok.iter().filter_map(|m| m.t_err.get(j).copied().flatten())))
                        .collect(),
                    cert_pass_rate_min: ok.iter().map(|m| m.cert_pass_rate).reduce(f64::min),
                }
            })
            .collect()
    }
}

/// Runs `reps` seeds per value for each selected detector. A failing run is
/// recorded in its row and the sweep continues.
pub fn run_sweep(
    scenario: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    reps: usize,
    algorithm: AlgorithmChoice,
    exec: Execution,
) -> Result<Vec<SweepResult>> {
    if reps == 0 {
        return Err(Error::input("a sweep needs at least one repetition"));
    }
    let jobs: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| (0..reps as u64).map(move |r| (v, scenario.seed.wrapping_add(r))))
        .collect();
    let outcomes = exec.map(jobs.len(), |i| {
        let (value, seed) = jobs[i];
        let opts = RunOptions { seed: Some(seed), algorithm: Some(algorithm), exec: Execution::Sequential };
        axis.apply(scenario, value).and_then(|s| run_scenario(&s, opts))
    });
    let catalysts = scenario.catalysts.len();
    let mut results = Vec::new();
    for (alg, wanted) in [(1u8, algorithm.runs_alg1()), (2u8, algorithm.runs_alg2())] {
        if !wanted {
            continue;
        }
        let rows = jobs
            .iter()
            .zip(&outcomes)
            .map(|(&(value, seed), outcome)| {
                let outcome = match outcome {
                    Ok(report) => {
                        let m = if alg == 1 {
                            report.alg1.as_ref().map(|o| o.metrics.clone())
                        } else {
                            report.alg2.as_ref().map(|o| o.metrics.clone())
                        };
                        m.ok_or_else(|| "detector not run".to_string())
                    }
                    Err(e) => Err(e.to_string()),
                };
                SweepRow { value, seed, outcome }
            })
            .collect();
        results.push(SweepResult { axis, algorithm: alg, catalysts, rows });
    }
    Ok(results)
}
