// SPDX-License-Identifier: Apache-2.0

//! The simulate → sample → detect → certify pipeline for one scenario.

use crate::bounds::{certify_alg1, certify_alg2, match_window, BoundCertificate, GroundTruth};
use crate::detect_alg1::{run_alg1, Alg1Params, DetectionEvent};
use crate::detect_alg2::{run_alg2, Alg2Event};
use crate::dynamics::{ConvolutionQuadrature, SourceModel, Trajectory};
use crate::exec::Execution;
use crate::hilbert::GridFunction;
use crate::sampling::{derivative_limit, MeasurementRecord, Sampler};
use crate::Result;

use super::scenario::{AlgorithmChoice, Scenario};

/// Options that override the scenario for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Replaces the scenario seed.
    pub seed: Option<u64>,
    /// Replaces the scenario's algorithm selection.
    pub algorithm: Option<AlgorithmChoice>,
    pub exec: Execution,
}

/// Accuracy summary of one detector run.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// `√(Σ_j |⟨h_j,g⟩ - 𝔣_j(g)|²) / √(Σ_j ⟨h_j,g⟩²)` for the reference sensor;
    /// a missed intake counts with `𝔣_j = 0`.
    pub rel_coeff_err: f64,
    /// `|ρ_j - ρ̂_j| / ρ_j` per true intake, absent when no rate was recovered.
    pub rho_rel: Vec<Option<f64>>,
    /// `|𝔱_j - t_j|` per true intake, absent when missed.
    pub t_err: Vec<Option<f64>>,
    /// Fraction of satisfied certificates; 1 without certificates.
    pub cert_pass_rate: f64,
    pub event_count: usize,
}

/// Threshold-detector results.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Outcome {
    pub events: Vec<DetectionEvent>,
    /// `ε(β̃)` used by each event's rate certificate.
    pub eps_fine: Vec<Option<f64>>,
    pub certificates: Vec<BoundCertificate>,
    pub metrics: Metrics,
}

/// Prony–Laplace results.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Outcome {
    pub events: Vec<Alg2Event>,
    pub certificates: Vec<BoundCertificate>,
    pub metrics: Metrics,
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub beta: f64,
    pub reference_sensor: usize,
    pub truth: GroundTruth,
    /// Every measurement consumed, ordered by family, index and sensor.
    pub records: Vec<MeasurementRecord>,
    pub alg1: Option<Alg1Outcome>,
    pub alg2: Option<Alg2Outcome>,
}

impl RunReport {
    /// Whether every certificate of every detector holds.
    pub fn all_certificates_hold(&self) -> bool {
        self.certificates().all(|c| c.satisfied)
    }

    pub fn certificates(&self) -> impl Iterator<Item = &BoundCertificate> {
        let a = self.alg1.iter().flat_map(|o| o.certificates.iter());
        let b = self.alg2.iter().flat_map(|o| o.certificates.iter());
        a.chain(b)
    }
}

/// The noiseless rate numerator `(𝔰_{i+2} - 𝔰_{i+1}) - (𝔰_{i-1} - 𝔰_{i-2})`
/// at subdivision `n_fine`, for one sensor.
fn rate_numerator(sampler: &Sampler<'_>, sensor: usize, i: i64, n_fine: usize) -> Result<f64> {
    let s = |n: i64| sampler.fine_values(n, n_fine).map(|v| v[sensor]);
    Ok((s(i + 2)? - s(i + 1)?) - (s(i - 1)? - s(i - 2)?))
}

fn rate_numerator_limit(model: &SourceModel, g: &GridFunction, i: i64, beta: f64) -> Result<f64> {
    let s = |n: i64| derivative_limit(model, g, n, beta);
    Ok((s(i + 2)? - s(i + 1)?) - (s(i - 1)? - s(i - 2)?))
}

/// `ε(β̃)` for the rate numerator of an event: the larger of the Richardson
/// estimate `2|C(N) - C(2N)|` and the distance to the exact `N → ∞` limit.
fn eps_for_event(
    sampler: &Sampler<'_>,
    model: &SourceModel,
    p: &Alg1Params,
    event: &DetectionEvent,
) -> Result<Option<f64>> {
    let Some(sensor) = event.chosen_sensor else { return Ok(None) };
    let Some(i) = event.coeffs[sensor].detection_index else { return Ok(None) };
    let n = p.fine_steps;
    let c_n = rate_numerator(sampler, sensor, i, n)?;
    let c_2n = rate_numerator(sampler, sensor, i, 2 * n)?;
    let c_inf = rate_numerator_limit(model, &p.sensors[sensor], i, p.beta)?;
    Ok(Some((2.0 * (c_n - c_2n).abs()).max((c_n - c_inf).abs())))
}

fn pass_rate(certs: &[BoundCertificate]) -> f64 {
    if certs.is_empty() {
        1.0
    } else {
        certs.iter().filter(|c| c.satisfied).count() as f64 / certs.len() as f64
    }
}

/// Metrics from `(t̂, rate, coefficient of the reference sensor)` per event.
fn metrics(
    truth: &GroundTruth,
    beta: f64,
    separation: f64,
    reference: usize,
    events: &[(f64, Option<f64>, f64)],
    certs: &[BoundCertificate],
) -> Metrics {
    let times: Vec<f64> = events.iter().map(|e| e.0).collect();
    let matches = truth.match_times(&times, match_window(beta, separation));
    let n = truth.catalysts.len();
    let mut rho_rel = vec![None; n];
    let mut t_err = vec![None; n];
    let mut coeff = vec![0.0; n];
    for (e, m) in matches.iter().enumerate() {
        if let Some(c) = *m {
            let cat = &truth.catalysts[c];
            t_err[c] = Some((events[e].0 - cat.t_intake).abs());
            rho_rel[c] = events[e].1.map(|r| (r - cat.rho).abs() / cat.rho);
            coeff[c] = events[e].2;
        }
    }
    let (num, den) = truth.catalysts.iter().zip(&coeff).fold((0.0, 0.0), |(num, den), (cat, f)| {
        let hg = cat.coeffs[reference];
        (num + (hg - f).powi(2), den + hg * hg)
    });
    let rel_coeff_err = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    Metrics { rel_coeff_err, rho_rel, t_err, cert_pass_rate: pass_rate(certs), event_count: events.len() }
}

/// Runs the full pipeline.
pub fn run_scenario(scenario: &Scenario, opts: RunOptions) -> Result<RunReport> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    if let Some(algorithm) = opts.algorithm {
        scenario.run.algorithm = algorithm;
    }
    let built = scenario.build()?;
    let choice = scenario.run.algorithm;
    let reference = scenario.run.reference_sensor;
    let beta = built.measurement.beta;
    let model = built.model.clone();
    let traj = Trajectory::new(built.model, built.generator, scenario.horizon, ConvolutionQuadrature::default())?;
    let sampler = Sampler::new(&traj, &built.sensors, built.measurement)?;
    let streams = sampler.streams(opts.exec)?;
    let mut records = streams.records.clone();

    let alg1 = if choice.runs_alg1() {
        let p = &built.alg1;
        let events = run_alg1(&streams.m, &sampler, p)?;
        let eps_fine = opts
            .exec
            .map(events.len(), |e| eps_for_event(&sampler, &model, p, &events[e]))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        for ev in &events {
            if let (Some(sensor), Some(i)) =
                (ev.chosen_sensor, ev.chosen_sensor.and_then(|s| ev.coeffs[s].detection_index))
            {
                for n in i - 2..=i + 2 {
                    records.push(sampler.s(sensor, n)?);
                }
            }
        }
        let certificates = certify_alg1(&events, &built.truth, p, &eps_fine);
        let summary: Vec<_> = events.iter().map(|e| (e.t_hat, e.rho_hat, e.coeff(reference))).collect();
        let metrics = metrics(&built.truth, beta, p.separation, reference, &summary, &certificates);
        Some(Alg1Outcome { events, eps_fine, certificates, metrics })
    } else {
        None
    };

    let alg2 = if choice.runs_alg2() {
        let p = &built.alg2;
        let events = run_alg2(&streams, p)?;
        let certificates = certify_alg2(&events, &built.truth, p);
        let summary: Vec<_> = events.iter().map(|e| (e.t_hat, e.rho_tilde, e.coeff(reference))).collect();
        let metrics = metrics(&built.truth, beta, p.separation, reference, &summary, &certificates);
        Some(Alg2Outcome { events, certificates, metrics })
    } else {
        None
    };

    records.sort_by(|a, b| (a.family, a.index, a.sensor_id).cmp(&(b.family, b.index, b.sensor_id)));
    records.dedup_by(|a, b| (a.family, a.index, a.sensor_id) == (b.family, b.index, b.sensor_id));
    Ok(RunReport {
        name: scenario.name.clone(),
        seed: scenario.seed,
        beta,
        reference_sensor: reference,
        truth: built.truth,
        records,
        alg1,
        alg2,
    })
}
