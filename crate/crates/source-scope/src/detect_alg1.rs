// SPDX-License-Identifier: Apache-2.0

//! Threshold detection on averaged increments.
//!
//! For each sensor `g` the detector scans `Δ_i(g) = 𝔪_i - 𝔪_{i-1}`. The first
//! index with `|Δ_i(g)| > Q(g)` is that sensor's detection index `i_g`; its
//! coefficient estimate is `𝔪_{i_g+1} - 𝔪_{i_g-2}` when that exceeds `Q̃(g)` in
//! magnitude and zero otherwise, and the scan resumes at `i_g + 3 + ⌊D/β⌋`.
//!
//! Detections of different sensors whose indices lie within two consecutive
//! steps form one event with `𝔱 = β · min_g i_g`. A sensor detecting at the
//! minimum index is tagged `case1`, one step later `case2`; sensors without a
//! detection in the window are `undetected_sensor` with coefficient zero.
//!
//! The decay rate is estimated from the sensor `g̃` of least norm with a
//! nonzero coefficient:
//! `ρ̄ = clamp(|(Δ̃_{i+1} - Δ̃_{i-2}) / 𝔣(g̃)|, ρ̌, ρ̂)` with `Δ̃_i = 𝔰_{i+1} - 𝔰_i`.

use std::fmt;

use crate::hilbert::GridFunction;
use crate::sampling::{FineSource, Series};
use crate::{Error, Result};

/// Detector parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Params {
    /// Threshold multiplier `K ≥ 1`, `Q = K Q̃`.
    pub threshold_multiplier: f64,
    /// Fine subdivision `N`.
    pub fine_steps: usize,
    pub beta: f64,
    pub sigma: f64,
    /// Separation parameter `D`.
    pub separation: f64,
    /// Mass bound `H`.
    pub mass_bound: f64,
    /// Sensor bound `R ≥ max_g ‖g‖`.
    pub sensor_bound: f64,
    /// Background Lipschitz constant `L`.
    pub lipschitz: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// The sensor set, indexed by sensor id.
    pub sensors: Vec<GridFunction>,
}

impl Alg1Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_multiplier >= 1.0) {
            return Err(Error::invariant("threshold-multiplier", format!("K = {}", self.threshold_multiplier)));
        }
        if self.fine_steps == 0 {
            return Err(Error::invariant("fine-subdivision", "N must be positive"));
        }
        let max_norm = self.sensors.iter().map(GridFunction::norm).fold(0.0, f64::max);
        if self.sensor_bound < max_norm * (1.0 - 1e-12) {
            return Err(Error::invariant(
                "sensor-bound",
                format!("R = {} below the largest sensor norm {max_norm}", self.sensor_bound),
            ));
        }
        if !(self.rho_lo > 0.0 && self.rho_lo <= self.rho_hi) {
            return Err(Error::invariant("rate-bounds", format!("[{}, {}]", self.rho_lo, self.rho_hi)));
        }
        if !(self.beta > 0.0 && self.separation > 0.0 && self.sigma >= 0.0 && self.lipschitz >= 0.0) {
            return Err(Error::invariant("positive-parameters", "beta, D > 0 and sigma, L >= 0 required"));
        }
        Ok(())
    }

    /// `α = H R / (e^{ρ̌ D} - 1)`.
    pub fn alpha(&self) -> f64 {
        self.mass_bound * self.sensor_bound / (self.rho_lo * self.separation).exp_m1()
    }

    /// `e(t) = 1 - e^{-ρ̂ t}`.
    pub fn e_of(&self, t: f64) -> f64 {
        -(-self.rho_hi * t).exp_m1()
    }

    /// Index advance after a detection, `3 + ⌊D/β⌋`.
    pub fn skip(&self) -> i64 {
        3 + (self.separation / self.beta).floor() as i64
    }

    /// `Q̃(g)` for sensor `sensor`.
    pub fn q_tilde(&self, sensor: usize) -> f64 {
        threshold_q_tilde(&self.sensors[sensor], self)
    }

    /// `Q(g) = K Q̃(g)`.
    pub fn q(&self, sensor: usize) -> f64 {
        self.threshold_multiplier * self.q_tilde(sensor)
    }
}

/// `Q̃(g, β) = (α + H‖g‖) e(β) + Lβ‖g‖ + 2σ`.
pub fn threshold_q_tilde(g: &GridFunction, p: &Alg1Params) -> f64 {
    q_tilde_for_norm(g.norm(), p)
}

pub(crate) fn q_tilde_for_norm(g_norm: f64, p: &Alg1Params) -> f64 {
    (p.alpha() + p.mass_bound * g_norm) * p.e_of(p.beta) + p.lipschitz * p.beta * g_norm + 2.0 * p.sigma
}

/// How a sensor took part in an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    /// Detected at the event index; coefficient `𝔪_{n+1} - 𝔪_{n-2}`.
    Case1,
    /// Detected one step later; coefficient `𝔪_{n+2} - 𝔪_{n-1}`.
    Case2,
    /// No detection in the event window; coefficient zero.
    UndetectedSensor,
}

impl CaseTag {
    pub fn as_str(self) -> &'static str {
        match self {
            CaseTag::Case1 => "case1",
            CaseTag::Case2 => "case2",
            CaseTag::UndetectedSensor => "undetected_sensor",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-sensor output of an event.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorCoefficient {
    pub sensor_id: usize,
    /// `𝔣(g)`; zero or above `Q̃(g)` in magnitude.
    pub coeff: f64,
    pub case_tag: CaseTag,
    /// The sensor's own detection index, if any.
    pub detection_index: Option<i64>,
}

/// One recovered intake.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvent {
    /// Ordinal starting at 1.
    pub j: usize,
    /// `𝔱_j = β · index`.
    pub t_hat: f64,
    /// Smallest per-sensor detection index.
    pub index: i64,
    /// `ρ̄_j ∈ [ρ̌, ρ̂]`, absent when every coefficient is zero.
    pub rho_hat: Option<f64>,
    /// The unclamped ratio behind `rho_hat`.
    pub rho_ratio: Option<f64>,
    pub coeffs: Vec<SensorCoefficient>,
    /// The sensor `g̃` used for the rate.
    pub chosen_sensor: Option<usize>,
    /// Whether another sensor with nonzero coefficient had the same norm.
    pub tie: bool,
}

impl DetectionEvent {
    /// The coefficient reported for `sensor`.
    pub fn coeff(&self, sensor: usize) -> f64 {
        self.coeffs.iter().find(|c| c.sensor_id == sensor).map_or(0.0, |c| c.coeff)
    }
}

/// Rate estimate of one event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoEstimate {
    pub rho_hat: f64,
    pub ratio: f64,
    pub chosen_sensor: usize,
    pub tie: bool,
}

/// Per-sensor scan: `(detection index, gated coefficient)` pairs.
fn scan_sensor(m: &Series<f64>, sensor: usize, p: &Alg1Params) -> Result<Vec<(i64, f64)>> {
    let q = p.q(sensor);
    let qt = p.q_tilde(sensor);
    // Every scanned index needs `𝔪_{i+1}`.
    let last = m.len(sensor) as i64 - 2;
    let mut found = Vec::new();
    // The coefficient reads `𝔪_{i-2}`.
    let mut i = 2;
    while i <= last {
        let delta = m.get(sensor, i)? - m.get(sensor, i - 1)?;
        if delta.abs() > q {
            let f = m.get(sensor, i + 1)? - m.get(sensor, i - 2)?;
            found.push((i, if f.abs() > qt { f } else { 0.0 }));
            i += p.skip();
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Detection and coefficient extraction without the rate step.
pub fn detect_alg1(m: &Series<f64>, p: &Alg1Params) -> Result<Vec<DetectionEvent>> {
    p.validate()?;
    if m.sensors() != p.sensors.len() {
        return Err(Error::input(format!("stream has {} sensors, parameters {}", m.sensors(), p.sensors.len())));
    }
    let mut hits: Vec<(i64, usize, f64)> = Vec::new();
    for sensor in 0..p.sensors.len() {
        hits.extend(scan_sensor(m, sensor, p)?.into_iter().map(|(i, f)| (i, sensor, f)));
    }
    hits.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut events = Vec::new();
    let mut pos = 0;
    while pos < hits.len() {
        let i0 = hits[pos].0;
        let mut coeffs: Vec<SensorCoefficient> = (0..p.sensors.len())
            .map(|sensor_id| SensorCoefficient {
                sensor_id,
                coeff: 0.0,
                case_tag: CaseTag::UndetectedSensor,
                detection_index: None,
            })
            .collect();
        while pos < hits.len() && hits[pos].0 <= i0 + 1 {
            let (i, sensor, f) = hits[pos];
            let slot = &mut coeffs[sensor];
            if slot.detection_index.is_none() {
                slot.coeff = f;
                slot.case_tag = if i == i0 { CaseTag::Case1 } else { CaseTag::Case2 };
                slot.detection_index = Some(i);
            }
            pos += 1;
        }
        events.push(DetectionEvent {
            j: events.len() + 1,
            t_hat: i0 as f64 * p.beta,
            index: i0,
            rho_hat: None,
            rho_ratio: None,
            coeffs,
            chosen_sensor: None,
            tie: false,
        });
    }
    Ok(events)
}

/// The rate estimate for one event, or `None` when every coefficient is zero.
pub fn estimate_rho_alg1(fine: &dyn FineSource, event: &DetectionEvent, p: &Alg1Params) -> Result<Option<RhoEstimate>> {
    let mut best: Option<(usize, f64)> = None;
    let mut tie = false;
    for c in event.coeffs.iter().filter(|c| c.coeff != 0.0) {
        let norm = p.sensors[c.sensor_id].norm();
        match best {
            None => best = Some((c.sensor_id, norm)),
            Some((_, b)) if norm < b => {
                best = Some((c.sensor_id, norm));
                tie = false;
            }
            Some((_, b)) if norm == b => tie = true,
            _ => {}
        }
    }
    let Some((sensor, _)) = best else { return Ok(None) };
    let slot = &event.coeffs[sensor];
    let i = slot.detection_index.expect("nonzero coefficient implies a detection");
    let s = |n: i64| fine.fine(sensor, n);
    let numerator = (s(i + 2)? - s(i + 1)?) - (s(i - 1)? - s(i - 2)?);
    let ratio = (numerator / slot.coeff).abs();
    Ok(Some(RhoEstimate { rho_hat: ratio.clamp(p.rho_lo, p.rho_hi), ratio, chosen_sensor: sensor, tie }))
}

/// Full detector: events with coefficients and rates.
pub fn run_alg1(m: &Series<f64>, fine: &dyn FineSource, p: &Alg1Params) -> Result<Vec<DetectionEvent>> {
    let mut events = detect_alg1(m, p)?;
    for ev in &mut events {
        if let Some(est) = estimate_rho_alg1(fine, ev, p)? {
            ev.rho_hat = Some(est.rho_hat);
            ev.rho_ratio = Some(est.ratio);
            ev.chosen_sensor = Some(est.chosen_sensor);
            ev.tie = est.tie;
        }
    }
    Ok(events)
}
