// SPDX-License-Identifier: Apache-2.0

//! Prony–Laplace detection from `Δ_{s,ℓ}(g) = m_{s,ℓ} - m_{0,ℓ}`.
//!
//! At index `ℓ` the detector compares `|Δ_ℓ - Δ_{ℓ-1}|` with
//! `Q_*(g) = Q_1(g) + ρ̂H‖g‖`, where `Q_n(g) = (4n/π) L_{ℓ-2} ‖g‖ + 4σ` uses the
//! local Lipschitz constant of background plus catalyst tails. After a
//! detection at `ℓ`, each sensor with `|Δ_{ℓ+1} - Δ_{ℓ-2}| > Q_3(g)` yields
//!
//! ```text
//! ρ̃(g) = clamp(Re[(Δ_{ℓ+1} - Δ_{ℓ+2}) / (β (Δ_{ℓ+1} - Δ_{ℓ-2}))], ρ̌, ρ̂)
//! 𝔣(g) = Re[ρ̃ (ρ̃ + s) β² / (s (e^{-2ρ̃β} - e^{-ρ̃β})) (Δ_{ℓ+1} - Δ_{ℓ-2})]
//! ```
//!
//! and the scan resumes at `ℓ + 3 + ⌊D/β⌋`, which also becomes the reference
//! index `ℓ₀` of the local Lipschitz constant. Since consecutive intakes are at
//! least `4β + D` apart and a detection lags its intake by at most one step, the
//! resumed scan never starts past the interval holding the next intake.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::hilbert::GridFunction;
use crate::sampling::{laplace_s, Streams};
use crate::{Error, Result};

/// Detector parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Params {
    /// Laplace frequency index, `s = 2πik/β`.
    pub k: i64,
    /// First scanned index `ℓ₀ ≥ 2`.
    pub ell0: i64,
    pub beta: f64,
    pub sigma: f64,
    pub separation: f64,
    pub mass_bound: f64,
    pub lipschitz: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    pub sensors: Vec<GridFunction>,
}

impl Alg2Params {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invariant("laplace-frequency", "k must be nonzero"));
        }
        if !(self.rho_lo > 0.0 && self.rho_lo <= self.rho_hi) {
            return Err(Error::invariant("rate-bounds", format!("[{}, {}]", self.rho_lo, self.rho_hi)));
        }
        let limit = 2.0 * PI * self.k.unsigned_abs() as f64 / self.rho_hi;
        if !(self.beta > 0.0 && self.beta < limit) {
            return Err(Error::invariant(
                "laplace-step",
                format!("beta = {} must lie in (0, 2*pi*k/rho_hi = {limit})", self.beta),
            ));
        }
        if self.ell0 < 2 {
            return Err(Error::invariant("start-index", format!("ell0 = {} leaves no room for ell - 2", self.ell0)));
        }
        if !(self.separation > 0.0 && self.sigma >= 0.0 && self.lipschitz >= 0.0 && self.mass_bound >= 0.0) {
            return Err(Error::invariant("positive-parameters", "D > 0 and sigma, L, H >= 0 required"));
        }
        Ok(())
    }

    pub fn s(&self) -> Complex64 {
        laplace_s(self.k, self.beta)
    }

    /// Index advance after a detection, `3 + ⌊D/β⌋`.
    pub fn skip(&self) -> i64 {
        3 + (self.separation / self.beta).floor() as i64
    }

    /// `sup_ℓ L_ℓ`: the local constant one step before any reference index.
    pub fn lipschitz_max(&self) -> f64 {
        lipschitz_local(-2, 0, self)
    }
}

/// `L_ℓ = L + H ρ̂ e^{ρ̌ (ℓ₀ - ℓ) β} / (1 - e^{-ρ̌ (4β + D)})`, a Lipschitz
/// constant of background plus all catalyst tails on `[ℓβ, ∞)` when every
/// earlier intake precedes `ℓ₀β`.
pub fn lipschitz_local(ell: i64, ell0: i64, p: &Alg2Params) -> f64 {
    let tail = (p.rho_lo * (ell0 - ell) as f64 * p.beta).exp();
    let geometric = -(-p.rho_lo * (4.0 * p.beta + p.separation)).exp_m1();
    p.lipschitz + p.mass_bound * p.rho_hi * tail / geometric
}

/// The four decision levels of one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub qstar: f64,
}

/// `Q_n = (4n/π) L_ℓ ‖g‖ + 4σ` for `n = 1, 2, 3` and `Q_* = Q_1 + ρ̂ H ‖g‖`.
pub fn thresholds_alg2(g: &GridFunction, l_ell: f64, p: &Alg2Params) -> Thresholds {
    thresholds_for_norm(g.norm(), l_ell, p)
}

pub(crate) fn thresholds_for_norm(g_norm: f64, l_ell: f64, p: &Alg2Params) -> Thresholds {
    let q = |n: f64| 4.0 * n / PI * l_ell * g_norm + 4.0 * p.sigma;
    let q1 = q(1.0);
    Thresholds { q1, q2: q(2.0), q3: q(3.0), qstar: q1 + p.rho_hi * p.mass_bound * g_norm }
}

/// Access to `Δ_{s,ℓ}(g)`.
pub trait DeltaSource {
    fn delta(&self, sensor: usize, ell: i64) -> Result<Complex64>;
    /// One past the last index available for every sensor.
    fn end(&self) -> i64;
}

impl DeltaSource for Streams {
    fn delta(&self, sensor: usize, ell: i64) -> Result<Complex64> {
        Streams::delta(self, sensor, ell)
    }

    fn end(&self) -> i64 {
        (0..self.laplace.sensors())
            .map(|i| self.laplace.len(i).min(self.laplace0.len(i)))
            .min()
            .unwrap_or(0) as i64
    }
}

/// Per-sensor output of an event.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2SensorResult {
    pub sensor_id: usize,
    /// Whether `|Δ_{ℓ+1} - Δ_{ℓ-2}| > Q_3(g)`.
    pub passed_gate: bool,
    /// `𝔣(g)`, zero when the gate failed.
    pub coeff: f64,
    /// Imaginary part discarded from `𝔣(g)`.
    pub im_residual: f64,
    /// `M(g) = β |Δ_{ℓ+1} - Δ_{ℓ-2}|`.
    pub m_value: f64,
    /// Clamped rate from this sensor.
    pub rho: Option<f64>,
    /// Unclamped real rate ratio.
    pub rate_raw: Option<f64>,
    /// Imaginary part discarded from the rate ratio.
    pub rate_im: Option<f64>,
    /// `Q_3(g)` at the event.
    pub q3: f64,
}

/// One recovered intake.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg2Event {
    /// Ordinal starting at 1.
    pub j: usize,
    /// `𝔱_j = ℓβ`.
    pub t_hat: f64,
    pub index: i64,
    /// Reference index `ℓ₀` in force at detection.
    pub ell0: i64,
    /// `L_{ℓ-2}` used by the thresholds.
    pub l_ell: f64,
    /// The rate of the first sensor passing the gate.
    pub rho_tilde: Option<f64>,
    pub rate_sensor: Option<usize>,
    pub coeffs: Vec<Alg2SensorResult>,
}

impl Alg2Event {
    pub fn coeff(&self, sensor: usize) -> f64 {
        self.coeffs.iter().find(|c| c.sensor_id == sensor).map_or(0.0, |c| c.coeff)
    }
}

/// `ρ (ρ + s) β² / (s (e^{-2ρβ} - e^{-ρβ}))`.
pub fn coefficient_factor(rho: f64, s: Complex64, beta: f64) -> Complex64 {
    let denom = s * ((-2.0 * rho * beta).exp() - (-rho * beta).exp());
    (s + rho) * (rho * beta * beta) / denom
}

/// Runs the detector over every available index.
pub fn run_alg2(deltas: &dyn DeltaSource, p: &Alg2Params) -> Result<Vec<Alg2Event>> {
    p.validate()?;
    let s = p.s();
    let beta = p.beta;
    let norms: Vec<f64> = p.sensors.iter().map(GridFunction::norm).collect();
    // Every scanned index needs `Δ` up to `ℓ + 2`.
    let end = deltas.end() - 2;
    let mut events = Vec::new();
    let mut ell0 = p.ell0;
    let mut ell = p.ell0;
    while ell < end {
        let l_ell = lipschitz_local(ell - 2, ell0, p);
        let mut excess = f64::NEG_INFINITY;
        for (i, &norm) in norms.iter().enumerate() {
            let jump = (deltas.delta(i, ell)? - deltas.delta(i, ell - 1)?).norm();
            excess = excess.max(jump - thresholds_for_norm(norm, l_ell, p).qstar);
        }
        if excess <= 0.0 {
            ell += 1;
            continue;
        }
        let mut coeffs = Vec::with_capacity(norms.len());
        let mut rho_tilde = None;
        let mut rate_sensor = None;
        for (i, &norm) in norms.iter().enumerate() {
            let q3 = thresholds_for_norm(norm, l_ell, p).q3;
            let d_next = deltas.delta(i, ell + 1)?;
            let d3 = d_next - deltas.delta(i, ell - 2)?;
            let m_value = beta * d3.norm();
            let mut result = Alg2SensorResult {
                sensor_id: i,
                passed_gate: false,
                coeff: 0.0,
                im_residual: 0.0,
                m_value,
                rho: None,
                rate_raw: None,
                rate_im: None,
                q3,
            };
            if d3.norm() > q3 {
                let ratio = (d_next - deltas.delta(i, ell + 2)?) / (d3 * beta);
                let rho = ratio.re.clamp(p.rho_lo, p.rho_hi);
                let f = coefficient_factor(rho, s, beta) * d3;
                result.passed_gate = true;
                result.coeff = f.re;
                result.im_residual = f.im;
                result.rho = Some(rho);
                result.rate_raw = Some(ratio.re);
                result.rate_im = Some(ratio.im);
                if rho_tilde.is_none() {
                    rho_tilde = Some(rho);
                    rate_sensor = Some(i);
                }
            }
            coeffs.push(result);
        }
        events.push(Alg2Event {
            j: events.len() + 1,
            t_hat: ell as f64 * beta,
            index: ell,
            ell0,
            l_ell,
            rho_tilde,
            rate_sensor,
            coeffs,
        });
        ell += p.skip();
        ell0 = ell;
    }
    Ok(events)
}

/// `(Δ_{ℓ+1} - Δ_{ℓ+2}) / (β Δ_{ℓ+1})` from the closed forms for a single
/// unit catalyst with rate `rho` entering at `t_j`, evaluated at `s = 2πik/β`.
/// For `ℓβ ≤ t_j < (ℓ+1)β` this equals `(1 - e^{-ρβ})/β`.
pub fn prony_rate_limit_check(rho: f64, t_j: f64, ell: i64, beta: f64, k: i64) -> f64 {
    let s = laplace_s(k, beta);
    let delta = |l: i64| -> Complex64 {
        let t0 = l as f64 * beta;
        let t1 = (l + 1) as f64 * beta;
        let denom = rho * (s + rho) * beta * beta;
        if t_j < t0 {
            s * ((rho * (t_j - t1)).exp() - (rho * (t_j - t0)).exp()) / denom
        } else if t_j < t1 {
            (rho * ((-s * (t_j - t0)).exp() - 1.0) + s * (rho * (t_j - t1)).exp_m1()) / denom
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let d1 = delta(ell + 1);
    ((d1 - delta(ell + 2)) / (d1 * beta)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;

    fn params() -> Alg2Params {
        Alg2Params {
            k: 1,
            ell0: 3,
            beta: 0.01,
            sigma: 1e-3,
            separation: 2.0,
            mass_bound: 2.5,
            lipschitz: 1e-2,
            rho_lo: 1.0,
            rho_hi: 3.0,
            sensors: vec![GridFunction::constant(&Grid::standard(), 1.0)],
        }
    }

    #[test]
    fn q3_identity() {
        let p = params();
        let t = thresholds_alg2(&p.sensors[0], 0.7, &p);
        assert!((t.q3 - (3.0 * t.q1 - 8.0 * p.sigma)).abs() < 1e-14);
    }

    #[test]
    fn local_constant_decreases_to_background() {
        let p = params();
        let mut prev = f64::INFINITY;
        for ell in 3..2000 {
            let l = lipschitz_local(ell, 3, &p);
            assert!(l < prev && l > p.lipschitz);
            prev = l;
        }
        assert!((lipschitz_local(100_000, 3, &p) - p.lipschitz).abs() < 1e-12);
    }

    #[test]
    fn step_too_large_for_frequency_is_rejected() {
        let mut p = params();
        p.beta = 2.2;
        assert!(matches!(p.validate(), Err(Error::Invariant { constraint: "laplace-step", .. })));
    }

    #[test]
    fn rate_limit_identity_for_in_step_intake() {
        for beta in [0.1, 0.05, 0.025] {
            let v = prony_rate_limit_check(1.0, 0.0, 0, beta, 1);
            assert!((v - (1.0 - (-beta).exp()) / beta).abs() < 1e-10);
        }
    }
}
