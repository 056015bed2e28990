// SPDX-License-Identifier: Apache-2.0

//! Error-bound certificates.
//!
//! Every guarantee of the two detectors is evaluated as a right-hand side and
//! compared with the observed error against ground truth. A certificate is
//! satisfied when `observed ≤ rhs + 1e-12`.
//!
//! Threshold detection (per event and sensor, with the intake in
//! `[nβ, (n+1)β)`):
//!
//! ```text
//! thm1_coeff   |𝔣 - ⟨h,g⟩| ≤ Q̃ + v₂ + α e(3β) + 3Lβ‖g‖ + 2σ + 2Q
//! case1_coeff  |𝔣 - ⟨h,g⟩| ≤ v₁ + α e(3β) + 3Lβ‖g‖ + 2σ   (+ Q̃ when 𝔣 = 0)
//! case2_coeff  |𝔣 - ⟨h,g⟩| ≤ v₂ + α e(3β) + 3Lβ‖g‖ + 2σ   (+ Q̃ when 𝔣 = 0)
//! case3_coeff  |⟨h,g⟩|     ≤ v₁ + α e(2β) + 2Lβ‖g‖ + 2σ + 2Q
//! thm1_rate    |ρ - ρ̄|/ρ   ≤ (α e(3β)(ρ̂-ρ̌)/ρ̌ + L‖g‖(2/ρ̌ + 3β) + ε/ρ̌ + 4σ/ρ̌ + 2σ) / |𝔣|
//! ```
//!
//! Prony–Laplace detection:
//!
//! ```text
//! thm2_coeff        |𝔣 - ⟨h,g⟩| ≤ H‖g‖(E - 1 + δβE/√(ρ̌²β² + 4π²k²))
//!                                   + 2√2 β e^{3ρ̂β}(‖g‖(12L_ℓ/π + Hρ̂) + 6σ),
//!                                   E = e^{β(3δ + ρ̂)}, δ = |ρ̃ - ρ|
//! thm2_rate         |ρ̃ - ρ|     ≤ ((4/π)L_ℓ‖g‖(1 + 3ρ̂β) + 4σ(1 + ρ̂β))/M + ρ̂ - (1 - e^{-ρ̂β})/β
//! prop_coeff_zero   |⟨h,g⟩|     ≤ 8√2 β e^{3ρ̂β}((3/π)L_ℓ‖g‖ + σ)
//! prop_no_recovery  |⟨h,g⟩|     ≤ 2√2 β e^{2ρ̂β}(‖g‖((8/π)L + ρ̂H) + 12σ)
//! ```
//!
//! Timing certificates (`thm1_time`, `thm2_time`) state `|𝔱 - t| ≤ β`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::detect_alg1::{Alg1Params, DetectionEvent};
use crate::detect_alg2::{Alg2Event, Alg2Params};
use crate::dynamics::SourceModel;
use crate::hilbert::{inner, GridFunction};
use crate::{Error, Result};

/// Absolute slack of every certificate comparison.
pub const CERTIFICATE_SLACK: f64 = 1e-12;

/// Which guarantee a certificate evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundKind {
    Thm1Time,
    Thm1Coeff,
    Thm1Rate,
    Case1Coeff,
    Case2Coeff,
    Case3Coeff,
    Thm2Time,
    Thm2Coeff,
    Thm2Rate,
    PropNoRecovery,
    PropCoeffZero,
}

impl BoundKind {
    pub const ALL: [BoundKind; 11] = [
        BoundKind::Thm1Time,
        BoundKind::Thm1Coeff,
        BoundKind::Thm1Rate,
        BoundKind::Case1Coeff,
        BoundKind::Case2Coeff,
        BoundKind::Case3Coeff,
        BoundKind::Thm2Time,
        BoundKind::Thm2Coeff,
        BoundKind::Thm2Rate,
        BoundKind::PropNoRecovery,
        BoundKind::PropCoeffZero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Thm1Time => "thm1_time",
            BoundKind::Thm1Coeff => "thm1_coeff",
            BoundKind::Thm1Rate => "thm1_rate",
            BoundKind::Case1Coeff => "case1_coeff",
            BoundKind::Case2Coeff => "case2_coeff",
            BoundKind::Case3Coeff => "case3_coeff",
            BoundKind::Thm2Time => "thm2_time",
            BoundKind::Thm2Coeff => "thm2_coeff",
            BoundKind::Thm2Rate => "thm2_rate",
            BoundKind::PropNoRecovery => "prop_no_recovery",
            BoundKind::PropCoeffZero => "prop_coeff_zero",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::input(format!("unknown certificate kind `{s}`")))
    }
}

/// One evaluated guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCertificate {
    /// Ordinal of the detection event, absent for a missed intake.
    pub event: Option<usize>,
    /// 1-based ordinal of the matched true intake, absent for a false alarm.
    pub catalyst: Option<usize>,
    /// Sensor the bound refers to, absent for timing certificates.
    pub sensor_id: Option<usize>,
    pub kind: BoundKind,
    pub rhs: f64,
    pub observed: f64,
    pub satisfied: bool,
}

impl BoundCertificate {
    pub fn new(
        event: Option<usize>,
        catalyst: Option<usize>,
        sensor_id: Option<usize>,
        kind: BoundKind,
        rhs: f64,
        observed: f64,
    ) -> Self {
        let satisfied = observed <= rhs + CERTIFICATE_SLACK;
        BoundCertificate { event, catalyst, sensor_id, kind, rhs, observed, satisfied }
    }
}

/// Constants entering the right-hand sides for one sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub beta: f64,
    pub sigma: f64,
    /// Background Lipschitz constant `L`.
    pub lipschitz: f64,
    /// Local constant `L_ℓ` of the Prony–Laplace thresholds.
    pub lipschitz_local: f64,
    /// `H`.
    pub mass_bound: f64,
    /// `R`.
    pub sensor_bound: f64,
    /// `D`.
    pub separation: f64,
    pub rho_lo: f64,
    pub rho_hi: f64,
    /// Threshold multiplier `K`.
    pub threshold_multiplier: f64,
    /// Laplace frequency index.
    pub k: i64,
    /// `‖g‖`.
    pub g_norm: f64,
    pub v1: f64,
    pub v2: f64,
    /// `|𝔣(g)|`.
    pub coeff_abs: f64,
    /// `ε(β̃)`, the error of the fine-scale derivative combination.
    pub eps_fine: f64,
    /// `|ρ̃ - ρ|`.
    pub rho_error: f64,
    /// `M(g)`.
    pub m_g: f64,
}

impl Default for BoundInputs {
    fn default() -> Self {
        BoundInputs {
            beta: 0.0,
            sigma: 0.0,
            lipschitz: 0.0,
            lipschitz_local: 0.0,
            mass_bound: 0.0,
            sensor_bound: 0.0,
            separation: 1.0,
            rho_lo: 1.0,
            rho_hi: 1.0,
            threshold_multiplier: 1.0,
            k: 1,
            g_norm: 0.0,
            v1: 0.0,
            v2: 0.0,
            coeff_abs: 0.0,
            eps_fine: 0.0,
            rho_error: 0.0,
            m_g: 0.0,
        }
    }
}

impl BoundInputs {
    /// Inputs for one sensor of the threshold detector.
    pub fn from_alg1(p: &Alg1Params, sensor: usize) -> Self {
        BoundInputs {
            beta: p.beta,
            sigma: p.sigma,
            lipschitz: p.lipschitz,
            lipschitz_local: p.lipschitz,
            mass_bound: p.mass_bound,
            sensor_bound: p.sensor_bound,
            separation: p.separation,
            rho_lo: p.rho_lo,
            rho_hi: p.rho_hi,
            threshold_multiplier: p.threshold_multiplier,
            g_norm: p.sensors[sensor].norm(),
            ..BoundInputs::default()
        }
    }

    /// Inputs for one sensor of the Prony–Laplace detector at local constant `l_ell`.
    pub fn from_alg2(p: &Alg2Params, sensor: usize, l_ell: f64) -> Self {
        let g_norm = p.sensors[sensor].norm();
        BoundInputs {
            beta: p.beta,
            sigma: p.sigma,
            lipschitz: p.lipschitz,
            lipschitz_local: l_ell,
            mass_bound: p.mass_bound,
            sensor_bound: g_norm,
            separation: p.separation,
            rho_lo: p.rho_lo,
            rho_hi: p.rho_hi,
            k: p.k,
            g_norm,
            ..BoundInputs::default()
        }
    }

    /// Every real input must be finite and nonnegative, `ρ̌ ≤ ρ̂` positive and `k ≠ 0`.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("sigma", self.sigma),
            ("lipschitz", self.lipschitz),
            ("lipschitz_local", self.lipschitz_local),
            ("mass_bound", self.mass_bound),
            ("sensor_bound", self.sensor_bound),
            ("separation", self.separation),
            ("threshold_multiplier", self.threshold_multiplier),
            ("g_norm", self.g_norm),
            ("v1", self.v1),
            ("v2", self.v2),
            ("coeff_abs", self.coeff_abs),
            ("eps_fine", self.eps_fine),
            ("rho_error", self.rho_error),
            ("m_g", self.m_g),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invariant("nonnegative-inputs", format!("{name} = {v}")));
        }
        if !(self.rho_lo > 0.0 && self.rho_lo <= self.rho_hi) {
            return Err(Error::invariant("rate-bounds", format!("[{}, {}]", self.rho_lo, self.rho_hi)));
        }
        if self.k == 0 {
            return Err(Error::invariant("laplace-frequency", "k must be nonzero"));
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

    /// `Q̃ = (α + H‖g‖) e(β) + Lβ‖g‖ + 2σ`.
    pub fn q_tilde(&self) -> f64 {
        (self.alpha() + self.mass_bound * self.g_norm) * self.e_of(self.beta)
            + self.lipschitz * self.beta * self.g_norm
            + 2.0 * self.sigma
    }

    /// `Q = K Q̃`.
    pub fn q(&self) -> f64 {
        self.threshold_multiplier * self.q_tilde()
    }
}

/// `v_k = |⟨h,g⟩| (1 - e^{-ρ((n+k)β - t_j)} (1 - e^{-ρβ})/(ρβ))` for an intake
/// at `t_j ∈ [nβ, (n+1)β)`.
pub fn v_k(hg: f64, rho: f64, t_j: f64, n: i64, k: i64, beta: f64) -> f64 {
    let lag = (n + k) as f64 * beta - t_j;
    let average = -(-rho * beta).exp_m1() / (rho * beta);
    hg.abs() * (1.0 - (-rho * lag).exp() * average)
}

/// The step index `n` with `nβ ≤ t < (n+1)β`, consistent with the
/// floating-point step boundaries `n as f64 * β`.
pub fn interval_index(t: f64, beta: f64) -> i64 {
    let mut n = (t / beta).floor() as i64;
    while n as f64 * beta > t {
        n -= 1;
    }
    while (n + 1) as f64 * beta <= t {
        n += 1;
    }
    n
}

/// Unified coefficient bound of the threshold detector.
pub fn bound_thm1_coeff(b: &BoundInputs) -> f64 {
    b.q_tilde() + b.v2 + b.alpha() * b.e_of(3.0 * b.beta) + 3.0 * b.lipschitz * b.beta * b.g_norm
        + 2.0 * b.sigma
        + 2.0 * b.q()
}

/// Relative rate-error bound of the threshold detector; refused unless `|𝔣| > Q̃`.
pub fn bound_thm1_rate(b: &BoundInputs) -> Result<f64> {
    let qt = b.q_tilde();
    if !(b.coeff_abs > qt) {
        return Err(Error::Refused(format!("|f| = {} does not exceed Q~ = {qt}", b.coeff_abs)));
    }
    let rl = b.rho_lo;
    let numerator = b.alpha() * b.e_of(3.0 * b.beta) * (b.rho_hi - rl) / rl
        + b.lipschitz * b.g_norm * (2.0 / rl + 3.0 * b.beta)
        + b.eps_fine / rl
        + 4.0 * b.sigma / rl
        + 2.0 * b.sigma;
    Ok(numerator / b.coeff_abs)
}

/// Noise, background and tail part shared by both coefficient bounds of the
/// Prony–Laplace detector.
fn thm2_noise_term(b: &BoundInputs) -> f64 {
    2.0 * 2f64.sqrt()
        * b.beta
        * (3.0 * b.rho_hi * b.beta).exp()
        * (b.g_norm * (12.0 / PI * b.lipschitz_local + b.mass_bound * b.rho_hi) + 6.0 * b.sigma)
}

/// Sharp coefficient bound of the Prony–Laplace detector.
pub fn bound_thm2_coeff(b: &BoundInputs) -> f64 {
    let d = b.rho_error;
    let big = (b.beta * (3.0 * d + b.rho_hi)).exp();
    let freq = ((b.rho_lo * b.beta).powi(2) + (2.0 * PI * b.k as f64).powi(2)).sqrt();
    b.mass_bound * b.g_norm * ((b.beta * (3.0 * d + b.rho_hi)).exp_m1() + d * b.beta * big / freq) + thm2_noise_term(b)
}

/// Linear-in-`β` relaxation of [`bound_thm2_coeff`] valid for any `ρ̃, ρ ∈ [ρ̌, ρ̂]`:
/// `βH‖g‖((3(ρ̂-ρ̌) + ρ̂)E' + (ρ̂-ρ̌)E'/(2π|k|))` plus the same noise term,
/// `E' = e^{β(3(ρ̂-ρ̌) + ρ̂)}`.
pub fn bound_thm2_coeff_weak(b: &BoundInputs) -> f64 {
    let spread = b.rho_hi - b.rho_lo;
    let rate = 3.0 * spread + b.rho_hi;
    let big = (b.beta * rate).exp();
    b.beta * b.mass_bound * b.g_norm * (rate * big + spread * big / (2.0 * PI * b.k.unsigned_abs() as f64))
        + thm2_noise_term(b)
}

/// Level `M(g)` must exceed for the rate bound to apply.
pub fn thm2_rate_gate(b: &BoundInputs) -> f64 {
    12.0 / PI * b.lipschitz_local * b.g_norm + 4.0 * b.sigma
}

/// Absolute rate-error bound of the Prony–Laplace detector; refused unless
/// `M(g) > (12/π)L_ℓ‖g‖ + 4σ`.
pub fn bound_thm2_rate(b: &BoundInputs) -> Result<f64> {
    let gate = thm2_rate_gate(b);
    if !(b.m_g > gate) {
        return Err(Error::Refused(format!("M(g) = {} does not exceed {gate}", b.m_g)));
    }
    let rh = b.rho_hi;
    let noise = 4.0 / PI * b.lipschitz_local * b.g_norm * (1.0 + 3.0 * rh * b.beta) + 4.0 * b.sigma * (1.0 + rh * b.beta);
    Ok(noise / b.m_g + rate_discretization(rh, b.beta))
}

/// `ρ̂ - (1 - e^{-ρ̂β})/β`, computed without cancellation.
fn rate_discretization(rho: f64, beta: f64) -> f64 {
    let x = rho * beta;
    if x < 1e-3 {
        // ρ̂(x/2 - x²/6 + x³/24)
        rho * x * (0.5 - x / 6.0 + x * x / 24.0)
    } else {
        rho + (-x).exp_m1() / beta
    }
}

/// The case-wise guarantees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseBound {
    /// Threshold detector, sensor detecting in the intake's own step.
    Case1 { coeff_zero: bool },
    /// Threshold detector, sensor detecting one step later.
    Case2 { coeff_zero: bool },
    /// Threshold detector, sensor silent in both steps.
    Case3,
    /// Prony–Laplace detector, intake not detected; uses the `L` in the inputs.
    NoRecovery,
    /// Prony–Laplace detector, sensor failing the coefficient gate.
    CoeffZero,
}

impl FromStr for CaseBound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "case1" => CaseBound::Case1 { coeff_zero: false },
            "case1_zero" => CaseBound::Case1 { coeff_zero: true },
            "case2" => CaseBound::Case2 { coeff_zero: false },
            "case2_zero" => CaseBound::Case2 { coeff_zero: true },
            "case3" => CaseBound::Case3,
            "no_recovery" => CaseBound::NoRecovery,
            "coeff_zero" => CaseBound::CoeffZero,
            other => return Err(Error::input(format!("unknown case `{other}`"))),
        })
    }
}

/// Right-hand side of a case-wise guarantee.
pub fn bound_case_props(b: &BoundInputs, case: CaseBound) -> f64 {
    let background = |steps: f64| {
        b.alpha() * b.e_of(steps * b.beta) + steps * b.lipschitz * b.beta * b.g_norm + 2.0 * b.sigma
    };
    let sqrt2 = 2f64.sqrt();
    match case {
        CaseBound::Case1 { coeff_zero } => b.v1 + background(3.0) + if coeff_zero { b.q_tilde() } else { 0.0 },
        CaseBound::Case2 { coeff_zero } => b.v2 + background(3.0) + if coeff_zero { b.q_tilde() } else { 0.0 },
        CaseBound::Case3 => b.v1 + background(2.0) + 2.0 * b.q(),
        CaseBound::NoRecovery => {
            2.0 * sqrt2
                * b.beta
                * (2.0 * b.rho_hi * b.beta).exp()
                * (b.g_norm * (8.0 / PI * b.lipschitz + b.rho_hi * b.mass_bound) + 12.0 * b.sigma)
        }
        CaseBound::CoeffZero => {
            8.0 * sqrt2
                * b.beta
                * (3.0 * b.rho_hi * b.beta).exp()
                * (3.0 / PI * b.lipschitz_local * b.g_norm + b.sigma)
        }
    }
}

/// `f(x) = (e^{βx} - 1)/x` with `f(0) = β`.
fn ratio_base(beta: f64, x: f64) -> f64 {
    if x == 0.0 {
        beta
    } else {
        (beta * x).exp_m1() / x
    }
}

/// `g_a(x) = |1 - f(x)/f(x+a)|` with `f(x) = (e^{βx} - 1)/x`, evaluated without
/// overflow for large `βx`.
pub fn ratio_gap(a: f64, beta: f64, x: f64) -> f64 {
    let y = x + a;
    let ratio = if beta * x.min(y) > 1.0 {
        // f(x)/f(y) = e^{-βa} (1 - e^{-βx}) / (1 - e^{-βy}) · y/x
        (-beta * a).exp() * (-beta * x).exp_m1() / (-beta * y).exp_m1() * y / x
    } else {
        ratio_base(beta, x) / ratio_base(beta, y)
    };
    (1.0 - ratio).abs()
}

/// `lim_{x→∞} g_a(x) = |1 - e^{-aβ}|`.
pub fn ratio_gap_limit(a: f64, beta: f64) -> f64 {
    (-a * beta).exp_m1().abs()
}

/// Known intakes with their sensor projections.
#[derive(Debug, Clone, PartialEq)]
pub struct TrueCatalyst {
    pub t_intake: f64,
    pub rho: f64,
    /// `⟨h, g⟩` per sensor.
    pub coeffs: Vec<f64>,
}

/// Ground truth of a simulated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub catalysts: Vec<TrueCatalyst>,
}

impl GroundTruth {
    pub fn from_model(model: &SourceModel, sensors: &[GridFunction]) -> Result<Self> {
        let catalysts = model
            .catalysts
            .iter()
            .map(|c| {
                let coeffs = sensors.iter().map(|g| inner(&c.h, g)).collect::<Result<Vec<_>>>()?;
                Ok(TrueCatalyst { t_intake: c.t_intake, rho: c.rho, coeffs })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(GroundTruth { catalysts })
    }

    /// Pairs each detection time with the nearest unpaired intake within
    /// `window`, closest pairs first. Entry `i` is the intake paired with event `i`.
    pub fn match_times(&self, times: &[f64], window: f64) -> Vec<Option<usize>> {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (e, &t) in times.iter().enumerate() {
            for (c, cat) in self.catalysts.iter().enumerate() {
                let d = (t - cat.t_intake).abs();
                if d <= window {
                    pairs.push((d, e, c));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut by_event = vec![None; times.len()];
        let mut taken = vec![false; self.catalysts.len()];
        for (_, e, c) in pairs {
            if by_event[e].is_none() && !taken[c] {
                by_event[e] = Some(c);
                taken[c] = true;
            }
        }
        by_event
    }

    /// Distance from `t` to the nearest intake, infinite without intakes.
    pub fn nearest_distance(&self, t: f64) -> f64 {
        self.catalysts.iter().map(|c| (t - c.t_intake).abs()).fold(f64::INFINITY, f64::min)
    }

    fn unmatched(&self, matches: &[Option<usize>]) -> Vec<usize> {
        (0..self.catalysts.len()).filter(|c| !matches.contains(&Some(*c))).collect()
    }
}

/// Half the minimal intake spacing: the pairing window of events and intakes.
pub fn match_window(beta: f64, separation: f64) -> f64 {
    0.5 * (4.0 * beta + separation)
}

/// Certificates of the threshold detector.
///
/// `eps_fine[i]` is `ε(β̃)` for event `i`, required for a rate certificate.
/// Missed intakes receive `case3_coeff` for every sensor; unpaired events
/// receive a failing `thm1_time`.
pub fn certify_alg1(
    events: &[DetectionEvent],
    truth: &GroundTruth,
    p: &Alg1Params,
    eps_fine: &[Option<f64>],
) -> Vec<BoundCertificate> {
    let beta = p.beta;
    let times: Vec<f64> = events.iter().map(|e| e.t_hat).collect();
    let matches = truth.match_times(&times, match_window(beta, p.separation));
    let mut out = Vec::new();
    for (e, ev) in events.iter().enumerate() {
        let Some(c) = matches[e] else {
            out.push(BoundCertificate::new(
                Some(ev.j),
                None,
                None,
                BoundKind::Thm1Time,
                beta,
                truth.nearest_distance(ev.t_hat),
            ));
            continue;
        };
        let cat = &truth.catalysts[c];
        let cid = Some(c + 1);
        out.push(BoundCertificate::new(
            Some(ev.j),
            cid,
            None,
            BoundKind::Thm1Time,
            beta,
            (ev.t_hat - cat.t_intake).abs(),
        ));
        let n = interval_index(cat.t_intake, beta);
        for slot in &ev.coeffs {
            let sensor = slot.sensor_id;
            let hg = cat.coeffs[sensor];
            let mut b = BoundInputs::from_alg1(p, sensor);
            b.v1 = v_k(hg, cat.rho, cat.t_intake, n, 1, beta);
            b.v2 = v_k(hg, cat.rho, cat.t_intake, n, 2, beta);
            b.coeff_abs = slot.coeff.abs();
            let observed = (slot.coeff - hg).abs();
            let cert = |kind, rhs| BoundCertificate::new(Some(ev.j), cid, Some(sensor), kind, rhs, observed);
            out.push(cert(BoundKind::Thm1Coeff, bound_thm1_coeff(&b)));
            let coeff_zero = slot.coeff == 0.0;
            match slot.detection_index.map(|i| i - n + 1) {
                Some(1) => out.push(cert(BoundKind::Case1Coeff, bound_case_props(&b, CaseBound::Case1 { coeff_zero }))),
                Some(2) => out.push(cert(BoundKind::Case2Coeff, bound_case_props(&b, CaseBound::Case2 { coeff_zero }))),
                Some(_) => {}
                None => out.push(cert(BoundKind::Case3Coeff, bound_case_props(&b, CaseBound::Case3))),
            }
        }
        if let (Some(rho_hat), Some(sensor), Some(Some(eps))) = (ev.rho_hat, ev.chosen_sensor, eps_fine.get(e)) {
            let mut b = BoundInputs::from_alg1(p, sensor);
            b.coeff_abs = ev.coeff(sensor).abs();
            b.eps_fine = *eps;
            if let Ok(rhs) = bound_thm1_rate(&b) {
                out.push(BoundCertificate::new(
                    Some(ev.j),
                    cid,
                    Some(sensor),
                    BoundKind::Thm1Rate,
                    rhs,
                    (cat.rho - rho_hat).abs() / cat.rho,
                ));
            }
        }
    }
    for c in truth.unmatched(&matches) {
        let cat = &truth.catalysts[c];
        let n = interval_index(cat.t_intake, beta);
        for (sensor, &hg) in cat.coeffs.iter().enumerate() {
            let mut b = BoundInputs::from_alg1(p, sensor);
            b.v1 = v_k(hg, cat.rho, cat.t_intake, n, 1, beta);
            b.v2 = v_k(hg, cat.rho, cat.t_intake, n, 2, beta);
            out.push(BoundCertificate::new(
                None,
                Some(c + 1),
                Some(sensor),
                BoundKind::Case3Coeff,
                bound_case_props(&b, CaseBound::Case3),
                hg.abs(),
            ));
        }
    }
    out
}

/// Certificates of the Prony–Laplace detector.
///
/// Gated sensors receive `thm2_coeff` and, when `M(g)` clears its level,
/// `thm2_rate`; the others receive `prop_coeff_zero`. Missed intakes receive
/// `prop_no_recovery` with the largest local Lipschitz constant; unpaired
/// events receive a failing `thm2_time`.
pub fn certify_alg2(events: &[Alg2Event], truth: &GroundTruth, p: &Alg2Params) -> Vec<BoundCertificate> {
    let beta = p.beta;
    let times: Vec<f64> = events.iter().map(|e| e.t_hat).collect();
    let matches = truth.match_times(&times, match_window(beta, p.separation));
    let mut out = Vec::new();
    for (e, ev) in events.iter().enumerate() {
        let Some(c) = matches[e] else {
            out.push(BoundCertificate::new(
                Some(ev.j),
                None,
                None,
                BoundKind::Thm2Time,
                beta,
                truth.nearest_distance(ev.t_hat),
            ));
            continue;
        };
        let cat = &truth.catalysts[c];
        let cid = Some(c + 1);
        out.push(BoundCertificate::new(
            Some(ev.j),
            cid,
            None,
            BoundKind::Thm2Time,
            beta,
            (ev.t_hat - cat.t_intake).abs(),
        ));
        for r in &ev.coeffs {
            let sensor = r.sensor_id;
            let hg = cat.coeffs[sensor];
            let mut b = BoundInputs::from_alg2(p, sensor, ev.l_ell);
            b.m_g = r.m_value;
            let cert = |kind, rhs, observed| BoundCertificate::new(Some(ev.j), cid, Some(sensor), kind, rhs, observed);
            match r.rho {
                Some(rho) if r.passed_gate => {
                    b.rho_error = (rho - cat.rho).abs();
                    b.coeff_abs = r.coeff.abs();
                    out.push(cert(BoundKind::Thm2Coeff, bound_thm2_coeff(&b), (r.coeff - hg).abs()));
                    if let Ok(rhs) = bound_thm2_rate(&b) {
                        out.push(cert(BoundKind::Thm2Rate, rhs, b.rho_error));
                    }
                }
                _ => out.push(cert(BoundKind::PropCoeffZero, bound_case_props(&b, CaseBound::CoeffZero), hg.abs())),
            }
        }
    }
    let l_max = p.lipschitz_max();
    for c in truth.unmatched(&matches) {
        let cat = &truth.catalysts[c];
        for (sensor, &hg) in cat.coeffs.iter().enumerate() {
            let mut b = BoundInputs::from_alg2(p, sensor, l_max);
            b.lipschitz = l_max;
            out.push(BoundCertificate::new(
                None,
                Some(c + 1),
                Some(sensor),
                BoundKind::PropNoRecovery,
                bound_case_props(&b, CaseBound::NoRecovery),
                hg.abs(),
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(k.as_str().parse::<BoundKind>().unwrap(), k);
        }
        assert!("thm3_coeff".parse::<BoundKind>().is_err());
        assert!("case4".parse::<CaseBound>().is_err());
    }

    #[test]
    fn interval_index_matches_step_boundaries() {
        assert_eq!(interval_index(0.25, 0.01), 25);
        assert_eq!(interval_index(0.0, 0.01), 0);
        assert_eq!(interval_index(0.0099999, 0.01), 0);
        for n in 0..1000 {
            let t = n as f64 * 0.01;
            assert_eq!(interval_index(t, 0.01), n);
        }
    }

    #[test]
    fn satisfied_uses_slack() {
        let c = BoundCertificate::new(None, None, None, BoundKind::Thm1Time, 1.0, 1.0 + 0.5e-12);
        assert!(c.satisfied);
        let c = BoundCertificate::new(None, None, None, BoundKind::Thm1Time, 1.0, 1.0 + 2e-12);
        assert!(!c.satisfied);
        let c = BoundCertificate::new(None, None, None, BoundKind::Thm1Time, 1.0, f64::NAN);
        assert!(!c.satisfied);
    }

    #[test]
    fn rate_discretization_is_continuous() {
        // Both branches agree with each other at the switch point `ρ̂β = 1e-3`.
        let (rho, x) = (3.0f64, 1e-3f64);
        let beta = x / rho;
        let series = rho * x * (0.5 - x / 6.0 + x * x / 24.0);
        let direct = rho + (-x).exp_m1() / beta;
        assert!((series - direct).abs() <= 1e-9 * direct);
        let below = rate_discretization(rho, beta * (1.0 - 1e-12));
        let above = rate_discretization(rho, beta);
        assert!((below - above).abs() <= 1e-9 * above);
    }
}
