// SPDX-License-Identifier: Apache-2.0

//! Weak measurements of a simulated trajectory.
//!
//! Three families are produced for every sensor `g`:
//!
//! * `𝔪_n = ⟨u((n+1)β) - u(nβ), g/β⟩ - ∫_{nβ}^{(n+1)β} ⟨u(t), A*g/β⟩ dt + ν_n`
//! * `𝔰_n = ⟨u(nβ+β̃) - u(nβ), g/(β̃β)⟩ - ⟨u(nβ), A*g/β⟩ + ν̃_n`, `β̃ = β/N`
//! * `m_{s,ℓ} = ∫_{ℓβ}^{(ℓ+1)β} e^{-st} ⟨u(t), (s̄ - A*) g/β²⟩ dt + ν_{s,ℓ}`,
//!   `s = 2πik/β`
//!
//! Time integrals use 32-point Gauss–Legendre on each step, split at intake
//! times so every panel integrates a smooth function. Because
//! `e^{-s ℓβ} = 1`, the Laplace weight is evaluated at the offset `t - ℓβ`.
//! For `k ≠ 0` the weight integrates to zero over a step, so the Laplace
//! integrand is taken relative to its value at `ℓβ`; this removes the
//! cancellation between `s u` and its oscillating weight when `u` is large.
//!
//! Noise is a pure function of `(seed, family, index, sensor)`, so any subset
//! of measurements can be generated in any order, on any thread, with
//! identical results.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Projection, SourceModel, Trajectory};
use crate::exec::Execution;
use crate::hilbert::{inner, GaussLegendre, GridFunction};
use crate::{Error, Result};

/// Gauss–Legendre points per time step for the measurement integrals.
pub const STEP_POINTS: usize = 32;

/// Distribution of the additive measurement noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Independent draws: uniform on `[-σ, σ]` for real families, uniform
    /// angle and uniform radius in `[0, σ]` for complex ones.
    #[default]
    Uniform,
    /// `±σ` alternating with the index, saturating `|ν_n - ν_{n-1}| = 2σ`.
    /// The `s = 0` Laplace family alternates with the opposite sign so that
    /// `Δ_{s,ℓ}` differences reach `4σ`.
    AdversarialAlternating,
    /// No noise.
    Zero,
}

/// Parameters shared by every measurement family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    /// Time step `β` (seconds).
    pub beta: f64,
    /// Fine subdivision `N`, `β̃ = β/N`.
    pub fine_steps: usize,
    /// Laplace frequency index, `s = 2πik/β`.
    pub k: i64,
    /// Noise bound `σ`.
    pub sigma: f64,
    pub noise_mode: NoiseMode,
    pub seed: u64,
    /// Horizon `𝒯` (seconds).
    pub horizon: f64,
}

impl MeasurementConfig {
    /// Checks the configuration; `rho_hi` adds the Laplace hypothesis
    /// `β < 2π|k|/ρ̂` needed when the Laplace family will be consumed.
    pub fn validate(&self, rho_hi: Option<f64>) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::invariant("time-step", format!("beta = {}", self.beta)));
        }
        if self.fine_steps == 0 {
            return Err(Error::invariant("fine-subdivision", "N must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invariant("noise-bound", format!("sigma = {}", self.sigma)));
        }
        if !(self.horizon >= self.beta && self.horizon.is_finite()) {
            return Err(Error::invariant("horizon", format!("horizon {} shorter than beta {}", self.horizon, self.beta)));
        }
        if let Some(rho_hi) = rho_hi {
            if self.k == 0 {
                return Err(Error::invariant("laplace-frequency", "k must be nonzero"));
            }
            let limit = 2.0 * PI * self.k.unsigned_abs() as f64 / rho_hi;
            if !(self.beta < limit) {
                return Err(Error::invariant(
                    "laplace-step",
                    format!("beta = {} must be below 2*pi*k/rho_hi = {limit}", self.beta),
                ));
            }
        }
        Ok(())
    }

    /// `β̃ = β / N`.
    pub fn fine_step(&self) -> f64 {
        self.beta / self.fine_steps as f64
    }

    /// `s = 2πik/β`.
    pub fn s(&self) -> Complex64 {
        laplace_s(self.k, self.beta)
    }

    /// Number of complete steps `[nβ, (n+1)β] ⊂ [0, 𝒯]`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.beta * (1.0 + 1e-12)).floor() as usize
    }

    fn within_horizon(&self, t: f64) -> bool {
        t <= self.horizon * (1.0 + 1e-12)
    }
}

/// `2πik/β` as a complex number.
pub fn laplace_s(k: i64, beta: f64) -> Complex64 {
    Complex64::new(0.0, 2.0 * PI * k as f64 / beta)
}

/// Measurement family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// Averaged increments `𝔪_n`.
    M,
    /// Fine-scale derivative samples `𝔰_n`.
    S,
    /// Laplace-weighted averages `m_{s,ℓ}` with `s = 2πik/β`.
    Laplace { k: i64 },
}

impl Family {
    /// Column value used in measurement dumps.
    pub fn name(self) -> &'static str {
        match self {
            Family::M => "m",
            Family::S => "s",
            Family::Laplace { k: 0 } => "laplace0",
            Family::Laplace { .. } => "laplace",
        }
    }

    fn code(self) -> u64 {
        match self {
            Family::M => 1,
            Family::S => 2,
            Family::Laplace { k } => 3 ^ ((k as u64) << 8),
        }
    }

    fn is_complex(self) -> bool {
        matches!(self, Family::Laplace { k } if k != 0)
    }
}

/// One noisy measurement with the noise that was added to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub family: Family,
    pub index: i64,
    pub sensor_id: usize,
    pub value: Complex64,
    pub noise: Complex64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The noise added to measurement `(family, index, sensor)`; always
/// `|ν| ≤ σ`.
pub fn noise_draw(cfg: &MeasurementConfig, family: Family, index: i64, sensor: usize) -> Complex64 {
    let sigma = cfg.sigma;
    if sigma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    match cfg.noise_mode {
        NoiseMode::Zero => Complex64::new(0.0, 0.0),
        NoiseMode::AdversarialAlternating => {
            let sign = if index.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let flip = if family == (Family::Laplace { k: 0 }) { -1.0 } else { 1.0 };
            Complex64::new(flip * sign * sigma, 0.0)
        }
        NoiseMode::Uniform => {
            let key = splitmix64(
                splitmix64(splitmix64(splitmix64(cfg.seed) ^ family.code()) ^ index as u64) ^ sensor as u64,
            );
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            if family.is_complex() {
                let radius = sigma * rng.random::<f64>();
                let angle = 2.0 * PI * rng.random::<f64>();
                let z = Complex64::from_polar(radius, angle);
                let r = z.norm();
                if r > sigma {
                    z * (sigma / r)
                } else {
                    z
                }
            } else {
                Complex64::new(rng.random_range(-sigma..=sigma), 0.0)
            }
        }
    }
}

/// Per-sensor indexed values with explicit gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct Series<T> {
    family: &'static str,
    data: Vec<Vec<Option<T>>>,
}

impl<T: Copy> Series<T> {
    pub fn new(family: &'static str, sensors: usize) -> Self {
        Series { family, data: vec![Vec::new(); sensors] }
    }

    pub fn sensors(&self) -> usize {
        self.data.len()
    }

    /// One past the largest stored index for `sensor`.
    pub fn len(&self, sensor: usize) -> usize {
        self.data.get(sensor).map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(Vec::is_empty)
    }

    /// Stores a value; negative indices and unknown sensors are rejected.
    pub fn insert(&mut self, sensor: usize, index: i64, value: T) -> Result<()> {
        if index < 0 || sensor >= self.data.len() {
            return Err(Error::input(format!(
                "cannot store {} measurement for sensor {sensor} at index {index}",
                self.family
            )));
        }
        let col = &mut self.data[sensor];
        let i = index as usize;
        if col.len() <= i {
            col.resize(i + 1, None);
        }
        col[i] = Some(value);
        Ok(())
    }

    /// The stored value or a data error naming the gap.
    pub fn get(&self, sensor: usize, index: i64) -> Result<T> {
        let missing = Error::MissingData { family: self.family, index, sensor };
        if index < 0 {
            return Err(missing);
        }
        self.data.get(sensor).and_then(|c| c.get(index as usize)).copied().flatten().ok_or(missing)
    }
}

/// Source of fine-scale `𝔰_n` values, sampled on demand.
pub trait FineSource {
    fn fine(&self, sensor: usize, n: i64) -> Result<f64>;
}

impl FineSource for Series<f64> {
    fn fine(&self, sensor: usize, n: i64) -> Result<f64> {
        self.get(sensor, n)
    }
}

/// The coarse measurement streams consumed by the detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Streams {
    /// Every record, ordered by family, index, sensor.
    pub records: Vec<MeasurementRecord>,
    /// `𝔪_n`.
    pub m: Series<f64>,
    /// `m_{s,ℓ}` at `s = 2πik/β`.
    pub laplace: Series<Complex64>,
    /// `m_{0,ℓ}`.
    pub laplace0: Series<f64>,
    /// `𝔰_n` values that were recorded (possibly sparse).
    pub fine: Series<f64>,
}

impl Streams {
    /// Indexes records by family. Records of unknown sensors are rejected.
    pub fn from_records(mut records: Vec<MeasurementRecord>, sensors: usize) -> Result<Self> {
        records.sort_by(|a, b| (a.family, a.index, a.sensor_id).cmp(&(b.family, b.index, b.sensor_id)));
        let mut m = Series::new("m", sensors);
        let mut laplace = Series::new("laplace", sensors);
        let mut laplace0 = Series::new("laplace0", sensors);
        let mut fine = Series::new("s", sensors);
        for r in &records {
            match r.family {
                Family::M => m.insert(r.sensor_id, r.index, r.value.re)?,
                Family::S => fine.insert(r.sensor_id, r.index, r.value.re)?,
                Family::Laplace { k: 0 } => laplace0.insert(r.sensor_id, r.index, r.value.re)?,
                Family::Laplace { .. } => laplace.insert(r.sensor_id, r.index, r.value)?,
            }
        }
        Ok(Streams { records, m, laplace, laplace0, fine })
    }

    /// `Δ_{s,ℓ}(g) = m_{s,ℓ} - m_{0,ℓ}`.
    pub fn delta(&self, sensor: usize, ell: i64) -> Result<Complex64> {
        Ok(self.laplace.get(sensor, ell)? - self.laplace0.get(sensor, ell)?)
    }
}

/// Noiseless values of the step-integrated families at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct StepValues {
    pub m: Vec<f64>,
    pub laplace: Vec<Complex64>,
    pub laplace0: Vec<f64>,
}

/// Measurement generator bound to one trajectory and sensor set.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    proj: Projection<'a>,
    cfg: MeasurementConfig,
    sensors: usize,
    gl: GaussLegendre,
    intakes: Vec<f64>,
}

impl<'a> Sampler<'a> {
    pub fn new(traj: &'a Trajectory, sensors: &[GridFunction], cfg: MeasurementConfig) -> Result<Self> {
        cfg.validate(None)?;
        if cfg.horizon > traj.horizon() * (1.0 + 1e-12) {
            return Err(Error::Range { what: "measurement horizon", t: cfg.horizon, horizon: traj.horizon() });
        }
        let mut weights = Vec::with_capacity(2 * sensors.len());
        for g in sensors {
            weights.push(g.clone());
            weights.push(traj.generator().adjoint_apply(g)?);
        }
        let proj = traj.project(&weights)?;
        let intakes = traj.model().catalysts.iter().map(|c| c.t_intake).collect();
        Ok(Sampler { proj, cfg, sensors: sensors.len(), gl: GaussLegendre::new(STEP_POINTS)?, intakes })
    }

    pub fn config(&self) -> &MeasurementConfig {
        &self.cfg
    }

    pub fn sensor_count(&self) -> usize {
        self.sensors
    }

    /// Quadrature nodes `(t, w)` on `[t0, t1]`, split at intake times.
    fn step_nodes(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        let margin = 1e-12 * (t1 - t0);
        let mut cuts = vec![t0];
        cuts.extend(self.intakes.iter().copied().filter(|&t| t > t0 + margin && t < t1 - margin));
        cuts.push(t1);
        let mut nodes = Vec::with_capacity(STEP_POINTS * (cuts.len() - 1));
        for pair in cuts.windows(2) {
            nodes.extend(self.gl.mapped(pair[0], pair[1]));
        }
        nodes
    }

    fn check_index(&self, index: i64, end: f64) -> Result<()> {
        if index < 0 {
            return Err(Error::input(format!("measurement index {index} is negative")));
        }
        if !self.cfg.within_horizon(end) {
            return Err(Error::Range { what: "measurement window", t: end, horizon: self.cfg.horizon });
        }
        Ok(())
    }

    /// Noiseless `𝔪_n`, `m_{s,n}` and `m_{0,n}` for all sensors, sharing one
    /// set of state evaluations.
    pub fn step_values(&self, n: i64) -> Result<StepValues> {
        let beta = self.cfg.beta;
        let t0 = n as f64 * beta;
        let t1 = (n + 1) as f64 * beta;
        self.check_index(n, t1)?;
        let s = self.cfg.s();
        let nw = 2 * self.sensors;
        let mut left = vec![0.0; nw];
        let mut right = vec![0.0; nw];
        self.proj.eval_into(t0, &mut left)?;
        self.proj.eval_into(t1, &mut right)?;
        let mut buf = vec![0.0; nw];
        let mut int_ag = vec![0.0; self.sensors];
        let mut lap = vec![Complex64::new(0.0, 0.0); self.sensors];
        let shift = if self.cfg.k == 0 { vec![0.0; nw] } else { left.clone() };
        for (t, w) in self.step_nodes(t0, t1) {
            self.proj.eval_into(t, &mut buf)?;
            let weight = (-s * (t - t0)).exp() * w;
            for i in 0..self.sensors {
                let (ug, uag) = (buf[2 * i], buf[2 * i + 1]);
                int_ag[i] += w * uag;
                lap[i] += weight * (s * (ug - shift[2 * i]) - (uag - shift[2 * i + 1]));
            }
        }
        let b2 = beta * beta;
        Ok(StepValues {
            m: (0..self.sensors).map(|i| (right[2 * i] - left[2 * i]) / beta - int_ag[i] / beta).collect(),
            laplace: lap.into_iter().map(|z| z / b2).collect(),
            laplace0: int_ag.iter().map(|v| -v / b2).collect(),
        })
    }

    /// Noiseless `m_{s,ℓ}` for every sensor at an arbitrary frequency index.
    pub fn laplace_values(&self, ell: i64, k: i64) -> Result<Vec<Complex64>> {
        let beta = self.cfg.beta;
        let t0 = ell as f64 * beta;
        let t1 = (ell + 1) as f64 * beta;
        self.check_index(ell, t1)?;
        let s = laplace_s(k, beta);
        let mut buf = vec![0.0; 2 * self.sensors];
        let shift = if k == 0 { vec![0.0; 2 * self.sensors] } else { self.proj.eval(t0)? };
        let mut lap = vec![Complex64::new(0.0, 0.0); self.sensors];
        for (t, w) in self.step_nodes(t0, t1) {
            self.proj.eval_into(t, &mut buf)?;
            let weight = (-s * (t - t0)).exp() * w;
            for i in 0..self.sensors {
                lap[i] += weight * (s * (buf[2 * i] - shift[2 * i]) - (buf[2 * i + 1] - shift[2 * i + 1]));
            }
        }
        Ok(lap.into_iter().map(|z| z / (beta * beta)).collect())
    }

    /// Noiseless `𝔰_n` for every sensor with `N = fine_steps`.
    pub fn fine_values(&self, n: i64, fine_steps: usize) -> Result<Vec<f64>> {
        let beta = self.cfg.beta;
        if fine_steps == 0 {
            return Err(Error::input("fine subdivision must be positive"));
        }
        let bt = beta / fine_steps as f64;
        let t0 = n as f64 * beta;
        self.check_index(n, t0 + bt)?;
        let a = self.proj.eval(t0)?;
        let b = self.proj.eval(t0 + bt)?;
        Ok((0..self.sensors).map(|i| ((b[2 * i] - a[2 * i]) / bt - a[2 * i + 1]) / beta).collect())
    }

    fn record(&self, family: Family, index: i64, sensor: usize, clean: Complex64) -> MeasurementRecord {
        let noise = noise_draw(&self.cfg, family, index, sensor);
        MeasurementRecord { family, index, sensor_id: sensor, value: clean + noise, noise }
    }

    fn check_sensor(&self, sensor: usize) -> Result<()> {
        if sensor >= self.sensors {
            return Err(Error::input(format!("unknown sensor {sensor}")));
        }
        Ok(())
    }

    /// Noisy `𝔪_n` for one sensor.
    pub fn m(&self, sensor: usize, n: i64) -> Result<MeasurementRecord> {
        self.check_sensor(sensor)?;
        let v = self.step_values(n)?.m[sensor];
        Ok(self.record(Family::M, n, sensor, Complex64::new(v, 0.0)))
    }

    /// Noisy `𝔰_n` for one sensor.
    pub fn s(&self, sensor: usize, n: i64) -> Result<MeasurementRecord> {
        self.check_sensor(sensor)?;
        let v = self.fine_values(n, self.cfg.fine_steps)?[sensor];
        Ok(self.record(Family::S, n, sensor, Complex64::new(v, 0.0)))
    }

    /// Noisy `m_{s,ℓ}` for one sensor at frequency index `k` (`k = 0` allowed).
    pub fn laplace(&self, sensor: usize, ell: i64, k: i64) -> Result<MeasurementRecord> {
        self.check_sensor(sensor)?;
        let v = self.laplace_values(ell, k)?[sensor];
        let v = if k == 0 { Complex64::new(v.re, 0.0) } else { v };
        Ok(self.record(Family::Laplace { k }, ell, sensor, v))
    }

    /// All `𝔪`, `m_{s,·}` and `m_{0,·}` records over the horizon.
    pub fn streams(&self, exec: Execution) -> Result<Streams> {
        let steps = self.cfg.steps();
        let values = exec.map(steps, |n| self.step_values(n as i64));
        let mut records = Vec::with_capacity(3 * steps * self.sensors);
        let k = self.cfg.k;
        for (n, v) in values.into_iter().enumerate() {
            let v = v?;
            let n = n as i64;
            for i in 0..self.sensors {
                records.push(self.record(Family::M, n, i, Complex64::new(v.m[i], 0.0)));
                records.push(self.record(Family::Laplace { k }, n, i, v.laplace[i]));
                records.push(self.record(Family::Laplace { k: 0 }, n, i, Complex64::new(v.laplace0[i], 0.0)));
            }
        }
        Streams::from_records(records, self.sensors)
    }
}

impl FineSource for Sampler<'_> {
    fn fine(&self, sensor: usize, n: i64) -> Result<f64> {
        Ok(self.s(sensor, n)?.value.re)
    }
}

/// Single-record convenience: noisy `𝔪_n` for sensor `g`.
pub fn sample_m(traj: &Trajectory, g: &GridFunction, n: i64, cfg: &MeasurementConfig) -> Result<MeasurementRecord> {
    Sampler::new(traj, std::slice::from_ref(g), *cfg)?.m(0, n)
}

/// Single-record convenience: noisy `𝔰_n` for sensor `g`.
pub fn sample_s(traj: &Trajectory, g: &GridFunction, n: i64, cfg: &MeasurementConfig) -> Result<MeasurementRecord> {
    Sampler::new(traj, std::slice::from_ref(g), *cfg)?.s(0, n)
}

/// Single-record convenience: noisy `m_{s,ℓ}` for sensor `g` at `cfg.k`.
pub fn sample_laplace(
    traj: &Trajectory,
    g: &GridFunction,
    ell: i64,
    cfg: &MeasurementConfig,
) -> Result<MeasurementRecord> {
    Sampler::new(traj, std::slice::from_ref(g), *cfg)?.laplace(0, ell, cfg.k)
}

/// `(1/β) ∫_0^β ⟨η(t0 + τ), g⟩ dτ` and the Laplace-weighted variant share
/// this helper: `∫_0^β w(τ) φ(t0 + τ) dτ`.
fn background_weighted<F>(model: &SourceModel, t0: f64, beta: f64, weight: F) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Complex64,
{
    let gl = GaussLegendre::new(STEP_POINTS)?;
    let z: Complex64 = gl.mapped(0.0, beta).map(|(tau, w)| weight(tau) * (w * model.background.phi(t0 + tau))).sum();
    Ok((z.re, z.im))
}

/// Closed-form noiseless `𝔪_n`, independent of the generator:
/// prior catalysts contribute `⟨h,g⟩ e^{-ρ(nβ - t_j)} (1 - e^{-ρβ})/(ρβ)`,
/// a catalyst entering during the step contributes
/// `⟨h,g⟩ (1 - e^{-ρ((n+1)β - t_j)})/(ρβ)`, and the background adds
/// `(1/β) ∫_0^β ⟨η(nβ + t), g⟩ dt`.
pub fn oracle_m_expansion(model: &SourceModel, g: &GridFunction, n: i64, cfg: &MeasurementConfig) -> Result<f64> {
    let beta = cfg.beta;
    let t0 = n as f64 * beta;
    let t1 = (n + 1) as f64 * beta;
    let mut total = 0.0;
    for c in &model.catalysts {
        let hg = inner(&c.h, g)?;
        let rho = c.rho;
        if c.t_intake < t0 {
            total += hg * (-rho * (t0 - c.t_intake)).exp() * (-(-rho * beta).exp_m1()) / (rho * beta);
        } else if c.t_intake < t1 {
            total += hg * (-(-rho * (t1 - c.t_intake)).exp_m1()) / (rho * beta);
        }
    }
    if !model.background.is_zero() {
        let pg = inner(&model.background.profile, g)?;
        let (re, _) = background_weighted(model, t0, beta, |_| Complex64::new(1.0, 0.0))?;
        total += pg * re / beta;
    }
    Ok(total)
}

/// Closed-form noiseless `Δ_{s,ℓ}(g) = m_{s,ℓ} - m_{0,ℓ}`.
///
/// A catalyst entering during `[ℓβ, (ℓ+1)β)` contributes
/// `[ρ(e^{-s t_j} - 1) + s(e^{ρ(t_j - (ℓ+1)β)} - 1)] / (ρ(ρ+s)β²) ⟨h,g⟩`,
/// an earlier one contributes
/// `s (e^{ρ(t_j - (ℓ+1)β)} - e^{ρ(t_j - ℓβ)}) / (ρ(ρ+s)β²) ⟨h,g⟩`, and the
/// background adds `(1/β²) ∫_0^β (e^{-sτ} - 1) ⟨η(ℓβ + τ), g⟩ dτ`.
/// The initial state and the generator cancel exactly.
pub fn oracle_delta_laplace(
    model: &SourceModel,
    g: &GridFunction,
    ell: i64,
    cfg: &MeasurementConfig,
) -> Result<Complex64> {
    if cfg.k == 0 {
        return Err(Error::input("the Laplace difference needs k != 0"));
    }
    let beta = cfg.beta;
    let s = cfg.s();
    let t0 = ell as f64 * beta;
    let t1 = (ell + 1) as f64 * beta;
    let b2 = beta * beta;
    let mut total = Complex64::new(0.0, 0.0);
    for c in &model.catalysts {
        let hg = inner(&c.h, g)?;
        let rho = c.rho;
        let denom = rho * (s + rho) * b2;
        if c.t_intake < t0 {
            let num = s * ((rho * (c.t_intake - t1)).exp() - (rho * (c.t_intake - t0)).exp());
            total += num / denom * hg;
        } else if c.t_intake < t1 {
            let phase = (-s * (c.t_intake - t0)).exp();
            let num = rho * (phase - 1.0) + s * (rho * (c.t_intake - t1)).exp_m1();
            total += num / denom * hg;
        }
    }
    if !model.background.is_zero() {
        let pg = inner(&model.background.profile, g)?;
        let (re, im) = background_weighted(model, t0, beta, |tau| (-s * tau).exp() - 1.0)?;
        total += Complex64::new(re, im) * (pg / b2);
    }
    Ok(total)
}

/// The exact limit of `𝔰_n` as `N → ∞`: `⟨F(nβ), g⟩ / β`.
pub fn derivative_limit(model: &SourceModel, g: &GridFunction, n: i64, beta: f64) -> Result<f64> {
    Ok(model.forcing_inner(n as f64 * beta, g)? / beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(mode: NoiseMode) -> MeasurementConfig {
        MeasurementConfig { beta: 0.01, fine_steps: 10, k: 1, sigma: 1e-3, noise_mode: mode, seed: 7, horizon: 1.0 }
    }

    #[test]
    fn noise_is_bounded_and_deterministic() {
        let c = cfg(NoiseMode::Uniform);
        for fam in [Family::M, Family::S, Family::Laplace { k: 1 }, Family::Laplace { k: 0 }] {
            for n in 0..200 {
                let a = noise_draw(&c, fam, n, 2);
                assert!(a.norm() <= c.sigma);
                assert_eq!(a, noise_draw(&c, fam, n, 2));
            }
        }
        assert_ne!(noise_draw(&c, Family::M, 3, 0), noise_draw(&c, Family::M, 3, 1));
    }

    #[test]
    fn adversarial_noise_saturates_laplace_difference() {
        let c = cfg(NoiseMode::AdversarialAlternating);
        let d = |n| noise_draw(&c, Family::Laplace { k: 1 }, n, 0) - noise_draw(&c, Family::Laplace { k: 0 }, n, 0);
        assert!(((d(4) - d(3)).norm() - 4.0 * c.sigma).abs() < 1e-18);
        let m = (noise_draw(&c, Family::M, 4, 0) - noise_draw(&c, Family::M, 3, 0)).norm();
        assert!((m - 2.0 * c.sigma).abs() < 1e-18);
    }

    #[test]
    fn series_reports_gaps() {
        let mut s: Series<f64> = Series::new("m", 2);
        s.insert(1, 3, 1.5).unwrap();
        assert_eq!(s.get(1, 3).unwrap(), 1.5);
        assert_eq!(s.get(1, 2), Err(Error::MissingData { family: "m", index: 2, sensor: 1 }));
        assert!(s.get(0, -1).is_err());
    }

    #[test]
    fn laplace_step_hypothesis_is_checked() {
        let mut c = cfg(NoiseMode::Zero);
        assert!(c.validate(Some(3.0)).is_ok());
        c.beta = 3.0;
        c.horizon = 10.0;
        assert!(matches!(c.validate(Some(3.0)), Err(Error::Invariant { constraint: "laplace-step", .. })));
    }
}
