// SPDX-License-Identifier: Apache-2.0

//! Scenario files.
//!
//! A scenario is a TOML document. Functions on `[0,1]` come from a small
//! catalog selected by `kind`:
//!
//! ```toml
//! horizon = 5.0
//! separation = 2.0
//! rho_lo = 1.0
//! rho_hi = 3.0
//! generator = { kind = "const", value = 1.0 }
//! sensors = [{ kind = "one" }, { kind = "x" }, { kind = "x2" }]
//!
//! [[catalysts]]
//! t = 0.25
//! rho = 1.0
//! h = { kind = "sin", amplitude = 3.0 }
//!
//! [background]
//! kind = "exp_decay"
//! lipschitz = 0.01
//! profile = { kind = "x" }
//!
//! [measurement]
//! beta = 0.01
//! sigma = 1e-3
//! ```
//!
//! Loading validates every model, measurement and detector invariant for the
//! configured time step.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::GroundTruth;
use crate::detect_alg1::Alg1Params;
use crate::detect_alg2::Alg2Params;
use crate::dynamics::{BackgroundKind, BackgroundSource, Catalyst, MultiplicationGenerator, SourceModel};
use crate::hilbert::{Grid, GridFunction, Quadrature, Rule};
use crate::sampling::{MeasurementConfig, NoiseMode};
use crate::{Error, Result};

/// A function on `[0,1]` from the catalog.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    /// `0`.
    #[default]
    Zero,
    /// `1`.
    One,
    /// `c`.
    Const { value: f64 },
    /// `x`.
    X,
    /// `x²`.
    X2,
    /// `slope · x + offset`.
    Linear { slope: f64, offset: f64 },
    /// `amplitude · sin(x)`.
    Sin { amplitude: f64 },
    /// `amplitude · cos(x)`.
    Cos { amplitude: f64 },
    /// Samples on a uniform partition of `[0,1]` (at least two), linearly
    /// interpolated.
    Grid { values: Vec<f64> },
}

impl FunctionSpec {
    /// Evaluates the function on the nodes of `grid`.
    pub fn build(&self, grid: &Arc<Grid>) -> Result<GridFunction> {
        match self {
            FunctionSpec::Zero => Ok(GridFunction::zeros(grid)),
            FunctionSpec::One => Ok(GridFunction::constant(grid, 1.0)),
            FunctionSpec::Const { value } => GridFunction::from_fn(grid, |_| *value),
            FunctionSpec::X => GridFunction::from_fn(grid, |x| x),
            FunctionSpec::X2 => GridFunction::from_fn(grid, |x| x * x),
            FunctionSpec::Linear { slope, offset } => GridFunction::from_fn(grid, |x| slope * x + offset),
            FunctionSpec::Sin { amplitude } => GridFunction::from_fn(grid, |x| amplitude * x.sin()),
            FunctionSpec::Cos { amplitude } => GridFunction::from_fn(grid, |x| amplitude * x.cos()),
            FunctionSpec::Grid { values } => {
                if values.len() < 2 {
                    return Err(Error::input("a grid function needs at least two samples"));
                }
                let last = (values.len() - 1) as f64;
                GridFunction::from_fn(grid, |x| {
                    let pos = (x.clamp(0.0, 1.0) * last).min(last);
                    let i = (pos.floor() as usize).min(values.len() - 2);
                    let frac = pos - i as f64;
                    values[i] * (1.0 - frac) + values[i + 1] * frac
                })
            }
        }
    }
}

/// Spatial discretization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_rule")]
    pub rule: GridRule,
    #[serde(default = "GridSpec::default_panels")]
    pub panels: usize,
    /// Gauss–Legendre points per panel; ignored by the trapezoid rule.
    #[serde(default = "GridSpec::default_points")]
    pub points: usize,
}

/// Spatial quadrature family of a [`GridSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridRule {
    Trapezoid,
    GaussLegendre,
}

impl GridSpec {
    fn default_rule() -> GridRule {
        GridRule::Trapezoid
    }

    fn default_panels() -> usize {
        256
    }

    fn default_points() -> usize {
        8
    }

    pub fn quadrature(&self) -> Quadrature {
        match self.rule {
            GridRule::Trapezoid => Quadrature { rule: Rule::Trapezoid, panels: self.panels },
            GridRule::GaussLegendre => Quadrature::gauss_legendre(self.panels, self.points),
        }
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { rule: Self::default_rule(), panels: Self::default_panels(), points: Self::default_points() }
    }
}

/// One catalyst `h e^{-ρ(t - t_j)} χ_{[t_j, ∞)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalystSpec {
    pub t: f64,
    pub rho: f64,
    pub h: FunctionSpec,
}

/// Background forcing `p(x) φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    pub kind: BackgroundKind,
    #[serde(default)]
    pub lipschitz: f64,
    #[serde(default)]
    pub profile: FunctionSpec,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        BackgroundSpec { kind: BackgroundKind::Zero, lipschitz: 0.0, profile: FunctionSpec::Zero }
    }
}

/// Measurement configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub beta: f64,
    #[serde(default = "MeasurementSpec::default_fine_steps")]
    pub fine_steps: usize,
    #[serde(default = "MeasurementSpec::default_k")]
    pub k: i64,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default)]
    pub noise: NoiseMode,
}

impl MeasurementSpec {
    fn default_fine_steps() -> usize {
        100
    }

    fn default_k() -> i64 {
        1
    }
}

/// Threshold-detector options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alg1Spec {
    /// `K ≥ 1`.
    #[serde(default = "Alg1Spec::default_multiplier")]
    pub threshold_multiplier: f64,
    /// `R`; defaults to the largest sensor norm.
    #[serde(default)]
    pub sensor_bound: Option<f64>,
}

impl Alg1Spec {
    fn default_multiplier() -> f64 {
        1.0
    }
}

impl Default for Alg1Spec {
    fn default() -> Self {
        Alg1Spec { threshold_multiplier: 1.0, sensor_bound: None }
    }
}

/// Prony–Laplace detector options.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alg2Spec {
    /// First scanned index; defaults to 3.
    #[serde(default)]
    pub ell0: Option<i64>,
}

/// Which detectors a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmChoice {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[default]
    Both,
}

impl AlgorithmChoice {
    pub fn runs_alg1(self) -> bool {
        matches!(self, AlgorithmChoice::One | AlgorithmChoice::Both)
    }

    pub fn runs_alg2(self) -> bool {
        matches!(self, AlgorithmChoice::Two | AlgorithmChoice::Both)
    }
}

impl std::str::FromStr for AlgorithmChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(AlgorithmChoice::One),
            "2" => Ok(AlgorithmChoice::Two),
            "both" => Ok(AlgorithmChoice::Both),
            other => Err(Error::input(format!("algorithm must be 1, 2 or both, got `{other}`"))),
        }
    }
}

/// A sweep declared in the scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: String,
    pub values: Vec<f64>,
}

/// Orchestration options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default)]
    pub algorithm: AlgorithmChoice,
    /// Seeds per sweep point.
    #[serde(default = "RunSpec::default_reps")]
    pub reps: usize,
    /// Sensor whose coefficients enter the relative coefficient error.
    #[serde(default = "RunSpec::default_reference")]
    pub reference_sensor: usize,
    #[serde(default)]
    pub sweeps: Vec<SweepSpec>,
}

impl RunSpec {
    fn default_reps() -> usize {
        10
    }

    fn default_reference() -> usize {
        1
    }
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            algorithm: AlgorithmChoice::Both,
            reps: Self::default_reps(),
            reference_sensor: Self::default_reference(),
            sweeps: Vec::new(),
        }
    }
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Horizon `𝒯` in seconds.
    pub horizon: f64,
    /// Separation parameter `D`.
    pub separation: f64,
    /// `H`; defaults to the largest catalyst norm.
    #[serde(default)]
    pub mass_bound: Option<f64>,
    pub rho_lo: f64,
    pub rho_hi: f64,
    #[serde(default)]
    pub grid: GridSpec,
    /// Symbol `a(x)` of the generator.
    pub generator: FunctionSpec,
    /// Initial state `u₀`.
    #[serde(default)]
    pub initial: FunctionSpec,
    pub sensors: Vec<FunctionSpec>,
    #[serde(default)]
    pub catalysts: Vec<CatalystSpec>,
    #[serde(default)]
    pub background: BackgroundSpec,
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub alg1: Alg1Spec,
    #[serde(default)]
    pub alg2: Alg2Spec,
    #[serde(default)]
    pub run: RunSpec,
}

/// Every object a run needs, derived from a validated [`Scenario`].
#[derive(Debug, Clone)]
pub struct Built {
    pub model: SourceModel,
    pub generator: MultiplicationGenerator,
    pub sensors: Vec<GridFunction>,
    pub measurement: MeasurementConfig,
    pub alg1: Alg1Params,
    pub alg2: Alg2Params,
    pub truth: GroundTruth,
}

/// Default first scanned index of the Prony–Laplace detector.
pub const DEFAULT_ELL0: i64 = 3;

impl Scenario {
    /// Parses a TOML document. `origin` labels error messages.
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let scenario: Scenario =
            toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })?;
        scenario.build()?;
        Ok(scenario)
    }

    /// Serializes back to TOML.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::input(format!("cannot serialize scenario: {e}")))
    }

    pub fn ell0(&self) -> i64 {
        self.alg2.ell0.unwrap_or(DEFAULT_ELL0)
    }

    /// Builds and validates the model, measurement configuration and detector
    /// parameters.
    pub fn build(&self) -> Result<Built> {
        let grid = self.grid.quadrature().grid()?;
        if self.sensors.is_empty() {
            return Err(Error::invariant("sensors", "at least one sensor is required"));
        }
        let sensors = self.sensors.iter().map(|s| s.build(&grid)).collect::<Result<Vec<_>>>()?;
        if self.run.reference_sensor >= sensors.len() {
            return Err(Error::invariant(
                "reference-sensor",
                format!("sensor {} does not exist ({} sensors)", self.run.reference_sensor, sensors.len()),
            ));
        }
        if self.run.reps == 0 {
            return Err(Error::invariant("repetitions", "reps must be positive"));
        }
        let mut catalysts = self
            .catalysts
            .iter()
            .map(|c| Ok(Catalyst { h: c.h.build(&grid)?, rho: c.rho, t_intake: c.t }))
            .collect::<Result<Vec<_>>>()?;
        if catalysts.windows(2).any(|w| w[1].t_intake < w[0].t_intake) {
            return Err(Error::invariant("intake-order", "catalysts must be listed by increasing intake time"));
        }
        let mass_bound = self
            .mass_bound
            .unwrap_or_else(|| catalysts.iter().map(|c| c.h.norm()).fold(0.0, f64::max));
        let background = match self.background.kind {
            BackgroundKind::Zero => BackgroundSource::zero(&grid),
            kind => BackgroundSource {
                kind,
                lipschitz: self.background.lipschitz,
                profile: self.background.profile.build(&grid)?,
            },
        };
        let lipschitz = if background.kind == BackgroundKind::Zero { 0.0 } else { background.lipschitz };
        let model = SourceModel {
            u0: self.initial.build(&grid)?,
            catalysts: std::mem::take(&mut catalysts),
            background,
            separation: self.separation,
            mass_bound,
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
        };
        let m = &self.measurement;
        let beta = m.beta;
        model.validate(beta)?;
        let measurement = MeasurementConfig {
            beta,
            fine_steps: m.fine_steps,
            k: m.k,
            sigma: m.sigma,
            noise_mode: m.noise,
            seed: self.seed,
            horizon: self.horizon,
        };
        measurement.validate(self.run.algorithm.runs_alg2().then_some(self.rho_hi))?;
        let ell0 = self.ell0();
        if let Some(first) = model.catalysts.first() {
            let earliest = ell0 as f64 * beta;
            if first.t_intake < earliest * (1.0 - 1e-12) {
                return Err(Error::invariant(
                    "first-intake",
                    format!("t_1 = {} precedes the first scanned step at {earliest}", first.t_intake),
                ));
            }
        }
        if let Some(last) = model.catalysts.last() {
            let latest = self.horizon - 4.0 * beta;
            if last.t_intake > latest * (1.0 + 1e-12) {
                return Err(Error::invariant(
                    "horizon-room",
                    format!("t = {} leaves less than 4*beta before the horizon {}", last.t_intake, self.horizon),
                ));
            }
        }
        let generator = MultiplicationGenerator::new(self.generator.build(&grid)?);
        let max_norm = sensors.iter().map(GridFunction::norm).fold(0.0, f64::max);
        let alg1 = Alg1Params {
            threshold_multiplier: self.alg1.threshold_multiplier,
            fine_steps: m.fine_steps,
            beta,
            sigma: m.sigma,
            separation: self.separation,
            mass_bound,
            sensor_bound: self.alg1.sensor_bound.unwrap_or(max_norm),
            lipschitz,
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
            sensors: sensors.clone(),
        };
        let alg2 = Alg2Params {
            k: m.k,
            ell0,
            beta,
            sigma: m.sigma,
            separation: self.separation,
            mass_bound,
            lipschitz,
            rho_lo: self.rho_lo,
            rho_hi: self.rho_hi,
            sensors: sensors.clone(),
        };
        if self.run.algorithm.runs_alg1() {
            alg1.validate()?;
        }
        if self.run.algorithm.runs_alg2() {
            alg2.validate()?;
        }
        let truth = GroundTruth::from_model(&model, &sensors)?;
        Ok(Built { model, generator, sensors, measurement, alg1, alg2, truth })
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_toml(&text, path)
}

/// A random valid scenario for property and certificate testing.
///
/// Two or three catalysts with contents drawn from the catalog, rates in
/// `[ρ̌, ρ̂] = [0.5, 3]`, intake gaps in `[4β + D, 4β + D + 1]` (the
/// minimum separation is hit with positive probability), a random background
/// kind with `L ∈ [0, 0.05]`, uniform noise with `σ ∈ [0, 2e-3]` and
/// `β ∈ {0.005, 0.01, 0.02}`.
pub fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let beta = [0.005, 0.01, 0.02][rng.random_range(0..3)];
    let separation = rng.random_range(0.5..1.5);
    let (rho_lo, rho_hi) = (0.5, 3.0);
    let count = rng.random_range(2..=3);
    let mut t = rng.random_range(0.1..0.5_f64).max(4.0 * beta);
    let mut catalysts = Vec::new();
    for j in 0..count {
        if j > 0 {
            let minimum = 4.0 * beta + separation;
            t += if rng.random_bool(0.3) { minimum } else { minimum + rng.random_range(0.0..1.0) };
        }
        let amplitude = rng.random_range(0.5..3.0) * if rng.random_bool(0.2) { -1.0 } else { 1.0 };
        let h = match rng.random_range(0..5) {
            0 => FunctionSpec::Sin { amplitude },
            1 => FunctionSpec::Cos { amplitude },
            2 => FunctionSpec::Linear { slope: amplitude, offset: rng.random_range(0.5..2.0) },
            3 => FunctionSpec::Const { value: amplitude },
            _ => FunctionSpec::Grid { values: (0..5).map(|_| rng.random_range(-2.0..3.0)).collect() },
        };
        catalysts.push(CatalystSpec { t, rho: rng.random_range(rho_lo..=rho_hi), h });
    }
    let horizon = t + 0.5;
    let background = match rng.random_range(0..3) {
        0 => BackgroundSpec::default(),
        1 => BackgroundSpec {
            kind: BackgroundKind::ExpDecay,
            lipschitz: rng.random_range(0.0..0.05),
            profile: FunctionSpec::X,
        },
        _ => BackgroundSpec {
            kind: BackgroundKind::Sinusoid,
            lipschitz: rng.random_range(0.0..0.05),
            profile: FunctionSpec::Linear { slope: 0.5, offset: 0.25 },
        },
    };
    let generator = match rng.random_range(0..3) {
        0 => FunctionSpec::Const { value: 1.0 },
        1 => FunctionSpec::Const { value: -0.5 },
        _ => FunctionSpec::Linear { slope: -1.0, offset: 0.5 },
    };
    Scenario {
        name: format!("random-{seed}"),
        seed,
        horizon,
        separation,
        mass_bound: None,
        rho_lo,
        rho_hi,
        grid: GridSpec { rule: GridRule::Trapezoid, panels: 64, points: 8 },
        generator,
        initial: if rng.random_bool(0.5) { FunctionSpec::Zero } else { FunctionSpec::Sin { amplitude: 0.5 } },
        sensors: vec![FunctionSpec::One, FunctionSpec::X, FunctionSpec::X2],
        catalysts,
        background,
        measurement: MeasurementSpec {
            beta,
            fine_steps: 50,
            k: 1,
            sigma: rng.random_range(0.0..2e-3),
            noise: NoiseMode::Uniform,
        },
        alg1: Alg1Spec::default(),
        alg2: Alg2Spec::default(),
        run: RunSpec { reps: 1, ..RunSpec::default() },
    }
}

/// `2π|k|/ρ̂`, the largest admissible time step of the Laplace family.
pub fn laplace_step_limit(k: i64, rho_hi: f64) -> f64 {
    2.0 * PI * k.unsigned_abs() as f64 / rho_hi
}
