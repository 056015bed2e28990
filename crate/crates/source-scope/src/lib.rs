// SPDX-License-Identifier: Apache-2.0

//! Forward simulation and certified source recovery for
//! `u' = A u + Σ_j h_j e^{-ρ_j (t - t_j)} χ_{[t_j, ∞)}(t) + η(t)` on `L²([0,1])`.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: grid functions, quadrature inner products, Gauss–Legendre rules.
//! * [`dynamics`]: multiplication-operator generators, catalysts, backgrounds and
//!   the mild solution `u(t)`.
//! * [`sampling`]: the three weak-measurement families with bounded noise, plus
//!   closed-form oracle expansions.
//! * [`detect_alg1`]: threshold detection on averaged measurements with a
//!   fine-scale decay-rate estimate.
//! * [`detect_alg2`]: Prony–Laplace detection from Laplace-weighted measurements.
//! * [`bounds`]: every error bound as a machine-checkable certificate.
//! * [`experiment`]: scenario files, full pipelines, sweeps, CSV and SVG output.
//!
//! Data-parallel paths are selected through [`exec::Execution`]; with the
//! `parallel` feature disabled they run sequentially and produce identical
//! results.

pub mod bounds;
pub mod detect_alg1;
pub mod detect_alg2;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod hilbert;
pub mod sampling;

pub use error::{Error, Result};
