// SPDX-License-Identifier: Apache-2.0

//! Scenario files, end-to-end runs, sweeps and their CSV/SVG artifacts.

pub mod figures;
pub mod output;
pub mod run;
pub mod scenario;
pub mod svg;
pub mod sweep;

pub use figures::reproduce_figures;
pub use output::{emit_run, emit_sweeps};
pub use run::{run_scenario, RunOptions, RunReport};
pub use scenario::{load_scenario, random_scenario, AlgorithmChoice, Scenario};
pub use sweep::{parse_sweep, run_sweep, SweepAxis, SweepResult};
