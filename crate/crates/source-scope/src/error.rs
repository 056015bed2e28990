// SPDX-License-Identifier: Apache-2.0

//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library reports.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Two grid objects with different discretizations were combined.
    #[error("dimension mismatch: {left} nodes vs {right} nodes")]
    Dimension { left: usize, right: usize },

    /// An argument outside the documented domain.
    #[error("invalid input: {0}")]
    Input(String),

    /// A requested time or index lies beyond the simulated horizon.
    #[error("{what} at t = {t} exceeds the horizon {horizon}")]
    Range { what: &'static str, t: f64, horizon: f64 },

    /// A model or configuration invariant does not hold.
    #[error("constraint `{constraint}` violated: {detail}")]
    Invariant { constraint: &'static str, detail: String },

    /// A measurement needed by a detector is absent from its stream.
    #[error("missing {family} measurement at index {index} for sensor {sensor}")]
    MissingData { family: &'static str, index: i64, sensor: usize },

    /// A bound was requested outside the hypotheses under which it holds.
    #[error("certificate refused: {0}")]
    Refused(String),

    /// A scenario file could not be parsed.
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    /// A filesystem operation failed.
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn invariant(constraint: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant { constraint, detail: detail.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        Error::Io { path: path.into(), message: err.to_string() }
    }
}
