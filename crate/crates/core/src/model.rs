//! Correlation models shared by the generators, scans and experiments.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Angular convention: spin correlations depend on Δ, polarization optics on 2Δ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    #[default]
    Spin,
    Optics,
}

impl Convention {
    pub fn factor(self) -> f64 {
        match self {
            Convention::Spin => 1.0,
            Convention::Optics => 2.0,
        }
    }
}

impl FromStr for Convention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "spin" => Ok(Convention::Spin),
            "optics" => Ok(Convention::Optics),
            other => Err(Error::Parse(format!("unknown convention `{other}`"))),
        }
    }
}

impl fmt::Display for Convention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Convention::Spin => "spin",
            Convention::Optics => "optics",
        })
    }
}

/// The two physical models the experiments compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    BellState,
    LhvSawtooth,
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "bell-state" => Ok(ModelKind::BellState),
            "lhv-sawtooth" => Ok(ModelKind::LhvSawtooth),
            other => Err(Error::Parse(format!("unknown model `{other}`"))),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::BellState => "bell-state",
            ModelKind::LhvSawtooth => "lhv-sawtooth",
        })
    }
}

/// Folds an angle difference onto [0, π].
pub fn fold_separation(delta: f64) -> f64 {
    let d = delta.rem_euclid(TAU);
    if d > PI {
        TAU - d
    } else {
        d
    }
}

/// Saw-tooth correlation 1 − 2Δ/π of the sign-of-cosine readout.
pub fn sawtooth_correlation(theta_1: f64, theta_2: f64, convention: Convention) -> f64 {
    1.0 - 2.0 * fold_separation(convention.factor() * (theta_1 - theta_2)) / PI
}

impl ModelKind {
    /// Infinite-N pair correlation between a detector at `theta_1` and one at `theta_2`.
    pub fn pair_correlation(self, theta_1: f64, theta_2: f64, convention: Convention) -> f64 {
        match self {
            ModelKind::BellState => -(convention.factor() * (theta_1 - theta_2)).cos(),
            ModelKind::LhvSawtooth => sawtooth_correlation(theta_1, theta_2, convention),
        }
    }

    /// P₊₊ for a pair on opposite sides of the apparatus.
    ///
    /// Both models are anticorrelated across sides here (C(θ,θ) = −1), so that
    /// C = 4P₊₊ − 1 holds. For the saw-tooth this gives P₊₊ = Δ/(2π).
    pub fn p_plus_plus(self, theta_1: f64, theta_2: f64, convention: Convention) -> f64 {
        match self {
            ModelKind::BellState => (1.0 - (convention.factor() * (theta_1 - theta_2)).cos()) / 4.0,
            ModelKind::LhvSawtooth => fold_separation(convention.factor() * (theta_1 - theta_2)) / TAU,
        }
    }
}
