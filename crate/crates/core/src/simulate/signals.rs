//! Closed-form test signals.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{FunctionSample, Grid};

/// Identifier of a simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    /// Two Gaussian bumps of unequal height.
    Bimodal,
    /// Two-tooth piecewise-linear sawtooth.
    Sawtooth,
    /// Two narrow bumps near the ends with an exactly flat middle.
    FlatMiddle,
    /// One wide Gaussian bump.
    BroadUnimodal,
    /// 80 bimodal curves contaminated by 20 trimodal ones.
    MixtureA,
    /// 80 trimodal curves contaminated by 20 bimodal ones.
    MixtureB,
}

impl ScenarioId {
    pub const SIMULATIONS: [ScenarioId; 4] = [
        ScenarioId::Bimodal,
        ScenarioId::Sawtooth,
        ScenarioId::FlatMiddle,
        ScenarioId::BroadUnimodal,
    ];

    /// Number of internal peaks of the generating signal.
    pub fn true_peaks(&self) -> usize {
        match self {
            ScenarioId::BroadUnimodal => 1,
            ScenarioId::MixtureB => 3,
            _ => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioId::Bimodal => "1",
            ScenarioId::Sawtooth => "2",
            ScenarioId::FlatMiddle => "3",
            ScenarioId::BroadUnimodal => "4",
            ScenarioId::MixtureA => "mixture-a",
            ScenarioId::MixtureB => "mixture-b",
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "bimodal" => Ok(ScenarioId::Bimodal),
            "2" | "sawtooth" => Ok(ScenarioId::Sawtooth),
            "3" | "flat-middle" => Ok(ScenarioId::FlatMiddle),
            "4" | "broad-unimodal" => Ok(ScenarioId::BroadUnimodal),
            "mixture-a" | "a" => Ok(ScenarioId::MixtureA),
            "mixture-b" | "b" => Ok(ScenarioId::MixtureB),
            other => Err(Error::InvalidConfig(format!("unknown scenario '{other}'"))),
        }
    }
}

fn gauss(t: f64, centre: f64, sd: f64) -> f64 {
    let z = (t - centre) / sd;
    (-0.5 * z * z).exp()
}

/// Raised cosine of half-width `w`; identically zero outside `|t - c| < w`.
fn raised_cosine(t: f64, centre: f64, w: f64) -> f64 {
    let u = (t - centre) / w;
    if u.abs() >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 + (PI * u).cos())
    }
}

pub fn bimodal(t: f64) -> f64 {
    gauss(t, 0.3, 0.07) + 0.8 * gauss(t, 0.7, 0.07)
}

pub fn trimodal(t: f64) -> f64 {
    gauss(t, 0.2, 0.055) + 0.8 * gauss(t, 0.5, 0.055) + gauss(t, 0.8, 0.055)
}

/// Slow linear rises to 1 at 0.4 and 0.9, sharp linear drops to 0 at 0.5 and 1.
pub fn sawtooth(t: f64) -> f64 {
    let tooth = |u: f64| {
        if u <= 0.4 {
            u / 0.4
        } else {
            (0.5 - u) / 0.1
        }
    };
    if t <= 0.5 { tooth(t) } else { tooth(t - 0.5) }.clamp(0.0, 1.0)
}

pub fn flat_middle(t: f64) -> f64 {
    raised_cosine(t, 0.15, 0.12) + raised_cosine(t, 0.85, 0.12)
}

pub fn broad_unimodal(t: f64) -> f64 {
    gauss(t, 0.5, 0.18)
}

/// The generating signal of a scenario (the majority component for the
/// mixtures).
pub fn scenario_signal(id: ScenarioId, grid: Grid) -> FunctionSample {
    let f: fn(f64) -> f64 = match id {
        ScenarioId::Bimodal | ScenarioId::MixtureA => bimodal,
        ScenarioId::Sawtooth => sawtooth,
        ScenarioId::FlatMiddle => flat_middle,
        ScenarioId::BroadUnimodal => broad_unimodal,
        ScenarioId::MixtureB => trimodal,
    };
    FunctionSample::from_fn(grid, f).expect("closed-form signals are finite")
}

/// Minority component of the mixture scenarios.
pub(crate) fn contaminant(id: ScenarioId, grid: Grid) -> Option<FunctionSample> {
    let f: fn(f64) -> f64 = match id {
        ScenarioId::MixtureA => trimodal,
        ScenarioId::MixtureB => bimodal,
        _ => return None,
    };
    Some(FunctionSample::from_fn(grid, f).expect("closed-form signals are finite"))
}
