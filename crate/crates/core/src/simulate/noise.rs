//! Random draws from the additive-and-phase noise model
//! `f_i = a_i (g ∘ γ_i) + ε_i`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::signals::{contaminant, scenario_signal, ScenarioId};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet, Grid};
use crate::shapefit::tangent::TangentBasis;
use crate::warping::{warp_function, Warping};

/// Noise magnitudes of the observation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the amplitude factor `a_i ~ N(1, σ_a²)`, `a_i > 0`.
    pub sigma_a: f64,
    /// Amplitude of the additive noise.
    pub sigma_eps: f64,
    /// Number of Fourier modes in the additive noise.
    pub eps_modes: usize,
    /// Scale of the tangent-space perturbation defining `γ_i`.
    pub warp_strength: f64,
}

impl NoiseModel {
    pub const ZERO: NoiseModel = NoiseModel {
        sigma_a: 0.0,
        sigma_eps: 0.0,
        eps_modes: 6,
        warp_strength: 0.0,
    };

    /// Default magnitudes for a signal with the given range.
    pub fn default_for_range(range: f64) -> Self {
        Self {
            sigma_a: 0.05,
            sigma_eps: 0.05 * range,
            eps_modes: 6,
            warp_strength: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_a", self.sigma_a),
            ("sigma_eps", self.sigma_eps),
            ("warp_strength", self.warp_strength),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and >= 0"
                )));
            }
        }
        Ok(())
    }
}

/// A fully specified simulation setting.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: ScenarioId,
    pub g_true: FunctionSample,
    pub n: usize,
    pub noise: NoiseModel,
    pub seed: u64,
}

impl Scenario {
    /// Scenario with `n = 100` and default noise.
    pub fn new(id: ScenarioId, grid: Grid, seed: u64) -> Self {
        let g_true = scenario_signal(id, grid);
        let range = g_true.max() - g_true.min();
        Self {
            id,
            g_true,
            n: 100,
            noise: NoiseModel::default_for_range(range),
            seed,
        }
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn grid(&self) -> Grid {
        self.g_true.grid()
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Random warping with `E[γ(t)] = t`: a Gaussian tangent vector on the first
/// four sine–cosine modes, norm clamped below `π/2`, pushed through the
/// exponential map.
pub fn random_warping(grid: Grid, strength: f64, rng: &mut impl Rng) -> Warping {
    let z: [f64; 4] = std::array::from_fn(|_| normal(rng));
    if strength == 0.0 {
        return Warping::identity(grid);
    }
    let basis = TangentBasis::new(grid, 4).expect("four modes");
    let coeffs: Vec<f64> = z.iter().map(|v| strength * v).collect();
    basis.decode_clamped(&coeffs, FRAC_PI_2 - 1e-6)
}

pub(crate) fn random_warping_with(
    basis: &TangentBasis,
    strength: f64,
    rng: &mut impl Rng,
) -> Warping {
    let z: [f64; 4] = std::array::from_fn(|_| normal(rng));
    if strength == 0.0 {
        return Warping::identity(basis.grid());
    }
    let coeffs: Vec<f64> = z.iter().map(|v| strength * v).collect();
    basis.decode_clamped(&coeffs, FRAC_PI_2 - 1e-6)
}

/// Smooth zero-mean noise `σ Σ_j (z_j sin(jπt) + z'_j cos(jπt)) / j`.
fn additive_noise(grid: Grid, sigma: f64, modes: usize, rng: &mut impl Rng) -> Vec<f64> {
    let coeffs: Vec<(f64, f64)> = (0..modes).map(|_| (normal(rng), normal(rng))).collect();
    if sigma == 0.0 {
        return vec![0.0; grid.len()];
    }
    grid.sample(|t| {
        coeffs
            .iter()
            .enumerate()
            .map(|(idx, (zs, zc))| {
                let j = (idx + 1) as f64;
                (zs * (j * PI * t).sin() + zc * (j * PI * t).cos()) / j
            })
            .sum::<f64>()
            * sigma
    })
}

fn amplitude(sigma: f64, rng: &mut impl Rng) -> f64 {
    loop {
        let a = 1.0 + sigma * normal(rng);
        if a > 0.0 {
            return a;
        }
    }
}

/// Draws the dataset of a scenario; returns it with the true signal.
pub fn generate(scn: &Scenario) -> Result<(FunctionSet, FunctionSample)> {
    scn.noise.validate()?;
    if scn.n == 0 {
        return Err(Error::EmptyFunctionSet);
    }
    let grid = scn.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);
    let basis = TangentBasis::new(grid, 4)?;
    let minority = contaminant(scn.id, grid);
    // mixtures are 80/20 splits of the sample size
    let majority = match minority {
        Some(_) => (scn.n * 4).div_ceil(5),
        None => scn.n,
    };
    let mut functions = Vec::with_capacity(scn.n);
    for i in 0..scn.n {
        let source = match (&minority, i >= majority) {
            (Some(m), true) => m,
            _ => &scn.g_true,
        };
        let a = amplitude(scn.noise.sigma_a, &mut rng);
        let gamma = random_warping_with(&basis, scn.noise.warp_strength, &mut rng);
        let eps = additive_noise(grid, scn.noise.sigma_eps, scn.noise.eps_modes, &mut rng);
        let warped = warp_function(source, &gamma)?;
        let values = warped
            .values()
            .iter()
            .zip(&eps)
            .map(|(w, e)| a * w + e)
            .collect();
        functions.push(FunctionSample::new(grid, values)?);
    }
    Ok((FunctionSet::new(functions)?, scn.g_true.clone()))
}
