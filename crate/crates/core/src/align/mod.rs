//! Penalized elastic alignment of functional data.
//!
//! [`pairwise_align`] registers one SRVF to a reference by dynamic
//! programming; [`multiple_align`] runs the template iteration that produces
//! the partially aligned functions and their mean at a given elasticity
//! penalty. [`penalized_l2_align`] is the same iteration carried out on raw
//! function values, kept as a baseline.

pub mod dp;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{l2_dist_sq, mean_rows, FunctionSample, FunctionSet, Srvf};
use crate::srvf::{to_srvf, warp_srvf};
use crate::warping::{invert_warping, mean_warping, warp_function, Warping};

pub use dp::{Action, SlopeSet, Step};

/// Settings for penalized SRVF alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Elasticity penalty weight; 0 is fully elastic.
    pub lambda: f64,
    pub slopes: SlopeSet,
    /// Stopping threshold on the squared change of the template.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            slopes: SlopeSet::standard(7).expect("valid default slope set"),
            tol: 1e-4,
            max_iter: 20,
        }
    }
}

impl AlignConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig("tol must be > 0".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.slopes.steps().is_empty() {
            return Err(Error::InvalidConfig("empty slope set".into()));
        }
        Ok(())
    }
}

/// Settings for the penalized-L² baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2Config {
    /// Roughness weight on `∫ (1 - sqrt(γ'))²`.
    pub kappa: f64,
    pub dp_max_step: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for L2Config {
    fn default() -> Self {
        Self {
            kappa: 0.0,
            dp_max_step: 7,
            tol: 1e-4,
            max_iter: 20,
        }
    }
}

impl L2Config {
    pub fn with_kappa(kappa: f64) -> Self {
        Self {
            kappa,
            ..Self::default()
        }
    }
}

/// Output of a multiple-alignment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub lambda: f64,
    /// The partially aligned functions `f_i ∘ γ_i`.
    pub aligned: FunctionSet,
    pub warpings: Vec<Warping>,
    /// Cross-sectional mean of `aligned`.
    pub mean: FunctionSample,
    pub iterations: usize,
    pub final_eps: f64,
    pub converged: bool,
    /// Total alignment cost against the template at each iteration.
    pub objective_trace: Vec<f64>,
}

/// Registers `q` to `q_ref`: returns `γ` minimizing
/// `‖q_ref - (q ∘ γ) sqrt(γ')‖² + λ ‖1 - sqrt(γ')‖²` and the minimal cost.
pub fn pairwise_align(q_ref: &Srvf, q: &Srvf, cfg: &AlignConfig) -> Result<(Warping, f64)> {
    q_ref.grid().check_same(&q.grid())?;
    let problem = dp::DpProblem {
        reference: q_ref.values(),
        target: q.values(),
        action: Action::Srvf,
        penalty: cfg.lambda,
    };
    let sol = dp::solve(&problem, &cfg.slopes)?;
    Ok((dp::path_to_warping(q.grid(), &sol.nodes), sol.cost))
}

/// Pointwise average of the set.
pub fn cross_sectional_mean(data: &FunctionSet) -> FunctionSample {
    data.mean()
}

#[derive(Clone, Copy)]
enum Space {
    Srvf,
    Function,
}

struct LoopSettings<'a> {
    space: Space,
    penalty: f64,
    slopes: &'a SlopeSet,
    tol: f64,
    max_iter: usize,
}

fn representation(space: Space, f: &FunctionSample) -> Result<Vec<f64>> {
    Ok(match space {
        Space::Srvf => to_srvf(f)?.into_values(),
        Space::Function => f.values().to_vec(),
    })
}

/// SRVFs enter the lattice search scaled to unit Euclidean norm of their
/// sample vector, so the elasticity weight has the same effect for any
/// amplitude of the data.
fn dp_representation(space: Space, mut v: Vec<f64>) -> Vec<f64> {
    if let Space::Srvf = space {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
    }
    v
}

fn align_all(
    template: &[f64],
    reps: &[Vec<f64>],
    s: &LoopSettings<'_>,
    data: &FunctionSet,
) -> Result<Vec<(Warping, f64)>> {
    let action = match s.space {
        Space::Srvf => Action::Srvf,
        Space::Function => Action::Composition,
    };
    let grid = data.grid();
    let template = dp_representation(s.space, template.to_vec());
    reps.par_iter()
        .map(|r| {
            let problem = dp::DpProblem {
                reference: &template,
                target: r,
                action,
                penalty: s.penalty,
            };
            let sol = dp::solve(&problem, s.slopes)?;
            Ok((dp::path_to_warping(grid, &sol.nodes), sol.cost))
        })
        .collect()
}

fn template_iteration(data: &FunctionSet, s: LoopSettings<'_>) -> Result<AlignmentResult> {
    if data.len() < 2 {
        return Err(Error::TooFewFunctions {
            needed: 2,
            got: data.len(),
        });
    }
    let grid = data.grid();
    let h = grid.step();
    let reps = data
        .iter()
        .map(|f| representation(s.space, f))
        .collect::<Result<Vec<_>>>()?;

    let dp_reps: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| dp_representation(s.space, r.clone()))
        .collect();

    // Start from the sample closest to the mean representation.
    let centre = mean_rows(reps.iter().map(|r| r.as_slice()));
    let start = reps
        .iter()
        .map(|r| l2_dist_sq(r, &centre, h))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut template = reps[start].clone();

    let mut objective_trace = Vec::new();
    let mut iterations = 0;
    let mut eps;
    let mut next;
    let mut warps: Vec<Warping>;
    loop {
        iterations += 1;
        let sols = align_all(&template, &dp_reps, &s, data)?;
        objective_trace.push(sols.iter().map(|(_, c)| c).sum());
        warps = sols.into_iter().map(|(w, _)| w).collect();
        let updated = match s.space {
            Space::Srvf => reps
                .iter()
                .zip(&warps)
                .map(
                    |(r, w)| Ok(warp_srvf(&Srvf::new_unchecked(grid, r.clone()), w)?.into_values()),
                )
                .collect::<Result<Vec<_>>>()?,
            Space::Function => data
                .iter()
                .zip(&warps)
                .map(|(f, w)| Ok(warp_function(f, w)?.into_values()))
                .collect::<Result<Vec<_>>>()?,
        };
        next = mean_rows(updated.iter().map(|r| r.as_slice()));
        eps = l2_dist_sq(&template, &next, h);
        if eps <= s.tol || iterations >= s.max_iter {
            break;
        }
        template = next.clone();
    }

    // Centre the template by the inverse of the mean warping.
    let centring = invert_warping(&mean_warping(&warps)?).inverse;
    let centred = match s.space {
        Space::Srvf => warp_srvf(&Srvf::new_unchecked(grid, next), &centring)?.into_values(),
        Space::Function => {
            warp_function(&FunctionSample::new_unchecked(grid, next), &centring)?.into_values()
        }
    };

    let warpings: Vec<Warping> = align_all(&centred, &dp_reps, &s, data)?
        .into_iter()
        .map(|(w, _)| w)
        .collect();
    let aligned = data
        .iter()
        .zip(&warpings)
        .map(|(f, w)| warp_function(f, w))
        .collect::<Result<Vec<_>>>()?;
    let aligned = FunctionSet::new(aligned)?;
    let mean = aligned.mean();
    Ok(AlignmentResult {
        lambda: s.penalty,
        aligned,
        warpings,
        mean,
        iterations,
        final_eps: eps,
        converged: eps <= s.tol,
        objective_trace,
    })
}

/// Penalized multiple alignment in SRVF space.
///
/// Non-convergence within `max_iter` is not an error; the last iterate is
/// returned with `converged == false`.
pub fn multiple_align(data: &FunctionSet, cfg: &AlignConfig) -> Result<AlignmentResult> {
    cfg.validate()?;
    template_iteration(
        data,
        LoopSettings {
            space: Space::Srvf,
            penalty: cfg.lambda,
            slopes: &cfg.slopes,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        },
    )
}

/// The same template iteration on raw function values with the roughness
/// weight `κ`. The DP may stall `γ` (flat moves), which is where the
/// pinching effect of this estimator comes from.
pub fn penalized_l2_align(data: &FunctionSet, cfg: &L2Config) -> Result<AlignmentResult> {
    if !cfg.kappa.is_finite() || cfg.kappa < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "kappa must be finite and >= 0, got {}",
            cfg.kappa
        )));
    }
    let slopes = SlopeSet::with_flat(cfg.dp_max_step)?;
    template_iteration(
        data,
        LoopSettings {
            space: Space::Function,
            penalty: cfg.kappa,
            slopes: &slopes,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
        },
    )
}

/// Smallest discrete slope over all warpings; values near zero signal
/// pinching.
pub fn pinching_score(result: &AlignmentResult) -> f64 {
    result
        .warpings
        .iter()
        .flat_map(|w| w.slopes())
        .fold(f64::INFINITY, f64::min)
}
