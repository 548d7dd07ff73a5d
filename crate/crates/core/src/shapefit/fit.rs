//! Least-squares fit over one warping and the extrema heights, with the
//! number of internal peaks held fixed.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::lm::{self, LmSettings};
use super::tangent::{TangentBasis, WarpCoefficients, MAX_TANGENT_NORM};
use super::template::{extract_template, HeightVector, ShapeTemplate};
use crate::calculus::{second_derivative, trapezoid};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet, Grid};
use crate::ppd::find_internal_peaks;
use crate::warping::Warping;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Weight of the roughness term `∫ ((f_s ∘ γ)'')²`.
    pub rho: f64,
    /// Number of tangent-basis coefficients for the warping.
    pub basis_size: usize,
    /// Residual evaluations allowed per optimizer run.
    pub max_evals: usize,
    /// Relative step length below which a run stops.
    pub step_tol: f64,
    /// Extra runs from jittered starting points.
    pub restarts: usize,
    /// Seed of the jitter.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            rho: 1e-8,
            basis_size: 10,
            max_evals: 5000,
            step_tol: 1e-8,
            restarts: 3,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() || self.rho < 0.0 {
            return Err(Error::InvalidConfig("rho must be finite and >= 0".into()));
        }
        if self.basis_size == 0 {
            return Err(Error::InvalidConfig("basis_size must be >= 1".into()));
        }
        if self.max_evals == 0 {
            return Err(Error::InvalidConfig("max_evals must be >= 1".into()));
        }
        if self.step_tol.is_nan() || self.step_tol <= 0.0 {
            return Err(Error::InvalidConfig("step_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Output of [`fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// `ĝ = f_s ∘ γ` on the data grid.
    pub estimate: FunctionSample,
    /// The template with the fitted heights.
    pub template: ShapeTemplate,
    pub heights: HeightVector,
    pub coefficients: WarpCoefficients,
    pub warping: Warping,
    pub initial_objective: f64,
    pub final_objective: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// `f_s ∘ γ` sampled on the grid of `gamma`.
fn compose(tpl: &ShapeTemplate, gamma: &Warping) -> Vec<f64> {
    gamma.values().iter().map(|&x| tpl.eval(x)).collect()
}

/// Eq.-7 criterion evaluated directly: the squared L² distance of
/// `f_s ∘ γ` to every curve plus `ρ` times its roughness.
pub fn objective(
    coeffs: &WarpCoefficients,
    heights: &HeightVector,
    tpl: &ShapeTemplate,
    data: &FunctionSet,
    cfg: &FitConfig,
) -> Result<f64> {
    let grid = data.grid();
    let h = grid.step();
    let shaped = tpl.with_heights(heights)?;
    let gamma = TangentBasis::new(grid, coeffs.len().max(1))?.decode(coeffs);
    let u = compose(&shaped, &gamma);
    let mut total = 0.0;
    for f in data.iter() {
        let sq: Vec<f64> = u
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        total += trapezoid(&sq, h);
    }
    if cfg.rho > 0.0 {
        let u2 = second_derivative(&u, h)?;
        let sq: Vec<f64> = u2.iter().map(|v| v * v).collect();
        total += cfg.rho * trapezoid(&sq, h);
    }
    Ok(total)
}

/// Unconstrained coordinates of the heights: maxima as they are, each
/// minimum as the log of its gap below the lower neighbouring maximum.
struct HeightMap {
    is_max: Vec<bool>,
}

impl HeightMap {
    fn new(tpl: &ShapeTemplate) -> Self {
        Self {
            is_max: tpl.points().iter().map(|p| p.kind.is_max()).collect(),
        }
    }

    fn cap(&self, s: &[f64], i: usize) -> f64 {
        let mut cap = f64::INFINITY;
        if i > 0 {
            cap = cap.min(s[i - 1]);
        }
        if i + 1 < s.len() {
            cap = cap.min(s[i + 1]);
        }
        cap
    }

    fn encode(&self, s: &[f64]) -> Vec<f64> {
        (0..s.len())
            .map(|i| {
                if self.is_max[i] {
                    s[i]
                } else {
                    (self.cap(s, i) - s[i]).max(1e-300).ln()
                }
            })
            .collect()
    }

    fn decode(&self, z: &[f64]) -> Vec<f64> {
        let mut s = z.to_vec();
        for (v, &is_max) in s.iter_mut().zip(&self.is_max) {
            if !is_max {
                *v = 0.0;
            }
        }
        for i in 0..z.len() {
            if !self.is_max[i] {
                s[i] = self.cap(&s, i) - z[i].exp();
            }
        }
        s
    }
}

struct Problem<'a> {
    tpl: &'a ShapeTemplate,
    basis: TangentBasis,
    map: HeightMap,
    mean: Vec<f64>,
    n: f64,
    weights: Vec<f64>,
    rho: f64,
    peaks: usize,
    h: f64,
}

impl Problem<'_> {
    fn split<'p>(&self, p: &'p [f64]) -> (&'p [f64], &'p [f64]) {
        p.split_at(self.basis.size())
    }

    fn curve(&self, p: &[f64]) -> Option<(ShapeTemplate, Warping, Vec<f64>)> {
        let (c, z) = self.split(p);
        let s = self.map.decode(z);
        if s.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let shaped = self.tpl.with_heights_unchecked(&s);
        let gamma = self.basis.decode_clamped(c, MAX_TANGENT_NORM);
        let u = compose(&shaped, &gamma);
        Some((shaped, gamma, u))
    }

    /// Residuals whose squared norm is the objective minus the constant
    /// spread of the data around its mean; `None` if the peak count of the
    /// sampled curve differs from the template's.
    fn residuals(&self, p: &[f64]) -> Option<Vec<f64>> {
        let (_, _, u) = self.curve(p)?;
        let grid = self.basis.grid();
        let sample = FunctionSample::new_unchecked(grid, u);
        if find_internal_peaks(&sample).len() != self.peaks {
            return None;
        }
        let u = sample.values();
        let mut r: Vec<f64> = u
            .iter()
            .zip(&self.mean)
            .zip(&self.weights)
            .map(|((a, b), w)| (self.n * w).sqrt() * (a - b))
            .collect();
        if self.rho > 0.0 {
            let u2 = second_derivative(u, self.h).ok()?;
            r.extend(
                u2.iter()
                    .zip(&self.weights)
                    .map(|(v, w)| (self.rho * w).sqrt() * v),
            );
        }
        r.iter().all(|v| v.is_finite()).then_some(r)
    }
}

fn jitter(start: &[f64], k: usize, scale: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    start
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let z: f64 = rng.sample(StandardNormal);
            if i < k {
                v + 0.05 * z
            } else {
                v + 0.02 * scale * z
            }
        })
        .collect()
}

/// Best `f_s ∘ γ` with the shape of `g_init` for the aligned data.
///
/// Starts from the heights of `g_init`'s extrema and `γ = id`, then runs
/// the optimizer from there and from `cfg.restarts` jittered starts. The
/// returned objective never exceeds the starting one.
pub fn fit(data: &FunctionSet, g_init: &FunctionSample, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    let grid: Grid = data.grid();
    grid.check_same(&g_init.grid())?;
    let tpl = extract_template(g_init)?;
    let h = grid.step();
    let mean = data.mean().into_values();
    let spread: f64 = data
        .iter()
        .map(|f| {
            let sq: Vec<f64> = f
                .values()
                .iter()
                .zip(&mean)
                .map(|(a, b)| (a - b) * (a - b))
                .collect();
            trapezoid(&sq, h)
        })
        .sum();
    let problem = Problem {
        tpl: &tpl,
        basis: TangentBasis::new(grid, cfg.basis_size)?,
        map: HeightMap::new(&tpl),
        mean,
        n: data.len() as f64,
        weights: grid.weights(),
        rho: cfg.rho,
        peaks: tpl.peak_count(),
        h,
    };
    let mut start = vec![0.0; cfg.basis_size];
    start.extend(problem.map.encode(&tpl.heights().s));
    let start_res = problem.residuals(&start).ok_or_else(|| {
        Error::Numerical("the starting curve does not have the template's peak count".into())
    })?;
    let initial_objective = start_res.iter().map(|v| v * v).sum::<f64>() + spread;

    let settings = LmSettings {
        max_evals: cfg.max_evals,
        step_tol: cfg.step_tol,
    };
    let scale = (g_init.max() - g_init.min()).max(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<lm::LmOutcome> = None;
    let mut evaluations = 0;
    for run in 0..=cfg.restarts {
        let init = if run == 0 {
            start.clone()
        } else {
            match (0..20)
                .map(|_| jitter(&start, cfg.basis_size, scale, &mut rng))
                .find(|p| problem.residuals(p).is_some())
            {
                Some(p) => p,
                None => continue,
            }
        };
        if let Some(out) = lm::minimize(init, |p| problem.residuals(p), &settings) {
            evaluations += out.evals;
            if best.as_ref().is_none_or(|b| out.value < b.value) {
                best = Some(out);
            }
        }
    }
    let best = best.ok_or_else(|| Error::Numerical("no optimizer run succeeded".into()))?;
    let (shaped, warping, u) = problem
        .curve(&best.params)
        .ok_or_else(|| Error::Numerical("optimizer returned an invalid point".into()))?;
    let (c, _) = problem.split(&best.params);
    Ok(FitResult {
        estimate: FunctionSample::new(grid, u)?,
        heights: shaped.heights(),
        template: shaped,
        coefficients: WarpCoefficients { c: c.to_vec() },
        warping,
        initial_objective,
        final_objective: best.value + spread,
        evaluations,
        converged: best.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapefit::template::{initial_estimate, ExtremumKind, TemplatePoint};

    fn bimodal_template() -> ShapeTemplate {
        use ExtremumKind::*;
        let p = |kind, location, height| TemplatePoint {
            kind,
            location,
            height,
        };
        ShapeTemplate::new(vec![
            p(EndpointMin, 0.0, 0.0),
            p(Peak, 0.3, 1.0),
            p(Valley, 0.5, 0.2),
            p(Peak, 0.7, 0.8),
            p(EndpointMin, 1.0, 0.1),
        ])
        .unwrap()
    }

    #[test]
    fn height_map_round_trip() {
        let tpl = bimodal_template();
        let map = HeightMap::new(&tpl);
        let s = tpl.heights().s;
        let back = map.decode(&map.encode(&s));
        for (a, b) in s.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn objective_is_zero_at_generating_point() {
        let grid = Grid::new(80).unwrap();
        let tpl = bimodal_template();
        let g = initial_estimate(&tpl, grid);
        let data = FunctionSet::new(vec![g; 4]).unwrap();
        let cfg = FitConfig {
            rho: 0.0,
            ..FitConfig::default()
        };
        let v = objective(
            &WarpCoefficients::zeros(10),
            &tpl.heights(),
            &tpl,
            &data,
            &cfg,
        )
        .unwrap();
        assert!(v.abs() < 1e-20);
    }

    #[test]
    fn objective_rejects_infeasible_heights() {
        let grid = Grid::new(30).unwrap();
        let tpl = bimodal_template();
        let data = FunctionSet::new(vec![initial_estimate(&tpl, grid); 2]).unwrap();
        let mut s = tpl.heights();
        s.s[2] = 5.0;
        assert!(objective(
            &WarpCoefficients::zeros(3),
            &s,
            &tpl,
            &data,
            &FitConfig::default()
        )
        .is_err());
    }

    #[test]
    fn fit_does_not_increase_the_objective() {
        let grid = Grid::new(60).unwrap();
        let tpl = bimodal_template();
        let truth = initial_estimate(&tpl, grid);
        let shifted =
            FunctionSample::from_fn(grid, |t| tpl.eval((t * 1.1).min(1.0)) + 0.05).unwrap();
        let data = FunctionSet::new(vec![truth.clone(), shifted]).unwrap();
        let res = fit(&data, &truth, &FitConfig::default()).unwrap();
        assert!(res.final_objective <= res.initial_objective + 1e-10);
        assert_eq!(find_internal_peaks(&res.estimate).len(), 2);
        let direct = objective(
            &res.coefficients,
            &res.heights,
            &res.template,
            &data,
            &FitConfig::default(),
        )
        .unwrap();
        assert!((direct - res.final_objective).abs() < 1e-9 * (1.0 + direct));
    }
}
