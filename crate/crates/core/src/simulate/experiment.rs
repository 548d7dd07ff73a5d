//! Replication harness: simulate, estimate with every method, score against
//! the true signal.

use std::time::Instant;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{generate, Scenario};
use super::signals::ScenarioId;
use crate::align::{cross_sectional_mean, penalized_l2_align, L2Config};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet};
use crate::pipeline::{fit_at_lambda_star, EstimateConfig};
use crate::ppd::build_ppd_with_alignments;
use crate::shapefit::extract_template;

/// Root-mean-square pointwise difference.
pub fn rmse(a: &FunctionSample, b: &FunctionSample) -> Result<f64> {
    a.grid().check_same(&b.grid())?;
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sq / a.values().len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub estimate: EstimateConfig,
    /// Roughness weights of the penalized-L² baseline.
    pub kappa_grid: Vec<f64>,
    pub l2_tol: f64,
    pub l2_max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            replications: 20,
            estimate: EstimateConfig::default(),
            kappa_grid: vec![0.0, 0.01, 0.1],
            l2_tol: 1e-4,
            l2_max_iter: 20,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self
            .kappa_grid
            .iter()
            .any(|k| !(k.is_finite() && *k >= 0.0))
        {
            return Err(Error::InvalidConfig(
                "kappa values must be finite and >= 0".into(),
            ));
        }
        self.estimate.validate()
    }
}

/// Wall-clock seconds spent in each stage of one replication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub generate: f64,
    pub cross_sectional: f64,
    pub l2: f64,
    pub ppd: f64,
    pub fit: f64,
}

/// Scores of the shape-constrained estimate and its fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineScores {
    pub rmse: f64,
    /// Peak count selected from the persistence diagram.
    pub m: usize,
    pub lambda_star: f64,
    pub lambda_star_inexact: bool,
    /// Internal peaks of the final estimate's template.
    pub estimate_peaks: usize,
    pub fit_initial_objective: f64,
    pub fit_final_objective: f64,
    /// Score of the mean at the smallest weight.
    pub rmse_srvf_zero: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub index: usize,
    pub seed: u64,
    pub rmse_cross_sectional: f64,
    /// One entry per value of the configured `kappa_grid`; `NaN` where the
    /// alignment failed.
    pub rmse_l2: Vec<f64>,
    /// `Err` holds the message of a failed pipeline run.
    pub pipeline: std::result::Result<PipelineScores, String>,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: ScenarioId,
    pub kappa_grid: Vec<f64>,
    pub replications: Vec<Replication>,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    v.retain(|x| x.is_finite());
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

impl ExperimentReport {
    fn successes(&self) -> impl Iterator<Item = &PipelineScores> {
        self.replications
            .iter()
            .filter_map(|r| r.pipeline.as_ref().ok())
    }

    pub fn median_rmse_estimate(&self) -> Option<f64> {
        median(self.successes().map(|p| p.rmse).collect())
    }

    pub fn median_rmse_srvf_zero(&self) -> Option<f64> {
        median(self.successes().map(|p| p.rmse_srvf_zero).collect())
    }

    pub fn median_rmse_cross_sectional(&self) -> Option<f64> {
        median(
            self.replications
                .iter()
                .map(|r| r.rmse_cross_sectional)
                .collect(),
        )
    }

    /// Fraction of all replications whose selected peak count is `m`.
    pub fn fraction_with_m(&self, m: usize) -> f64 {
        let hits = self.successes().filter(|p| p.m == m).count();
        hits as f64 / self.replications.len() as f64
    }

    pub fn total_seconds(&self) -> f64 {
        self.replications
            .iter()
            .map(|r| {
                let t = &r.timings;
                t.generate + t.cross_sectional + t.l2 + t.ppd + t.fit
            })
            .sum()
    }
}

/// Seed of replication `rep` derived from the scenario seed.
pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng.next_u64()
}

fn run_pipeline(
    data: &FunctionSet,
    g_true: &FunctionSample,
    cfg: &EstimateConfig,
    timings: &mut StageTimings,
) -> Result<PipelineScores> {
    cfg.validate()?;
    let clock = Instant::now();
    let (ppd, alignments) = build_ppd_with_alignments(data, &cfg.align, &cfg.ppd)?;
    timings.ppd = clock.elapsed().as_secs_f64();
    let clock = Instant::now();
    let est = fit_at_lambda_star(ppd, alignments, &cfg.fit)?;
    timings.fit = clock.elapsed().as_secs_f64();
    let (_, g_zero) = est
        .ppd
        .means
        .first()
        .ok_or_else(|| Error::Numerical("empty persistence diagram".into()))?;
    Ok(PipelineScores {
        rmse: rmse(est.estimate(), g_true)?,
        m: est.ppd.m,
        lambda_star: est.ppd.lambda_star,
        lambda_star_inexact: est.ppd.lambda_star_inexact,
        estimate_peaks: extract_template(est.estimate())?.peak_count(),
        fit_initial_objective: est.fit.initial_objective,
        fit_final_objective: est.fit.final_objective,
        rmse_srvf_zero: rmse(g_zero, g_true)?,
    })
}

/// Runs `cfg.replications` independent replications of `scn`. Replication
/// `r` uses the seed `replication_seed(scn.seed, r)`. Failures of the
/// pipeline are recorded in the report, not propagated.
pub fn run_experiment(scn: &Scenario, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    scn.noise.validate()?;
    let mut replications = Vec::with_capacity(cfg.replications);
    for index in 0..cfg.replications {
        let seed = replication_seed(scn.seed, index);
        let mut timings = StageTimings::default();

        let clock = Instant::now();
        let (data, g_true) = generate(&scn.clone().with_seed(seed))?;
        timings.generate = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let rmse_cross_sectional = rmse(&cross_sectional_mean(&data), &g_true)?;
        timings.cross_sectional = clock.elapsed().as_secs_f64();

        let clock = Instant::now();
        let rmse_l2 = cfg
            .kappa_grid
            .iter()
            .map(|&kappa| {
                let l2 = L2Config {
                    kappa,
                    tol: cfg.l2_tol,
                    max_iter: cfg.l2_max_iter,
                    ..L2Config::default()
                };
                penalized_l2_align(&data, &l2)
                    .and_then(|r| rmse(&r.mean, &g_true))
                    .unwrap_or(f64::NAN)
            })
            .collect();
        timings.l2 = clock.elapsed().as_secs_f64();

        let pipeline =
            run_pipeline(&data, &g_true, &cfg.estimate, &mut timings).map_err(|e| e.to_string());
        replications.push(Replication {
            index,
            seed,
            rmse_cross_sectional,
            rmse_l2,
            pipeline,
            timings,
        });
    }
    Ok(ExperimentReport {
        scenario: scn.id,
        kappa_grid: cfg.kappa_grid.clone(),
        replications,
    })
}
