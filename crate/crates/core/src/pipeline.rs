//! End-to-end estimation: peak-persistence diagram, template at the selected
//! weight, then the shape-constrained fit on the data aligned at that weight.

use serde::{Deserialize, Serialize};

use crate::align::{AlignConfig, AlignmentResult};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet};
use crate::ppd::{build_ppd_with_alignments, peak_strength, PpdConfig, PpdResult};
use crate::shapefit::{
    extract_template, fit, initial_estimate, reduce_template, FitConfig, FitResult,
};
use crate::shapefit::{ExtremumKind, TemplatePoint};

/// Settings of every stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateConfig {
    pub align: AlignConfig,
    pub ppd: PpdConfig,
    pub fit: FitConfig,
}

impl EstimateConfig {
    pub fn validate(&self) -> Result<()> {
        self.align.validate()?;
        self.ppd.validate()?;
        self.fit.validate()
    }
}

/// Everything the pipeline produces.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub ppd: PpdResult,
    /// Alignment of the data at the selected weight.
    pub alignment: AlignmentResult,
    /// Smooth curve through the extrema kept from the mean at that weight.
    pub g_init: FunctionSample,
    pub fit: FitResult,
}

impl Estimate {
    pub fn estimate(&self) -> &FunctionSample {
        &self.fit.estimate
    }
}

/// Initial estimate with exactly `m` internal peaks built from `g`: the
/// extrema of `g`, with the weakest peaks removed.
pub fn initial_from_mean(g: &FunctionSample, m: usize) -> Result<FunctionSample> {
    let tpl = extract_template(g)?;
    if tpl.peak_count() < m {
        return Err(Error::InfeasibleTemplate(format!(
            "curve has {} internal peaks, {m} requested",
            tpl.peak_count()
        )));
    }
    let grid = g.grid();
    let last = grid.len() - 1;
    let strength = |p: &TemplatePoint| match p.kind {
        ExtremumKind::Peak => {
            let index = ((p.location * last as f64).round() as usize).min(last);
            peak_strength(g, index)
        }
        _ => 0.0,
    };
    let reduced = reduce_template(&tpl, m, strength)?;
    Ok(initial_estimate(&reduced, grid))
}

/// Runs the whole pipeline on `data`.
pub fn estimate(data: &FunctionSet, cfg: &EstimateConfig) -> Result<Estimate> {
    cfg.validate()?;
    let (ppd, alignments) = build_ppd_with_alignments(data, &cfg.align, &cfg.ppd)?;
    fit_at_lambda_star(ppd, alignments, &cfg.fit)
}

/// Second stage: the fit on the alignment at the selected weight.
/// `alignments` must be in the order of the diagram's weight grid.
pub fn fit_at_lambda_star(
    ppd: PpdResult,
    mut alignments: Vec<AlignmentResult>,
    fcfg: &FitConfig,
) -> Result<Estimate> {
    let index = ppd.lambda_star_index();
    if index >= alignments.len() {
        return Err(Error::LengthMismatch {
            expected: ppd.config.lambda_grid.len(),
            got: alignments.len(),
        });
    }
    let alignment = alignments.swap_remove(index);
    let g_init = initial_from_mean(&alignment.mean, ppd.m)?;
    let fit = fit(&alignment.aligned, &g_init, fcfg)?;
    Ok(Estimate {
        ppd,
        alignment,
        g_init,
        fit,
    })
}
