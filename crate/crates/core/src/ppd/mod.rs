//! Peak-persistence diagrams: internal peaks of the partially aligned means
//! tracked over a grid of elasticity weights, and the selection of the peak
//! count `m` and the weight `λ*` from them.

mod peaks;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{multiple_align, AlignConfig, AlignmentResult};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet};

pub use peaks::{find_internal_peaks, find_internal_valleys, peak_strength, Extremum};

/// Settings of the diagram and of the selection rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpdConfig {
    /// Strictly increasing elasticity weights, starting at 0.
    pub lambda_grid: Vec<f64>,
    /// A peak is significant when its strength exceeds `tau`.
    pub tau: f64,
    /// Relative-persistence threshold for a peak to count.
    pub theta: f64,
    /// Largest displacement of a peak between two weights of the grid for
    /// the two observations to be linked.
    pub track_radius: f64,
}

impl Default for PpdConfig {
    fn default() -> Self {
        Self {
            lambda_grid: (0..=40).map(|i| i as f64 * 0.005).collect(),
            tau: 0.03,
            theta: 0.28,
            track_radius: 0.05,
        }
    }
}

impl PpdConfig {
    pub fn validate(&self) -> Result<()> {
        let grid = &self.lambda_grid;
        if grid.is_empty() {
            return Err(Error::InvalidConfig("lambda grid is empty".into()));
        }
        if grid[0] != 0.0 {
            return Err(Error::InvalidConfig("lambda grid must start at 0".into()));
        }
        if grid.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidConfig("lambda grid must be finite".into()));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig(
                "lambda grid must be strictly increasing".into(),
            ));
        }
        if !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::InvalidConfig("tau must be finite and >= 0".into()));
        }
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(Error::InvalidConfig("theta must lie in (0, 1)".into()));
        }
        if !self.track_radius.is_finite() || self.track_radius <= 0.0 {
            return Err(Error::InvalidConfig("track_radius must be > 0".into()));
        }
        Ok(())
    }

    /// Measure attached to each grid weight: half the gap to each neighbour.
    /// A one-point grid gets unit weight.
    fn lambda_weights(&self) -> Vec<f64> {
        let g = &self.lambda_grid;
        let n = g.len();
        if n == 1 {
            return vec![1.0];
        }
        (0..n)
            .map(|i| {
                let left = if i > 0 { g[i] - g[i - 1] } else { 0.0 };
                let right = if i + 1 < n { g[i + 1] - g[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect()
    }
}

/// One internal peak of `ĝ_λ` at one weight of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakObservation {
    pub lambda: f64,
    /// Position of `lambda` in the grid.
    pub lambda_index: usize,
    /// Grid index of the peak in `ĝ_λ`.
    pub index: usize,
    pub location: f64,
    pub height: f64,
    pub strength: f64,
    pub significant: bool,
}

/// Observations of one peak linked across the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTrack {
    pub label: usize,
    pub observations: Vec<PeakObservation>,
    /// λ-measure over which the peak is significant.
    pub persistence: f64,
}

impl PeakTrack {
    pub fn is_ever_significant(&self) -> bool {
        self.observations.iter().any(|o| o.significant)
    }

    /// Maximal runs of consecutive grid weights at which the peak is
    /// significant, as `[λ_begin, λ_end]`.
    pub fn significance_intervals(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut last_index: Option<usize> = None;
        for o in self.observations.iter().filter(|o| o.significant) {
            match (last_index, out.last_mut()) {
                (Some(prev), Some(run)) if o.lambda_index == prev + 1 => run.1 = o.lambda,
                _ => out.push((o.lambda, o.lambda)),
            }
            last_index = Some(o.lambda_index);
        }
        out
    }
}

/// Diagram, tracks and selected `(m, λ*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PpdResult {
    pub config: PpdConfig,
    pub means: Vec<(f64, FunctionSample)>,
    pub tracks: Vec<PeakTrack>,
    /// Number of significant peaks of each `ĝ_λ`, in grid order.
    pub significant_counts: Vec<usize>,
    pub m: usize,
    pub lambda_star: f64,
    pub persistent_labels: Vec<usize>,
    /// No grid weight has exactly `m` significant peaks; `lambda_star` is
    /// the smallest weight with the closest count.
    pub lambda_star_inexact: bool,
    /// Weights at which the alignment stopped at its iteration cap.
    pub unconverged_lambdas: Vec<f64>,
}

impl PpdResult {
    /// Position of `lambda_star` in the grid.
    pub fn lambda_star_index(&self) -> usize {
        self.config
            .lambda_grid
            .iter()
            .position(|&l| l == self.lambda_star)
            .unwrap_or(0)
    }

    pub fn mean_at_lambda_star(&self) -> &FunctionSample {
        &self.means[self.lambda_star_index()].1
    }
}

fn observe(g: &FunctionSample, lambda: f64, lambda_index: usize, tau: f64) -> Vec<PeakObservation> {
    let found = find_internal_peaks(g);
    let strengths = peaks::peak_strengths(g, &found);
    found
        .iter()
        .zip(strengths)
        .map(|(p, strength)| PeakObservation {
            lambda,
            lambda_index,
            index: p.index,
            location: p.location,
            height: p.height,
            strength,
            significant: strength > tau,
        })
        .collect()
}

/// Links observations across the grid. Each observation is attached to the
/// nearest unclaimed track within `radius` of the track's latest location,
/// closest pairs first; the rest open new tracks in location order.
fn link(per_lambda: Vec<Vec<PeakObservation>>, radius: f64) -> Vec<PeakTrack> {
    let mut tracks: Vec<PeakTrack> = Vec::new();
    for obs in per_lambda {
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (ti, t) in tracks.iter().enumerate() {
            let last = t.observations.last().expect("tracks are never empty");
            for (oi, o) in obs.iter().enumerate() {
                let d = (o.location - last.location).abs();
                if d <= radius {
                    pairs.push((d, ti, oi));
                }
            }
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut track_used = vec![false; tracks.len()];
        let mut obs_track: Vec<Option<usize>> = vec![None; obs.len()];
        for (_, ti, oi) in pairs {
            if !track_used[ti] && obs_track[oi].is_none() {
                track_used[ti] = true;
                obs_track[oi] = Some(ti);
            }
        }
        for (o, target) in obs.into_iter().zip(obs_track) {
            match target {
                Some(ti) => tracks[ti].observations.push(o),
                None => tracks.push(PeakTrack {
                    label: tracks.len() + 1,
                    observations: vec![o],
                    persistence: 0.0,
                }),
            }
        }
    }
    tracks
}

/// Builds the diagram from precomputed means `ĝ_λ`, one per grid weight.
pub fn analyze(means: Vec<(f64, FunctionSample)>, cfg: &PpdConfig) -> Result<PpdResult> {
    cfg.validate()?;
    if means.len() != cfg.lambda_grid.len()
        || means.iter().zip(&cfg.lambda_grid).any(|((l, _), g)| l != g)
    {
        return Err(Error::InvalidConfig(
            "means must match the lambda grid one to one".into(),
        ));
    }
    let per_lambda: Vec<Vec<PeakObservation>> = means
        .iter()
        .enumerate()
        .map(|(i, (l, g))| observe(g, *l, i, cfg.tau))
        .collect();
    let significant_counts: Vec<usize> = per_lambda
        .iter()
        .map(|obs| obs.iter().filter(|o| o.significant).count())
        .collect();

    let weights = cfg.lambda_weights();
    let mut tracks = link(per_lambda, cfg.track_radius);
    for t in &mut tracks {
        t.persistence = t
            .observations
            .iter()
            .filter(|o| o.significant)
            .map(|o| weights[o.lambda_index])
            .sum();
    }

    let top = tracks.iter().map(|t| t.persistence).fold(0.0_f64, f64::max);
    let persistent_labels: Vec<usize> = if top > 0.0 {
        tracks
            .iter()
            .filter(|t| t.persistence / top > cfg.theta)
            .map(|t| t.label)
            .collect()
    } else {
        Vec::new()
    };
    let m = persistent_labels.len();

    let (star_index, inexact) = match significant_counts.iter().position(|&c| c == m) {
        Some(i) => (i, false),
        None => {
            let i = significant_counts
                .iter()
                .enumerate()
                .min_by_key(|(i, &c)| (c.abs_diff(m), *i))
                .map(|(i, _)| i)
                .unwrap_or(0);
            (i, true)
        }
    };

    Ok(PpdResult {
        config: cfg.clone(),
        lambda_star: cfg.lambda_grid[star_index],
        means,
        tracks,
        significant_counts,
        m,
        persistent_labels,
        lambda_star_inexact: inexact,
        unconverged_lambdas: Vec::new(),
    })
}

/// Runs the partial alignment at every weight of the grid and builds the
/// diagram. Also returns the alignments, in grid order.
pub fn build_ppd_with_alignments(
    data: &FunctionSet,
    acfg: &AlignConfig,
    pcfg: &PpdConfig,
) -> Result<(PpdResult, Vec<AlignmentResult>)> {
    pcfg.validate()?;
    acfg.validate()?;
    let alignments = pcfg
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let cfg = AlignConfig {
                lambda,
                ..acfg.clone()
            };
            multiple_align(data, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let means = alignments
        .iter()
        .map(|a| (a.lambda, a.mean.clone()))
        .collect();
    let mut result = analyze(means, pcfg)?;
    result.unconverged_lambdas = alignments
        .iter()
        .filter(|a| !a.converged)
        .map(|a| a.lambda)
        .collect();
    Ok((result, alignments))
}

/// Peak-persistence diagram of `data` over `pcfg.lambda_grid`.
pub fn build_ppd(data: &FunctionSet, acfg: &AlignConfig, pcfg: &PpdConfig) -> Result<PpdResult> {
    build_ppd_with_alignments(data, acfg, pcfg).map(|(r, _)| r)
}

/// One row of the bar chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarchartRow {
    pub label: usize,
    pub intervals: Vec<(f64, f64)>,
    pub persistence: f64,
    pub persistent: bool,
}

/// Significance intervals of every track that is significant somewhere.
pub fn ppd_barchart(ppd: &PpdResult) -> Vec<BarchartRow> {
    ppd.tracks
        .iter()
        .filter(|t| t.is_ever_significant())
        .map(|t| BarchartRow {
            label: t.label,
            intervals: t.significance_intervals(),
            persistence: t.persistence,
            persistent: ppd.persistent_labels.contains(&t.label),
        })
        .collect()
}

/// Path of a track in the `(λ, t)` plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPolyline {
    pub label: usize,
    pub persistent: bool,
    /// `(λ, location)` pairs in grid order.
    pub points: Vec<(f64, f64)>,
}

/// `ĝ_λ(t)` over the `λ × t` grid, with the peak tracks for overlay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpdSurface {
    pub lambdas: Vec<f64>,
    pub t: Vec<f64>,
    /// One row per weight.
    pub values: Vec<Vec<f64>>,
    pub tracks: Vec<TrackPolyline>,
}

pub fn ppd_surface(ppd: &PpdResult) -> PpdSurface {
    let t = ppd
        .means
        .first()
        .map(|(_, g)| g.grid().points())
        .unwrap_or_default();
    PpdSurface {
        lambdas: ppd.means.iter().map(|(l, _)| *l).collect(),
        t,
        values: ppd.means.iter().map(|(_, g)| g.values().to_vec()).collect(),
        tracks: ppd
            .tracks
            .iter()
            .map(|tr| TrackPolyline {
                label: tr.label,
                persistent: ppd.persistent_labels.contains(&tr.label),
                points: tr
                    .observations
                    .iter()
                    .map(|o| (o.lambda, o.location))
                    .collect(),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    fn config(grid: Vec<f64>) -> PpdConfig {
        PpdConfig {
            lambda_grid: grid,
            ..PpdConfig::default()
        }
    }

    fn sample(f: impl Fn(f64) -> f64) -> FunctionSample {
        FunctionSample::from_fn(Grid::new(101).unwrap(), f).unwrap()
    }

    #[test]
    fn default_grid_has_41_weights() {
        let cfg = PpdConfig::default();
        assert_eq!(cfg.lambda_grid.len(), 41);
        assert!((cfg.lambda_grid[40] - 0.2).abs() < 1e-15);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(config(vec![]).validate().is_err());
        assert!(config(vec![0.1, 0.2]).validate().is_err());
        assert!(config(vec![0.0, 0.2, 0.1]).validate().is_err());
        let cfg = PpdConfig {
            theta: 1.0,
            ..PpdConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn weights_sum_to_span() {
        let cfg = config(vec![0.0, 0.1, 0.15, 0.4]);
        let w = cfg.lambda_weights();
        assert!((w.iter().sum::<f64>() - 0.4).abs() < 1e-15);
        assert_eq!(w[0], 0.05);
    }

    #[test]
    fn always_significant_track() {
        let grid: Vec<f64> = (0..=4).map(|i| i as f64 * 0.05).collect();
        let g = sample(|t| (PI * t).sin());
        let means = grid.iter().map(|&l| (l, g.clone())).collect();
        let res = analyze(means, &config(grid)).unwrap();
        assert_eq!(res.m, 1);
        assert_eq!(res.lambda_star, 0.0);
        let rows = ppd_barchart(&res);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].intervals, vec![(0.0, 0.2)]);
        assert!((rows[0].persistence - 0.2).abs() < 1e-15);
        assert!(rows[0].persistent);
    }

    #[test]
    fn peak_significant_only_at_zero() {
        let grid = vec![0.0, 0.04, 0.1, 0.2];
        let bump = sample(|t| (PI * t).sin());
        let flat = sample(|t| t);
        let means = grid
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, if i == 0 { bump.clone() } else { flat.clone() }))
            .collect();
        let res = analyze(means, &config(grid)).unwrap();
        assert_eq!(res.tracks.len(), 1);
        assert!((res.tracks[0].persistence - 0.02).abs() < 1e-15);
        assert_eq!(res.m, 1);
        assert_eq!(res.lambda_star, 0.0);
    }

    #[test]
    fn short_lived_peak_is_not_persistent() {
        // Two peaks everywhere, a third only at the two smallest weights.
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.02).collect();
        let two = sample(|t| (4.0 * PI * t - PI / 2.0).sin().max(-0.5));
        let three = sample(|t| (6.0 * PI * t - PI / 2.0).sin());
        let means = grid
            .iter()
            .enumerate()
            .map(|(i, &l)| (l, if i < 2 { three.clone() } else { two.clone() }))
            .collect();
        let res = analyze(means, &config(grid)).unwrap();
        assert_eq!(res.significant_counts[0], 3);
        assert_eq!(res.significant_counts[5], 2);
        assert_eq!(res.m, 2);
        assert!((res.lambda_star - 0.04).abs() < 1e-15);
        assert!(!res.lambda_star_inexact);
    }

    #[test]
    fn no_peaks_gives_zero() {
        let grid = vec![0.0, 0.1];
        let g = sample(|t| t * t);
        let means = grid.iter().map(|&l| (l, g.clone())).collect();
        let res = analyze(means, &config(grid)).unwrap();
        assert_eq!(res.m, 0);
        assert_eq!(res.lambda_star, 0.0);
        assert!(ppd_barchart(&res).is_empty());
    }

    #[test]
    fn fallback_picks_closest_count() {
        // Counts 3, 1, 1: persistent set has the single long-lived peak plus
        // none else, so m = 1 and the first exact match is at 0.1.
        let grid = vec![0.0, 0.1, 0.2];
        let three = sample(|t| (6.0 * PI * t - PI / 2.0).sin());
        let one = sample(|t| (PI * t).sin());
        let means = vec![(0.0, three), (0.1, one.clone()), (0.2, one)];
        let res = analyze(means, &config(grid)).unwrap();
        assert_eq!(res.m, 1);
        assert_eq!(res.lambda_star, 0.1);
    }

    #[test]
    fn surface_rows_are_the_means() {
        let grid = vec![0.0, 0.1];
        let g0 = sample(|t| (PI * t).sin());
        let g1 = sample(|t| 0.9 * (PI * t).sin());
        let res = analyze(vec![(0.0, g0.clone()), (0.1, g1)], &config(grid)).unwrap();
        let s = ppd_surface(&res);
        assert_eq!(s.values[0], g0.values());
        assert_eq!(s.lambdas, vec![0.0, 0.1]);
        assert_eq!(s.tracks.len(), 1);
        assert_eq!(s.tracks[0].points.len(), 2);
    }

    #[test]
    fn noiseless_bimodal_selects_two_at_zero() {
        let grid = Grid::new(60).unwrap();
        let g = FunctionSample::from_fn(grid, |t| {
            (-(t - 0.3).powi(2) / 0.01).exp() + 0.8 * (-(t - 0.7).powi(2) / 0.01).exp()
        })
        .unwrap();
        let data = FunctionSet::new(vec![g; 3]).unwrap();
        let res = build_ppd(&data, &AlignConfig::default(), &config(vec![0.0, 0.1, 0.2])).unwrap();
        assert_eq!(res.m, 2);
        assert_eq!(res.lambda_star, 0.0);
        assert!(res.unconverged_lambdas.is_empty());
    }
}
