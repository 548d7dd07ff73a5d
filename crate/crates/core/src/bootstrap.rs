//! Pointwise confidence bands for the shape-constrained estimate by
//! resampling curves with replacement.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{multiple_align, AlignConfig};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, FunctionSet, Grid};
use crate::shapefit::{fit, FitConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    /// Number of replicates.
    pub replicates: usize,
    /// Two-sided level; the band spans the `alpha / 2` and `1 - alpha / 2`
    /// quantiles.
    pub alpha: f64,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replicates: 100,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replicates < 2 {
            return Err(Error::InvalidConfig("replicates must be >= 2".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig("alpha must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// A warning when the tail quantiles rest on fewer than one replicate.
    pub fn rank_warning(&self) -> Option<String> {
        let tail = self.replicates as f64 * self.alpha / 2.0;
        (tail < 1.0).then(|| {
            format!(
                "replicates * alpha / 2 = {tail} < 1: the band edges are the extreme replicates"
            )
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub grid: Grid,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    /// Replicates requested.
    pub replicates: usize,
    /// Replicates whose fit failed and were left out.
    pub dropped: usize,
}

impl ConfidenceBand {
    /// Fraction of grid points where `g` lies inside the band.
    pub fn coverage(&self, g: &FunctionSample) -> Result<f64> {
        self.grid.check_same(&g.grid())?;
        let inside = g
            .values()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .filter(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
            .count();
        Ok(inside as f64 / self.grid.len() as f64)
    }
}

/// Quantile of sorted `values` by linear interpolation between order
/// statistics at zero-based rank `p (len - 1)`.
pub fn quantile_sorted(values: &[f64], p: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let rank = p.clamp(0.0, 1.0) * (values.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let w = rank - lo as f64;
    values[lo] + w * (values[hi] - values[lo])
}

/// Indices of replicate `j`: `n` draws with replacement from a generator
/// keyed by `(seed, j)`.
fn resample_indices(seed: u64, j: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(j as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Estimates of every successful replicate, in replicate order, and the
/// number of failures.
pub fn bootstrap_replicates(
    data: &FunctionSet,
    g_init: &FunctionSample,
    lambda_star: f64,
    acfg: &AlignConfig,
    fcfg: &FitConfig,
    bcfg: &BootstrapConfig,
) -> Result<(Vec<FunctionSample>, usize)> {
    bcfg.validate()?;
    if data.len() < 2 {
        return Err(Error::TooFewFunctions {
            needed: 2,
            got: data.len(),
        });
    }
    let acfg = AlignConfig {
        lambda: lambda_star,
        ..acfg.clone()
    };
    acfg.validate()?;
    fcfg.validate()?;
    let n = data.len();
    let results: Vec<Option<FunctionSample>> = (0..bcfg.replicates)
        .into_par_iter()
        .map(|j| {
            let picked = resample_indices(bcfg.seed, j, n)
                .into_iter()
                .map(|i| data.functions()[i].clone())
                .collect();
            let sample = FunctionSet::new(picked).ok()?;
            let aligned = multiple_align(&sample, &acfg).ok()?;
            fit(&aligned.aligned, g_init, fcfg).ok().map(|r| r.estimate)
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count();
    if dropped * 5 > bcfg.replicates {
        return Err(Error::TooManyFailedReplicates {
            dropped,
            total: bcfg.replicates,
        });
    }
    Ok((results.into_iter().flatten().collect(), dropped))
}

/// Pointwise band from replicate estimates.
pub fn band_from_replicates(
    estimates: &[FunctionSample],
    alpha: f64,
    replicates: usize,
    dropped: usize,
) -> Result<ConfidenceBand> {
    let first = estimates.first().ok_or(Error::EmptyFunctionSet)?;
    let grid = first.grid();
    for e in estimates {
        grid.check_same(&e.grid())?;
    }
    let mut lower = Vec::with_capacity(grid.len());
    let mut upper = Vec::with_capacity(grid.len());
    let mut column = vec![0.0; estimates.len()];
    for t in 0..grid.len() {
        for (slot, e) in column.iter_mut().zip(estimates) {
            *slot = e.values()[t];
        }
        column.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&column, alpha / 2.0));
        upper.push(quantile_sorted(&column, 1.0 - alpha / 2.0));
    }
    Ok(ConfidenceBand {
        grid,
        lower,
        upper,
        alpha,
        replicates,
        dropped,
    })
}

/// Resamples the curves, realigns each resample at `lambda_star`, refits
/// with the fixed initial estimate and takes pointwise quantiles.
pub fn bootstrap_band(
    data: &FunctionSet,
    g_init: &FunctionSample,
    lambda_star: f64,
    acfg: &AlignConfig,
    fcfg: &FitConfig,
    bcfg: &BootstrapConfig,
) -> Result<ConfidenceBand> {
    let (estimates, dropped) = bootstrap_replicates(data, g_init, lambda_star, acfg, fcfg, bcfg)?;
    band_from_replicates(&estimates, bcfg.alpha, bcfg.replicates, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quantile_convention() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        // Zero-based rank 0.025 * 99 = 2.475 sits between 3 and 4.
        assert!((quantile_sorted(&v, 0.025) - 3.475).abs() < 1e-12);
        assert!((quantile_sorted(&v, 0.975) - 97.525).abs() < 1e-12);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 100.0);
    }

    #[test]
    fn resampling_is_keyed_by_seed_and_replicate() {
        assert_eq!(resample_indices(7, 3, 50), resample_indices(7, 3, 50));
        assert_ne!(resample_indices(7, 3, 50), resample_indices(7, 4, 50));
        assert_ne!(resample_indices(7, 3, 50), resample_indices(8, 3, 50));
        assert!(resample_indices(1, 0, 10).iter().all(|&i| i < 10));
    }

    #[test]
    fn identical_curves_give_a_degenerate_band() {
        let grid = Grid::new(41).unwrap();
        let f = FunctionSample::from_fn(grid, |t| (-(t - 0.5).powi(2) / 0.02).exp()).unwrap();
        let data = FunctionSet::new(vec![f.clone(); 5]).unwrap();
        let bcfg = BootstrapConfig {
            replicates: 4,
            ..Default::default()
        };
        let band = bootstrap_band(
            &data,
            &f,
            0.0,
            &AlignConfig::default(),
            &FitConfig::default(),
            &bcfg,
        )
        .unwrap();
        let single = fit(&data, &f, &FitConfig::default()).unwrap().estimate;
        for t in 0..grid.len() {
            assert!((band.lower[t] - band.upper[t]).abs() < 1e-12);
            assert!((band.lower[t] - single.values()[t]).abs() < 1e-9);
        }
        assert_eq!(band.dropped, 0);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(BootstrapConfig {
            replicates: 1,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BootstrapConfig {
            alpha: 1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(BootstrapConfig {
            replicates: 10,
            ..Default::default()
        }
        .rank_warning()
        .is_some());
        assert!(BootstrapConfig::default().rank_warning().is_none());
    }

    proptest! {
        #[test]
        fn bands_nest_and_contain_the_median(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 3..30)
        ) {
            let grid = Grid::new(6).unwrap();
            let estimates: Vec<FunctionSample> = rows
                .into_iter()
                .map(|r| FunctionSample::new(grid, r).unwrap())
                .collect();
            let wide = band_from_replicates(&estimates, 0.05, estimates.len(), 0).unwrap();
            let narrow = band_from_replicates(&estimates, 0.10, estimates.len(), 0).unwrap();
            let median = band_from_replicates(&estimates, 1.0, estimates.len(), 0).unwrap();
            for t in 0..6 {
                prop_assert!(wide.lower[t] <= narrow.lower[t]);
                prop_assert!(narrow.upper[t] <= wide.upper[t]);
                prop_assert!(wide.lower[t] <= wide.upper[t]);
                prop_assert!(wide.lower[t] <= median.lower[t] && median.lower[t] <= wide.upper[t]);
            }
        }
    }
}
