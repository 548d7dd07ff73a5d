//! Boundary-preserving monotone reparametrizations of `[0, 1]` and their
//! action on sampled functions.

use crate::calculus::{interp_table, interp_unit};
use crate::error::{Error, Result};
use crate::grid::{FunctionSample, Grid};

/// Increments below this are treated as flat.
pub const MIN_INCREMENT: f64 = 1e-12;

const ENDPOINT_TOL: f64 = 1e-9;

/// A warping `γ` sampled on a grid: `γ(0) = 0`, `γ(1) = 1`, non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Warping {
    grid: Grid,
    values: Vec<f64>,
}

impl Warping {
    /// Validates the warping invariants. Endpoints within `1e-9` of 0 and 1
    /// are snapped.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        let last = values.len() - 1;
        if values[0].abs() > ENDPOINT_TOL || (values[last] - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::InvalidWarping(format!(
                "endpoints are ({}, {}), expected (0, 1)",
                values[0], values[last]
            )));
        }
        values[0] = 0.0;
        values[last] = 1.0;
        for j in 1..values.len() {
            if values[j] < values[j - 1] {
                return Err(Error::InvalidWarping(format!(
                    "decreasing at index {j}: {} < {}",
                    values[j],
                    values[j - 1]
                )));
            }
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidWarping("values leave [0, 1]".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn identity(grid: Grid) -> Self {
        Self {
            grid,
            values: grid.points(),
        }
    }

    /// Warping from an arbitrary function of `t`; the result is validated.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.sample(f))
    }

    pub(crate) fn new_unchecked(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[1] >= w[0]));
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True when the samples are bitwise the grid points.
    pub fn is_identity(&self) -> bool {
        self.values
            .iter()
            .enumerate()
            .all(|(j, &v)| v == self.grid.point(j))
    }

    pub fn eval(&self, x: f64) -> f64 {
        interp_unit(&self.values, x)
    }

    /// Forward-difference slopes `(γ_{j+1} - γ_j) / h`.
    pub fn slopes(&self) -> Vec<f64> {
        let inv_h = (self.grid.len() - 1) as f64;
        self.values
            .windows(2)
            .map(|w| (w[1] - w[0]) * inv_h)
            .collect()
    }

    /// Supremum distance to the identity warping.
    pub fn sup_distance_to_identity(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.grid.point(j)).abs())
            .fold(0.0, f64::max)
    }

    /// `self ∘ inner` sampled on the grid.
    pub fn compose(&self, inner: &Warping) -> Result<Warping> {
        self.grid.check_same(&inner.grid)?;
        let last = self.values.len() - 1;
        let mut values: Vec<f64> = inner.values.iter().map(|&x| self.eval(x)).collect();
        values[0] = 0.0;
        values[last] = 1.0;
        Ok(Self::new_unchecked(self.grid, values))
    }
}

/// `f ∘ γ` by linear interpolation of `f`. The identity warping returns `f`
/// untouched.
pub fn warp_function(f: &FunctionSample, gamma: &Warping) -> Result<FunctionSample> {
    f.grid().check_same(&gamma.grid())?;
    if gamma.is_identity() {
        return Ok(f.clone());
    }
    let values = gamma.values.iter().map(|&x| f.eval(x)).collect();
    Ok(FunctionSample::new_unchecked(f.grid(), values))
}

/// Result of inverting a warping.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingInverse {
    pub inverse: Warping,
    /// The input had a flat run longer than one grid cell, so the inverse is
    /// only a monotone pseudo-inverse with a jump.
    pub degenerate: bool,
}

/// Inverts `γ` by swapping abscissa and ordinate and re-interpolating on the
/// grid. Increments below [`MIN_INCREMENT`] are clamped up first.
pub fn invert_warping(gamma: &Warping) -> WarpingInverse {
    let grid = gamma.grid;
    if gamma.is_identity() {
        return WarpingInverse {
            inverse: gamma.clone(),
            degenerate: false,
        };
    }
    let n = grid.len();
    let mut flat_run = 0usize;
    let mut degenerate = false;
    let mut xs = Vec::with_capacity(n);
    xs.push(0.0);
    for w in gamma.values.windows(2) {
        let inc = w[1] - w[0];
        if inc < MIN_INCREMENT {
            flat_run += 1;
            degenerate |= flat_run > 1;
        } else {
            flat_run = 0;
        }
        let prev = *xs.last().unwrap();
        xs.push(prev + inc.max(MIN_INCREMENT));
    }
    let total = xs[n - 1];
    xs.iter_mut().for_each(|x| *x /= total);
    let ts = grid.points();
    let mut values: Vec<f64> = ts.iter().map(|&t| interp_table(&xs, &ts, t)).collect();
    values[0] = 0.0;
    values[n - 1] = 1.0;
    for j in 1..n {
        if values[j] < values[j - 1] {
            values[j] = values[j - 1];
        }
    }
    WarpingInverse {
        inverse: Warping::new_unchecked(grid, values),
        degenerate,
    }
}

/// Pointwise mean of warpings, which is again a warping.
pub fn mean_warping(warpings: &[Warping]) -> Result<Warping> {
    let first = warpings.first().ok_or(Error::EmptyFunctionSet)?;
    for w in warpings {
        first.grid.check_same(&w.grid)?;
    }
    let mut values = crate::grid::mean_rows(warpings.iter().map(|w| w.values()));
    let last = values.len() - 1;
    values[0] = 0.0;
    values[last] = 1.0;
    Ok(Warping::new_unchecked(first.grid, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn validation_rejects_bad_warpings() {
        let g = Grid::new(4).unwrap();
        assert!(Warping::new(g, vec![0.0, 0.5, 0.4, 1.0]).is_err());
        assert!(Warping::new(g, vec![0.1, 0.5, 0.6, 1.0]).is_err());
        assert!(Warping::new(g, vec![0.0, 0.5, 0.6, 0.9]).is_err());
        assert!(Warping::new(g, vec![0.0, 0.0, 0.0, 1.0]).is_ok());
    }

    #[test]
    fn identity_leaves_function_unchanged() {
        let g = Grid::new(50).unwrap();
        let f = FunctionSample::from_fn(g, |t| (3.0 * t).exp()).unwrap();
        let id = Warping::identity(g);
        assert!(id.is_identity());
        assert_eq!(warp_function(&f, &id).unwrap(), f);
    }

    #[test]
    fn warping_the_identity_function_returns_gamma() {
        let g = Grid::new(64).unwrap();
        let f = FunctionSample::from_fn(g, |t| t).unwrap();
        let gamma = Warping::from_fn(g, |t| t.powf(1.7)).unwrap();
        let out = warp_function(&f, &gamma).unwrap();
        for (a, b) in out.values().iter().zip(gamma.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_with_square_warp() {
        let g = Grid::new(1025).unwrap();
        let f = FunctionSample::from_fn(g, |t| (2.0 * PI * t).sin()).unwrap();
        let gamma = Warping::from_fn(g, |t| t * t).unwrap();
        let out = warp_function(&f, &gamma).unwrap();
        assert!((out.values()[512] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn inverse_of_identity_and_square() {
        let g = Grid::new(1025).unwrap();
        let id = invert_warping(&Warping::identity(g));
        assert!(!id.degenerate);
        assert!(id.inverse.sup_distance_to_identity() < 1e-15);

        let sq = Warping::from_fn(g, |t| t * t).unwrap();
        let inv = invert_warping(&sq);
        assert!((inv.inverse.values()[256] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn flat_segments_are_flagged() {
        let g = Grid::new(6).unwrap();
        let one_flat = Warping::new(g, vec![0.0, 0.2, 0.2, 0.6, 0.8, 1.0]).unwrap();
        assert!(!invert_warping(&one_flat).degenerate);
        let long_flat = Warping::new(g, vec![0.0, 0.2, 0.2, 0.2, 0.8, 1.0]).unwrap();
        let inv = invert_warping(&long_flat);
        assert!(inv.degenerate);
        assert!(inv.inverse.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mean_of_warpings_is_a_warping() {
        let g = Grid::new(30).unwrap();
        let a = Warping::from_fn(g, |t| t * t).unwrap();
        let b = Warping::from_fn(g, |t| t.sqrt()).unwrap();
        let m = mean_warping(&[a, b]).unwrap();
        assert!(Warping::new(g, m.values().to_vec()).is_ok());
    }
}
