//! Uniform grids on the unit interval and the sampled objects living on them.

use serde::{Deserialize, Serialize};

use crate::calculus;
use crate::error::{Error, Result};

/// Uniform grid `t_j = j / (T - 1)` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    num_points: usize,
}

impl Grid {
    pub fn new(num_points: usize) -> Result<Self> {
        if num_points < 3 {
            return Err(Error::GridTooSmall {
                needed: 3,
                got: num_points,
            });
        }
        Ok(Self { num_points })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.num_points
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing.
    #[inline]
    pub fn step(&self) -> f64 {
        1.0 / (self.num_points - 1) as f64
    }

    #[inline]
    pub fn point(&self, j: usize) -> f64 {
        j as f64 / (self.num_points - 1) as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.point(j)).collect()
    }

    /// Trapezoidal quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.step();
        let mut w = vec![h; self.num_points];
        w[0] = 0.5 * h;
        w[self.num_points - 1] = 0.5 * h;
        w
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.num_points).map(|j| f(self.point(j))).collect()
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch {
                left: self.num_points,
                right: other.num_points,
            });
        }
        Ok(())
    }
}

fn check_values(grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    Ok(())
}

macro_rules! sampled_type {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: Grid,
            values: Vec<f64>,
        }

        impl $name {
            /// Validates length and finiteness.
            pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
                check_values(&grid, &values)?;
                Ok(Self { grid, values })
            }

            pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
                Self::new(grid, grid.sample(f))
            }

            pub(crate) fn new_unchecked(grid: Grid, values: Vec<f64>) -> Self {
                debug_assert_eq!(values.len(), grid.len());
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

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            /// L² norm by the trapezoidal rule.
            pub fn l2_norm(&self) -> f64 {
                l2_norm_values(&self.values, self.grid.step())
            }
        }
    };
}

sampled_type!(
    /// A real-valued function sampled on a grid.
    FunctionSample
);

sampled_type!(
    /// Square-root velocity representation `sign(f') sqrt(|f'|)`.
    Srvf
);

impl FunctionSample {
    pub fn constant(grid: Grid, c: f64) -> Self {
        Self::new_unchecked(grid, vec![c; grid.len()])
    }

    /// Evaluates the piecewise-linear interpolant at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        calculus::interp_unit(&self.values, x)
    }

    pub fn derivative(&self) -> Result<Vec<f64>> {
        calculus::derivative(&self.values, self.grid.step())
    }

    /// Pointwise affine map `a * f + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        Self::new_unchecked(self.grid, self.values.iter().map(|v| a * v + b).collect())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `sqrt(∫ v² dt)` with the trapezoidal rule.
pub fn l2_norm_values(values: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    calculus::trapezoid(&sq, h).max(0.0).sqrt()
}

/// Squared L² distance between two sampled vectors.
pub fn l2_dist_sq(a: &[f64], b: &[f64], h: f64) -> f64 {
    let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
    calculus::trapezoid(&sq, h)
}

/// A collection of functions sharing one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSet {
    grid: Grid,
    functions: Vec<FunctionSample>,
}

impl FunctionSet {
    pub fn new(functions: Vec<FunctionSample>) -> Result<Self> {
        let first = functions.first().ok_or(Error::EmptyFunctionSet)?;
        let grid = first.grid();
        for f in &functions {
            grid.check_same(&f.grid())?;
        }
        Ok(Self { grid, functions })
    }

    /// Builds a set from raw rows, each of length `grid.len()`.
    pub fn from_rows(grid: Grid, rows: Vec<Vec<f64>>) -> Result<Self> {
        let functions = rows
            .into_iter()
            .map(|r| FunctionSample::new(grid, r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(functions)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[FunctionSample] {
        &self.functions
    }

    pub fn get(&self, i: usize) -> &FunctionSample {
        &self.functions[i]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FunctionSample> {
        self.functions.iter()
    }

    /// New set made of the functions at `indices` (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            grid: self.grid,
            functions: indices.iter().map(|&i| self.functions[i].clone()).collect(),
        }
    }

    /// Pointwise average of the functions.
    pub fn mean(&self) -> FunctionSample {
        FunctionSample::new_unchecked(
            self.grid,
            mean_rows(self.functions.iter().map(|f| f.values())),
        )
    }
}

/// Pointwise mean of equally long rows.
pub(crate) fn mean_rows<'a>(rows: impl ExactSizeIterator<Item = &'a [f64]>) -> Vec<f64> {
    let n = rows.len();
    let mut acc: Vec<f64> = Vec::new();
    for r in rows {
        if acc.is_empty() {
            acc = r.to_vec();
        } else {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
    }
    let inv = 1.0 / n as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    acc
}
