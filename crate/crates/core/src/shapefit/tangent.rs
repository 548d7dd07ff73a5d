//! Vector-space coordinates for warpings.
//!
//! `ψ = sqrt(γ')` lies on the unit sphere of L²[0, 1]. The inverse
//! exponential map at the constant function 1 sends it to a tangent vector
//! `v` orthogonal to constants, which is expanded in a sine–cosine basis.
//! Decoding applies the exponential map and integrates `ψ²`.

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

use crate::calculus::{cumulative_trapezoid, derivative, trapezoid};
use crate::error::{Error, Result};
use crate::grid::{l2_norm_values, Grid};
use crate::warping::Warping;

/// Largest tangent norm allowed before the exponential map, just inside the
/// injectivity radius.
pub const MAX_TANGENT_NORM: f64 = PI - 1e-3;

/// Basis coefficients of a warping's tangent vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarpCoefficients {
    pub c: Vec<f64>,
}

impl WarpCoefficients {
    pub fn zeros(k: usize) -> Self {
        Self { c: vec![0.0; k] }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }
}

/// Orthonormal sine–cosine basis (constant excluded) sampled on a grid:
/// `√2 sin(2πkt), √2 cos(2πkt)` for `k = 1, 2, ...`.
#[derive(Debug, Clone)]
pub struct TangentBasis {
    grid: Grid,
    elements: Vec<Vec<f64>>,
}

impl TangentBasis {
    pub fn new(grid: Grid, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("basis size must be >= 1".into()));
        }
        let elements = (0..size)
            .map(|idx| {
                let freq = (idx / 2 + 1) as f64 * 2.0 * PI;
                if idx % 2 == 0 {
                    grid.sample(|t| SQRT_2 * (freq * t).sin())
                } else {
                    grid.sample(|t| SQRT_2 * (freq * t).cos())
                }
            })
            .collect();
        Ok(Self { grid, elements })
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// `Σ c_k e_k` sampled on the grid.
    pub fn tangent(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut v = vec![0.0; self.grid.len()];
        for (c, e) in coeffs.iter().zip(&self.elements) {
            if *c != 0.0 {
                for (vj, ej) in v.iter_mut().zip(e) {
                    *vj += c * ej;
                }
            }
        }
        v
    }

    /// Coordinates of `γ`.
    pub fn encode(&self, gamma: &Warping) -> Result<WarpCoefficients> {
        self.grid.check_same(&gamma.grid())?;
        let h = self.grid.step();
        // Monotone input can only produce negative slopes through the
        // one-sided endpoint stencils.
        let psi: Vec<f64> = derivative(gamma.values(), h)?
            .into_iter()
            .map(|d| d.max(0.0).sqrt())
            .collect();
        let inner = trapezoid(&psi, h).clamp(-1.0, 1.0);
        let theta = inner.acos();
        if theta < 1e-12 {
            return Ok(WarpCoefficients::zeros(self.size()));
        }
        let factor = theta / theta.sin();
        let v: Vec<f64> = psi.iter().map(|p| factor * (p - inner)).collect();
        let c = self
            .elements
            .iter()
            .map(|e| {
                let prod: Vec<f64> = v.iter().zip(e).map(|(a, b)| a * b).collect();
                trapezoid(&prod, h)
            })
            .collect();
        Ok(WarpCoefficients { c })
    }

    /// Warping with coordinates `coeffs`; the tangent norm is clamped to
    /// `max_norm`.
    pub fn decode_clamped(&self, coeffs: &[f64], max_norm: f64) -> Warping {
        let v = self.tangent(coeffs);
        let h = self.grid.step();
        let norm = l2_norm_values(&v, h);
        if norm < 1e-14 {
            return Warping::identity(self.grid);
        }
        let clamped = norm.min(max_norm);
        let (s, c) = clamped.sin_cos();
        let rate: Vec<f64> = v
            .iter()
            .map(|vj| {
                let psi = c + s * vj / norm;
                psi * psi
            })
            .collect();
        let mut gamma = cumulative_trapezoid(&rate, h);
        let total = *gamma.last().unwrap();
        gamma.iter_mut().for_each(|g| *g /= total);
        let last = gamma.len() - 1;
        gamma[last] = 1.0;
        Warping::new_unchecked(self.grid, gamma)
    }

    pub fn decode(&self, coeffs: &WarpCoefficients) -> Warping {
        self.decode_clamped(&coeffs.c, MAX_TANGENT_NORM)
    }
}

/// Coordinates of `γ` in the first `k` basis elements.
pub fn encode_warping(gamma: &Warping, k: usize) -> Result<WarpCoefficients> {
    TangentBasis::new(gamma.grid(), k)?.encode(gamma)
}

/// Warping decoded from coordinates on `grid`.
pub fn decode_warping(coeffs: &WarpCoefficients, grid: Grid) -> Result<Warping> {
    Ok(TangentBasis::new(grid, coeffs.len().max(1))?.decode(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        let grid = Grid::new(401).unwrap();
        let b = TangentBasis::new(grid, 6).unwrap();
        let h = grid.step();
        for i in 0..6 {
            assert!(trapezoid(&b.elements[i], h).abs() < 1e-12);
            for j in 0..6 {
                let p: Vec<f64> = b.elements[i]
                    .iter()
                    .zip(&b.elements[j])
                    .map(|(x, y)| x * y)
                    .collect();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((trapezoid(&p, h) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identity_has_zero_coordinates() {
        let grid = Grid::new(100).unwrap();
        let c = encode_warping(&Warping::identity(grid), 10).unwrap();
        assert!(c.c.iter().all(|&x| x.abs() < 1e-12));
        let back = decode_warping(&WarpCoefficients::zeros(10), grid).unwrap();
        assert!(back.is_identity());
    }

    #[test]
    fn smooth_warp_round_trip() {
        let grid = Grid::new(200).unwrap();
        let gamma = Warping::from_fn(grid, |t| t + 0.1 * t * (1.0 - t)).unwrap();
        let c = encode_warping(&gamma, 10).unwrap();
        let back = decode_warping(&c, grid).unwrap();
        let err = gamma
            .values()
            .iter()
            .zip(back.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "err = {err}");
    }

    #[test]
    fn decode_always_gives_a_warping() {
        let grid = Grid::new(64).unwrap();
        let b = TangentBasis::new(grid, 8).unwrap();
        for s in [0.1, 1.0, 5.0, 50.0] {
            let w = b.decode_clamped(
                &[s, -s, 0.5 * s, 0.0, s, 0.0, -s, 2.0 * s],
                MAX_TANGENT_NORM,
            );
            assert!(Warping::new(grid, w.values().to_vec()).is_ok());
        }
    }
}
