//! The square-root velocity transform and the warping action on it.

use crate::calculus::{cumulative_trapezoid, derivative, interp_unit};
use crate::error::Result;
use crate::grid::{FunctionSample, Srvf};
use crate::warping::Warping;

/// `q = sign(f') sqrt(|f'|)`.
pub fn to_srvf(f: &FunctionSample) -> Result<Srvf> {
    let d = f.derivative()?;
    let q = d.into_iter().map(|v| v.signum() * v.abs().sqrt()).collect();
    Ok(Srvf::new_unchecked(f.grid(), q))
}

/// `f(t) = f0 + ∫_0^t q |q|`.
pub fn from_srvf(q: &Srvf, f0: f64) -> FunctionSample {
    let rate: Vec<f64> = q.values().iter().map(|v| v * v.abs()).collect();
    let values = cumulative_trapezoid(&rate, q.grid().step())
        .into_iter()
        .map(|v| v + f0)
        .collect();
    FunctionSample::new_unchecked(q.grid(), values)
}

/// `(q ∘ γ) sqrt(γ')`, the SRVF of `f ∘ γ` when `q` is the SRVF of `f`.
pub fn warp_srvf(q: &Srvf, gamma: &Warping) -> Result<Srvf> {
    q.grid().check_same(&gamma.grid())?;
    if gamma.is_identity() {
        return Ok(q.clone());
    }
    let slope = derivative(gamma.values(), gamma.grid().step())?;
    let values = gamma
        .values()
        .iter()
        .zip(slope)
        .map(|(&x, s)| interp_unit(q.values(), x) * s.max(0.0).sqrt())
        .collect();
    Ok(Srvf::new_unchecked(q.grid(), values))
}
