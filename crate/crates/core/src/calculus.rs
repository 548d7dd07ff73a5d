//! Finite-difference and quadrature helpers on uniform grids.

use crate::error::{Error, Result};

/// First derivative by central differences, with second-order one-sided
/// stencils at both endpoints.
pub fn derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::GridTooSmall { needed: 3, got: n });
    }
    let mut d = vec![0.0; n];
    let inv2h = 1.0 / (2.0 * h);
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv2h;
    for j in 1..n - 1 {
        d[j] = (values[j + 1] - values[j - 1]) * inv2h;
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv2h;
    Ok(d)
}

/// Second derivative by central second differences; endpoints copy their
/// interior neighbour.
pub fn second_derivative(values: &[f64], h: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::GridTooSmall { needed: 3, got: n });
    }
    let mut d = vec![0.0; n];
    let inv = 1.0 / (h * h);
    for j in 1..n - 1 {
        d[j] = (values[j + 1] - 2.0 * values[j] + values[j - 1]) * inv;
    }
    d[0] = d[1];
    d[n - 1] = d[n - 2];
    Ok(d)
}

/// Composite trapezoidal rule.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = values[1..n - 1].iter().sum();
            h * (inner + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Running trapezoidal integral starting at zero.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    if let Some(&first) = values.first() {
        out.push(0.0);
        let mut prev = first;
        for &v in &values[1..] {
            acc += 0.5 * h * (prev + v);
            out.push(acc);
            prev = v;
        }
    }
    out
}

/// Piecewise-linear interpolation of uniformly sampled `values` on [0, 1].
/// Arguments outside the interval are clamped.
#[inline]
pub fn interp_unit(values: &[f64], x: f64) -> f64 {
    let last = values.len() - 1;
    let pos = x.clamp(0.0, 1.0) * last as f64;
    if pos >= last as f64 {
        return values[last];
    }
    let idx = (pos.floor() as usize).min(last - 1);
    let w = pos - idx as f64;
    values[idx] + w * (values[idx + 1] - values[idx])
}

/// Linear interpolation of the table `(xs, ys)` at `x`, where `xs` is
/// non-decreasing. Clamps outside the table range.
pub fn interp_table(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[i] > x
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let span = xs[hi] - xs[lo];
    if span <= 0.0 {
        return ys[hi];
    }
    let w = (x - xs[lo]) / span;
    ys[lo] + w * (ys[hi] - ys[lo])
}
