use serde::{Deserialize, Serialize};

use crate::calculus::second_derivative;
use crate::grid::{l2_norm_values, FunctionSample};

/// An interior extremum found on the sampled function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub index: usize,
    pub location: f64,
    pub height: f64,
}

fn interior_extrema(g: &FunctionSample, maxima: bool) -> Vec<Extremum> {
    let v = g.values();
    let n = v.len();
    let grid = g.grid();
    // Compare in the orientation that turns minima into maxima.
    let above = |x: f64, y: f64| if maxima { x > y } else { x < y };
    let mut out = Vec::new();
    let mut j = 1;
    while j + 1 < n {
        if !above(v[j], v[j - 1]) {
            j += 1;
            continue;
        }
        let mut end = j;
        while end + 1 < n && v[end + 1] == v[j] {
            end += 1;
        }
        if end + 1 < n && above(v[j], v[end + 1]) {
            let index = (j + end) / 2;
            out.push(Extremum {
                index,
                location: 0.5 * (grid.point(j) + grid.point(end)),
                height: v[j],
            });
        }
        j = end + 1;
    }
    out
}

/// Strict interior local maxima. A constant run that is entered from below
/// and left downwards counts once, at its midpoint. Endpoints never count.
pub fn find_internal_peaks(g: &FunctionSample) -> Vec<Extremum> {
    interior_extrema(g, true)
}

/// Interior local minima, with the same plateau rule as
/// [`find_internal_peaks`].
pub fn find_internal_valleys(g: &FunctionSample) -> Vec<Extremum> {
    interior_extrema(g, false)
}

/// Normalized curvature `-g''(t0) / ‖g''‖`; zero when `g''` vanishes.
pub fn peak_strength(g: &FunctionSample, index: usize) -> f64 {
    let h = g.grid().step();
    let g2 = match second_derivative(g.values(), h) {
        Ok(d) => d,
        Err(_) => return 0.0,
    };
    let norm = l2_norm_values(&g2, h);
    if norm == 0.0 {
        return 0.0;
    }
    -g2[index] / norm
}

/// Strengths of several peaks sharing one second-derivative evaluation.
pub(crate) fn peak_strengths(g: &FunctionSample, peaks: &[Extremum]) -> Vec<f64> {
    let h = g.grid().step();
    let Ok(g2) = second_derivative(g.values(), h) else {
        return vec![0.0; peaks.len()];
    };
    let norm = l2_norm_values(&g2, h);
    peaks
        .iter()
        .map(|p| {
            if norm == 0.0 {
                0.0
            } else {
                -g2[p.index] / norm
            }
        })
        .collect()
}
