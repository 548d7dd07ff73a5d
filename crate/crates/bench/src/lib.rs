//! Inputs shared by the benchmarks.

use ppd_core::{generate, FunctionSet, Grid, Scenario, ScenarioId};

/// A default-noise dataset of `n` curves on `points` grid points.
pub fn dataset(id: ScenarioId, n: usize, points: usize) -> FunctionSet {
    let grid = Grid::new(points).expect("valid grid");
    generate(&Scenario::new(id, grid, 1).with_n(n))
        .expect("valid scenario")
        .0
}
