//! Dynamic-programming search for the optimal piecewise-linear warping on the
//! `T x T` lattice.
//!
//! Node `(j, k)` means `γ(t_j) = t_k`. A move `(a, b)` goes from `(j, k)` to
//! `(j + a, k + b)`, i.e. a segment of slope `b / a`. The cost of a segment is
//! the trapezoidal integral over the reference grid points it spans of
//!
//! ```text
//! (r(t) - s · x(γ(t)))² + λ (1 - sqrt(γ'))²
//! ```
//!
//! where `s = sqrt(γ')` for SRVF alignment and `s = 1` for alignment of raw
//! function values. Path costs are accumulated edge by edge from `(0, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::warping::Warping;

/// One admissible lattice move: `a` reference cells, `b` target cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub a: usize,
    pub b: usize,
}

impl Step {
    pub const fn new(a: usize, b: usize) -> Self {
        Self { a, b }
    }

    pub fn slope(&self) -> f64 {
        self.b as f64 / self.a as f64
    }
}

fn gcd(mut x: usize, mut y: usize) -> usize {
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

/// Ordered set of lattice moves. The diagonal `(1, 1)` always comes first so
/// that ties resolve towards the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlopeSet {
    steps: Vec<Step>,
}

impl SlopeSet {
    /// Validates a user-provided set: non-empty, contains `(1, 1)`, positive
    /// and gcd-reduced pairs. Duplicates are dropped.
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidConfig("empty slope set".into()));
        }
        if !steps.contains(&Step::new(1, 1)) {
            return Err(Error::InvalidConfig("slope set must contain (1, 1)".into()));
        }
        for s in &steps {
            if s.a == 0 || s.b == 0 {
                return Err(Error::InvalidConfig(format!(
                    "step ({}, {}) is not positive",
                    s.a, s.b
                )));
            }
            if gcd(s.a, s.b) != 1 {
                return Err(Error::InvalidConfig(format!(
                    "step ({}, {}) is not reduced",
                    s.a, s.b
                )));
            }
        }
        Ok(Self::ordered(steps))
    }

    /// All reduced pairs `(a, b)` with `1 <= a, b <= max_step`.
    pub fn standard(max_step: usize) -> Result<Self> {
        if max_step == 0 {
            return Err(Error::InvalidConfig("dp_max_step must be >= 1".into()));
        }
        let mut steps = Vec::new();
        for a in 1..=max_step {
            for b in 1..=max_step {
                if gcd(a, b) == 1 {
                    steps.push(Step::new(a, b));
                }
            }
        }
        Ok(Self::ordered(steps))
    }

    /// Standard set plus the flat move `(1, 0)`, which lets `γ` stall. Used
    /// for alignment of raw function values, where stalls are what produce
    /// pinching.
    pub(crate) fn with_flat(max_step: usize) -> Result<Self> {
        let mut set = Self::standard(max_step)?;
        set.steps.push(Step::new(1, 0));
        Ok(set)
    }

    fn ordered(mut steps: Vec<Step>) -> Self {
        steps.sort_by_key(|s| (s.a != 1 || s.b != 1, s.a + s.b, s.a, s.b));
        steps.dedup();
        Self { steps }
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn max_step(&self) -> usize {
        self.steps.iter().map(|s| s.a.max(s.b)).max().unwrap_or(0)
    }
}

/// Whether the target is scaled by `sqrt(γ')` (SRVF action) or composed only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Srvf,
    Composition,
}

/// A single pairwise alignment problem.
#[derive(Debug, Clone, Copy)]
pub struct DpProblem<'a> {
    pub reference: &'a [f64],
    pub target: &'a [f64],
    pub action: Action,
    pub penalty: f64,
}

struct StepTable {
    step: Step,
    scale: f64,
    penalty: f64,
    /// `(i, floor(i b / a), frac(i b / a))` for interior reference points.
    interior: Vec<(usize, usize, f64)>,
}

impl StepTable {
    fn new(step: Step, action: Action, lambda: f64, h: f64) -> Self {
        let Step { a, b } = step;
        let root = step.slope().sqrt();
        let scale = match action {
            Action::Srvf => root,
            Action::Composition => 1.0,
        };
        let penalty = lambda * (a as f64 * h) * ((1.0 - root) * (1.0 - root));
        let interior = (1..a)
            .map(|i| (i, (i * b) / a, ((i * b) % a) as f64 / a as f64))
            .collect();
        Self {
            step,
            scale,
            penalty,
            interior,
        }
    }

    #[inline(always)]
    fn scaled_target(&self, x: &[f64], k: usize, fl: usize, w: f64) -> f64 {
        let lo = x[k + fl];
        if w == 0.0 {
            self.scale * lo
        } else {
            self.scale * (lo + w * (x[k + fl + 1] - lo))
        }
    }
}

/// Cost of the segment from `(j, k)` along `step`.
///
/// This is the reference implementation of the edge weight; the lattice
/// sweep in [`solve`] evaluates the same expression in the same order, so
/// path costs built from this function match the DP bit for bit.
pub fn segment_cost(problem: &DpProblem<'_>, step: Step, j: usize, k: usize) -> f64 {
    let n = problem.reference.len();
    let h = 1.0 / (n - 1) as f64;
    let table = StepTable::new(step, problem.action, problem.penalty, h);
    segment_cost_with(problem, &table, j, k, h)
}

#[inline(always)]
fn segment_cost_with(problem: &DpProblem<'_>, t: &StepTable, j: usize, k: usize, h: f64) -> f64 {
    let r = problem.reference;
    let x = problem.target;
    let e0 = r[j] - t.scale * x[k];
    let mut sum = 0.5 * e0 * e0;
    for &(i, fl, w) in &t.interior {
        let d = r[j + i] - t.scaled_target(x, k, fl, w);
        sum += d * d;
    }
    let e1 = r[j + t.step.a] - t.scale * x[k + t.step.b];
    sum += 0.5 * e1 * e1;
    sum * h + t.penalty
}

/// Optimal lattice path and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct DpSolution {
    /// Path nodes from `(0, 0)` to `(T - 1, T - 1)`.
    pub nodes: Vec<(usize, usize)>,
    pub cost: f64,
}

/// Minimum-cost monotone path from `(0, 0)` to `(T - 1, T - 1)`.
pub fn solve(problem: &DpProblem<'_>, slopes: &SlopeSet) -> Result<DpSolution> {
    let n = problem.reference.len();
    if n != problem.target.len() {
        return Err(Error::GridMismatch {
            left: n,
            right: problem.target.len(),
        });
    }
    if n < 2 {
        return Err(Error::GridTooSmall { needed: 2, got: n });
    }
    if slopes.steps.is_empty() {
        return Err(Error::InvalidConfig("empty slope set".into()));
    }
    let h = 1.0 / (n - 1) as f64;
    let tables: Vec<StepTable> = slopes
        .steps
        .iter()
        .map(|&s| StepTable::new(s, problem.action, problem.penalty, h))
        .collect();

    let x = problem.target;
    let r = problem.reference;
    let mut cost = vec![f64::INFINITY; n * n];
    cost[0] = 0.0;

    // Per-step scaled target samples, shared by every lattice row.
    let scaled: Vec<(Vec<f64>, Vec<Vec<f64>>)> = tables
        .iter()
        .map(|t| {
            let ends: Vec<f64> = x.iter().map(|&v| t.scale * v).collect();
            let span = n.saturating_sub(t.step.b);
            let inner = t
                .interior
                .iter()
                .map(|&(_, fl, w)| (0..span).map(|k| t.scaled_target(x, k, fl, w)).collect())
                .collect();
            (ends, inner)
        })
        .collect();

    sweep(r, &tables, &scaled, h, &mut cost);

    let total = cost[n * n - 1];
    if !total.is_finite() {
        return Err(Error::Numerical(
            "no admissible lattice path reaches the end node".into(),
        ));
    }
    let mut nodes = vec![(n - 1, n - 1)];
    let (mut j, mut k) = (n - 1, n - 1);
    // The sweep keeps the first step (in slope-set order) that attains the
    // minimum at each node; recover it by re-evaluating the incoming edges
    // with identical arithmetic.
    while (j, k) != (0, 0) {
        let here = cost[j * n + k];
        let step = tables
            .iter()
            .find(|t| {
                let Step { a, b } = t.step;
                a <= j
                    && b <= k
                    && cost[(j - a) * n + k - b] + segment_cost_with(problem, t, j - a, k - b, h)
                        == here
            })
            .map(|t| t.step)
            .ok_or_else(|| Error::Numerical("lattice backtrack found no predecessor".into()))?;
        j -= step.a;
        k -= step.b;
        nodes.push((j, k));
    }
    nodes.reverse();
    Ok(DpSolution { nodes, cost: total })
}

/// Converts a lattice path into a warping sampled on the grid.
pub fn path_to_warping(grid: Grid, nodes: &[(usize, usize)]) -> Warping {
    let n = grid.len();
    let denom = (n - 1) as f64;
    let mut values = vec![0.0; n];
    for seg in nodes.windows(2) {
        let (j1, k1) = seg[0];
        let (j2, k2) = seg[1];
        let a = j2 - j1;
        let b = k2 - k1;
        values[j1] = k1 as f64 / denom;
        for i in 1..a {
            values[j1 + i] = (k1 as f64 + (i * b) as f64 / a as f64) / denom;
        }
        values[j2] = k2 as f64 / denom;
    }
    Warping::new_unchecked(grid, values)
}

/// Sum of [`segment_cost`] along a path, accumulated from the start.
pub fn path_cost(problem: &DpProblem<'_>, nodes: &[(usize, usize)]) -> f64 {
    let mut total = 0.0;
    for seg in nodes.windows(2) {
        let (j1, k1) = seg[0];
        let (j2, k2) = seg[1];
        total += segment_cost(problem, Step::new(j2 - j1, k2 - k1), j1, k1);
    }
    total
}

/// Fills the cost table row by row. Dispatches to an AVX2 build of the same
/// code when the CPU supports it; results are identical because Rust never
/// contracts floating-point operations.
fn sweep(
    r: &[f64],
    tables: &[StepTable],
    scaled: &[(Vec<f64>, Vec<Vec<f64>>)],
    h: f64,
    cost: &mut [f64],
) {
    #[cfg(target_arch = "x86_64")]
    {
        if std::is_x86_feature_detected!("avx2") {
            // SAFETY: the required CPU feature was detected at runtime.
            unsafe { sweep_avx2(r, tables, scaled, h, cost) };
            return;
        }
    }
    sweep_generic(r, tables, scaled, h, cost);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn sweep_avx2(
    r: &[f64],
    tables: &[StepTable],
    scaled: &[(Vec<f64>, Vec<Vec<f64>>)],
    h: f64,
    cost: &mut [f64],
) {
    sweep_generic(r, tables, scaled, h, cost);
}

#[inline(always)]
fn sweep_generic(
    r: &[f64],
    tables: &[StepTable],
    scaled: &[(Vec<f64>, Vec<Vec<f64>>)],
    h: f64,
    cost: &mut [f64],
) {
    let n = r.len();
    let last = n - 1;
    let (min_slope, max_slope) = tables.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), t| {
        let s = t.step.slope();
        (lo.min(s), hi.max(s))
    });
    // Columns of row `j` from which the end node is still reachable: any
    // path to `(T - 1, T - 1)` has an average slope within the step bounds.
    let backward = |j: usize| -> (usize, usize) {
        let rest = (last - j) as f64;
        let lo = last as f64 - max_slope * rest;
        let hi = last as f64 - min_slope * rest;
        (
            (lo - 1e-9).max(0.0).ceil() as usize,
            (hi + 1e-9).min(last as f64).floor() as usize,
        )
    };
    // Finite range of each row seen so far, from the forward pass.
    let mut reach: Vec<Option<(usize, usize)>> = vec![None; n];
    reach[0] = Some((0, 0));

    let mut acc = vec![0.0; n];
    for j2 in 1..n {
        let (lo2, hi2) = backward(j2);
        for (t, (ends, inner)) in tables.iter().zip(scaled) {
            let Step { a, b } = t.step;
            if a > j2 || b >= n {
                continue;
            }
            let j1 = j2 - a;
            let Some((f_lo, f_hi)) = reach[j1] else {
                continue;
            };
            let (b_lo, b_hi) = backward(j1);
            let k_lo = f_lo.max(b_lo).max(lo2.saturating_sub(b));
            let k_hi = f_hi.min(b_hi).min(hi2.saturating_sub(b)).min(n - 1 - b);
            if k_lo > k_hi || hi2 < b {
                continue;
            }
            let r0 = r[j1];
            let acc = &mut acc[k_lo..=k_hi];
            for (slot, &sx) in acc.iter_mut().zip(&ends[k_lo..=k_hi]) {
                let e0 = r0 - sx;
                *slot = 0.5 * e0 * e0;
            }
            for (&(i, _, _), vals) in t.interior.iter().zip(inner) {
                let ri = r[j1 + i];
                for (slot, &v) in acc.iter_mut().zip(&vals[k_lo..=k_hi]) {
                    let d = ri - v;
                    *slot += d * d;
                }
            }
            let r1 = r[j2];
            let (head, tail) = cost.split_at_mut(j2 * n);
            let prev = &head[j1 * n + k_lo..=j1 * n + k_hi];
            let row = &mut tail[k_lo + b..=k_hi + b];
            let ends1 = &ends[k_lo + b..=k_hi + b];
            for (((slot, &s), &p), &e) in row.iter_mut().zip(acc.iter()).zip(prev).zip(ends1) {
                let e1 = r1 - e;
                let cand = p + ((s + 0.5 * e1 * e1) * h + t.penalty);
                *slot = if cand < *slot { cand } else { *slot };
            }
        }
        let row = &cost[j2 * n..j2 * n + n];
        let first = row.iter().position(|c| c.is_finite());
        let end = row.iter().rposition(|c| c.is_finite());
        reach[j2] = first.zip(end);
    }
}
