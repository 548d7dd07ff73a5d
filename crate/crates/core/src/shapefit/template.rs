//! Ordered extrema of an estimate and the smooth curve they determine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{FunctionSample, Grid};
use crate::ppd::{find_internal_peaks, find_internal_valleys, peak_strength};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtremumKind {
    Peak,
    Valley,
    EndpointMin,
    EndpointMax,
}

impl ExtremumKind {
    /// Peaks and endpoint maxima.
    pub fn is_max(self) -> bool {
        matches!(self, ExtremumKind::Peak | ExtremumKind::EndpointMax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplatePoint {
    pub kind: ExtremumKind,
    pub location: f64,
    pub height: f64,
}

/// Alternating maxima and minima from `t = 0` to `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeTemplate {
    points: Vec<TemplatePoint>,
}

/// Heights `s_1..s_M` attached to the points of a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeightVector {
    pub s: Vec<f64>,
}

impl ShapeTemplate {
    /// Validates ordering, endpoints and alternation. Heights must make every
    /// minimum strictly lower than its neighbouring maxima.
    pub fn new(points: Vec<TemplatePoint>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InfeasibleTemplate(msg.into()));
        if points.len() < 2 {
            return bad("a template needs both endpoints");
        }
        let last = points.len() - 1;
        if points[0].location != 0.0 || points[last].location != 1.0 {
            return bad("template must start at 0 and end at 1");
        }
        if points.windows(2).any(|w| w[1].location <= w[0].location) {
            return bad("locations must be strictly increasing");
        }
        for (i, p) in points.iter().enumerate() {
            let endpoint = i == 0 || i == last;
            let is_endpoint_kind = matches!(
                p.kind,
                ExtremumKind::EndpointMin | ExtremumKind::EndpointMax
            );
            if endpoint != is_endpoint_kind {
                return bad("endpoint kinds must sit exactly at the ends");
            }
            if !p.height.is_finite() || !p.location.is_finite() {
                return bad("non-finite template entry");
            }
        }
        if points
            .windows(2)
            .any(|w| w[0].kind.is_max() == w[1].kind.is_max())
        {
            return bad("maxima and minima must alternate");
        }
        let tpl = Self { points };
        tpl.check_heights(&tpl.heights())?;
        Ok(tpl)
    }

    pub fn points(&self) -> &[TemplatePoint] {
        &self.points
    }

    /// Number of extrema `M`, endpoints included.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of internal peaks `m`.
    pub fn peak_count(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.kind == ExtremumKind::Peak)
            .count()
    }

    pub fn heights(&self) -> HeightVector {
        HeightVector {
            s: self.points.iter().map(|p| p.height).collect(),
        }
    }

    pub fn locations(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.location).collect()
    }

    /// Whether `s` lies in the feasible set: each minimum strictly below its
    /// neighbouring maxima.
    pub fn check_heights(&self, s: &HeightVector) -> Result<()> {
        if s.s.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                got: s.s.len(),
            });
        }
        for i in 0..self.points.len() {
            if !s.s[i].is_finite() {
                return Err(Error::NonFinite { index: i });
            }
            if self.points[i].kind.is_max() {
                continue;
            }
            let neighbours = [i.checked_sub(1), Some(i + 1)];
            for j in neighbours.into_iter().flatten() {
                if j < self.points.len() && s.s[i] >= s.s[j] {
                    return Err(Error::InfeasibleHeights { index: i });
                }
            }
        }
        Ok(())
    }

    /// Same kinds and locations with new heights.
    pub fn with_heights(&self, s: &HeightVector) -> Result<Self> {
        self.check_heights(s)?;
        Ok(self.with_heights_unchecked(&s.s))
    }

    pub(crate) fn with_heights_unchecked(&self, s: &[f64]) -> Self {
        let points = self
            .points
            .iter()
            .zip(s)
            .map(|(p, &height)| TemplatePoint { height, ..*p })
            .collect();
        Self { points }
    }

    /// Value at `x` of the curve through the template points that follows a
    /// smoothstep on every segment, so it is monotone between consecutive
    /// extrema and flat at each of them.
    pub fn eval(&self, x: f64) -> f64 {
        let pts = &self.points;
        let seg = match pts.partition_point(|p| p.location <= x) {
            0 => return pts[0].height,
            i if i >= pts.len() => return pts[pts.len() - 1].height,
            i => i - 1,
        };
        let (p0, p1) = (&pts[seg], &pts[seg + 1]);
        let u = (x - p0.location) / (p1.location - p0.location);
        let w = u * u * (3.0 - 2.0 * u);
        p0.height + (p1.height - p0.height) * w
    }
}

fn endpoint_kind(first_interior: Option<ExtremumKind>, rising: bool) -> ExtremumKind {
    match first_interior {
        Some(ExtremumKind::Peak) => ExtremumKind::EndpointMin,
        Some(_) => ExtremumKind::EndpointMax,
        None if rising => ExtremumKind::EndpointMin,
        None => ExtremumKind::EndpointMax,
    }
}

/// Interior extrema in location order, made alternating by dropping the
/// flatter of two consecutive extrema of the same kind.
fn interior_extrema(g: &FunctionSample) -> Vec<(usize, TemplatePoint)> {
    let mut all: Vec<(usize, TemplatePoint)> = find_internal_peaks(g)
        .into_iter()
        .map(|e| (e.index, ExtremumKind::Peak, e))
        .chain(
            find_internal_valleys(g)
                .into_iter()
                .map(|e| (e.index, ExtremumKind::Valley, e)),
        )
        .map(|(index, kind, e)| {
            (
                index,
                TemplatePoint {
                    kind,
                    location: e.location,
                    height: e.height,
                },
            )
        })
        .collect();
    all.sort_by(|a, b| a.1.location.total_cmp(&b.1.location));
    let mut out: Vec<(usize, TemplatePoint)> = Vec::with_capacity(all.len());
    for item in all {
        match out.last() {
            Some(prev) if prev.1.kind == item.1.kind => {
                if peak_strength(g, item.0).abs() > peak_strength(g, prev.0).abs() {
                    out.pop();
                    out.push(item);
                }
            }
            _ => out.push(item),
        }
    }
    out
}

/// Extrema of `g`: both endpoints plus every interior peak and valley.
pub fn extract_template(g: &FunctionSample) -> Result<ShapeTemplate> {
    let v = g.values();
    if v.len() < 3 {
        return Err(Error::GridTooSmall {
            needed: 3,
            got: v.len(),
        });
    }
    let interior: Vec<TemplatePoint> = interior_extrema(g).into_iter().map(|(_, p)| p).collect();
    let last = v.len() - 1;
    let rising = v[0] <= v[last];
    let first_kind = endpoint_kind(interior.first().map(|p| p.kind), rising);
    let last_kind = endpoint_kind(interior.last().map(|p| p.kind), !rising);
    let mut points = Vec::with_capacity(interior.len() + 2);
    points.push(TemplatePoint {
        kind: first_kind,
        location: 0.0,
        height: v[0],
    });
    points.extend(interior);
    points.push(TemplatePoint {
        kind: last_kind,
        location: 1.0,
        height: v[last],
    });
    // Equal heights (flat stretches) are separated by the smallest amount
    // that keeps every minimum strictly below its maxima.
    for i in 0..points.len() {
        if points[i].kind.is_max() {
            continue;
        }
        let mut cap = f64::INFINITY;
        if i > 0 {
            cap = cap.min(points[i - 1].height);
        }
        if i + 1 < points.len() {
            cap = cap.min(points[i + 1].height);
        }
        if points[i].height >= cap {
            points[i].height = cap - 1e-12 * (1.0 + cap.abs());
        }
    }
    ShapeTemplate::new(points)
}

/// Removes the weakest internal peaks until `m` remain. A removed peak takes
/// the higher of its neighbouring minima with it; next to an endpoint the
/// endpoint changes kind instead when that keeps the curve monotone there.
/// `strength` ranks peaks (larger is stronger).
pub fn reduce_template(
    tpl: &ShapeTemplate,
    m: usize,
    strength: impl Fn(&TemplatePoint) -> f64,
) -> Result<ShapeTemplate> {
    let mut pts = tpl.points.clone();
    let mut scores: Vec<f64> = pts.iter().map(&strength).collect();
    while pts.iter().filter(|p| p.kind == ExtremumKind::Peak).count() > m {
        let i = (0..pts.len())
            .filter(|&i| pts[i].kind == ExtremumKind::Peak)
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)))
            .expect("a peak exists");
        let (l, r) = (i - 1, i + 1);
        let last = pts.len() - 1;
        let remove_min = match (l == 0, r == last) {
            (false, false) => {
                if pts[l].height >= pts[r].height {
                    l
                } else {
                    r
                }
            }
            (true, false) => {
                if pts[0].height > pts[r].height {
                    pts[0].kind = ExtremumKind::EndpointMax;
                    usize::MAX
                } else {
                    r
                }
            }
            (false, true) => {
                if pts[last].height > pts[l].height {
                    pts[last].kind = ExtremumKind::EndpointMax;
                    usize::MAX
                } else {
                    l
                }
            }
            (true, true) => {
                let rising = pts[0].height <= pts[last].height;
                pts[0].kind = if rising {
                    ExtremumKind::EndpointMin
                } else {
                    ExtremumKind::EndpointMax
                };
                pts[last].kind = if rising {
                    ExtremumKind::EndpointMax
                } else {
                    ExtremumKind::EndpointMin
                };
                if pts[0].height == pts[last].height {
                    let h = pts[last].height;
                    pts[0].height = h - 1e-12 * (1.0 + h.abs());
                }
                usize::MAX
            }
        };
        let mut drop = vec![i];
        if remove_min != usize::MAX {
            drop.push(remove_min);
        }
        drop.sort_unstable_by(|a, b| b.cmp(a));
        for d in drop {
            pts.remove(d);
            scores.remove(d);
        }
    }
    ShapeTemplate::new(pts)
}

/// The template curve sampled on `grid`: it passes through every template
/// point and is monotone in between.
pub fn initial_estimate(tpl: &ShapeTemplate, grid: Grid) -> FunctionSample {
    FunctionSample::new_unchecked(
        grid,
        grid.points().into_iter().map(|x| tpl.eval(x)).collect(),
    )
}
