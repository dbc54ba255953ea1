//! Grid distance fields: a fast-marching eikonal solver for diagonal metrics.
//!
//! The chart is a rectangular grid in coordinates `(x, y)` carrying a metric
//! `g11(x,y) dx^2 + g22(x,y) dy^2`; the solver propagates
//! `(d_x T)^2 / g11 + (d_y T)^2 / g22 = 1` outward from a source point with
//! the usual accepted/trial front, using second-order one-sided differences
//! `(3T - 4T1 + T2) / 2h` where two upwind neighbors are available and
//! falling back to first order (and, when causality still fails, to the best
//! single axis) otherwise.
//!
//! Two chart conventions get special treatment:
//!
//! * a periodic `y` axis (angles), wrapping the stencil;
//! * degenerate rows where `g22 = 0` (a pole of a polar chart), which are
//!   collapsed to a single logical node so distance propagates through the
//!   pole instead of around it.
//!
//! Nodes within a few cells of the source are initialized with the metric
//! line integral along the straight chart segment, which keeps the scheme's
//! own O(h) startup error out of the field.  The result serves as an
//! independent oracle for geodesic distances and, through the sign of the
//! discrete Laplacian, as a crude detector of cut ridges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const FAR: u8 = 0;
const TRIAL: u8 = 1;
const ACCEPTED: u8 = 2;

/// A rectangular chart with a diagonal metric sampled at the nodes.
#[derive(Clone, Debug)]
pub struct MetricGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub periodic_y: bool,
    /// Row `x = x0` is a single point (polar chart pole).
    pub pole_lo: bool,
    /// Row `x = x1` is a single point.
    pub pole_hi: bool,
    g11: Vec<f64>,
    g22: Vec<f64>,
}

impl MetricGrid {
    /// Sample a diagonal metric on an `nx` by `ny` grid.  With `periodic_y`
    /// the last column wraps to the first and `y1` must be one full period
    /// past `y0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        nx: usize,
        ny: usize,
        x_range: (f64, f64),
        y_range: (f64, f64),
        periodic_y: bool,
        pole_lo: bool,
        pole_hi: bool,
        mut g11_fn: impl FnMut(f64, f64) -> f64,
        mut g22_fn: impl FnMut(f64, f64) -> f64,
    ) -> Result<MetricGrid> {
        if nx < 4 || ny < 4 {
            return Err(Error::invalid("metric grid needs at least 4 nodes per axis"));
        }
        let (x0, x1) = x_range;
        let (y0, y1) = y_range;
        if !(x1 > x0) || !(y1 > y0) {
            return Err(Error::invalid("metric grid ranges must be increasing"));
        }
        let mut grid = MetricGrid {
            nx,
            ny,
            x0,
            x1,
            y0,
            y1,
            periodic_y,
            pole_lo,
            pole_hi,
            g11: vec![0.0; nx * ny],
            g22: vec![0.0; nx * ny],
        };
        for ix in 0..nx {
            let x = grid.x_of(ix);
            for iy in 0..ny {
                let y = grid.y_of(iy);
                let idx = grid.idx(ix, iy);
                let a = g11_fn(x, y);
                let b = g22_fn(x, y);
                let degenerate = (ix == 0 && pole_lo) || (ix == nx - 1 && pole_hi);
                if !(a.is_finite() && a > 0.0) {
                    return Err(Error::invalid(format!("g11({x}, {y}) = {a} not positive")));
                }
                if !degenerate && !(b.is_finite() && b > 0.0) {
                    return Err(Error::invalid(format!("g22({x}, {y}) = {b} not positive")));
                }
                grid.g11[idx] = a;
                grid.g22[idx] = if degenerate { 0.0 } else { b };
            }
        }
        Ok(grid)
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.ny + iy
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        if self.periodic_y {
            (self.y1 - self.y0) / self.ny as f64
        } else {
            (self.y1 - self.y0) / (self.ny - 1) as f64
        }
    }

    pub fn x_of(&self, ix: usize) -> f64 {
        self.x0 + self.hx() * ix as f64
    }

    pub fn y_of(&self, iy: usize) -> f64 {
        self.y0 + self.hy() * iy as f64
    }

    fn is_pole_row(&self, ix: usize) -> bool {
        (ix == 0 && self.pole_lo) || (ix == self.nx - 1 && self.pole_hi)
    }

    fn wrap_iy(&self, iy: isize) -> Option<usize> {
        if self.periodic_y {
            Some(iy.rem_euclid(self.ny as isize) as usize)
        } else if (0..self.ny as isize).contains(&iy) {
            Some(iy as usize)
        } else {
            None
        }
    }

    /// Metric value pair at arbitrary chart coordinates (bilinear).
    pub fn metric_at(&self, x: f64, y: f64) -> (f64, f64) {
        let (ix, wx) = self.locate_x(x);
        let (iy, wy, iy1) = self.locate_y(y);
        let lerp2 = |v: &Vec<f64>| {
            let v00 = v[self.idx(ix, iy)];
            let v01 = v[self.idx(ix, iy1)];
            let v10 = v[self.idx(ix + 1, iy)];
            let v11 = v[self.idx(ix + 1, iy1)];
            (v00 * (1.0 - wy) + v01 * wy) * (1.0 - wx) + (v10 * (1.0 - wy) + v11 * wy) * wx
        };
        (lerp2(&self.g11), lerp2(&self.g22))
    }

    fn locate_x(&self, x: f64) -> (usize, f64) {
        let t = ((x - self.x0) / self.hx()).clamp(0.0, (self.nx - 1) as f64 - 1e-12);
        let ix = t.floor() as usize;
        (ix.min(self.nx - 2), t - ix as f64)
    }

    fn locate_y(&self, y: f64) -> (usize, f64, usize) {
        if self.periodic_y {
            let period = self.y1 - self.y0;
            let mut t = (y - self.y0) % period;
            if t < 0.0 {
                t += period;
            }
            let s = t / self.hy();
            let iy = (s.floor() as usize).min(self.ny - 1);
            (iy, s - iy as f64, (iy + 1) % self.ny)
        } else {
            let t = ((y - self.y0) / self.hy()).clamp(0.0, (self.ny - 1) as f64 - 1e-12);
            let iy = (t.floor() as usize).min(self.ny - 2);
            (iy, t - iy as f64, iy + 1)
        }
    }

    /// Metric length of the straight chart segment from `a` to `b`
    /// (composite Simpson, 32 panels): used for near-source initialization.
    fn segment_length(&self, a: (f64, f64), b: (f64, f64)) -> f64 {
        const PANELS: usize = 32;
        let dx = b.0 - a.0;
        let mut dy = b.1 - a.1;
        if self.periodic_y {
            let period = self.y1 - self.y0;
            dy -= period * (dy / period).round();
        }
        let speed = |s: f64| {
            let (g11, g22) = self.metric_at(a.0 + s * dx, a.1 + s * dy);
            (g11 * dx * dx + g22 * dy * dy).sqrt()
        };
        let n = 2 * PANELS;
        let h = 1.0 / n as f64;
        let mut acc = speed(0.0) + speed(1.0);
        for k in 1..n {
            acc += speed(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    d: f64,
    idx: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on d through reversal; distances are never NaN
        other
            .d
            .partial_cmp(&self.d)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// The distance field produced by [`solve_eikonal`].
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub grid: MetricGrid,
    pub source: (f64, f64),
    pub d: Vec<f64>,
    /// Nodes on a concave ridge of the field (candidate cut points).
    pub ridge: Vec<bool>,
}

impl DistanceField {
    /// Bilinear interpolation of the field at chart coordinates.
    pub fn query(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let (ix, wx) = g.locate_x(x);
        let (iy, wy, iy1) = g.locate_y(y);
        let v00 = self.d[g.idx(ix, iy)];
        let v01 = self.d[g.idx(ix, iy1)];
        let v10 = self.d[g.idx(ix + 1, iy)];
        let v11 = self.d[g.idx(ix + 1, iy1)];
        (v00 * (1.0 - wy) + v01 * wy) * (1.0 - wx) + (v10 * (1.0 - wy) + v11 * wy) * wx
    }

    pub fn ridge_at(&self, x: f64, y: f64) -> bool {
        let g = &self.grid;
        let (ix, wx) = g.locate_x(x);
        let (iy, wy, iy1) = g.locate_y(y);
        let ix = if wx > 0.5 { ix + 1 } else { ix };
        let iy = if wy > 0.5 { iy1 } else { iy };
        self.ridge[g.idx(ix, iy)]
    }

    /// Chart coordinates of every ridge-flagged node.
    pub fn ridge_nodes(&self) -> Vec<(f64, f64)> {
        let g = &self.grid;
        let mut out = Vec::new();
        for ix in 0..g.nx {
            for iy in 0..g.ny {
                if self.ridge[g.idx(ix, iy)] {
                    out.push((g.x_of(ix), g.y_of(iy)));
                }
            }
        }
        out
    }

    pub fn max_value(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }
}

/// One-sided difference data for a single axis: the solution satisfies
/// `(a t - b)^2 / g = 1` contributions per axis.
#[derive(Copy, Clone)]
struct AxisTerm {
    a: f64,
    b: f64,
    w: f64,
    /// The upwind neighbor value: causality demands `t > t_up`.
    t_up: f64,
}

fn solve_quadratic(terms: &[AxisTerm]) -> Option<f64> {
    let mut qa = 0.0;
    let mut qb = 0.0;
    let mut qc = -1.0;
    for t in terms {
        qa += t.w * t.a * t.a;
        qb += -2.0 * t.w * t.a * t.b;
        qc += t.w * t.b * t.b;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 || qa <= 0.0 {
        return None;
    }
    let t = (-qb + disc.sqrt()) / (2.0 * qa);
    for term in terms {
        if t < term.t_up {
            return None; // upwind causality violated
        }
    }
    Some(t)
}

/// Propagate the metric distance from `source` across the grid.
pub fn solve_eikonal(grid: &MetricGrid, source: (f64, f64)) -> Result<DistanceField> {
    let n = grid.nx * grid.ny;
    let mut d = vec![f64::INFINITY; n];
    let mut state = vec![FAR; n];
    let mut heap: BinaryHeap<HeapItem> = BinaryHeap::new();

    if source.0 < grid.x0 - 1e-12 || source.0 > grid.x1 + 1e-12 {
        return Err(Error::Domain {
            what: "source x",
            value: source.0,
            lo: grid.x0,
            hi: grid.x1,
        });
    }

    // nodes with exact initial values stay fixed: the field is kinked at the
    // source and upwind stencils crossing it would degrade the whole run
    let mut frozen = vec![false; n];
    seed_near_source(grid, source, &mut d, &mut state, &mut frozen, &mut heap);
    if heap.is_empty() {
        return Err(Error::solver("eikonal source initialization produced no nodes"));
    }

    let hx = grid.hx();
    let hy = grid.hy();

    while let Some(HeapItem { d: dv, idx }) = heap.pop() {
        if state[idx] == ACCEPTED || dv > d[idx] {
            continue;
        }
        let ix = idx / grid.ny;

        // a pole row is one logical node: accept the whole row at once
        if grid.is_pole_row(ix) {
            for iy in 0..grid.ny {
                let j = grid.idx(ix, iy);
                if state[j] != ACCEPTED || d[j] > dv {
                    d[j] = dv;
                    state[j] = ACCEPTED;
                }
            }
            let inner = if ix == 0 { 1 } else { grid.nx - 2 };
            for iy in 0..grid.ny {
                relax(grid, inner, iy, hx, hy, &mut d, &mut state, &frozen, &mut heap);
            }
            continue;
        }

        state[idx] = ACCEPTED;
        let iy = idx % grid.ny;
        if ix > 0 {
            if grid.is_pole_row(ix - 1) {
                relax_pole(grid, 0, hx, &mut d, &mut state, &frozen, &mut heap);
            } else {
                relax(grid, ix - 1, iy, hx, hy, &mut d, &mut state, &frozen, &mut heap);
            }
        }
        if ix + 1 < grid.nx {
            if grid.is_pole_row(ix + 1) {
                relax_pole(grid, grid.nx - 1, hx, &mut d, &mut state, &frozen, &mut heap);
            } else {
                relax(grid, ix + 1, iy, hx, hy, &mut d, &mut state, &frozen, &mut heap);
            }
        }
        for step in [-1isize, 1] {
            if let Some(jy) = grid.wrap_iy(iy as isize + step) {
                relax(grid, ix, jy, hx, hy, &mut d, &mut state, &frozen, &mut heap);
            }
        }
    }

    let ridge = detect_ridge(grid, &d);
    Ok(DistanceField { grid: grid.clone(), source, d, ridge })
}

/// Exact-ish initialization: metric segment lengths for all nodes within a
/// few cells of the source.
fn seed_near_source(
    grid: &MetricGrid,
    source: (f64, f64),
    d: &mut [f64],
    state: &mut [u8],
    frozen: &mut [bool],
    heap: &mut BinaryHeap<HeapItem>,
) {
    let (g11s, g22s) = grid.metric_at(source.0, source.1);
    let hx = grid.hx();
    let hy = grid.hy();
    let radius = 5.0 * (hx * g11s.sqrt()).max(hy * g22s.max(1e-300).sqrt());
    // a pole source reaches (x, y) by rotating freely at the pole and then
    // leaving radially at angle y; the straight chart segment from the pole
    // sweeps angle and overshoots
    let source_on_pole = g22s <= 1e-12;

    let dix = ((radius / (hx * g11s.sqrt().max(1e-12))).ceil() as isize + 2).max(3);
    let span_y = if g22s > 1e-12 {
        ((radius / (hy * g22s.sqrt())).ceil() as isize + 2).max(3)
    } else {
        grid.ny as isize // source at a pole: the whole row is one point
    };

    let (six, _) = grid.locate_x(source.0);
    let (siy, _, _) = grid.locate_y(source.1);

    for ddx in -dix..=dix {
        let ix = six as isize + ddx;
        if !(0..grid.nx as isize).contains(&ix) {
            continue;
        }
        let ix = ix as usize;
        for ddy in -span_y..=span_y.min(grid.ny as isize - 1) {
            let Some(iy) = grid.wrap_iy(siy as isize + ddy) else {
                continue;
            };
            let node = (grid.x_of(ix), grid.y_of(iy));
            let from = if source_on_pole { (source.0, node.1) } else { source };
            let len = grid.segment_length(from, node);
            if len <= radius {
                let idx = grid.idx(ix, iy);
                if len < d[idx] {
                    d[idx] = len;
                    state[idx] = TRIAL;
                    frozen[idx] = true;
                    heap.push(HeapItem { d: len, idx });
                }
            }
        }
    }

    // a seeded pole row is one logical point: unify it at the row minimum
    for &(pole, ix) in &[(grid.pole_lo, 0usize), (grid.pole_hi, grid.nx - 1)] {
        if !pole {
            continue;
        }
        let row: Vec<usize> = (0..grid.ny).map(|iy| grid.idx(ix, iy)).collect();
        let m = row.iter().map(|&j| d[j]).fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            for &j in &row {
                d[j] = m;
                state[j] = TRIAL;
                frozen[j] = true;
            }
            heap.push(HeapItem { d: m, idx: row[0] });
        }
    }
}

/// Recompute the arrival value at `(ix, iy)` from accepted neighbors.
#[allow(clippy::too_many_arguments)]
fn relax(
    grid: &MetricGrid,
    ix: usize,
    iy: usize,
    hx: f64,
    hy: f64,
    d: &mut [f64],
    state: &mut [u8],
    frozen: &[bool],
    heap: &mut BinaryHeap<HeapItem>,
) {
    let idx = grid.idx(ix, iy);
    if state[idx] == ACCEPTED || frozen[idx] {
        return;
    }

    let axis_term = |t1: Option<f64>, t2: Option<f64>, h: f64, g: f64| -> Option<AxisTerm> {
        let t1 = t1?;
        if let Some(t2) = t2 {
            if t2 <= t1 {
                // second-order one-sided difference (3T - 4T1 + T2) / 2h
                return Some(AxisTerm {
                    a: 1.5 / h,
                    b: (4.0 * t1 - t2) / (2.0 * h),
                    w: 1.0 / g,
                    t_up: t1,
                });
            }
        }
        Some(AxisTerm { a: 1.0 / h, b: t1 / h, w: 1.0 / g, t_up: t1 })
    };

    let accepted_at = |jx: isize, jy: isize| -> Option<f64> {
        if !(0..grid.nx as isize).contains(&jx) {
            return None;
        }
        let jy = grid.wrap_iy(jy)?;
        let j = grid.idx(jx as usize, jy);
        (state[j] == ACCEPTED).then_some(d[j])
    };

    // pick the better upwind direction per axis
    let (x1, x2) = {
        let lo = accepted_at(ix as isize - 1, iy as isize);
        let hi = accepted_at(ix as isize + 1, iy as isize);
        match (lo, hi) {
            (Some(a), Some(b)) if b < a => (Some(b), accepted_at(ix as isize + 2, iy as isize)),
            (Some(a), _) => (Some(a), accepted_at(ix as isize - 2, iy as isize)),
            (None, Some(b)) => (Some(b), accepted_at(ix as isize + 2, iy as isize)),
            (None, None) => (None, None),
        }
    };
    let (y1, y2) = {
        let lo = accepted_at(ix as isize, iy as isize - 1);
        let hi = accepted_at(ix as isize, iy as isize + 1);
        match (lo, hi) {
            (Some(a), Some(b)) if b < a => (Some(b), accepted_at(ix as isize, iy as isize + 2)),
            (Some(a), _) => (Some(a), accepted_at(ix as isize, iy as isize - 2)),
            (None, Some(b)) => (Some(b), accepted_at(ix as isize, iy as isize + 2)),
            (None, None) => (None, None),
        }
    };

    let g11 = grid.g11[idx];
    let g22 = grid.g22[idx];
    let pole = grid.is_pole_row(ix);

    let mut best = f64::INFINITY;
    // cascade: second order both axes, then first order, then single axis
    for order in 0..2 {
        let tx = if order == 0 {
            axis_term(x1, x2, hx, g11)
        } else {
            axis_term(x1, None, hx, g11)
        };
        let ty = if pole {
            None
        } else if order == 0 {
            axis_term(y1, y2, hy, g22)
        } else {
            axis_term(y1, None, hy, g22)
        };
        let terms: Vec<AxisTerm> = [tx, ty].into_iter().flatten().collect();
        if terms.is_empty() {
            return;
        }
        if let Some(t) = solve_quadratic(&terms) {
            best = t;
            break;
        }
    }
    if best.is_infinite() {
        // single-axis fallback always has a solution
        if let Some(t1) = x1 {
            best = best.min(t1 + hx * g11.sqrt());
        }
        if let (false, Some(t1)) = (pole, y1) {
            best = best.min(t1 + hy * g22.sqrt());
        }
    }

    if best < d[idx] {
        d[idx] = best;
        state[idx] = TRIAL;
        heap.push(HeapItem { d: best, idx });
    }
}

/// Update the (single logical) pole node from the adjacent row.
fn relax_pole(
    grid: &MetricGrid,
    pole_ix: usize,
    hx: f64,
    d: &mut [f64],
    state: &mut [u8],
    frozen: &[bool],
    heap: &mut BinaryHeap<HeapItem>,
) {
    let inner_ix = if pole_ix == 0 { 1 } else { grid.nx - 2 };
    let mut best = f64::INFINITY;
    for iy in 0..grid.ny {
        let j = grid.idx(inner_ix, iy);
        if state[j] == ACCEPTED {
            let g11 = grid.g11[grid.idx(pole_ix, iy)];
            best = best.min(d[j] + hx * g11.sqrt());
        }
    }
    if !best.is_finite() {
        return;
    }
    let rep = grid.idx(pole_ix, 0);
    if state[rep] != ACCEPTED && !frozen[rep] && best < d[rep] {
        for iy in 0..grid.ny {
            let j = grid.idx(pole_ix, iy);
            d[j] = best;
            state[j] = TRIAL;
        }
        heap.push(HeapItem { d: best, idx: rep });
    }
}

/// Concave-ridge detection: a node is flagged when the second difference
/// along some axis drops below `-ridge_factor * h` (distance fields are
/// smooth away from the cut, kinked across it).
fn detect_ridge(grid: &MetricGrid, d: &[f64]) -> Vec<bool> {
    const RIDGE_FACTOR: f64 = 0.25;
    let mut out = vec![false; d.len()];
    let hx = grid.hx();
    let hy = grid.hy();
    for ix in 0..grid.nx {
        if grid.is_pole_row(ix) {
            continue;
        }
        for iy in 0..grid.ny {
            let idx = grid.idx(ix, iy);
            if !d[idx].is_finite() {
                continue;
            }
            let mut kinked = false;
            if ix > 0 && ix + 1 < grid.nx {
                let a = d[grid.idx(ix - 1, iy)];
                let b = d[grid.idx(ix + 1, iy)];
                if a.is_finite() && b.is_finite() && a + b - 2.0 * d[idx] < -RIDGE_FACTOR * hx {
                    kinked = true;
                }
            }
            if !kinked {
                let lo = grid.wrap_iy(iy as isize - 1);
                let hi = grid.wrap_iy(iy as isize + 1);
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    let a = d[grid.idx(ix, lo)];
                    let b = d[grid.idx(ix, hi)];
                    let g22 = grid.g22[idx];
                    let h_eff = hy * g22.sqrt();
                    if a.is_finite()
                        && b.is_finite()
                        && h_eff > 1e-12
                        && a + b - 2.0 * d[idx] < -RIDGE_FACTOR * h_eff
                    {
                        kinked = true;
                    }
                }
            }
            out[idx] = kinked;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid_grid(n: usize) -> MetricGrid {
        MetricGrid::new(
            n,
            n,
            (0.0, 2.0),
            (0.0, 2.0),
            false,
            false,
            false,
            |_, _| 1.0,
            |_, _| 1.0,
        )
        .unwrap()
    }

    #[test]
    fn euclidean_plane_matches_straight_lines() {
        let grid = euclid_grid(201);
        let src = (0.7, 0.9);
        let field = solve_eikonal(&grid, src).unwrap();
        let mut worst: f64 = 0.0;
        for &(x, y) in &[(0.0, 0.0), (2.0, 2.0), (1.7, 0.2), (0.1, 1.9), (1.0, 1.0)] {
            let exact = ((x - src.0).powi(2) + (y - src.1).powi(2)).sqrt();
            worst = worst.max((field.query(x, y) - exact).abs());
        }
        assert!(worst < 2e-3, "worst error {worst}");
    }

    #[test]
    fn polar_chart_of_the_plane() {
        // metric dr^2 + r^2 dtheta^2 with the pole row collapsed
        let grid = MetricGrid::new(
            161,
            161,
            (0.0, 2.0),
            (-std::f64::consts::PI, std::f64::consts::PI),
            true,
            true,
            false,
            |_, _| 1.0,
            |r, _| r * r,
        )
        .unwrap();
        let src = (1.0, 0.0);
        let field = solve_eikonal(&grid, src).unwrap();
        // law of cosines in the plane
        let mut worst: f64 = 0.0;
        for &(r, th) in &[(0.5f64, 1.0f64), (1.5, -2.0), (1.0, 3.0), (0.2, 0.3), (1.9, 2.8)] {
            let exact = (1.0 + r * r - 2.0 * r * th.cos()).sqrt();
            worst = worst.max((field.query(r, th) - exact).abs() / exact);
        }
        assert!(worst < 5e-3, "worst relative error {worst}");
        // straight through the pole: d((1,0) -> (0.5, pi)) = 1.5
        let through = field.query(0.5, std::f64::consts::PI);
        assert!((through - 1.5).abs() < 6e-3, "through-pole {through}");
    }

    #[test]
    fn sphere_polar_chart() {
        use std::f64::consts::PI;
        let grid = MetricGrid::new(
            181,
            181,
            (0.0, PI),
            (-PI, PI),
            true,
            true,
            true,
            |_, _| 1.0,
            |r, _| r.sin().powi(2),
        )
        .unwrap();
        let src = (PI / 2.0, 0.0);
        let field = solve_eikonal(&grid, src).unwrap();
        let mut worst: f64 = 0.0;
        for &(r, th) in &[(1.0f64, 1.0f64), (2.0, -2.0), (0.4, 2.0), (2.8, 0.5)] {
            // spherical law of cosines from the equatorial source
            let exact = (r.sin() * th.cos()).clamp(-1.0, 1.0).acos();
            worst = worst.max((field.query(r, th) - exact).abs() / exact.max(1e-9));
        }
        assert!(worst < 7e-3, "worst relative error {worst}");
    }

    #[test]
    fn flat_cylinder_wraps_around() {
        use std::f64::consts::PI;
        // unit cylinder chart: x = height in [-4, 4], y = angle (periodic)
        let grid = MetricGrid::new(
            161,
            129,
            (-4.0, 4.0),
            (-PI, PI),
            true,
            false,
            false,
            |_, _| 1.0,
            |_, _| 1.0,
        )
        .unwrap();
        let field = solve_eikonal(&grid, (0.0, 0.0)).unwrap();
        // wrapping shortens the angular leg: d = sqrt(dx^2 + wrap(dy)^2)
        for &(x, y) in &[(1.0f64, 2.0f64), (0.5, 3.0), (-2.0, -3.0)] {
            let dy = y.rem_euclid(2.0 * PI);
            let dy = dy.min(2.0 * PI - dy);
            let exact = (x * x + dy * dy).sqrt();
            let got = field.query(x, y);
            assert!(
                (got - exact).abs() < 8e-3,
                "cylinder({x}, {y}): got {got}, want {exact}"
            );
        }
    }

    #[test]
    fn ridge_flags_appear_on_the_sphere_antipode() {
        use std::f64::consts::PI;
        let grid = MetricGrid::new(
            121,
            121,
            (0.0, PI),
            (-PI, PI),
            true,
            true,
            true,
            |_, _| 1.0,
            |r, _| r.sin().powi(2),
        )
        .unwrap();
        let field = solve_eikonal(&grid, (PI / 2.0, 0.0)).unwrap();
        // the cut locus of an equatorial point is the antipode: ridge flags
        // must concentrate near (pi/2, pi) and stay away from the source
        assert!(field.ridge_at(PI / 2.0, PI - 0.02));
        assert!(!field.ridge_at(PI / 2.0, 0.5));
        assert!(!field.ridge_at(1.0, 0.3));
    }
}
