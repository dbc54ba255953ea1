//! Test manifolds: the pointed-manifold side of the comparison machinery.
//!
//! Every manifold here is a 2-D chart with a base point `o`, a distance, an
//! enumeration of unit-speed minimizing segments, and angles between
//! segments at a shared vertex.  Three kinds are supported:
//!
//! * `Revolution` — a surface of revolution around its own pole, with all
//!   metric queries delegated to the geodesic shooting router;
//! * `Cylinder` — the flat cylinder in closed form via lifts to the
//!   universal cover (kept analytic on purpose: it is the rigidity-sensitive
//!   example and must be exact);
//! * `Grid` — an arbitrary diagonal metric sampled on a chart, with
//!   distances from cached fast-marching fields and segments extracted by
//!   gradient descent.

use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use std::sync::{Arc, Mutex};

use crate::eikonal::{solve_eikonal, DistanceField, MetricGrid};
use crate::error::{Error, Result};
use crate::profile::RadialProfile;
use crate::surface::{reduce_angle, GeodesicPath, Surface, SurfacePoint};

/// Chart coordinates of a point of a test manifold.  The meaning of the two
/// components depends on the manifold kind: `(r, theta)` on a surface of
/// revolution, `(height, angle)` on a cylinder, raw `(x, y)` on a grid
/// chart.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MPoint {
    pub x: f64,
    pub y: f64,
}

impl MPoint {
    pub fn new(x: f64, y: f64) -> Self {
        MPoint { x, y }
    }
}

/// A unit-speed minimizing segment in a test manifold.
#[derive(Clone, Debug)]
pub enum MSegment {
    /// Shot geodesic on a surface of revolution, chart `(r, theta)`.
    Revolution(GeodesicPath),
    /// Straight line in the cylinder's universal cover; `vel` is the chart
    /// velocity `(dh/dt, dphi/dt)` of the chosen lift.
    Line { start: MPoint, vel: (f64, f64), length: f64 },
    /// Polyline from gradient descent on a distance field, parameterized
    /// proportionally to recorded arc length and rescaled onto the metric
    /// distance of its endpoints.
    Poly { points: Vec<MPoint>, cum: Vec<f64> },
}

impl MSegment {
    pub fn length(&self) -> f64 {
        match self {
            MSegment::Revolution(path) => path.length,
            MSegment::Line { length, .. } => *length,
            MSegment::Poly { cum, .. } => *cum.last().unwrap_or(&0.0),
        }
    }

    /// Chart position at arc length `t` (clamped to the segment).
    pub fn point_at(&self, t: f64) -> MPoint {
        match self {
            MSegment::Revolution(path) => {
                let p = path.point_at(t);
                MPoint::new(p.r, p.theta)
            }
            MSegment::Line { start, vel, length } => {
                let t = t.clamp(0.0, *length);
                MPoint::new(start.x + t * vel.0, start.y + t * vel.1)
            }
            MSegment::Poly { points, cum } => {
                let t = t.clamp(0.0, *cum.last().unwrap_or(&0.0));
                let i = cum.partition_point(|&c| c <= t).clamp(1, cum.len() - 1);
                let (c0, c1) = (cum[i - 1], cum[i]);
                let w = if c1 > c0 { (t - c0) / (c1 - c0) } else { 0.0 };
                MPoint::new(
                    points[i - 1].x * (1.0 - w) + points[i].x * w,
                    points[i - 1].y * (1.0 - w) + points[i].y * w,
                )
            }
        }
    }

    pub fn start(&self) -> MPoint {
        self.point_at(0.0)
    }

    pub fn end(&self) -> MPoint {
        self.point_at(self.length())
    }
}

// ------------------------------------------------------------------ kinds

/// Surface of revolution pointed at its own pole.
#[derive(Clone, Debug)]
pub struct RevolutionManifold {
    pub surface: Surface,
}

/// Flat cylinder of a fixed radius, chart `(height, angle)`.
#[derive(Clone, Copy, Debug)]
pub struct FlatCylinder {
    pub radius: f64,
    pub base: MPoint,
}

/// Diagonal metric sampled on a rectangular chart.  Distance fields are
/// solved once per source point and cached.
pub struct GridManifold {
    pub grid: MetricGrid,
    pub base: MPoint,
    fields: Mutex<HashMap<(i64, i64), Arc<DistanceField>>>,
}

/// A pointed test manifold `(M, o)`.
pub enum Manifold {
    Revolution(RevolutionManifold),
    Cylinder(FlatCylinder),
    Grid(GridManifold),
}

impl Manifold {
    pub fn revolution(surface: Surface) -> Manifold {
        Manifold::Revolution(RevolutionManifold { surface })
    }

    pub fn cylinder(radius: f64, base: MPoint) -> Result<Manifold> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!("cylinder radius {radius} must be positive")));
        }
        Ok(Manifold::Cylinder(FlatCylinder { radius, base }))
    }

    pub fn grid(grid: MetricGrid, base: MPoint) -> Manifold {
        Manifold::Grid(GridManifold { grid, base, fields: Mutex::new(HashMap::new()) })
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Manifold::Revolution(_) => "revolution",
            Manifold::Cylinder(_) => "flat_cylinder",
            Manifold::Grid(_) => "grid_metric",
        }
    }

    /// Analytic kinds carry tight tolerances; grid kinds inherit the
    /// fast-marching scheme error.
    pub fn is_analytic(&self) -> bool {
        !matches!(self, Manifold::Grid(_))
    }

    /// The base point `o`.
    pub fn base(&self) -> MPoint {
        match self {
            Manifold::Revolution(_) => MPoint::new(0.0, 0.0),
            Manifold::Cylinder(c) => c.base,
            Manifold::Grid(g) => g.base,
        }
    }

    pub fn distance(&self, x: MPoint, y: MPoint) -> Result<f64> {
        match self {
            Manifold::Revolution(m) => m.distance(x, y),
            Manifold::Cylinder(c) => Ok(cylinder_distance((x.x, x.y), (y.x, y.y), c.radius)),
            Manifold::Grid(g) => g.distance(x, y),
        }
    }

    /// Distance from the base point; on a surface of revolution this is the
    /// radial coordinate, so the hot convexity loops skip the router.
    pub fn distance_to_base(&self, x: MPoint) -> Result<f64> {
        match self {
            Manifold::Revolution(_) => Ok(x.x),
            _ => self.distance(self.base(), x),
        }
    }

    /// All unit-speed minimizing segments from `x` to `y` (at least one).
    pub fn segments(&self, x: MPoint, y: MPoint) -> Result<Vec<MSegment>> {
        match self {
            Manifold::Revolution(m) => m.segments(x, y),
            Manifold::Cylinder(c) => c.segments(x, y),
            Manifold::Grid(g) => g.segments(x, y),
        }
    }

    /// Angle at `vertex` between the chosen minimizing segments towards `a`
    /// and towards `b`, in `[0, pi]`.
    pub fn angle(&self, vertex: MPoint, a: MPoint, b: MPoint) -> Result<f64> {
        match self {
            Manifold::Revolution(m) => m.angle(vertex, a, b),
            Manifold::Cylinder(c) => c.angle(vertex, a, b),
            Manifold::Grid(g) => g.angle(vertex, a, b),
        }
    }

    /// Gauss curvature as a function of distance from the base point, when
    /// the manifold has one in closed form.
    pub fn radial_curvature(&self, r: f64) -> Result<f64> {
        match self {
            Manifold::Revolution(m) => Ok(m.surface.profile().curvature_fast(r)),
            Manifold::Cylinder(_) => Ok(0.0),
            Manifold::Grid(_) => Err(Error::invalid(
                "grid charts have no analytic radial curvature; audit does not apply",
            )),
        }
    }
}

// ------------------------------------------------------------- revolution

const POLE_TOL: f64 = 1e-9;

impl RevolutionManifold {
    fn as_surface_point(x: MPoint) -> SurfacePoint {
        SurfacePoint::new(x.x, x.y)
    }

    fn is_pole(x: MPoint) -> bool {
        x.x.abs() < POLE_TOL
    }

    fn distance(&self, x: MPoint, y: MPoint) -> Result<f64> {
        if Self::is_pole(x) {
            return Ok(y.x);
        }
        if Self::is_pole(y) {
            return Ok(x.x);
        }
        Ok(self
            .surface
            .distance(&Self::as_surface_point(x), &Self::as_surface_point(y))?
            .distance)
    }

    fn segments(&self, x: MPoint, y: MPoint) -> Result<Vec<MSegment>> {
        // segments touching the pole are meridians in the chart of the
        // other endpoint; the router cannot shoot out of the vertex
        if Self::is_pole(x) && Self::is_pole(y) {
            return Err(Error::invalid("segment endpoints coincide at the pole"));
        }
        if Self::is_pole(x) {
            let from = SurfacePoint::new(0.0, y.y);
            return Ok(vec![MSegment::Revolution(self.surface.meridian_path(from, 1.0, y.x)?)]);
        }
        if Self::is_pole(y) {
            let from = Self::as_surface_point(x);
            return Ok(vec![MSegment::Revolution(self.surface.meridian_path(from, -1.0, x.x)?)]);
        }
        let res = self.surface.distance(&Self::as_surface_point(x), &Self::as_surface_point(y))?;
        Ok(res.segments.into_iter().map(MSegment::Revolution).collect())
    }

    fn angle(&self, vertex: MPoint, a: MPoint, b: MPoint) -> Result<f64> {
        if Self::is_pole(vertex) {
            if Self::is_pole(a) || Self::is_pole(b) {
                return Err(Error::invalid("angle at the pole needs two off-pole targets"));
            }
            return Ok(reduce_angle(a.y - b.y).abs());
        }
        let ga = self.first_path(vertex, a)?;
        let gb = self.first_path(vertex, b)?;
        self.surface.angle_between(&ga, &gb)
    }

    fn first_path(&self, from: MPoint, to: MPoint) -> Result<GeodesicPath> {
        match self.segments(from, to)?.into_iter().next() {
            Some(MSegment::Revolution(path)) => Ok(path),
            _ => Err(Error::solver(format!(
                "no segment from ({}, {}) to ({}, {})",
                from.x, from.y, to.x, to.y
            ))),
        }
    }
}

// --------------------------------------------------------------- cylinder

/// Distance on the flat cylinder: shortest straight lift over the deck
/// transformations `angle + 2 pi k`, `k` in `[-3, 3]`.
pub fn cylinder_distance(x: (f64, f64), y: (f64, f64), radius: f64) -> f64 {
    let dh = y.0 - x.0;
    let mut best = f64::INFINITY;
    for k in -3..=3 {
        let dphi = y.1 - x.1 + TAU * k as f64;
        best = best.min((dh * dh + radius * radius * dphi * dphi).sqrt());
    }
    best
}

impl FlatCylinder {
    fn segments(&self, x: MPoint, y: MPoint) -> Result<Vec<MSegment>> {
        let best = cylinder_distance((x.x, x.y), (y.x, y.y), self.radius);
        if best < 1e-12 {
            return Err(Error::invalid("segment endpoints coincide on the cylinder"));
        }
        let mut out = Vec::new();
        for k in -3..=3 {
            let dh = y.x - x.x;
            let dphi = y.y - x.y + TAU * k as f64;
            let len = (dh * dh + self.radius * self.radius * dphi * dphi).sqrt();
            if len <= best + 1e-9 * (1.0 + best) {
                out.push(MSegment::Line {
                    start: x,
                    vel: (dh / len, dphi / len),
                    length: len,
                });
            }
        }
        Ok(out)
    }

    fn angle(&self, vertex: MPoint, a: MPoint, b: MPoint) -> Result<f64> {
        let sa = self.segments(vertex, a)?;
        let sb = self.segments(vertex, b)?;
        let dir = |s: &MSegment| match s {
            // unrolled tangent (dh, R dphi) has unit Euclidean norm
            MSegment::Line { vel, .. } => (vel.0, self.radius * vel.1),
            _ => unreachable!("cylinder produces only line segments"),
        };
        let u = dir(&sa[0]);
        let v = dir(&sb[0]);
        Ok((u.0 * v.0 + u.1 * v.1).clamp(-1.0, 1.0).acos())
    }
}

// ------------------------------------------------------------------- grid

impl GridManifold {
    /// The cached fast-marching field from `source` (solved on first use).
    pub fn field_from(&self, source: MPoint) -> Result<Arc<DistanceField>> {
        let key = ((source.x * 1e9).round() as i64, (source.y * 1e9).round() as i64);
        if let Some(f) = self.fields.lock().unwrap().get(&key) {
            return Ok(f.clone());
        }
        let field = Arc::new(solve_eikonal(&self.grid, (source.x, source.y))?);
        self.fields.lock().unwrap().insert(key, field.clone());
        Ok(field)
    }

    fn distance(&self, x: MPoint, y: MPoint) -> Result<f64> {
        Ok(self.field_from(x)?.query(y.x, y.y))
    }

    fn segments(&self, x: MPoint, y: MPoint) -> Result<Vec<MSegment>> {
        let field = self.field_from(x)?;
        let h = self.grid.hx().min(self.grid.hy());
        let d = field.query(y.x, y.y);
        if d < 2.0 * h {
            // endpoints within a stencil of each other: one straight hop
            let cum = vec![0.0, d.max(1e-300)];
            return Ok(vec![MSegment::Poly { points: vec![x, y], cum }]);
        }

        // descend from y and from slight sideways nudges: when y sits on a
        // cut ridge of the field the nudged starts fall on both sides of it
        // and recover the distinct segments
        let nudge = 2.0 * h;
        let starts = [
            (y.x, y.y),
            (y.x + nudge, y.y),
            (y.x - nudge, y.y),
            (y.x, y.y + nudge),
            (y.x, y.y - nudge),
        ];
        let mut found: Vec<MSegment> = Vec::new();
        for (i, &s) in starts.iter().enumerate() {
            let Some(mut path) = descend(&field, s) else {
                continue;
            };
            if i > 0 {
                // a nudged run traces the segment of its own start; reuse it
                // for y only as a distinct-homotopy witness
                path[0] = (y.x, y.y);
            }
            path.reverse(); // run from x to y
            let seg = polyline_segment(&self.grid, path, d);
            let mid = seg.point_at(0.5 * d);
            let dup = found.iter().any(|other| {
                let om = other.point_at(0.5 * other.length());
                self.chart_gap(mid, om) <= 10.0 * h
            });
            if !dup {
                found.push(seg);
            }
        }
        if found.is_empty() {
            return Err(Error::solver(format!(
                "gradient descent from ({}, {}) did not reach the source",
                y.x, y.y
            )));
        }
        Ok(found)
    }

    /// Chart separation with the periodic axis unwrapped.
    fn chart_gap(&self, a: MPoint, b: MPoint) -> f64 {
        let dx = a.x - b.x;
        let mut dy = a.y - b.y;
        if self.grid.periodic_y {
            let period = self.grid.y1 - self.grid.y0;
            dy -= period * (dy / period).round();
        }
        (dx * dx + dy * dy).sqrt()
    }

    fn angle(&self, vertex: MPoint, a: MPoint, b: MPoint) -> Result<f64> {
        let sa = self.segments(vertex, a)?;
        let sb = self.segments(vertex, b)?;
        let ua = self.tangent_fit(&sa[0])?;
        let ub = self.tangent_fit(&sb[0])?;
        let (g11, g22) = self.grid.metric_at(vertex.x, vertex.y);
        let dot = g11 * ua.0 * ub.0 + g22 * ua.1 * ub.1;
        let na = (g11 * ua.0 * ua.0 + g22 * ua.1 * ua.1).sqrt();
        let nb = (g11 * ub.0 * ub.0 + g22 * ub.1 * ub.1).sqrt();
        if na < 1e-14 || nb < 1e-14 {
            return Err(Error::solver("degenerate tangent fit"));
        }
        Ok((dot / (na * nb)).clamp(-1.0, 1.0).acos())
    }

    /// Chart tangent at the segment start from a least-squares line through
    /// the first few samples (grid paths are too noisy for one-sided
    /// differences).
    fn tangent_fit(&self, seg: &MSegment) -> Result<(f64, f64)> {
        let h = self.grid.hx().min(self.grid.hy());
        let span = 8.0 * h;
        let n = 8usize;
        let mut ts = Vec::with_capacity(n);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        let start = seg.point_at(0.0);
        for i in 0..n {
            let t = span.min(seg.length()) * i as f64 / (n - 1) as f64;
            let p = seg.point_at(t);
            ts.push(t);
            xs.push(p.x - start.x);
            let mut dy = p.y - start.y;
            if self.grid.periodic_y {
                let period = self.grid.y1 - self.grid.y0;
                dy -= period * (dy / period).round();
            }
            ys.push(dy);
        }
        let slope = |vals: &[f64]| -> f64 {
            let tm = ts.iter().sum::<f64>() / n as f64;
            let vm = vals.iter().sum::<f64>() / n as f64;
            let num: f64 = ts.iter().zip(vals).map(|(&t, &v)| (t - tm) * (v - vm)).sum();
            let den: f64 = ts.iter().map(|&t| (t - tm) * (t - tm)).sum();
            num / den
        };
        Ok((slope(&xs), slope(&ys)))
    }
}

/// Steepest-descent polyline on a distance field from `from` down to the
/// source, in chart coordinates.  `None` when the walk stalls.
fn descend(field: &DistanceField, from: (f64, f64)) -> Option<Vec<(f64, f64)>> {
    let grid = &field.grid;
    let h = grid.hx().min(grid.hy());
    let step = 0.4 * h;
    let mut cur = from;
    let mut pts = vec![cur];
    let budget = (field.query(from.0, from.1) / step).ceil() as usize * 4 + 64;
    for _ in 0..budget {
        let d_here = field.query(cur.0, cur.1);
        if d_here <= 2.0 * h {
            pts.push(field.source);
            return Some(pts);
        }
        let v1 = descent_direction(field, cur, h)?;
        let mid = (cur.0 + 0.5 * step * v1.0, cur.1 + 0.5 * step * v1.1);
        let v = descent_direction(field, mid, h).unwrap_or(v1);
        let next = (cur.0 + step * v.0, cur.1 + step * v.1);
        if field.query(next.0, next.1) >= d_here {
            // flat or ascending: nudge straight towards the source instead
            let (sx, sy) = field.source;
            let gap = ((sx - cur.0).powi(2) + (sy - cur.1).powi(2)).sqrt().max(1e-12);
            cur = (cur.0 + step * (sx - cur.0) / gap, cur.1 + step * (sy - cur.1) / gap);
        } else {
            cur = next;
        }
        pts.push(cur);
    }
    None
}

/// Unit metric-speed chart velocity of steepest descent at a point.
fn descent_direction(field: &DistanceField, at: (f64, f64), h: f64) -> Option<(f64, f64)> {
    let e = 0.5 * h;
    let tx = (field.query(at.0 + e, at.1) - field.query(at.0 - e, at.1)) / (2.0 * e);
    let ty = (field.query(at.0, at.1 + e) - field.query(at.0, at.1 - e)) / (2.0 * e);
    let (g11, g22) = field.grid.metric_at(at.0, at.1);
    // v = -g^{-1} grad T, normalized to |v|_g = 1
    let vx = -tx / g11;
    let vy = -ty / g22;
    let norm = (g11 * vx * vx + g22 * vy * vy).sqrt();
    if !(norm > 1e-12) {
        return None;
    }
    Some((vx / norm, vy / norm))
}

/// Wrap a descent polyline into a segment: accumulate metric lengths, then
/// rescale the parameter so the recorded end matches the field distance.
fn polyline_segment(grid: &MetricGrid, path: Vec<(f64, f64)>, distance: f64) -> MSegment {
    let mut cum = Vec::with_capacity(path.len());
    let mut acc = 0.0;
    cum.push(0.0);
    for w in path.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        let dx = x1 - x0;
        let mut dy = y1 - y0;
        if grid.periodic_y {
            let period = grid.y1 - grid.y0;
            dy -= period * (dy / period).round();
        }
        let (g11, g22) = grid.metric_at(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        acc += (g11 * dx * dx + g22 * dy * dy).sqrt();
        cum.push(acc);
    }
    if acc > 0.0 {
        let scale = distance / acc;
        for c in &mut cum {
            *c *= scale;
        }
    }
    let points = path.into_iter().map(|(x, y)| MPoint::new(x, y)).collect();
    MSegment::Poly { points, cum }
}

// ---------------------------------------------------------------- audits

/// One node of the radial-curvature hypothesis check.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CurvatureNode {
    pub r: f64,
    pub manifold_k: f64,
    pub reference_k: f64,
    pub pass: bool,
}

/// Per-node verdicts of `manifold curvature >= reference curvature` along
/// the radial coordinate.
#[derive(Clone, Debug, serde::Serialize)]
pub struct CurvatureAudit {
    pub nodes: Vec<CurvatureNode>,
    pub all_pass: bool,
}

/// Check the radial-curvature hypothesis `K_M(r) >= K(r)` on `n` nodes of
/// the shared radial range, with `slack` absorbing roundoff.
pub fn radial_curvature_audit(
    manifold: &Manifold,
    reference: &RadialProfile,
    n: usize,
    slack: f64,
) -> Result<CurvatureAudit> {
    let r_max = match manifold {
        Manifold::Revolution(m) => m.surface.profile().horizon().min(reference.horizon()),
        _ => reference.horizon(),
    };
    let n = n.max(2);
    let mut nodes = Vec::with_capacity(n);
    let mut all_pass = true;
    for i in 0..n {
        // stay off the endpoints: r = 0 pins both curvatures to the same
        // value by construction and the far cap may be conical
        let r = r_max * (i as f64 + 0.5) / n as f64;
        let manifold_k = manifold.radial_curvature(r)?;
        let reference_k = reference.curvature_fast(r);
        let pass = manifold_k >= reference_k - slack;
        all_pass &= pass;
        nodes.push(CurvatureNode { r, manifold_k, reference_k, pass });
    }
    Ok(CurvatureAudit { nodes, all_pass })
}

/// Build a fast-marching distance field on a manifold's natural chart.
///
/// Revolution kinds get a polar chart of the profile (periodic angle, pole
/// rows collapsed), cylinders an unrolled window three half-turns high, and
/// grid kinds are solved on their own chart regardless of `resolution`.
pub fn eikonal_field(manifold: &Manifold, source: MPoint, resolution: usize) -> Result<DistanceField> {
    if resolution < 16 {
        return Err(Error::invalid("eikonal resolution below 16 is meaningless"));
    }
    match manifold {
        Manifold::Revolution(m) => {
            let profile = m.surface.profile_arc();
            let closed = profile.ell().is_some();
            let r_max = profile.horizon();
            let f2 = {
                let p = profile.clone();
                move |r: f64, _: f64| {
                    let f = p.f(r);
                    f * f
                }
            };
            let grid = MetricGrid::new(
                resolution,
                resolution,
                (0.0, r_max),
                (0.0, TAU),
                true,
                true,
                closed,
                |_, _| 1.0,
                f2,
            )?;
            solve_eikonal(&grid, (source.x, source.y))
        }
        Manifold::Cylinder(c) => {
            let span = 3.0 * PI * c.radius;
            let r2 = c.radius * c.radius;
            let grid = MetricGrid::new(
                resolution,
                resolution,
                (source.x - span, source.x + span),
                (0.0, TAU),
                true,
                false,
                false,
                |_, _| 1.0,
                move |_, _| r2,
            )?;
            solve_eikonal(&grid, (source.x, source.y))
        }
        Manifold::Grid(g) => solve_eikonal(&g.grid, (source.x, source.y)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::CurvatureFn;

    fn sphere_manifold(kappa: f64) -> Manifold {
        Manifold::revolution(Surface::new(RadialProfile::sphere(kappa)))
    }

    fn sphere_dist(kappa: f64, a: MPoint, b: MPoint) -> f64 {
        let s = kappa.sqrt();
        ((s * a.x).cos() * (s * b.x).cos()
            + (s * a.x).sin() * (s * b.x).sin() * (a.y - b.y).cos())
        .clamp(-1.0, 1.0)
        .acos()
            / s
    }

    #[test]
    fn cylinder_distance_matches_the_lift_minimum() {
        // the classic pair: two units along the axis, a quarter turn around
        let d = cylinder_distance((0.0, 0.0), (2.0, -PI / 2.0), 1.0);
        assert!((d - (4.0 + PI * PI / 4.0).sqrt()).abs() < 1e-12);
        // same height, opposite rulings
        assert!((cylinder_distance((1.0, 0.3), (1.0, 0.3 + PI), 2.0) - TAU).abs() < 1e-12);
        // straight down a ruling
        assert!((cylinder_distance((0.5, 1.1), (-2.5, 1.1), 0.7) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_antipodal_pair_has_two_segments() {
        let m = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let x = MPoint::new(0.0, 0.2);
        let y = MPoint::new(1.0, 0.2 + PI);
        let segs = m.segments(x, y).unwrap();
        assert_eq!(segs.len(), 2);
        // the two lifts wind opposite ways; midpoints sit on opposite sides
        let m0 = segs[0].point_at(0.5 * segs[0].length());
        let m1 = segs[1].point_at(0.5 * segs[1].length());
        assert!((m0.y - m1.y).abs() > 3.0, "midpoints {} vs {}", m0.y, m1.y);
        for s in &segs {
            assert!((s.length() - m.distance(x, y).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn cylinder_angles_come_from_the_unrolled_chart() {
        let m = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let v = MPoint::new(0.0, 0.0);
        // along the ruling vs along the parallel
        let a = m.angle(v, MPoint::new(1.5, 0.0), MPoint::new(0.0, 1.0)).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-12);
        // 3-4-5 right triangle unrolled
        let b = m.angle(v, MPoint::new(3.0, 0.0), MPoint::new(3.0, 1.0)).unwrap();
        assert!((b - (1.0f64 / 3.0).atan()).abs() < 1e-12);
    }

    #[test]
    fn revolution_distance_delegates_to_the_router() {
        let m = sphere_manifold(1.0);
        let x = MPoint::new(0.9, 0.4);
        let y = MPoint::new(1.3, 2.1);
        let d = m.distance(x, y).unwrap();
        assert!((d - sphere_dist(1.0, x, y)).abs() < 1e-9);
        // base-point distances are the radial coordinate
        assert!((m.distance(m.base(), y).unwrap() - y.x).abs() < 1e-12);
        assert!((m.distance_to_base(y).unwrap() - y.x).abs() < 1e-12);
        // segment endpoints land where requested
        let segs = m.segments(x, y).unwrap();
        let end = segs[0].end();
        assert!((end.x - y.x).abs() < 1e-6);
        assert!(reduce_angle(end.y - y.y).abs() < 1e-6);
    }

    #[test]
    fn revolution_angles_match_spherical_trigonometry() {
        let m = sphere_manifold(1.0);
        let o = m.base();
        let p = MPoint::new(0.8, 0.0);
        let q = MPoint::new(1.1, 1.2);
        // angle at the pole is the chart angle
        assert!((m.angle(o, p, q).unwrap() - 1.2).abs() < 1e-12);
        // spherical law of cosines at p
        let (a, b, c) = (m.distance(o, q).unwrap(), p.x, m.distance(p, q).unwrap());
        let expected = ((a.cos() - b.cos() * c.cos()) / (b.sin() * c.sin())).acos();
        let got = m.angle(p, o, q).unwrap();
        assert!((got - expected).abs() < 1e-7, "angle {got} vs law of cosines {expected}");
    }

    #[test]
    fn analytic_distances_are_metrics_on_random_triples() {
        let cyl = Manifold::cylinder(1.3, MPoint::new(0.0, 0.0)).unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = move || {
            // xorshift is plenty for scattering test points
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let pts: Vec<MPoint> = (0..3)
                .map(|_| MPoint::new(4.0 * rand() - 2.0, TAU * rand()))
                .collect();
            let dab = cyl.distance(pts[0], pts[1]).unwrap();
            let dba = cyl.distance(pts[1], pts[0]).unwrap();
            let dbc = cyl.distance(pts[1], pts[2]).unwrap();
            let dac = cyl.distance(pts[0], pts[2]).unwrap();
            assert!((dab - dba).abs() < 1e-8);
            assert!(dac <= dab + dbc + 1e-8);
        }

        let sph = sphere_manifold(1.0);
        for _ in 0..25 {
            let pts: Vec<MPoint> = (0..3)
                .map(|_| MPoint::new(0.2 + 2.6 * rand(), TAU * rand()))
                .collect();
            let dab = sph.distance(pts[0], pts[1]).unwrap();
            let dba = sph.distance(pts[1], pts[0]).unwrap();
            let dbc = sph.distance(pts[1], pts[2]).unwrap();
            let dac = sph.distance(pts[0], pts[2]).unwrap();
            assert!((dab - dba).abs() < 1e-8, "asymmetry {}", (dab - dba).abs());
            assert!(dac <= dab + dbc + 1e-8);
        }
    }

    #[test]
    fn grid_euclidean_distance_and_straight_segments() {
        let grid = MetricGrid::new(
            193,
            193,
            (-2.0, 2.0),
            (-2.0, 2.0),
            false,
            false,
            false,
            |_, _| 1.0,
            |_, _| 1.0,
        )
        .unwrap();
        let m = Manifold::grid(grid, MPoint::new(0.0, 0.0));
        let x = MPoint::new(-1.0, -0.5);
        let y = MPoint::new(1.0, 0.75);
        let exact = (4.0f64 + 1.5625).sqrt();
        let d = m.distance(x, y).unwrap();
        assert!((d - exact).abs() / exact < 5e-3, "grid distance {d} vs {exact}");

        let segs = m.segments(x, y).unwrap();
        assert_eq!(segs.len(), 1);
        let h = 4.0 / 192.0;
        for i in 0..=20 {
            let t = d * i as f64 / 20.0;
            let p = segs[0].point_at(t);
            // distance from the straight chord
            let w = ((p.x - x.x) * (y.x - x.x) + (p.y - x.y) * (y.y - x.y))
                / ((y.x - x.x).powi(2) + (y.y - x.y).powi(2));
            let proj = MPoint::new(x.x + w * (y.x - x.x), x.y + w * (y.y - x.y));
            let off = ((p.x - proj.x).powi(2) + (p.y - proj.y).powi(2)).sqrt();
            assert!(off < 2.0 * h, "descent path strays {off} from the chord");
        }
    }

    #[test]
    fn grid_right_angle_is_recovered_by_the_tangent_fit() {
        let grid = MetricGrid::new(
            161,
            161,
            (-1.5, 1.5),
            (-1.5, 1.5),
            false,
            false,
            false,
            |_, _| 1.0,
            |_, _| 1.0,
        )
        .unwrap();
        let m = Manifold::grid(grid, MPoint::new(0.0, 0.0));
        let v = MPoint::new(0.0, 0.0);
        let a = m.angle(v, MPoint::new(1.0, 0.0), MPoint::new(0.0, 1.0)).unwrap();
        assert!((a - PI / 2.0).abs() < 2e-2, "fitted angle {a}");
    }

    #[test]
    fn grid_cylinder_finds_both_ways_around() {
        // flat cylinder of radius 1 as a periodic grid chart
        let grid = MetricGrid::new(
            129,
            257,
            (-4.0, 4.0),
            (0.0, TAU),
            true,
            false,
            false,
            |_, _| 1.0,
            |_, _| 1.0,
        )
        .unwrap();
        let m = Manifold::grid(grid, MPoint::new(0.0, 0.0));
        let x = MPoint::new(0.0, 0.1);
        let y = MPoint::new(0.8, 0.1 + PI);
        let d = m.distance(x, y).unwrap();
        let exact = (0.64 + PI * PI).sqrt();
        assert!((d - exact).abs() / exact < 6e-3);
        let segs = m.segments(x, y).unwrap();
        assert_eq!(segs.len(), 2, "expected one segment around each side");
    }

    #[test]
    fn curvature_audit_orders_sphere_profiles() {
        let reference = RadialProfile::sphere(1.0);
        let m4 = sphere_manifold(4.0);
        let audit = radial_curvature_audit(&m4, &reference, 200, 1e-12).unwrap();
        assert!(audit.all_pass);
        assert_eq!(audit.nodes.len(), 200);

        // the reverse direction must fail at every node
        let m1 = sphere_manifold(1.0);
        let reference4 = RadialProfile::sphere(4.0);
        let audit = radial_curvature_audit(&m1, &reference4, 50, 1e-12).unwrap();
        assert!(audit.nodes.iter().all(|n| !n.pass));

        // cylinders have zero curvature: fine against a flat or hyperbolic
        // reference, not against a sphere
        let cyl = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let flat = RadialProfile::flat(10.0);
        assert!(radial_curvature_audit(&cyl, &flat, 40, 1e-12).unwrap().all_pass);
        assert!(!radial_curvature_audit(&cyl, &reference, 40, 1e-12).unwrap().all_pass);
    }

    #[test]
    fn eikonal_field_on_a_revolution_chart() {
        let profile = RadialProfile::solve(
            CurvatureFn::expression("1/(1+r^2)^2").unwrap(),
            6.0,
            1e-10,
        )
        .unwrap();
        let m = Manifold::revolution(Surface::new(profile));
        let source = MPoint::new(0.0, 0.0);
        let field = eikonal_field(&m, source, 257).unwrap();
        // distance from the pole is the radial coordinate
        for r in [0.5, 1.5, 3.0, 4.5] {
            for th in [0.3, 2.0, 5.0] {
                let got = field.query(r, th);
                assert!((got - r).abs() / r < 5e-3, "field {got} vs radius {r}");
            }
        }
    }
}
