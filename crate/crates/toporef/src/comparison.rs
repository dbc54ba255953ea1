//! Triangle-level comparison checks.
//!
//! A geodesic triangle `(o, p, q)` on a test manifold is rebuilt on the
//! reference surface with the same side lengths (`o` goes to the pole), and
//! the two triangles are compared: base-side convexity `d(o, T(p,q)(t)) ≥
//! d(õ, T(p̃,q̃)(t))`, domination of the three vertex angles, and the polar
//! order of transplanted segments against the extremal segments `U`/`L`.
//! The same machinery certifies cut points, audits the perimeter and
//! diameter bounds of closed references, and tracks how the convexity gaps
//! stabilize under downward perturbations of the curvature profile.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

use crate::cutlocus::{extremal_segments, ExtremalPair};
use crate::error::{Error, Result};
use crate::manifolds::{MPoint, MSegment, Manifold};
use crate::profile::RadialProfile;
use crate::reference::{
    reference_pair, reference_point_detailed, reference_point_seeded, OffsetSolve,
    ReferenceCurve, RESIDUAL_TOL,
};
use crate::sampling::Halton2;
use crate::surface::{
    curve_order, reduce_angle, CurveOrder, GeodesicPath, PolarCurve, Surface, SurfacePoint,
};

/// Distance error of one analytic router evaluation.
pub const ANALYTIC_DIST_ERR: f64 = 3e-7;

/// Angle tolerance on analytic manifolds.
pub const ANALYTIC_ANGLE_TOL: f64 = 1e-6;

/// Angle tolerance on grid manifolds (tangents are least-squares fits).
pub const GRID_ANGLE_TOL: f64 = 2e-2;

/// Radial tolerance for the polar order of curves.
pub const ORDER_TOL: f64 = 1e-5;

/// Batch sampling rejects triangles with a side shorter than this.
pub const MIN_SIDE: f64 = 1e-3;

/// Batch sampling rejects triangles whose triangle-inequality defect is
/// smaller than this (near-collinear configurations have ill-conditioned
/// angles and graze the representability boundary).
pub const COLLINEAR_TOL: f64 = 1e-3;

/// Nodes for the base-angle monotonicity scan.
pub const MONOTONE_NODES: usize = 33;

/// Allowed per-step increase in the base-angle monotonicity scan.
pub const MONOTONE_TOL: f64 = 1e-6;

fn per_eval_error(m: &Manifold) -> f64 {
    match m {
        // fast-marching fields carry a scheme error proportional to the
        // grid spacing
        Manifold::Grid(g) => 5.0 * g.grid.hx().min(g.grid.hy()),
        _ => ANALYTIC_DIST_ERR,
    }
}

/// Default convexity tolerance: three times the combined error of one gap
/// evaluation (a manifold distance plus a reference solve).
pub fn default_tau_cmp(m: &Manifold) -> f64 {
    3.0 * (per_eval_error(m) + RESIDUAL_TOL)
}

/// Default angle tolerance for the manifold kind.
pub fn default_tau_ang(m: &Manifold) -> f64 {
    if m.is_analytic() {
        ANALYTIC_ANGLE_TOL
    } else {
        GRID_ANGLE_TOL
    }
}

// ------------------------------------------------------ comparison triangle

/// Which extremal segment closes the comparison triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SegmentChoice {
    Upper,
    Lower,
}

impl SegmentChoice {
    pub fn other(self) -> SegmentChoice {
        match self {
            SegmentChoice::Upper => SegmentChoice::Lower,
            SegmentChoice::Lower => SegmentChoice::Upper,
        }
    }

    fn pick(self, pair: &ExtremalPair) -> GeodesicPath {
        match self {
            SegmentChoice::Upper => pair.upper.clone(),
            SegmentChoice::Lower => pair.lower.clone(),
        }
    }
}

/// The reference triangle built from three side lengths: `p̃` on the zero
/// meridian, `q̃` solved from the distance pair, and one extremal segment
/// joining them.
#[derive(Clone, Debug)]
pub struct ComparisonTriangle {
    pub p_ref: SurfacePoint,
    pub q_ref: SurfacePoint,
    /// Angular offset of `q̃` from the `p̃` meridian, in `[0, π]`.
    pub offset: f64,
    /// Residual of the offset solve, in distance units.
    pub residual: f64,
    pub choice: SegmentChoice,
    /// The chosen segment `p̃ → q̃`; `None` for a degenerate triangle
    /// (`d(p,q) = 0`, where `q̃ = p̃`).
    pub segment: Option<GeodesicPath>,
    pub extremal: Option<ExtremalPair>,
}

/// Build the comparison triangle for sides `(d(o,p), d(o,q), d(p,q))`.
///
/// On a closed reference the perimeter may not exceed twice the pole gap;
/// larger triangles have no isometric copy and the error names the bound.
pub fn comparison_triangle(
    surface: &Surface,
    sides: (f64, f64, f64),
    choice: SegmentChoice,
) -> Result<ComparisonTriangle> {
    let (d_op, d_oq, d_pq) = sides;
    if !(d_op.is_finite() && d_oq.is_finite() && d_pq.is_finite())
        || d_op < 0.0
        || d_oq < 0.0
        || d_pq < 0.0
    {
        return Err(Error::invalid(format!(
            "triangle sides must be finite and non-negative, got ({d_op}, {d_oq}, {d_pq})"
        )));
    }
    let slack = 1e-9 * (1.0 + d_op.max(d_oq).max(d_pq));
    if d_pq > d_op + d_oq + slack || d_oq > d_op + d_pq + slack || d_op > d_oq + d_pq + slack {
        return Err(Error::invalid(format!(
            "sides ({d_op}, {d_oq}, {d_pq}) violate the triangle inequality"
        )));
    }
    let profile = surface.profile();
    if let Some(ell) = profile.ell() {
        let perimeter = d_op + d_oq + d_pq;
        let bound = 2.0 * ell;
        if perimeter > bound + slack {
            return Err(Error::PerimeterViolation { perimeter, bound });
        }
        for (what, r) in [("d(o,p)", d_op), ("d(o,q)", d_oq)] {
            if r > ell + slack {
                return Err(Error::Domain { what, value: r, lo: 0.0, hi: ell });
            }
        }
    } else {
        let horizon = profile.horizon();
        for (what, r) in [("d(o,p)", d_op), ("d(o,q)", d_oq)] {
            if r >= horizon {
                return Err(Error::Domain { what, value: r, lo: 0.0, hi: horizon });
            }
        }
    }
    if d_op < 1e-9 {
        return Err(Error::invalid(
            "comparison triangles need p away from the base point".to_string(),
        ));
    }

    let p_ref = SurfacePoint::new(d_op, 0.0);
    if d_pq < 1e-9 {
        return Ok(ComparisonTriangle {
            p_ref,
            q_ref: p_ref,
            offset: 0.0,
            residual: 0.0,
            choice,
            segment: None,
            extremal: None,
        });
    }

    let solve = reference_point_detailed(surface, p_ref, (d_oq, d_pq), None)?;
    let solve = polish_offset(surface, p_ref, (d_oq, d_pq), solve);
    let extremal = extremal_segments(surface, &p_ref, &solve.point)?;
    let segment = choice.pick(&extremal);
    Ok(ComparisonTriangle {
        p_ref,
        q_ref: solve.point,
        offset: solve.offset,
        residual: solve.residual,
        choice,
        segment: Some(segment),
        extremal: Some(extremal),
    })
}

/// Sharpen a solved offset with a few secant steps.  The vertex angle at
/// the pole is read straight off the offset, and near-degenerate triangles
/// divide the solve residual by a short lever arm `f(r) sin(angle)`; the
/// router is accurate enough that a residual around 1e-12 is reachable and
/// keeps that quotient inside the angle tolerance.
fn polish_offset(
    surface: &Surface,
    anchor: SurfacePoint,
    pair: (f64, f64),
    start: OffsetSolve,
) -> OffsetSolve {
    let (d_o, d_p) = pair;
    let target = 1e-12 * (1.0 + d_p);
    // collinear plateaus: the exhaustive solve already clamped the offset
    // to an endpoint and a secant has nothing to grip
    if !(1e-5..=PI - 1e-5).contains(&start.offset) || start.residual <= target {
        return start;
    }
    let mut hint: Option<f64> = None;
    let mut eval = |theta: f64, hint: &mut Option<f64>| -> Option<f64> {
        let x = SurfacePoint::new(d_o, anchor.theta + theta);
        match surface.distance_fast(&anchor, &x, *hint) {
            Ok((d, alpha)) => {
                if alpha.is_finite() {
                    *hint = Some(alpha);
                }
                Some(d - d_p)
            }
            Err(_) => None,
        }
    };
    let mut x_prev = start.offset;
    let Some(mut f_prev) = eval(x_prev, &mut hint) else {
        return start;
    };
    let mut best = (x_prev, f_prev.abs());
    let mut x_cur = if x_prev < PI / 2.0 { x_prev + 1e-6 } else { x_prev - 1e-6 };
    for _ in 0..5 {
        if best.1 <= target {
            break;
        }
        let Some(f_cur) = eval(x_cur, &mut hint) else {
            break;
        };
        if f_cur.abs() < best.1 {
            best = (x_cur, f_cur.abs());
        }
        let denom = f_cur - f_prev;
        if !(denom.is_finite() && denom != 0.0) {
            break;
        }
        let next = x_cur - f_cur * (x_cur - x_prev) / denom;
        if !next.is_finite() {
            break;
        }
        x_prev = x_cur;
        f_prev = f_cur;
        x_cur = next.clamp(1e-6, PI - 1e-6);
    }
    if best.1 < start.residual {
        OffsetSolve {
            point: SurfacePoint::new(d_o, anchor.theta + best.0),
            residual: best.1,
            offset: best.0,
        }
    } else {
        start
    }
}

// --------------------------------------------------------- triangle in M

/// A geodesic triangle on the test manifold: the base point, two vertices,
/// every minimizing segment between them, and the measured side lengths.
#[derive(Debug)]
pub struct TriangleInM<'a> {
    pub m: &'a Manifold,
    pub p: MPoint,
    pub q: MPoint,
    /// Minimizing segments `p → q`.
    pub segments: Vec<MSegment>,
    /// `(d(o,p), d(o,q), d(p,q))`.
    pub sides: (f64, f64, f64),
}

impl<'a> TriangleInM<'a> {
    pub fn new(m: &'a Manifold, p: MPoint, q: MPoint) -> Result<Self> {
        let d_op = m.distance_to_base(p)?;
        let d_oq = m.distance_to_base(q)?;
        let segments = m.segments(p, q)?;
        let d_pq = segments
            .first()
            .map(MSegment::length)
            .ok_or_else(|| Error::solver("manifold returned no p-q segment".to_string()))?;
        Ok(TriangleInM { m, p, q, segments, sides: (d_op, d_oq, d_pq) })
    }
}

// ------------------------------------------------------------- reports

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TriangleFlags {
    pub pass: bool,
    /// All convexity gaps vanished within tolerance.
    pub equality_detected: bool,
    /// The sides violate the perimeter bound of the closed reference.
    pub hypothesis_failed: bool,
    /// The reference triangle could not be built (no point carries the
    /// required distance pair).
    pub not_representable: bool,
}

/// Polar-order results of the two transplants against the extremal
/// segments, plus the forward/reverse consistency bit.
#[derive(Clone, Debug, Serialize)]
pub struct PositionalReport {
    pub forward_vs_upper: Option<CurveOrder>,
    pub forward_vs_lower: Option<CurveOrder>,
    pub reverse_vs_upper: Option<CurveOrder>,
    pub reverse_vs_lower: Option<CurveOrder>,
    /// The forward and reverse transplants agree on whether they dominate
    /// each segment (checked per segment where both orders are known).
    pub consistent: bool,
    pub tol: f64,
}

/// Everything measured about one triangle.
#[derive(Clone, Debug, Serialize)]
pub struct TriangleReport {
    pub id: u64,
    /// Chart coordinates of the two off-base vertices.
    pub p: (f64, f64),
    pub q: (f64, f64),
    /// `(d(o,p), d(o,q), d(p,q))`.
    pub sides: (f64, f64, f64),
    /// Manifold angles `(∠poq, ∠opq, ∠oqp)`.
    pub angles_m: Option<(f64, f64, f64)>,
    /// Reference angles at the matching vertices.
    pub angles_ref: Option<(f64, f64, f64)>,
    /// Configured extremal choice for the comparison segment.
    pub segment_choice: SegmentChoice,
    /// When the reference pair is genuinely split, the choice that passed
    /// the convexity check (the configured one unless it failed and the
    /// other succeeded).
    pub passing_choice: Option<SegmentChoice>,
    /// Number of minimizing segments between `p̃` and `q̃`.
    pub segment_multiplicity: usize,
    /// Number of minimizing segments between `p` and `q`.
    pub m_multiplicity: usize,
    /// `(t, d(o,T(p,q)(t)) − d(õ, T(p̃,q̃)(t)))` samples; the worst segment's
    /// row when `p` and `q` are joined by several.
    pub convexity_gaps: Vec<(f64, f64)>,
    pub min_gap: Option<f64>,
    /// Smallest of the three `M`-minus-reference angle differences.
    pub worst_angle_margin: Option<f64>,
    pub tau_cmp: f64,
    pub tau_ang: f64,
    /// Transplant radii dominate the chosen segment radii at matched
    /// parameters.
    pub chain_ok: Option<bool>,
    pub positional: Option<PositionalReport>,
    /// The scenario is expected to violate the hypotheses; failures are
    /// reported but not counted as check violations.
    pub counterexample_expected: bool,
    pub flags: TriangleFlags,
}

// ------------------------------------------------------------ convexity

/// Sample the base-distance gap along every minimizing segment and record
/// the worst row in the report.  PASS requires the minimum gap to clear
/// `-tau_cmp`; equality is flagged when no gap leaves the tolerance band.
pub fn check_alexandrov_convexity(
    tri_m: &TriangleInM<'_>,
    tri: &ComparisonTriangle,
    report: &mut TriangleReport,
    n_samples: usize,
) -> Result<()> {
    let seg_ref = tri
        .segment
        .as_ref()
        .ok_or_else(|| Error::invalid("degenerate triangle has no comparison segment"))?;
    let n = n_samples.max(2);
    let d_pq = tri_m.sides.2;
    let mut worst: Option<(f64, Vec<(f64, f64)>)> = None;
    let mut max_abs: f64 = 0.0;
    for seg_m in &tri_m.segments {
        let mut row = Vec::with_capacity(n);
        let mut row_min = f64::INFINITY;
        for i in 0..n {
            let t = d_pq * i as f64 / (n - 1) as f64;
            let d_m = tri_m.m.distance_to_base(seg_m.point_at(t))?;
            let gap = d_m - seg_ref.point_at(t).r;
            row_min = row_min.min(gap);
            max_abs = max_abs.max(gap.abs());
            row.push((t, gap));
        }
        if worst.as_ref().map_or(true, |(m, _)| row_min < *m) {
            worst = Some((row_min, row));
        }
    }
    let (min_gap, gaps) = worst.expect("at least one segment");
    report.convexity_gaps = gaps;
    report.min_gap = Some(min_gap);
    report.flags.equality_detected = max_abs <= report.tau_cmp;
    if min_gap < -report.tau_cmp {
        report.flags.pass = false;
    }
    Ok(())
}

// --------------------------------------------------------------- angles

fn arrival_angle(path: &GeodesicPath) -> f64 {
    // angle between the reversed tangent and the inward meridian at the
    // far endpoint; the metric is diag(1, f²), so the cosine is dr/dt
    path.velocity_at(path.length).0.clamp(-1.0, 1.0).acos()
}

fn manifold_angles(tri_m: &TriangleInM<'_>) -> Result<(f64, f64, f64)> {
    match tri_m.m {
        Manifold::Revolution(_) => {
            // the angle at the base point is the angular separation of the
            // two meridians; the vertex angles come off the segment
            // tangents, taking the worst segment at each vertex
            let at_o = reduce_angle(tri_m.p.y - tri_m.q.y).abs();
            let mut at_p = f64::INFINITY;
            let mut at_q = f64::INFINITY;
            for seg in &tri_m.segments {
                if let MSegment::Revolution(path) = seg {
                    at_p = at_p.min(path.initial_angle);
                    at_q = at_q.min(arrival_angle(path));
                }
            }
            if !(at_p.is_finite() && at_q.is_finite()) {
                return Err(Error::solver("no revolution segment to read angles from"));
            }
            Ok((at_o, at_p, at_q))
        }
        _ => {
            let o = tri_m.m.base();
            Ok((
                tri_m.m.angle(o, tri_m.p, tri_m.q)?,
                tri_m.m.angle(tri_m.p, o, tri_m.q)?,
                tri_m.m.angle(tri_m.q, o, tri_m.p)?,
            ))
        }
    }
}

fn reference_angles(tri: &ComparisonTriangle, segment: &GeodesicPath) -> (f64, f64, f64) {
    (tri.offset, segment.initial_angle, arrival_angle(segment))
}

/// Compare the three vertex angles: each manifold angle must be at least
/// the reference angle minus `tau_ang`.
pub fn check_angle_comparison(
    tri_m: &TriangleInM<'_>,
    tri: &ComparisonTriangle,
    report: &mut TriangleReport,
) -> Result<()> {
    let seg_ref = tri
        .segment
        .as_ref()
        .ok_or_else(|| Error::invalid("degenerate triangle has no comparison segment"))?;
    let am = manifold_angles(tri_m)?;
    let ar = reference_angles(tri, seg_ref);
    let worst = (am.0 - ar.0).min(am.1 - ar.1).min(am.2 - ar.2);
    report.angles_m = Some(am);
    report.angles_ref = Some(ar);
    report.worst_angle_margin = Some(worst);
    if worst < -report.tau_ang {
        report.flags.pass = false;
    }
    Ok(())
}

// ------------------------------------------------------- positional order

/// Reference curve as a polar curve: strictly increasing angles, reverse
/// curves traversed from their far end.  `None` when fewer than two nodes
/// survive (meridian-hugging transplants).
fn polar_from_reference(curve: &ReferenceCurve) -> Option<PolarCurve> {
    let mut theta = Vec::with_capacity(curve.samples.len());
    let mut r = Vec::with_capacity(curve.samples.len());
    let iter: Box<dyn Iterator<Item = &crate::reference::CurveSample>> = match curve.kind {
        crate::reference::CurveKind::Forward => Box::new(curve.samples.iter()),
        crate::reference::CurveKind::Reverse => Box::new(curve.samples.iter().rev()),
    };
    for s in iter {
        if theta.last().map_or(true, |&last: &f64| s.theta > last + 1e-12) {
            theta.push(s.theta);
            r.push(s.r);
        }
    }
    if theta.len() < 2 {
        return None;
    }
    PolarCurve::new(theta, r).ok()
}

/// Resample a non-meridian segment at prescribed angles by inverting its
/// monotone angular parameterization with bisection.
fn segment_polar_at(path: &GeodesicPath, thetas: &[f64]) -> Option<PolarCurve> {
    if path.is_meridian() || thetas.len() < 2 {
        return None;
    }
    let th_start = path.point_at(0.0).theta;
    let th_end = path.point_at(path.length).theta;
    let increasing = th_end >= th_start;
    let (lo, hi) = if increasing { (th_start, th_end) } else { (th_end, th_start) };
    if hi - lo < 1e-12 {
        return None;
    }
    let mut r = Vec::with_capacity(thetas.len());
    for &target in thetas {
        let t = if target <= lo {
            if increasing {
                0.0
            } else {
                path.length
            }
        } else if target >= hi {
            if increasing {
                path.length
            } else {
                0.0
            }
        } else {
            let (mut a, mut b) = (0.0, path.length);
            for _ in 0..52 {
                let mid = 0.5 * (a + b);
                if (path.point_at(mid).theta <= target) == increasing {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        };
        r.push(path.point_at(t).r);
    }
    PolarCurve::new(thetas.to_vec(), r).ok()
}

fn order_against(curve: &Option<PolarCurve>, seg: &GeodesicPath, tol: f64) -> Result<Option<CurveOrder>> {
    let Some(c) = curve else {
        return Ok(None);
    };
    let Some(seg_polar) = segment_polar_at(seg, &c.theta) else {
        return Ok(None);
    };
    curve_order(c, &seg_polar, tol).map(Some)
}

/// Polar order of the two transplants of one segment against the extremal
/// segments, evaluated at the transplants' own angular nodes.
pub fn check_positional_relation(
    fwd: &ReferenceCurve,
    rev: &ReferenceCurve,
    pair: &ExtremalPair,
    tol: f64,
) -> Result<PositionalReport> {
    let f_polar = polar_from_reference(fwd);
    let r_polar = polar_from_reference(rev);
    // a mirror pair is two reflections of one curve, and a multiplicity-one
    // pair is literally one segment: either way a single comparison serves
    // both columns
    let single = pair.mirror_pair || pair.multiplicity == 1;
    let fu = order_against(&f_polar, &pair.upper, tol)?;
    let fl = if single { fu } else { order_against(&f_polar, &pair.lower, tol)? };
    let ru = order_against(&r_polar, &pair.upper, tol)?;
    let rl = if single { ru } else { order_against(&r_polar, &pair.lower, tol)? };

    let ge = |o: Option<CurveOrder>| o.map(|v| matches!(v, CurveOrder::Ge | CurveOrder::Eq));
    let mut consistent = true;
    for (f, r) in [(ge(fu), ge(ru)), (ge(fl), ge(rl))] {
        if let (Some(a), Some(b)) = (f, r) {
            if a != b {
                consistent = false;
            }
        }
    }
    Ok(PositionalReport {
        forward_vs_upper: fu,
        forward_vs_lower: fl,
        reverse_vs_upper: ru,
        reverse_vs_lower: rl,
        consistent,
        tol,
    })
}

// ------------------------------------------------------- cut certificates

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CutVerdict {
    CertifiedCut,
    NoClaim,
}

/// Evidence that `q` is a cut point of `p`: the transplant dropping below
/// (or crossing) the upper segment, several minimizing segments, or a
/// Jacobi-field zero at arrival.
#[derive(Clone, Debug, Serialize)]
pub struct CutCertificate {
    pub verdict: CutVerdict,
    pub order_vs_upper: Option<CurveOrder>,
    pub minimizing_count: usize,
    pub conjugate_at_arrival: bool,
    /// Direct manifold evidence (segment count or conjugate point) backs
    /// the verdict.
    pub witness_confirmed: bool,
    pub tol: f64,
}

/// Decide whether the triangle data certifies `q ∈ Cut(p)`.  The order
/// signal alone suffices; the manifold is also asked for direct witnesses,
/// which both cross-validate the signal and cover transplants that have no
/// polar form.
pub fn cut_point_certificate(
    fwd: &ReferenceCurve,
    pair: &ExtremalPair,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    tol: Option<f64>,
) -> Result<CutCertificate> {
    let tol = tol.unwrap_or(ORDER_TOL);
    let f_polar = polar_from_reference(fwd);
    let order = order_against(&f_polar, &pair.upper, tol)?;
    let order_signal = matches!(
        order,
        Some(CurveOrder::Le) | Some(CurveOrder::Incomparable { .. })
    );

    let segments = m.segments(p, q)?;
    let minimizing_count = segments.len();
    let mut conjugate_at_arrival = false;
    if let (Manifold::Revolution(rm), Some(MSegment::Revolution(path))) = (m, segments.first()) {
        // shoot slightly past the arrival so a Jacobi zero sitting exactly
        // at the endpoint shows up as a sign change
        let reach = path.length * 1.001 + 1e-6;
        if let Ok(extended) = rm.surface.shoot_capped(path.start, path.initial_angle, reach) {
            if let Ok(Some(tc)) = rm.surface.conjugate_time(&extended) {
                conjugate_at_arrival = tc <= path.length + 1e-6;
            }
        }
    }

    let witness_confirmed = minimizing_count >= 2 || conjugate_at_arrival;
    let verdict = if order_signal || witness_confirmed {
        CutVerdict::CertifiedCut
    } else {
        CutVerdict::NoClaim
    };
    Ok(CutCertificate {
        verdict,
        order_vs_upper: order,
        minimizing_count,
        conjugate_at_arrival,
        witness_confirmed,
        tol,
    })
}

// --------------------------------------------------- perimeter / diameter

/// Perimeter and diameter audit against a closed reference's bounds.
#[derive(Clone, Debug, Serialize)]
pub struct PerimeterAudit {
    pub pairs: usize,
    /// Triangles audited: every sampled pair joined with the base point.
    pub triples: usize,
    pub max_perimeter: f64,
    pub max_distance: f64,
    /// `max_perimeter / 2ℓ`; `None` on open references.
    pub perimeter_ratio: Option<f64>,
    /// `max_distance / ℓ`; `None` on open references.
    pub distance_ratio: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// The diameter saturates the bound: the maximal-diameter rigidity
    /// regime.
    pub diameter_equality: bool,
}

fn audit_distance(m: &Manifold, x: MPoint, y: MPoint, r_x: f64, r_y: f64) -> Result<f64> {
    if let Manifold::Revolution(rm) = m {
        // vertex shortcuts keep the router away from the chart poles
        if r_x <= 1e-9 {
            return Ok(r_y);
        }
        if r_y <= 1e-9 {
            return Ok(r_x);
        }
        if let Some(ell) = rm.surface.profile().ell() {
            if ell - r_x <= 1e-9 {
                return Ok(ell - r_y);
            }
            if ell - r_y <= 1e-9 {
                return Ok(ell - r_x);
            }
        }
        let (d, _) = rm.surface.distance_fast(
            &SurfacePoint::new(x.x, x.y),
            &SurfacePoint::new(y.x, y.y),
            None,
        )?;
        return Ok(d);
    }
    m.distance(x, y)
}

/// Audit every pair of sample points: the distance may not exceed the
/// reference pole gap `ℓ`, and the perimeter of the triangle each pair
/// spans with the base point may not exceed `2ℓ`.
pub fn perimeter_diameter_audit(
    m: &Manifold,
    reference: &Surface,
    points: &[MPoint],
    tol: Option<f64>,
) -> Result<PerimeterAudit> {
    let tolerance = tol.unwrap_or(if m.is_analytic() { 1e-6 } else { 5e-3 });
    if points.len() < 2 {
        return Err(Error::invalid("the audit needs at least two sample points"));
    }
    let radii: Vec<f64> =
        points.iter().map(|&x| m.distance_to_base(x)).collect::<Result<Vec<f64>>>()?;
    let mut max_distance = radii.iter().copied().fold(0.0_f64, f64::max);
    let mut max_perimeter = 0.0_f64;
    let mut pairs = 0usize;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = audit_distance(m, points[i], points[j], radii[i], radii[j])?;
            pairs += 1;
            max_distance = max_distance.max(d);
            max_perimeter = max_perimeter.max(radii[i] + radii[j] + d);
        }
    }
    let (perimeter_ratio, distance_ratio, pass) = match reference.profile().ell() {
        Some(ell) => {
            let pr = max_perimeter / (2.0 * ell);
            let dr = max_distance / ell;
            (Some(pr), Some(dr), pr <= 1.0 + tolerance && dr <= 1.0 + tolerance)
        }
        // open references put no ceiling on either quantity
        None => (None, None, true),
    };
    let diameter_equality = distance_ratio.map_or(false, |r| (r - 1.0).abs() <= tolerance);
    Ok(PerimeterAudit {
        pairs,
        triples: pairs,
        max_perimeter,
        max_distance,
        perimeter_ratio,
        distance_ratio,
        tolerance,
        pass,
        diameter_equality,
    })
}

// ------------------------------------------------------- delta stabilization

#[derive(Clone, Debug, Serialize)]
pub struct DeltaLevel {
    pub delta: f64,
    /// `(t, gap)` samples of the convexity gap against the perturbed
    /// reference.
    pub gaps: Vec<(f64, f64)>,
    pub min_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaSeries {
    /// Levels with decreasing `delta`; the unperturbed baseline is last.
    pub levels: Vec<DeltaLevel>,
    /// Sup-norm difference between successive gap curves.
    pub sup_differences: Vec<f64>,
    /// The sup differences do not increase towards the baseline.
    pub monotone: bool,
}

/// Re-run one triangle's convexity check against references whose radial
/// curvature is lowered by each `delta`, largest first, ending at the
/// unperturbed profile.  The gap curves must stabilize: successive
/// sup-norm differences shrink as `delta` drops.
pub fn delta_stabilized_run(
    reference: &RadialProfile,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    deltas: &[f64],
    n_samples: usize,
    choice: SegmentChoice,
) -> Result<DeltaSeries> {
    for &d in deltas {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::invalid(format!("perturbation {d} must be finite and >= 0")));
        }
    }
    let mut order: Vec<f64> = deltas.iter().copied().filter(|&d| d > 0.0).collect();
    order.sort_by(|a, b| b.partial_cmp(a).unwrap());
    order.dedup();
    order.push(0.0);

    let tri_m = TriangleInM::new(m, p, q)?;
    let d_pq = tri_m.sides.2;
    let seg_m = &tri_m.segments[0];
    let n = n_samples.max(2);
    // the manifold side of the gap does not depend on the perturbation
    let mut ts = Vec::with_capacity(n);
    let mut row_m = Vec::with_capacity(n);
    for i in 0..n {
        let t = d_pq * i as f64 / (n - 1) as f64;
        ts.push(t);
        row_m.push(m.distance_to_base(seg_m.point_at(t))?);
    }

    let mut levels = Vec::with_capacity(order.len());
    for &delta in &order {
        let surf = Surface::new(reference.perturbed(delta)?);
        let tri = comparison_triangle(&surf, tri_m.sides, choice)?;
        let seg_ref = tri
            .segment
            .as_ref()
            .ok_or_else(|| Error::invalid("degenerate triangle has no comparison segment"))?;
        let mut gaps = Vec::with_capacity(n);
        let mut min_gap = f64::INFINITY;
        for (&t, &dm) in ts.iter().zip(&row_m) {
            let gap = dm - seg_ref.point_at(t).r;
            min_gap = min_gap.min(gap);
            gaps.push((t, gap));
        }
        levels.push(DeltaLevel { delta, gaps, min_gap });
    }

    let mut sup_differences = Vec::with_capacity(levels.len().saturating_sub(1));
    for w in levels.windows(2) {
        let sup = w[0]
            .gaps
            .iter()
            .zip(&w[1].gaps)
            .map(|(a, b)| (a.1 - b.1).abs())
            .fold(0.0_f64, f64::max);
        sup_differences.push(sup);
    }
    let monotone = sup_differences.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(DeltaSeries { levels, sup_differences, monotone })
}

// --------------------------------------------------- base-angle monotonicity

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    /// `(t, offset)` where `offset` is the angle at the pole between the
    /// `p̃` meridian and the reference point of `T(o,q)(t)`.
    pub samples: Vec<(f64, f64)>,
    pub max_increase: f64,
    pub pass: bool,
    pub tol: f64,
    pub nodes: usize,
}

/// Track the pole angle of the reference point along the base segment
/// `T(o,q)`.  It starts (in the limit) at the manifold angle at `o` and
/// ends at the comparison angle, and must never increase on the way.
pub fn monotone_base_angle(
    surface: &Surface,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    nodes: usize,
    tol: f64,
) -> Result<MonotoneReport> {
    let nodes = nodes.max(2);
    let d_op = m.distance_to_base(p)?;
    let d_oq = m.distance_to_base(q)?;
    if d_op < 1e-9 || d_oq < 1e-9 {
        return Err(Error::invalid("the scan needs p and q away from the base point"));
    }
    let anchor = SurfacePoint::new(d_op, 0.0);
    let seg = m
        .segments(m.base(), q)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::solver("no base segment towards q".to_string()))?;
    let mut samples = Vec::with_capacity(nodes);
    let mut seed: Option<f64> = None;
    for i in 1..=nodes {
        // the segment is unit speed from o, so the base distance is t itself
        let t = d_oq * i as f64 / nodes as f64;
        let x = seg.point_at(t);
        let d_px = m.distance(p, x)?;
        let solve = reference_point_seeded(surface, anchor, (t, d_px), None, seed)?;
        seed = Some(solve.offset);
        samples.push((t, solve.offset));
    }
    let max_increase = samples
        .windows(2)
        .map(|w| w[1].1 - w[0].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let pass = max_increase <= tol;
    Ok(MonotoneReport { samples, max_increase, pass, tol, nodes })
}

// ------------------------------------------------------------ verification

/// Knobs for one triangle verification.
#[derive(Clone, Copy, Debug)]
pub struct VerifyConfig {
    pub choice: SegmentChoice,
    /// Convexity gap samples per segment.
    pub gap_samples: usize,
    /// Transplant nodes per reference curve.
    pub curve_samples: usize,
    /// Convexity tolerance; `None` picks the manifold default.
    pub tau_cmp: Option<f64>,
    /// Angle tolerance; `None` picks the manifold default.
    pub tau_ang: Option<f64>,
    /// Polar-order tolerance; `None` picks [`ORDER_TOL`].
    pub order_tol: Option<f64>,
    /// Run the transplant/positional checks (the costly part).
    pub positional: bool,
    /// The scenario is known to violate the hypotheses.
    pub expect_counterexample: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            choice: SegmentChoice::Lower,
            gap_samples: 33,
            curve_samples: 65,
            tau_cmp: None,
            tau_ang: None,
            order_tol: None,
            positional: true,
            expect_counterexample: false,
        }
    }
}

/// Verify one triangle given by its two off-base vertices.
pub fn verify_triangle(
    surface: &Surface,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    cfg: &VerifyConfig,
    id: u64,
) -> Result<TriangleReport> {
    let tri_m = TriangleInM::new(m, p, q)?;
    verify_prepared(surface, &tri_m, cfg, id)
}

/// Verify a prepared triangle: build the comparison triangle, run the
/// convexity, angle and positional checks, and fold everything into one
/// report.  Hypothesis and representability failures are reported through
/// the flags rather than as errors.
pub fn verify_prepared(
    surface: &Surface,
    tri_m: &TriangleInM<'_>,
    cfg: &VerifyConfig,
    id: u64,
) -> Result<TriangleReport> {
    let tau_cmp = cfg.tau_cmp.unwrap_or_else(|| default_tau_cmp(tri_m.m));
    let tau_ang = cfg.tau_ang.unwrap_or_else(|| default_tau_ang(tri_m.m));
    let mut report = TriangleReport {
        id,
        p: (tri_m.p.x, tri_m.p.y),
        q: (tri_m.q.x, tri_m.q.y),
        sides: tri_m.sides,
        angles_m: None,
        angles_ref: None,
        segment_choice: cfg.choice,
        passing_choice: None,
        segment_multiplicity: 0,
        m_multiplicity: tri_m.segments.len(),
        convexity_gaps: Vec::new(),
        min_gap: None,
        worst_angle_margin: None,
        tau_cmp,
        tau_ang,
        chain_ok: None,
        positional: None,
        counterexample_expected: cfg.expect_counterexample,
        flags: TriangleFlags {
            pass: true,
            equality_detected: false,
            hypothesis_failed: false,
            not_representable: false,
        },
    };

    let mut tri = match comparison_triangle(surface, tri_m.sides, cfg.choice) {
        Ok(t) => t,
        Err(Error::PerimeterViolation { .. }) => {
            report.flags.hypothesis_failed = true;
            report.flags.pass = false;
            return Ok(report);
        }
        Err(Error::NotRepresentable { .. }) | Err(Error::Domain { .. }) => {
            report.flags.not_representable = true;
            report.flags.pass = false;
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.segment_multiplicity = tri.extremal.as_ref().map_or(0, |e| e.multiplicity);

    check_alexandrov_convexity(tri_m, &tri, &mut report, cfg.gap_samples)?;
    if report.flags.pass {
        if report.segment_multiplicity > 1 {
            report.passing_choice = Some(cfg.choice);
        }
    } else if report.segment_multiplicity > 1 {
        // the guarantee is for one of the extremal segments, not a fixed
        // one: when the configured choice fails, try the other and record
        // which one carried the triangle
        let mut alt = tri.clone();
        alt.choice = cfg.choice.other();
        alt.segment = alt.extremal.as_ref().map(|e| alt.choice.pick(e));
        let mut alt_report = report.clone();
        alt_report.flags.pass = true;
        check_alexandrov_convexity(tri_m, &alt, &mut alt_report, cfg.gap_samples)?;
        if alt_report.flags.pass {
            alt_report.passing_choice = Some(alt.choice);
            report = alt_report;
            tri = alt;
        }
    }

    check_angle_comparison(tri_m, &tri, &mut report)?;

    // numerical rigidity consistency: if the gaps all vanished, the angles
    // must match as well
    if report.flags.equality_detected {
        if let (Some(am), Some(ar)) = (report.angles_m, report.angles_ref) {
            let worst_abs =
                (am.0 - ar.0).abs().max((am.1 - ar.1).abs()).max((am.2 - ar.2).abs());
            if worst_abs > tau_ang {
                report.flags.pass = false;
            }
        }
    }

    if cfg.positional {
        let (fwd, rev) = reference_pair(
            surface,
            tri_m.m,
            tri_m.p,
            tri_m.q,
            &tri_m.segments[0],
            cfg.curve_samples,
            "segment-0",
        )?;
        if let (Some(extremal), Some(seg_ref)) = (tri.extremal.as_ref(), tri.segment.as_ref()) {
            let tol = cfg.order_tol.unwrap_or(ORDER_TOL);
            report.positional = Some(check_positional_relation(&fwd, &rev, extremal, tol)?);
            if fwd.samples.len() >= 2 {
                report.chain_ok =
                    Some(fwd.samples.iter().all(|s| s.r >= seg_ref.point_at(s.t).r - tau_cmp));
            }
        }
    }

    Ok(report)
}

// ----------------------------------------------------------------- batches

/// Batch sampling and execution parameters.
#[derive(Clone, Copy, Debug)]
pub struct BatchConfig {
    pub triangles: usize,
    pub seed: u64,
    /// Radial range for the sampled vertex `q` (geodesic distance from the
    /// base point on analytic manifolds).
    pub r_range: (f64, f64),
    /// Worker threads; `0` uses the machine default, `1` stays serial.
    pub workers: usize,
    pub verify: VerifyConfig,
}

/// Aggregated batch results.
#[derive(Clone, Debug, Serialize)]
pub struct BatchOutcome {
    pub reports: Vec<TriangleReport>,
    pub accepted: usize,
    pub rejected: usize,
    pub pass_count: usize,
    pub fail_count: usize,
    pub equality_count: usize,
    /// Every triangle passed or was an expected counterexample.
    pub all_pass: bool,
    /// Base-angle monotonicity scan on the first passing triangle.
    pub monotone: Option<MonotoneReport>,
}

fn chart_point(m: &Manifold, u: f64, v: f64, r_range: (f64, f64)) -> MPoint {
    let r = r_range.0 + u * (r_range.1 - r_range.0);
    let phi = (v - 0.5) * TAU;
    match m {
        Manifold::Revolution(_) => MPoint::new(r, phi),
        Manifold::Cylinder(c) => {
            MPoint::new(c.base.x + r * phi.cos(), c.base.y + r * phi.sin() / c.radius)
        }
        // grid charts are boxes, not discs: spread the sample over the
        // chart with a safety margin and ignore the radial range
        Manifold::Grid(g) => MPoint::new(
            g.grid.x0 + (0.05 + 0.9 * u) * (g.grid.x1 - g.grid.x0),
            g.grid.y0 + (0.05 + 0.9 * v) * (g.grid.y1 - g.grid.y0),
        ),
    }
}

/// Verify a batch of low-discrepancy triangles with a fixed vertex `p` and
/// `q` sampled over `(r, θ)`.  Degenerate samples (short sides, collinear
/// configurations) are rejected before verification; reports keep the
/// sampling order, so a fixed seed gives a byte-identical batch regardless
/// of the worker count.
pub fn verify_batch(
    surface: &Surface,
    m: &Manifold,
    p: MPoint,
    cfg: &BatchConfig,
) -> Result<BatchOutcome> {
    if cfg.triangles == 0 {
        return Err(Error::invalid("a batch needs at least one triangle"));
    }
    let (r_lo, r_hi) = cfg.r_range;
    if !(r_lo.is_finite() && r_hi.is_finite() && r_lo > 0.0 && r_hi > r_lo) {
        return Err(Error::invalid(format!(
            "radial sampling range ({r_lo}, {r_hi}) must be positive and increasing"
        )));
    }
    if let Manifold::Revolution(rm) = m {
        let top = rm.surface.profile().ell().unwrap_or(rm.surface.profile().horizon());
        if r_hi > top {
            return Err(Error::Domain { what: "radial sampling range", value: r_hi, lo: 0.0, hi: top });
        }
    }

    let mut halton = Halton2::new(cfg.seed);
    let mut prepared: Vec<TriangleInM<'_>> = Vec::with_capacity(cfg.triangles);
    let mut rejected = 0usize;
    let max_attempts = cfg.triangles.saturating_mul(20).max(64);
    let mut attempts = 0usize;
    while prepared.len() < cfg.triangles && attempts < max_attempts {
        attempts += 1;
        let (u, v) = halton.next_point();
        let q = chart_point(m, u, v, cfg.r_range);
        let tri = match TriangleInM::new(m, p, q) {
            Ok(t) => t,
            Err(Error::InvalidInput(_)) => {
                rejected += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (a, b, c) = tri.sides;
        let defect = (a + b - c).min(a + c - b).min(b + c - a);
        if a.min(b).min(c) < MIN_SIDE || defect < COLLINEAR_TOL {
            rejected += 1;
            continue;
        }
        prepared.push(tri);
    }
    if prepared.len() < cfg.triangles {
        return Err(Error::invalid(format!(
            "sampling stalled: {} of {} triangles accepted after {} attempts",
            prepared.len(),
            cfg.triangles,
            attempts
        )));
    }
    let accepted = prepared.len();

    let run = |(i, tri): (usize, &TriangleInM<'_>)| verify_prepared(surface, tri, &cfg.verify, i as u64);
    let mut reports: Vec<TriangleReport> = if cfg.workers == 1 {
        prepared.iter().enumerate().map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::solver(format!("worker pool construction failed: {e}")))?;
        pool.install(|| prepared.par_iter().enumerate().map(run).collect::<Result<_>>())?
    };
    reports.sort_by_key(|r| r.id);

    let pass_count = reports.iter().filter(|r| r.flags.pass).count();
    let equality_count = reports.iter().filter(|r| r.flags.equality_detected).count();
    let all_pass = reports.iter().all(|r| r.flags.pass || r.counterexample_expected);

    // scenario-level invariant, checked once on the first passing triangle
    let monotone = match reports.iter().find(|r| r.flags.pass) {
        Some(rep) => Some(monotone_base_angle(
            surface,
            m,
            p,
            MPoint::new(rep.q.0, rep.q.1),
            MONOTONE_NODES,
            MONOTONE_TOL,
        )?),
        None => None,
    };

    Ok(BatchOutcome {
        reports,
        accepted,
        rejected,
        pass_count,
        fail_count: accepted - pass_count,
        equality_count,
        all_pass,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn unit_sphere() -> Surface {
        Surface::new(RadialProfile::sphere(1.0))
    }

    fn flat_surface() -> Surface {
        Surface::new(RadialProfile::flat(12.0))
    }

    fn sphere4_manifold() -> Manifold {
        Manifold::revolution(Surface::new(RadialProfile::sphere(4.0)))
    }

    #[test]
    fn flat_triangle_matches_the_law_of_cosines() {
        let surface = flat_surface();
        let tri =
            comparison_triangle(&surface, (1.0, 1.0, 3f64.sqrt()), SegmentChoice::Lower).unwrap();
        assert!((tri.q_ref.r - 1.0).abs() < 1e-9);
        assert!(
            (tri.offset - 2.0 * PI / 3.0).abs() < 2e-6,
            "offset {} should be 2π/3",
            tri.offset
        );
        let seg = tri.segment.as_ref().unwrap();
        assert!((seg.length - 3f64.sqrt()).abs() < 1e-6);
        assert_eq!(tri.extremal.as_ref().unwrap().multiplicity, 1);

        let degenerate =
            comparison_triangle(&surface, (1.0, 1.0, 0.0), SegmentChoice::Lower).unwrap();
        assert!(degenerate.segment.is_none());
        assert!((degenerate.q_ref.r - 1.0).abs() < 1e-12);
        assert!(degenerate.q_ref.theta.abs() < 1e-12);
    }

    #[test]
    fn sphere_triangle_matches_the_spherical_law_of_cosines() {
        let surface = unit_sphere();
        let tri = comparison_triangle(
            &surface,
            (FRAC_PI_4, FRAC_PI_4, FRAC_PI_4),
            SegmentChoice::Lower,
        )
        .unwrap();
        let expected = (2f64.sqrt() - 1.0).acos();
        assert!(
            (tri.offset - expected).abs() < 2e-6,
            "offset {} should be arccos(sqrt2 - 1) = {}",
            tri.offset,
            expected
        );
        assert!(tri.residual <= RESIDUAL_TOL);

        assert!(matches!(
            comparison_triangle(&surface, (1.0, 1.0, 2.5), SegmentChoice::Lower),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            comparison_triangle(&surface, (2.5, 2.5, 2.0), SegmentChoice::Lower),
            Err(Error::PerimeterViolation { .. })
        ));
    }

    #[test]
    fn equality_regime_on_the_matching_sphere() {
        let surface = unit_sphere();
        let m = Manifold::revolution(unit_sphere());
        let report = verify_triangle(
            &surface,
            &m,
            MPoint::new(0.6, 0.0),
            MPoint::new(0.9, 1.1),
            &VerifyConfig::default(),
            0,
        )
        .unwrap();
        assert!(report.flags.pass);
        assert!(report.flags.equality_detected);
        assert!(report.min_gap.unwrap().abs() <= 1e-6);
        let (am, ar) = (report.angles_m.unwrap(), report.angles_ref.unwrap());
        assert!((am.0 - ar.0).abs() <= 1e-6, "base angles {} vs {}", am.0, ar.0);
        assert!((am.1 - ar.1).abs() <= 1e-6, "p angles {} vs {}", am.1, ar.1);
        assert!((am.2 - ar.2).abs() <= 1e-6, "q angles {} vs {}", am.2, ar.2);
        let pos = report.positional.as_ref().unwrap();
        assert!(matches!(pos.forward_vs_lower, Some(CurveOrder::Eq)), "{:?}", pos);
        assert!(matches!(pos.reverse_vs_lower, Some(CurveOrder::Eq)), "{:?}", pos);
        assert!(pos.consistent);
        assert_eq!(report.chain_ok, Some(true));
    }

    #[test]
    fn strict_regime_on_the_fast_sphere() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let p = MPoint::new(FRAC_PI_4, 0.0);
        let q = MPoint::new(FRAC_PI_4, FRAC_PI_2);
        let report = verify_triangle(&reference, &m, p, q, &VerifyConfig::default(), 7).unwrap();
        assert!(report.flags.pass);
        assert!(!report.flags.equality_detected);
        let s = report.sides;
        assert!((s.0 - FRAC_PI_4).abs() < 1e-9);
        assert!((s.1 - FRAC_PI_4).abs() < 1e-9);
        assert!((s.2 - FRAC_PI_4).abs() < 1e-7, "equilateral side {}", s.2);

        // the segment in M runs along its equator while the comparison
        // segment dips towards the pole, so the midpoint gap is known in
        // closed form
        let mid_ref = (2.0 * FRAC_PI_4.cos() / (2.0 + 2.0 * FRAC_PI_4.cos()).sqrt()).acos();
        let expected_mid = FRAC_PI_4 - mid_ref;
        let mid = report.convexity_gaps[report.convexity_gaps.len() / 2].1;
        assert!((mid - expected_mid).abs() < 1e-4, "midpoint gap {mid} vs {expected_mid}");
        assert!(report.min_gap.unwrap() >= -1e-6);

        let am = report.angles_m.unwrap();
        let ar = report.angles_ref.unwrap();
        let model = (2f64.sqrt() - 1.0).acos();
        for (a, b) in [(am.0, ar.0), (am.1, ar.1), (am.2, ar.2)] {
            assert!((a - FRAC_PI_2).abs() < 1e-6, "octant angle {a}");
            assert!((b - model).abs() < 2e-6, "model angle {b}");
        }
        assert!(report.worst_angle_margin.unwrap() > 0.42);

        let pos = report.positional.as_ref().unwrap();
        assert!(matches!(pos.forward_vs_lower, Some(CurveOrder::Ge)), "{:?}", pos);
        assert!(pos.consistent);
        assert_eq!(report.chain_ok, Some(true));
    }

    #[test]
    fn plane_triangle_has_equal_angles() {
        let surface = flat_surface();
        let m = Manifold::revolution(flat_surface());
        let report = verify_triangle(
            &surface,
            &m,
            MPoint::new(3.0, 0.0),
            MPoint::new(4.0, FRAC_PI_2),
            &VerifyConfig::default(),
            0,
        )
        .unwrap();
        assert!(report.flags.pass);
        assert!(report.flags.equality_detected);
        assert!((report.sides.2 - 5.0).abs() < 1e-7);
        let am = report.angles_m.unwrap();
        assert!((am.0 - FRAC_PI_2).abs() < 1e-7);
        assert!((am.1 - (4f64 / 5.0).asin()).abs() < 1e-6, "angle at p {}", am.1);
        assert!((am.2 - (3f64 / 5.0).asin()).abs() < 1e-6, "angle at q {}", am.2);
        let ar = report.angles_ref.unwrap();
        for (a, b) in [(am.0, ar.0), (am.1, ar.1), (am.2, ar.2)] {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn cylinder_triangle_matches_its_flat_lift() {
        let surface = flat_surface();
        let m = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let report = verify_triangle(
            &surface,
            &m,
            MPoint::new(0.5, 0.4),
            MPoint::new(-0.3, 1.0),
            &VerifyConfig::default(),
            0,
        )
        .unwrap();
        assert!(report.flags.pass);
        assert!(report.flags.equality_detected);
        assert!(report.min_gap.unwrap().abs() <= 2e-6);
        assert!(report.worst_angle_margin.unwrap().abs() <= 1e-6);
        let pos = report.positional.as_ref().unwrap();
        assert!(matches!(pos.forward_vs_lower, Some(CurveOrder::Eq)), "{:?}", pos);
    }

    #[test]
    fn cylinder_cut_pair_is_certified() {
        let surface = flat_surface();
        let m = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let p = MPoint::new(0.3, 0.0);

        // directly across the cylinder: two minimizing lifts tie
        let q_cut = MPoint::new(1.1, PI);
        let tri = TriangleInM::new(&m, p, q_cut).unwrap();
        assert_eq!(tri.segments.len(), 2);
        let tri_ref = comparison_triangle(&surface, tri.sides, SegmentChoice::Lower).unwrap();
        let (fwd, _) = reference_pair(&surface, &m, p, q_cut, &tri.segments[0], 65, "s0").unwrap();
        let cert =
            cut_point_certificate(&fwd, tri_ref.extremal.as_ref().unwrap(), &m, p, q_cut, None)
                .unwrap();
        assert_eq!(cert.verdict, CutVerdict::CertifiedCut);
        assert_eq!(cert.minimizing_count, 2);
        assert!(cert.witness_confirmed);

        // a pair with unique lift leaves no claim
        let q_plain = MPoint::new(0.8, 1.2);
        let tri2 = TriangleInM::new(&m, p, q_plain).unwrap();
        let tri_ref2 = comparison_triangle(&surface, tri2.sides, SegmentChoice::Lower).unwrap();
        let (fwd2, _) =
            reference_pair(&surface, &m, p, q_plain, &tri2.segments[0], 65, "s0").unwrap();
        let cert2 =
            cut_point_certificate(&fwd2, tri_ref2.extremal.as_ref().unwrap(), &m, p, q_plain, None)
                .unwrap();
        assert_eq!(cert2.verdict, CutVerdict::NoClaim);
        assert_eq!(cert2.minimizing_count, 1);
        assert!(matches!(cert2.order_vs_upper, Some(CurveOrder::Eq)), "{:?}", cert2);
    }

    #[test]
    fn antipodal_points_on_the_fast_sphere_are_certified() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let p = MPoint::new(0.5, 0.0);
        let q = MPoint::new(FRAC_PI_2 - 0.5, PI);
        let tri = TriangleInM::new(&m, p, q).unwrap();
        assert!((tri.sides.2 - FRAC_PI_2).abs() < 1e-7, "antipodal distance {}", tri.sides.2);
        let tri_ref = comparison_triangle(&reference, tri.sides, SegmentChoice::Lower).unwrap();
        let (fwd, _) = reference_pair(&reference, &m, p, q, &tri.segments[0], 65, "s0").unwrap();
        let cert = cut_point_certificate(&fwd, tri_ref.extremal.as_ref().unwrap(), &m, p, q, None)
            .unwrap();
        assert_eq!(cert.verdict, CutVerdict::CertifiedCut);
        assert!(cert.witness_confirmed);
        assert!(cert.minimizing_count >= 2 || cert.conjugate_at_arrival);
    }

    #[test]
    fn perimeter_audit_flags_the_round_sphere_diameter() {
        let surface = unit_sphere();
        let m = Manifold::revolution(unit_sphere());
        let points = vec![
            MPoint::new(PI, 0.0), // the far vertex realizes the diameter
            MPoint::new(0.8, 0.3),
            MPoint::new(1.7, -2.1),
            MPoint::new(2.4, 1.9),
        ];
        let audit = perimeter_diameter_audit(&m, &surface, &points, None).unwrap();
        assert!(audit.pass);
        assert!(audit.diameter_equality);
        assert!((audit.distance_ratio.unwrap() - 1.0).abs() <= 1e-9);
        // the base point, the far vertex and any third point close a lune
        // of perimeter exactly 2π
        assert!((audit.max_perimeter - 2.0 * PI).abs() <= 1e-7);
        assert!(audit.perimeter_ratio.unwrap() <= 1.0 + 1e-9);
        assert_eq!(audit.pairs, 6);
        assert_eq!(audit.triples, 6);
    }

    #[test]
    fn perimeter_audit_stays_inside_the_bound_on_the_fast_sphere() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let mut points = Vec::new();
        let mut halton = Halton2::new(11);
        for _ in 0..12 {
            let (u, v) = halton.next_point();
            points.push(MPoint::new(0.05 + 1.4 * u, (v - 0.5) * TAU));
        }
        let audit = perimeter_diameter_audit(&m, &reference, &points, None).unwrap();
        assert!(audit.pass);
        assert!(!audit.diameter_equality);
        assert!(audit.max_perimeter <= PI + 1e-6, "perimeter {}", audit.max_perimeter);
        assert!(audit.perimeter_ratio.unwrap() <= 0.5 + 1e-6);
    }

    #[test]
    fn perimeter_audit_is_trivial_on_open_references() {
        let surface = flat_surface();
        let m = Manifold::cylinder(1.0, MPoint::new(0.0, 0.0)).unwrap();
        let points =
            vec![MPoint::new(0.5, 0.4), MPoint::new(-0.3, 1.0), MPoint::new(1.0, -2.0)];
        let audit = perimeter_diameter_audit(&m, &surface, &points, None).unwrap();
        assert!(audit.pass);
        assert!(audit.perimeter_ratio.is_none());
        assert!(audit.distance_ratio.is_none());
        assert!(!audit.diameter_equality);
    }

    #[test]
    fn delta_levels_shrink_towards_the_baseline() {
        let reference = RadialProfile::sphere(1.0);
        let m = sphere4_manifold();
        let p = MPoint::new(FRAC_PI_4, 0.0);
        let q = MPoint::new(FRAC_PI_4, FRAC_PI_2);
        let series =
            delta_stabilized_run(&reference, &m, p, q, &[0.1, 0.01, 0.001], 17, SegmentChoice::Lower)
                .unwrap();
        assert_eq!(series.levels.len(), 4);
        assert_eq!(series.levels.last().unwrap().delta, 0.0);
        assert_eq!(series.sup_differences.len(), 3);
        assert!(series.monotone, "sup differences {:?}", series.sup_differences);
        assert!(series.sup_differences[0] > series.sup_differences[1]);
        assert!(series.sup_differences[1] > series.sup_differences[2]);
        assert!(series.levels.last().unwrap().min_gap >= -1e-6);
    }

    #[test]
    fn flat_reference_gaps_grow_with_delta() {
        let reference = RadialProfile::flat(12.0);
        let m = Manifold::revolution(flat_surface());
        let p = MPoint::new(3.0, 0.0);
        let q = MPoint::new(4.0, FRAC_PI_2);
        let series =
            delta_stabilized_run(&reference, &m, p, q, &[0.01, 0.001], 17, SegmentChoice::Lower)
                .unwrap();
        let levels = &series.levels;
        assert_eq!(levels.len(), 3);
        // lowering the curvature pulls the comparison side inward, so the
        // gaps grow with delta and vanish at the flat baseline
        for k in 0..2 {
            for (hi, lo) in levels[k].gaps.iter().zip(&levels[k + 1].gaps) {
                assert!(hi.1 >= lo.1 - 1e-9, "delta ordering at t = {}", hi.0);
            }
        }
        assert!(levels[0].min_gap >= -1e-9);
        assert!(levels[2].min_gap.abs() <= 1e-6);
        assert!(series.monotone);
    }

    #[test]
    fn base_angle_is_monotone_along_the_strict_scenario() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let report = monotone_base_angle(
            &reference,
            &m,
            MPoint::new(FRAC_PI_4, 0.0),
            MPoint::new(FRAC_PI_4, FRAC_PI_2),
            33,
            1e-6,
        )
        .unwrap();
        assert!(report.pass, "max increase {}", report.max_increase);
        assert_eq!(report.samples.len(), 33);
        let first = report.samples.first().unwrap().1;
        let last = report.samples.last().unwrap().1;
        // the scan starts near the manifold angle at o and ends at the
        // comparison angle
        assert!((first - FRAC_PI_2).abs() < 0.05, "initial angle {first}");
        assert!((last - (2f64.sqrt() - 1.0).acos()).abs() < 1e-5, "final angle {last}");
    }

    #[test]
    fn batches_are_deterministic_across_worker_counts() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let p = MPoint::new(FRAC_PI_4, 0.0);
        let base = BatchConfig {
            triangles: 6,
            seed: 42,
            r_range: (0.25, 1.3),
            workers: 1,
            verify: VerifyConfig { positional: false, ..VerifyConfig::default() },
        };
        let serial = verify_batch(&reference, &m, p, &base).unwrap();
        assert_eq!(serial.accepted, 6);
        assert!(serial.all_pass, "fail count {}", serial.fail_count);
        assert_eq!(serial.pass_count, 6);
        assert!(serial.monotone.as_ref().unwrap().pass);

        let parallel =
            verify_batch(&reference, &m, p, &BatchConfig { workers: 3, ..base }).unwrap();
        let a = serde_json::to_string(&serial.reports).unwrap();
        let b = serde_json::to_string(&parallel.reports).unwrap();
        assert_eq!(a, b, "same seed must give byte-identical reports");

        let reseeded =
            verify_batch(&reference, &m, p, &BatchConfig { seed: 43, ..base }).unwrap();
        assert_ne!(a, serde_json::to_string(&reseeded.reports).unwrap());
    }

    #[test]
    fn batches_reject_degenerate_samples() {
        let reference = unit_sphere();
        let m = sphere4_manifold();
        let p = MPoint::new(FRAC_PI_4, 0.0);
        // q hugging the pole with |θ| < π/3 leaves the triangle-inequality
        // defect r_q (1 - cos θ) under the collinearity threshold
        let cfg = BatchConfig {
            triangles: 8,
            seed: 5,
            r_range: (0.002, 0.0025),
            workers: 1,
            verify: VerifyConfig { positional: false, ..VerifyConfig::default() },
        };
        let out = verify_batch(&reference, &m, p, &cfg).unwrap();
        assert_eq!(out.accepted, 8);
        assert!(out.rejected > 0, "collinearity filter never fired");
    }
}
