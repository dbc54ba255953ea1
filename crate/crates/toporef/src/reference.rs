//! Reference points, reference curves, and the ellipse-maxima machinery.
//!
//! A point x of a pointed test manifold (M, o) is transplanted onto the
//! model surface through its distance pair (d(o,x), d(p,x)): the image is
//! the unique point of the closed half-surface on the positive side of the
//! anchor's meridian whose own pair matches.  Applying this to every point
//! of a minimizing segment T(p,q) yields the forward reference curve; doing
//! the same from the far end, mirrored onto the negative side of the far
//! anchor's meridian, yields the reverse curve.  The two bound the
//! comparison segment between them in the curve order, which is what the
//! comparison module verifies.
//!
//! The second half of the module locates E(p): the local maxima of the
//! base distance d(o,·) restricted to metric ellipses
//! {x : d(o,x)+d(p,x) = r} of M.  Their images must stay away from the
//! interior cut locus of the anchor for the transplant to be trustworthy,
//! and `check_condition_2_1` measures exactly that separation.

use std::cell::Cell;
use std::f64::consts::PI;

use crate::contour::{iso_contours, window_maxima, ScalarGrid};
use crate::cutlocus::RayCut;
use crate::error::{Error, Result};
use crate::manifolds::{cylinder_distance, MPoint, Manifold};
use crate::rootfind::brent;
use crate::surface::{reduce_angle, Surface, SurfacePoint};

/// Largest accepted defect |d(anchor, solution) − target| of a solved
/// reference point.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Default number of curve samples (endpoints included).
pub const CURVE_SAMPLES: usize = 65;

// ------------------------------------------------------- reference points

/// A solved angular offset: the reference point plus solver diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct OffsetSolve {
    pub point: SurfacePoint,
    /// |d(anchor, point) − requested second distance|.
    pub residual: f64,
    /// Angular offset from the anchor meridian, in [0, π].
    pub offset: f64,
}

/// The reference point of a distance pair `(d_o, d_p)`: the unique point at
/// radius `d_o` on the positive half-surface of `anchor` whose distance to
/// `anchor` is `d_p`.  Monotonicity of the anchored distance in the angular
/// offset makes this a bracketed one-dimensional root problem.
pub fn reference_point(
    surface: &Surface,
    anchor: SurfacePoint,
    pair: (f64, f64),
) -> Result<SurfacePoint> {
    reference_point_detailed(surface, anchor, pair, None).map(|s| s.point)
}

/// As [`reference_point`], returning diagnostics; `hint` seeds the router
/// with an initial shooting angle from a previous nearby solve.
pub fn reference_point_detailed(
    surface: &Surface,
    anchor: SurfacePoint,
    pair: (f64, f64),
    hint: Option<f64>,
) -> Result<OffsetSolve> {
    reference_point_seeded(surface, anchor, pair, hint, None)
}

/// Bracketed secant on the monotone offset function, started from a seed.
/// Returns `Ok(None)` when the seed does not pan out; the caller then runs
/// the exhaustive bracketed search.  Acceptance needs both a small residual
/// and a tight bracket, so a flat stretch of the offset function cannot
/// smuggle in a poorly localized root.
fn seeded_offset(
    eval: &dyn Fn(f64) -> Result<f64>,
    d_p: f64,
    seed: f64,
) -> Result<Option<(f64, f64)>> {
    // near the collinear plateaus the offset function flattens out
    // quadratically and the exhaustive path's endpoint clamps are the right
    // tool; a secant there would localize the root poorly
    if !seed.is_finite() || !(1e-5..=PI - 1e-5).contains(&seed) {
        return Ok(None);
    }
    let mut a: f64 = 0.0; // g < 0 side (the offset distance increases)
    let mut b: f64 = PI;
    let mut x0 = seed;
    let mut f0 = eval(x0)? - d_p;
    if f0 > 0.0 {
        b = x0;
    } else {
        a = x0;
    }
    let mut x1 = x0 - f0.signum() * 0.05;
    if !(x1 > a && x1 < b) {
        x1 = 0.5 * (a + b);
    }
    let mut slope: f64 = 0.0;
    for _ in 0..12 {
        let f1 = eval(x1)? - d_p;
        if (x1 - x0).abs() >= 1e-9 {
            slope = ((f1 - f0) / (x1 - x0)).abs();
        }
        // accept only once the root is localized in x, not merely in
        // residual: either a tight bracket or a residual small against the
        // measured slope
        if f1.abs() <= RESIDUAL_TOL && (b - a <= 1e-9 || f1.abs() <= slope * 1e-9) {
            return Ok(Some((x1, f1.abs())));
        }
        if f1 > 0.0 {
            b = b.min(x1);
        } else {
            a = a.max(x1);
        }
        let mut xn = x1 - f1 * (x1 - x0) / (f1 - f0);
        if !xn.is_finite() || xn <= a || xn >= b {
            xn = 0.5 * (a + b);
        }
        x0 = x1;
        f0 = f1;
        x1 = xn;
    }
    Ok(None)
}

/// As [`reference_point_detailed`], with an angular-offset seed from a
/// neighbouring solve.  Curve transplants step through slowly varying
/// pairs, where the seeded secant needs a handful of distance evaluations
/// instead of a full bracketed search.
pub fn reference_point_seeded(
    surface: &Surface,
    anchor: SurfacePoint,
    pair: (f64, f64),
    hint: Option<f64>,
    seed: Option<f64>,
) -> Result<OffsetSolve> {
    let (mut d_o, d_p) = pair;
    if !(d_o.is_finite() && d_p.is_finite()) || d_o < -1e-12 || d_p < -1e-12 {
        return Err(Error::invalid(format!(
            "distance pair ({d_o}, {d_p}) must be finite and non-negative"
        )));
    }
    if anchor.r < 1e-9 {
        return Err(Error::invalid(
            "the anchor coincides with the vertex; its meridian is undefined",
        ));
    }
    let profile = surface.profile();
    let horizon = profile.horizon();
    let closed = profile.ell().is_some();
    if d_o > horizon {
        if closed && d_o <= horizon + 1e-9 {
            d_o = horizon;
        } else {
            return Err(Error::Domain { what: "reference radius", value: d_o, lo: 0.0, hi: horizon });
        }
    }

    // vertex targets sit on every meridian; their pair is pinned
    if d_o < 1e-9 {
        let expect = anchor.r;
        let residual = (d_p - expect).abs();
        return if residual <= RESIDUAL_TOL.max(1e-12) {
            Ok(OffsetSolve { point: SurfacePoint::new(0.0, anchor.theta), residual, offset: 0.0 })
        } else {
            Err(Error::NotRepresentable {
                d_o,
                d_p,
                reason: format!("a vertex point must have second distance {expect}"),
            })
        };
    }
    if closed && horizon - d_o < 1e-9 {
        let expect = horizon - anchor.r;
        let residual = (d_p - expect).abs();
        return if residual <= RESIDUAL_TOL.max(1e-12) {
            Ok(OffsetSolve {
                point: SurfacePoint::new(horizon, anchor.theta),
                residual,
                offset: 0.0,
            })
        } else {
            Err(Error::NotRepresentable {
                d_o,
                d_p,
                reason: format!("the far vertex must have second distance {expect}"),
            })
        };
    }

    let solve = |use_hint: bool| -> Result<OffsetSolve> {
        let alpha_hint = Cell::new(if use_hint { hint.unwrap_or(f64::NAN) } else { f64::NAN });
        let eval = |phi: f64| -> Result<f64> {
            let target = SurfacePoint::new(d_o, anchor.theta + phi);
            let h = alpha_hint.get();
            let carried = (use_hint && h.is_finite()).then_some(h);
            let (d, alpha) = surface.distance_fast(&anchor, &target, carried)?;
            if alpha.is_finite() {
                alpha_hint.set(alpha);
            }
            Ok(d)
        };

        if use_hint {
            if let Some(s) = seed {
                if let Some((root, residual)) = seeded_offset(&eval, d_p, s)? {
                    return Ok(OffsetSolve {
                        point: SurfacePoint::new(d_o, anchor.theta + root),
                        residual,
                        offset: root,
                    });
                }
            }
        }

        // Clamp within the residual budget at both ends: a collinear pair
        // whose measured d_min sits a few ulps below d_p would otherwise send
        // the root finder probing microscopic offsets for no accuracy gain.
        let d_min = eval(0.0)?;
        if d_p <= d_min + RESIDUAL_TOL {
            let residual = (d_min - d_p).abs();
            return if d_p > d_min || residual <= RESIDUAL_TOL {
                Ok(OffsetSolve {
                    point: SurfacePoint::new(d_o, anchor.theta),
                    residual,
                    offset: 0.0,
                })
            } else {
                Err(Error::NotRepresentable {
                    d_o,
                    d_p,
                    reason: format!("below the same-meridian distance {d_min:.9}"),
                })
            };
        }
        let d_max = eval(PI)?;
        if d_p >= d_max - RESIDUAL_TOL {
            let residual = (d_p - d_max).abs();
            return if d_p < d_max || residual <= RESIDUAL_TOL {
                Ok(OffsetSolve {
                    point: SurfacePoint::new(d_o, anchor.theta + PI),
                    residual,
                    offset: PI,
                })
            } else {
                Err(Error::NotRepresentable {
                    d_o,
                    d_p,
                    reason: format!("beyond the opposite-meridian distance {d_max:.9}"),
                })
            };
        }

        let mut inner_err: Option<Error> = None;
        let g = |phi: f64| match eval(phi) {
            Ok(d) => d - d_p,
            Err(e) => {
                // poison the solve; the residual check below rejects the result
                if inner_err.is_none() {
                    inner_err = Some(e);
                }
                0.0
            }
        };
        let root = brent(g, 0.0, PI, d_min - d_p, d_max - d_p, 1e-12, 200)?;
        if let Some(e) = inner_err {
            return Err(e);
        }
        let residual = (eval(root)? - d_p).abs();
        if residual > RESIDUAL_TOL {
            return Err(Error::solver(format!(
                "reference point residual {residual:.3e} for pair ({d_o}, {d_p})"
            )));
        }
        Ok(OffsetSolve {
            point: SurfacePoint::new(d_o, anchor.theta + root),
            residual,
            offset: root,
        })
    };

    // Shooting-angle continuation makes the common case cheap, but near the
    // anchor's cut locus the windowed router can trail the wrong geodesic
    // family; redo such solves with the exhaustive router before giving up.
    match solve(true) {
        Err(Error::Solver(_)) | Err(Error::NotRepresentable { .. }) => solve(false),
        other => other,
    }
}

// -------------------------------------------------------- reference curves

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum CurveKind {
    /// Anchored at p̃; the angular coordinate grows away from its meridian.
    Forward,
    /// Anchored at the far point q̃; the angular coordinate decreases.
    Reverse,
}

#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct CurveSample {
    /// Arc-length parameter along the source segment (from the anchor's end).
    pub t: f64,
    pub r: f64,
    pub theta: f64,
}

/// The transplant of a minimizing segment of M onto the model surface.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ReferenceCurve {
    pub kind: CurveKind,
    pub samples: Vec<CurveSample>,
    /// p̃ for forward curves, q̃ for reverse ones.
    pub anchor: SurfacePoint,
    pub source_segment: String,
    /// First sample whose pair had no preimage; the curve stops before it.
    pub failure_index: Option<usize>,
    /// Some interior sample landed on a half-surface boundary meridian (or
    /// the truncation happened past the opposite meridian).
    pub boundary: bool,
    /// Worst |d(anchor, sample) − t| over the computed samples.
    pub max_residual: f64,
}

impl ReferenceCurve {
    pub fn complete(&self) -> bool {
        self.failure_index.is_none()
    }

    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Check the angular monotonicity required of a valid transplant:
    /// non-decreasing for forward curves, non-increasing for reverse ones.
    pub fn theta_monotone(&self, tol: f64) -> bool {
        self.samples.windows(2).all(|w| match self.kind {
            CurveKind::Forward => w[1].theta >= w[0].theta - tol,
            CurveKind::Reverse => w[1].theta <= w[0].theta + tol,
        })
    }
}

/// Both transplants of one segment, sharing the base-distance row so the
/// radial profiles agree exactly at mirrored parameters.
pub fn reference_pair(
    surface: &Surface,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    seg: &crate::manifolds::MSegment,
    n: usize,
    seg_id: &str,
) -> Result<(ReferenceCurve, ReferenceCurve)> {
    let d = seg.length();
    let d_op = m.distance_to_base(p)?;
    if d < 1e-12 {
        // degenerate segment: both curves collapse to the anchor
        let point = CurveSample { t: 0.0, r: d_op, theta: 0.0 };
        let single = |kind| ReferenceCurve {
            kind,
            samples: vec![point],
            anchor: SurfacePoint::new(d_op, 0.0),
            source_segment: seg_id.to_string(),
            failure_index: None,
            boundary: false,
            max_residual: 0.0,
        };
        return Ok((single(CurveKind::Forward), single(CurveKind::Reverse)));
    }
    if n < 64 {
        return Err(Error::invalid(format!("reference curves need >= 64 samples, got {n}")));
    }

    // one base-distance evaluation per node, shared by both directions
    let mut r_row = Vec::with_capacity(n);
    for k in 0..n {
        let t = d * k as f64 / (n - 1) as f64;
        r_row.push(m.distance_to_base(seg.point_at(t))?);
    }
    let _ = q;

    let p_anchor = SurfacePoint::new(d_op, 0.0);
    let forward = transplant(surface, p_anchor, &r_row, d, false, CurveKind::Forward, seg_id)?;

    // the far anchor is the forward curve's endpoint when it got there,
    // and is re-solved from the endpoint pair otherwise
    let q_anchor = match (forward.complete(), forward.samples.last()) {
        (true, Some(last)) => SurfacePoint::new(last.r, last.theta),
        _ => match reference_point_detailed(surface, p_anchor, (r_row[n - 1], d), None) {
            Ok(s) => s.point,
            Err(Error::NotRepresentable { d_o, d_p, reason }) => {
                // no far anchor at all: the reverse curve cannot start
                let reverse = ReferenceCurve {
                    kind: CurveKind::Reverse,
                    samples: Vec::new(),
                    anchor: SurfacePoint::new(d_o, 0.0),
                    source_segment: seg_id.to_string(),
                    failure_index: Some(0),
                    boundary: reason.contains("opposite"),
                    max_residual: d_p,
                };
                return Ok((forward, reverse));
            }
            Err(e) => return Err(e),
        },
    };
    let mut rev_row: Vec<f64> = r_row.clone();
    rev_row.reverse();
    let reverse = transplant(surface, q_anchor, &rev_row, d, true, CurveKind::Reverse, seg_id)?;
    Ok((forward, reverse))
}

/// One transplant of a segment, given the anchor and the per-node base
/// distances ordered from the anchor's own end.
pub fn reference_curve(
    surface: &Surface,
    m: &Manifold,
    p: MPoint,
    q: MPoint,
    seg: &crate::manifolds::MSegment,
    kind: CurveKind,
    n: usize,
    seg_id: &str,
) -> Result<ReferenceCurve> {
    let (fwd, rev) = reference_pair(surface, m, p, q, seg, n, seg_id)?;
    Ok(match kind {
        CurveKind::Forward => fwd,
        CurveKind::Reverse => rev,
    })
}

fn transplant(
    surface: &Surface,
    anchor: SurfacePoint,
    r_row: &[f64],
    d: f64,
    mirrored: bool,
    kind: CurveKind,
    seg_id: &str,
) -> Result<ReferenceCurve> {
    let n = r_row.len();
    let mut samples = Vec::with_capacity(n);
    let mut failure_index = None;
    let mut boundary = false;
    let mut max_residual: f64 = 0.0;
    let mut alpha_hint: Option<f64> = None;
    let mut offset_seed: Option<f64> = None;

    for (k, &r) in r_row.iter().enumerate() {
        let t = d * k as f64 / (n - 1) as f64;
        match reference_point_seeded(surface, anchor, (r, t), alpha_hint, offset_seed) {
            Ok(solve) => {
                max_residual = max_residual.max(solve.residual);
                // boundary meridian contact away from the anchor sample is
                // the dichotomy case and gets surfaced to the caller
                if k > 0 && (solve.offset <= 1e-9 || solve.offset >= PI - 1e-9) {
                    boundary = true;
                }
                let theta = if mirrored {
                    anchor.theta - solve.offset
                } else {
                    anchor.theta + solve.offset
                };
                samples.push(CurveSample { t, r, theta });
                alpha_hint = None; // distance_fast hints do not survive the r jump well
                offset_seed = Some(solve.offset);
            }
            Err(Error::NotRepresentable { reason, .. }) => {
                failure_index = Some(k);
                boundary |= reason.contains("opposite");
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(ReferenceCurve {
        kind,
        samples,
        anchor,
        source_segment: seg_id.to_string(),
        failure_index,
        boundary,
        max_residual,
    })
}

/// The angular gap t ↦ θ(R̃(d−t)) − θ(T̃(t)) between the two transplants of
/// one segment, which must be non-negative for a valid comparison setup.
#[derive(Clone, Debug)]
pub struct ThetaGap {
    /// (t, gap) at the shared parameter nodes.
    pub samples: Vec<(f64, f64)>,
    pub min_gap: f64,
}

pub fn theta_gap(fwd: &ReferenceCurve, rev: &ReferenceCurve) -> Result<ThetaGap> {
    if fwd.kind != CurveKind::Forward || rev.kind != CurveKind::Reverse {
        return Err(Error::invalid("theta_gap wants one forward and one reverse curve"));
    }
    if fwd.source_segment != rev.source_segment {
        return Err(Error::invalid("theta_gap curves come from different segments"));
    }
    if !fwd.complete() || !rev.complete() || fwd.samples.len() != rev.samples.len() {
        return Err(Error::invalid("theta_gap needs complete curves on matching nodes"));
    }
    let n = fwd.samples.len();
    let mut samples = Vec::with_capacity(n);
    let mut min_gap = f64::INFINITY;
    for k in 0..n {
        let f = &fwd.samples[k];
        let r = &rev.samples[n - 1 - k];
        let gap = r.theta - f.theta;
        min_gap = min_gap.min(gap);
        samples.push((f.t, gap));
    }
    Ok(ThetaGap { samples, min_gap })
}

// ------------------------------------------------------------ E(p) maxima

/// Configuration for the ellipse-maxima scan.
#[derive(Clone, Copy, Debug)]
pub struct DetectConfig {
    /// Nodes per chart axis for the level-set grid.
    pub resolution: usize,
    /// Strictness margin for the 5-node window maxima; `None` picks a
    /// per-kind default.
    pub value_tol: Option<f64>,
    /// Apply the cut-point/collinearity pruning filter.
    pub prune: bool,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig { resolution: 257, value_tol: None, prune: true }
    }
}

/// Maxima of the base distance along one extracted level set.
#[derive(Clone, Debug)]
pub struct LevelMaxima {
    pub level: f64,
    /// Chart points of M where d(o,·) attains a windowed local maximum.
    pub points: Vec<MPoint>,
    /// Their distance pairs (d(o,x), d(p,x)).
    pub images: Vec<(f64, f64)>,
}

/// E(p) as sampled across the requested levels.
#[derive(Clone, Debug)]
pub struct EllipsoidMaxSet {
    pub levels: Vec<LevelMaxima>,
    pub warnings: Vec<String>,
    /// Estimated numeric error of a recorded image pair.
    pub image_error: f64,
}

impl EllipsoidMaxSet {
    pub fn total_maxima(&self) -> usize {
        self.levels.iter().map(|l| l.points.len()).sum()
    }
}

/// Locate the local maxima of d(o,·) on the metric ellipses
/// {x : d(o,x)+d(p,x) = r} of M for each level r.
///
/// The sum field is sampled on a chart suited to the manifold kind, level
/// sets are traced as contours, and maxima are strict over a five-node
/// window along each contour.  Candidates that are provably not maxima —
/// not cut points of o and not aligned with p between o and them — are
/// pruned when `cfg.prune` is set; plateau maxima are kept whole.
pub fn detect_e_p(
    m: &Manifold,
    p: MPoint,
    r_levels: &[f64],
    cfg: &DetectConfig,
) -> Result<EllipsoidMaxSet> {
    if r_levels.is_empty() {
        return Err(Error::invalid("detect_e_p needs at least one level"));
    }
    let res = cfg.resolution.max(64);
    let o = m.base();
    let c = m.distance(o, p)?;
    let max_level = r_levels.iter().cloned().fold(0.0, f64::max);
    for &r in r_levels {
        if !(r > c + 1e-12) {
            return Err(Error::invalid(format!(
                "level {r} does not exceed the focal distance {c}"
            )));
        }
    }

    match m {
        Manifold::Revolution(rm) => {
            let profile = rm.surface.profile_arc();
            let closed = profile.ell().is_some();
            let r_max = if closed {
                profile.horizon()
            } else {
                (c + 1.01 * max_level).min(profile.horizon() * 0.9995)
            };
            let theta_p = p.y;
            let span = (theta_p - PI, theta_p + PI);
            let f2 = {
                let pr = profile.clone();
                move |r: f64, _: f64| {
                    let f = pr.f(r);
                    f * f
                }
            };
            let grid = crate::eikonal::MetricGrid::new(
                res,
                res,
                (0.0, r_max),
                span,
                true,
                true,
                closed,
                |_, _| 1.0,
                f2,
            )?;
            let field = crate::eikonal::solve_eikonal(&grid, (p.x, p.y))?;
            let h = (r_max / (res - 1) as f64).max(2.0 * PI / res as f64);
            let image_error = 2.0 * (h + 5e-3 * max_level);
            let far_pole = closed.then_some(profile.horizon());
            scan_levels(
                res,
                (0.0, r_max),
                span,
                |r, _| r,
                |r, th| field.query(r, th),
                |r, _th, d_o, d_p| {
                    // o is a pole: keep collinear candidates and, on closed
                    // surfaces, the far vertex area
                    let collinear = (d_o - (c + d_p)).abs() <= (6.0 * h).max(2.0 * image_error);
                    let polar = far_pole.is_some_and(|ell| ell - r <= 3.0 * h);
                    collinear || polar
                },
                r_levels,
                cfg.value_tol.unwrap_or(1e-9),
                cfg.prune,
                image_error,
            )
        }
        Manifold::Cylinder(cy) => {
            let radius = cy.radius;
            let (h_o, phi_o) = (o.x, o.y);
            let height = 0.55 * (max_level + c) + 0.5;
            // seam halfway between the two rulings of o and p, where the
            // maxima set never sits for the configurations of interest
            let seam = phi_o + 0.5 * reduce_angle(p.y - phi_o) - PI;
            let span = (seam, seam + 2.0 * PI);
            let h = (2.0 * height / (res - 1) as f64).max(2.0 * PI / (res - 1) as f64);
            let image_error = 2.0 * h;
            let d_o_eval = move |x: f64, y: f64| cylinder_distance((x, y), (h_o, phi_o), radius);
            let d_p_eval = move |x: f64, y: f64| cylinder_distance((x, y), (p.x, p.y), radius);
            scan_levels(
                res,
                (h_o - height, h_o + height),
                span,
                d_o_eval,
                d_p_eval,
                |_x, th, d_o, d_p| {
                    let on_cut = reduce_angle(th - phi_o - PI).abs() * radius <= 3.0 * h;
                    let collinear = (d_o - (c + d_p)).abs() <= 6.0 * h;
                    on_cut || collinear
                },
                r_levels,
                cfg.value_tol.unwrap_or(1e-9),
                cfg.prune,
                image_error,
            )
        }
        Manifold::Grid(g) => {
            let field_o = g.field_from(o)?;
            let field_p = g.field_from(p)?;
            let (x0, x1) = (g.grid.x0, g.grid.x1);
            let (y0, y1) = (g.grid.y0, g.grid.y1);
            let h = g.grid.hx().max(g.grid.hy());
            let image_error = 2.0 * (h + 5e-3 * max_level);
            let fo = field_o.clone();
            let fp = field_p.clone();
            let ridge = field_o.clone();
            scan_levels(
                res,
                (x0, x1),
                (y0, y1),
                move |x, y| fo.query(x, y),
                move |x, y| fp.query(x, y),
                move |x, y, d_o, d_p| {
                    ridge.ridge_at(x, y) || (d_o - (c + d_p)).abs() <= (6.0 * h).max(1e-2 * max_level)
                },
                r_levels,
                cfg.value_tol.unwrap_or(1e-5 * max_level.max(1.0)),
                cfg.prune,
                image_error,
            )
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn scan_levels(
    res: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    d_o: impl Fn(f64, f64) -> f64,
    d_p: impl Fn(f64, f64) -> f64,
    keep: impl Fn(f64, f64, f64, f64) -> bool,
    r_levels: &[f64],
    value_tol: f64,
    prune: bool,
    image_error: f64,
) -> Result<EllipsoidMaxSet> {
    let sum = ScalarGrid::sample(res, res, x_range, y_range, |x, y| d_o(x, y) + d_p(x, y))?;
    let mut levels = Vec::with_capacity(r_levels.len());
    let mut warnings = Vec::new();

    for &level in r_levels {
        let contours = iso_contours(&sum, level);
        if contours.is_empty() {
            warnings.push(format!("level {level}: no contour in the chart window"));
            continue;
        }
        let mut points = Vec::new();
        let mut images = Vec::new();
        for contour in &contours {
            if contour.points.len() < 5 {
                continue;
            }
            let vals: Vec<f64> =
                contour.points.iter().map(|&(x, y)| d_o(x, y)).collect();
            for i in window_maxima(&vals, contour.closed, value_tol) {
                let (x, y) = contour.points[i];
                let (vo, vp) = (d_o(x, y), d_p(x, y));
                if prune && !keep(x, y, vo, vp) {
                    continue;
                }
                points.push(MPoint::new(x, y));
                images.push((vo, vp));
            }
        }
        if points.is_empty() {
            warnings.push(format!("level {level}: contours carry no surviving maxima"));
        }
        levels.push(LevelMaxima { level, points, images });
    }

    Ok(EllipsoidMaxSet { levels, warnings, image_error })
}

// -------------------------------------------------------- hypothesis (2.1)

/// Which notion of the positive half-surface the separation check uses:
/// its open interior (the theorem hypothesis) or its closure (the stronger
/// rigidity-grade variant).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum HalfVariant {
    Interior,
    Closed,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionWitness {
    pub image: (f64, f64),
    pub mapped: Option<SurfacePoint>,
    pub cut_point: SurfacePoint,
    pub separation: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConditionReport {
    pub pass: bool,
    pub variant: HalfVariant,
    pub tau: f64,
    /// Smallest separation seen; infinite when either side is empty.
    pub min_separation: f64,
    pub cut_points_considered: usize,
    pub images_considered: usize,
    pub vacuous: bool,
    pub witness: Option<ConditionWitness>,
}

/// Measure the separation between the mapped maxima set and the anchor's
/// cut locus restricted to the chosen half-surface variant.  PASS means
/// every mapped point clears the cut points by more than `tau`, which
/// defaults to three times the combined numeric error of the two sets.
pub fn check_condition_2_1(
    surface: &Surface,
    anchor: SurfacePoint,
    maxset: &EllipsoidMaxSet,
    cuts: &[RayCut],
    variant: HalfVariant,
    tau: Option<f64>,
    cut_error: f64,
) -> Result<ConditionReport> {
    let tau = tau.unwrap_or(3.0 * (maxset.image_error + cut_error));
    let closed_surface = surface.profile().ell().is_some();
    let horizon = surface.profile().horizon();
    // cut points hugging the boundary meridian within the detector's own
    // accuracy cannot be certified interior, so the interior variant treats
    // them as boundary
    let boundary_tol = (10.0 * cut_error).max(1e-6);

    let mut cut_points: Vec<(SurfacePoint, f64)> = Vec::new();
    for rc in cuts {
        let pt = rc.point;
        let offset = reduce_angle(pt.theta - anchor.theta).abs();
        let on_boundary = offset <= boundary_tol
            || offset >= PI - boundary_tol
            || pt.r <= boundary_tol
            || (closed_surface && horizon - pt.r <= boundary_tol);
        if variant == HalfVariant::Interior && on_boundary {
            continue;
        }
        cut_points.push((pt, rc.t_cut));
    }

    let mut images = 0usize;
    let mut min_separation = f64::INFINITY;
    let mut witness: Option<ConditionWitness> = None;
    for level in &maxset.levels {
        for &pair in &level.images {
            images += 1;
            if cut_points.is_empty() {
                continue;
            }
            let mapped = match reference_point(surface, anchor, pair) {
                Ok(pt) => Some(pt),
                Err(Error::NotRepresentable { .. }) => None,
                Err(e) => return Err(e),
            };
            for &(cp, t_cut) in &cut_points {
                let sep = match mapped {
                    Some(pt) => surface.distance_fast(&pt, &cp, None)?.0,
                    // the pair has no preimage: compare in pair space, where
                    // the cut point's image is (radius, cut time)
                    None => ((pair.0 - cp.r).powi(2) + (pair.1 - t_cut).powi(2)).sqrt(),
                };
                if sep < min_separation {
                    min_separation = sep;
                    witness = Some(ConditionWitness {
                        image: pair,
                        mapped,
                        cut_point: cp,
                        separation: sep,
                    });
                }
            }
        }
    }

    let vacuous = cut_points.is_empty() || images == 0;
    let pass = vacuous || min_separation > tau;
    Ok(ConditionReport {
        pass,
        variant,
        tau,
        min_separation,
        cut_points_considered: cut_points.len(),
        images_considered: images,
        vacuous,
        witness: if pass { None } else { witness },
    })
}
