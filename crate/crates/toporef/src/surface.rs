//! Geodesics and distances on a surface of revolution `dr^2 + f(r)^2 dtheta^2`.
//!
//! Geodesics are shot from their initial angle `alpha` in `[0, pi]`, measured
//! against the meridian direction that points at the pole (`alpha = 0` runs
//! into the pole, `alpha = pi` away from it, everything in between bends
//! towards increasing `theta`).  The Clairaut constant `nu = f(r) sin alpha`
//! is conserved along the flow; together with unit speed,
//! `(dr/dt)^2 + f^2 (dtheta/dt)^2 = 1`, it gives the two drift invariants the
//! integration is validated against.
//!
//! Point-to-point distance works by sweeping a coarse fan of shots.  The
//! longitude is strictly monotone along every non-meridian geodesic, so each
//! shot meets the section `theta = target lift` at most once; the radial
//! residual there is a continuous function of the initial angle, and its sign
//! changes across the fan bracket exactly the geodesics through the target.
//! Each admissible lift of the target angle (short way, long way around,
//! extra windings up to the length horizon) is sectioned separately, which is
//! what makes multiple minimizing segments — cut points — come back as a
//! complete family.  Meridian routes (along the axis, through the pole,
//! through the far pole on a closed surface) are handled in closed form and
//! enter the candidate pool like any other route.
//!
//! A coarse fan cannot see minimizer pairs that appear and disappear between
//! two adjacent shots (roots of even multiplicity in the initial angle);
//! raising [`ShootParams::coarse_shots`] trades time for resolution.

use std::sync::Arc;

use serde::Serialize;

use crate::eikonal::DistanceField;
use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Solution};
use crate::profile::{Domain, RadialProfile};
use crate::rootfind;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Reduce an angle to `(-pi, pi]`.
pub fn reduce_angle(x: f64) -> f64 {
    let mut a = x % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// A point in the global polar chart.  `theta` is stored as a lift (a real
/// number, not reduced); use [`SurfacePoint::reduced_theta`] when the
/// representative in `(-pi, pi]` is wanted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub r: f64,
    pub theta: f64,
}

impl SurfacePoint {
    pub fn new(r: f64, theta: f64) -> Self {
        SurfacePoint { r, theta }
    }

    pub fn reduced_theta(&self) -> f64 {
        reduce_angle(self.theta)
    }
}

/// Which half-surface (relative to the meridian through a base point) a
/// point falls into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Half {
    Plus,
    Minus,
    Boundary,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PathSample {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub dr: f64,
    pub dtheta: f64,
}

#[derive(Clone, Debug)]
enum PathKind {
    /// Analytic meridian; `dir = -1` starts towards the pole.  On a closed
    /// surface (`ell` set) the path reflects off both vertices.
    Meridian { dir: f64, ell: Option<f64> },
    /// Dense ODE solution with state `(r, theta, dr, dtheta)`.
    Shot(Box<Solution<4>>),
}

/// A unit-speed geodesic of a fixed length.
///
/// `mirror` flips the sign of the angular coordinate relative to the start:
/// the shot itself always runs towards increasing `theta`, and mirrored
/// paths are their reflections across the starting meridian.
#[derive(Clone, Debug)]
pub struct GeodesicPath {
    pub start: SurfacePoint,
    pub initial_angle: f64,
    pub clairaut: f64,
    pub length: f64,
    pub mirror: bool,
    kind: PathKind,
}

impl GeodesicPath {
    pub fn is_meridian(&self) -> bool {
        matches!(self.kind, PathKind::Meridian { .. })
    }

    /// Chart position at arc length `t` (clamped to `[0, length]`).
    pub fn point_at(&self, t: f64) -> SurfacePoint {
        let (r, theta, _, _) = self.state_at(t);
        SurfacePoint { r, theta }
    }

    /// `(dr/dt, dtheta/dt)` at arc length `t`.
    pub fn velocity_at(&self, t: f64) -> (f64, f64) {
        let (_, _, dr, dth) = self.state_at(t);
        (dr, dth)
    }

    pub fn end(&self) -> SurfacePoint {
        self.point_at(self.length)
    }

    fn state_at(&self, t: f64) -> (f64, f64, f64, f64) {
        let t = t.clamp(0.0, self.length);
        match &self.kind {
            PathKind::Shot(sol) => {
                let y = sol.eval(t);
                if self.mirror {
                    (y[0], 2.0 * self.start.theta - y[1], y[2], -y[3])
                } else {
                    (y[0], y[1], y[2], y[3])
                }
            }
            PathKind::Meridian { dir, ell } => {
                // unfolded coordinate; vertex passages flip theta by pi
                let u = self.start.r + dir * t;
                let (r, sign, crossings) = fold_meridian(self.start.r, u, *ell);
                (
                    r,
                    self.start.theta + PI * crossings as f64,
                    dir * sign,
                    0.0,
                )
            }
        }
    }

    /// Uniform arc-length samples, endpoints included.
    pub fn samples(&self, n: usize) -> Vec<PathSample> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let t = self.length * i as f64 / (n - 1) as f64;
                let (r, theta, dr, dtheta) = self.state_at(t);
                PathSample { t, r, theta, dr, dtheta }
            })
            .collect()
    }

    /// Worst unit-speed and Clairaut-constant drift along the path,
    /// evaluated on `n` samples against the supplied profile.
    pub fn drift(&self, profile: &RadialProfile, n: usize) -> (f64, f64) {
        let mut speed_err: f64 = 0.0;
        let mut clairaut_err: f64 = 0.0;
        for s in self.samples(n) {
            let f = profile.f(s.r);
            let speed = s.dr * s.dr + f * f * s.dtheta * s.dtheta;
            speed_err = speed_err.max((speed - 1.0).abs());
            let nu = f * f * s.dtheta;
            clairaut_err = clairaut_err.max((nu.abs() - self.clairaut.abs()).abs());
        }
        (speed_err, clairaut_err)
    }
}

/// Fold the unfolded meridian coordinate `u` (signed arc length along the
/// axis, starting from radius `r0 > 0`) back into the radial range.
/// Returns `(r, dr/du, vertex crossings between r0 and u)`.
///
/// On an open surface only the pole reflects (`r = |u|`); on a closed one
/// the profile reflects at every multiple of `ell`.
fn fold_meridian(r0: f64, u: f64, ell: Option<f64>) -> (f64, f64, usize) {
    match ell {
        None => {
            if u >= 0.0 {
                (u, 1.0, 0)
            } else {
                (-u, -1.0, 1)
            }
        }
        Some(ell) => {
            let two = 2.0 * ell;
            let mut v = u % two;
            if v < 0.0 {
                v += two;
            }
            let (r, sign) = if v <= ell { (v, 1.0) } else { (two - v, -1.0) };
            // count multiples of ell strictly between r0 and u
            let (lo, hi) = if u < r0 { (u, r0) } else { (r0, u) };
            let mut crossings = (hi / ell).floor() as i64 - (lo / ell).floor() as i64;
            if (hi / ell).fract() == 0.0 && hi > lo {
                crossings -= 1; // an endpoint exactly on a vertex is not a passage
            }
            (r, sign, crossings.max(0) as usize)
        }
    }
}

/// The arc length at which the solution's longitude (component 1, strictly
/// increasing) reaches `target`, with the radius there.  `None` when the
/// path ends before getting that far.
fn section_at(sol: &Solution<4>, target: f64) -> Option<(f64, f64)> {
    if sol.y_end[1] < target {
        return None;
    }
    // binary search for the dense step containing the section
    let steps = &sol.steps;
    let mut lo = 0usize;
    let mut hi = steps.len();
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if steps[mid].eval_component(1, steps[mid].t0) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let step = &steps[lo];
    let a = step.t0;
    let b = step.t_end();
    let ga = step.eval_component(1, a) - target;
    let gb = step.eval_component(1, b) - target;
    if ga > 0.0 || gb < 0.0 {
        // roundoff at a step boundary: clamp to the nearer end
        let t = if ga > 0.0 { a } else { b };
        return Some((t, step.eval_component(0, t)));
    }
    let t = rootfind::brent(|x| step.eval_component(1, x) - target, a, b, ga, gb, 1e-13, 120).ok()?;
    Some((t, step.eval_component(0, t)))
}

/// Tunables for shooting and distance computation.  The defaults are what
/// the validation suite pins its tolerances to.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShootParams {
    pub rtol: f64,
    pub atol: f64,
    /// Non-meridian trajectories abort this close to a vertex.
    pub eps_pole: f64,
    /// Fan size of the coarse sweep in `distance`.
    pub coarse_shots: usize,
    /// Chart-coordinate tolerance on arrival at the target.
    pub arrival_tol: f64,
    /// Segments within this length of the best one count as minimizing.
    pub merge_len: f64,
    /// Initial angles closer than this are the same segment.
    pub merge_alpha: f64,
}

impl Default for ShootParams {
    fn default() -> Self {
        ShootParams {
            rtol: 1e-12,
            atol: 1e-12,
            eps_pole: 1e-6,
            coarse_shots: 256,
            arrival_tol: 1e-9,
            merge_len: 1e-7,
            merge_alpha: 1e-7,
        }
    }
}

/// Everything `distance` found out about a pair of points.
#[derive(Clone, Debug)]
pub struct DistanceResult {
    pub distance: f64,
    /// All minimizing segments (within the merge tolerance), sorted by
    /// initial angle, mirrored duplicates included.
    pub segments: Vec<GeodesicPath>,
    /// Set when shooting failed and the value came from a grid oracle.
    pub oracle_only: bool,
}

/// A surface of revolution with its shooting configuration.
#[derive(Clone, Debug)]
pub struct Surface {
    profile: Arc<RadialProfile>,
    pub params: ShootParams,
}

/// Target description used internally by the distance sweep.
#[derive(Clone, Copy, Debug)]
struct Lift {
    /// Arrival longitude offset (a positive lift of the target angle).
    value: f64,
    /// The physical route runs towards decreasing theta.
    mirror: bool,
}

#[derive(Clone, Debug)]
struct Candidate {
    alpha: f64,
    t: f64,
    mirror: bool,
}

const EPS_VERTEX: f64 = 1e-9;
const ALPHA_MERIDIAN: f64 = 1e-9;
const ALPHA_EDGE: f64 = 1e-5;
/// Angular offsets below this are routed via meridian perturbation theory
/// rather than shooting; keep comfortably above the smallest sweep the
/// coarse fan can realize.
const MERIDIAN_SNAP: f64 = 2e-5;

impl Surface {
    pub fn new(profile: RadialProfile) -> Self {
        Surface {
            profile: Arc::new(profile),
            params: ShootParams::default(),
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn profile_arc(&self) -> Arc<RadialProfile> {
        Arc::clone(&self.profile)
    }

    /// Metric-weighted chart proximity: small iff the two points are close
    /// on the surface.  Not a distance, only a closeness detector.
    pub fn chordal(&self, a: &SurfacePoint, b: &SurfacePoint) -> f64 {
        let fm = 0.5 * (self.profile.f(a.r) + self.profile.f(b.r));
        let dth = reduce_angle(b.theta - a.theta);
        (b.r - a.r).hypot(fm * dth)
    }

    /// Simpson integral of 1/f^2 over a pole-free radial band; diverges (in a
    /// harmless direction: corrections shrink) as `lo` approaches a pole.
    fn meridian_inertia(&self, lo: f64, hi: f64) -> f64 {
        let n = 128;
        let h = (hi - lo) / n as f64;
        let g = |r: f64| {
            let f = self.profile.f(r).max(1e-12);
            1.0 / (f * f)
        };
        let mut acc = g(lo) + g(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(lo + h * i as f64);
        }
        (acc * h / 3.0).max(1e-300)
    }

    pub fn same_point(&self, a: &SurfacePoint, b: &SurfacePoint, tol: f64) -> bool {
        let hor = self.profile.horizon();
        let a_vertex = a.r < EPS_VERTEX || (self.profile.ell().is_some() && hor - a.r < EPS_VERTEX);
        let b_vertex = b.r < EPS_VERTEX || (self.profile.ell().is_some() && hor - b.r < EPS_VERTEX);
        if a_vertex || b_vertex {
            return (a.r - b.r).abs() <= tol;
        }
        self.chordal(a, b) <= tol
    }

    /// Half-surface membership of `x` relative to the meridian pair through
    /// `base` (`Plus` is the side of increasing angle).
    pub fn half_surface_membership(&self, base: &SurfacePoint, x: &SurfacePoint) -> Half {
        let hor = self.profile.horizon();
        if x.r < EPS_VERTEX || (self.profile.ell().is_some() && hor - x.r < EPS_VERTEX) {
            return Half::Boundary;
        }
        let d = reduce_angle(x.theta - base.theta);
        if d.abs() <= 1e-12 || (d.abs() - PI).abs() <= 1e-12 {
            Half::Boundary
        } else if d > 0.0 {
            Half::Plus
        } else {
            Half::Minus
        }
    }

    // ------------------------------------------------------------- shooting

    /// Shoot the geodesic with initial angle `alpha` in `[0, pi]` for the
    /// given arc length.  Meridians (`alpha` at the ends of the range) are
    /// produced analytically, including vertex pass-through.
    pub fn shoot(&self, from: SurfacePoint, alpha: f64, length: f64) -> Result<GeodesicPath> {
        self.shoot_impl(from, alpha, length, true)
    }

    /// Like [`Surface::shoot`], but a ray that runs into a vertex or out of
    /// the computed radial horizon is truncated there instead of failing:
    /// the returned path may be shorter than requested (check `length`).
    pub fn shoot_capped(&self, from: SurfacePoint, alpha: f64, length: f64) -> Result<GeodesicPath> {
        self.shoot_impl(from, alpha, length, false)
    }

    fn shoot_impl(
        &self,
        from: SurfacePoint,
        alpha: f64,
        length: f64,
        strict: bool,
    ) -> Result<GeodesicPath> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("shot length {length} must be positive")));
        }
        if !(-1e-12..=PI + 1e-12).contains(&alpha) {
            return Err(Error::invalid(format!(
                "initial angle {alpha} outside [0, pi]"
            )));
        }
        let alpha = alpha.clamp(0.0, PI);
        let hor = self.profile.horizon();
        if from.r < -1e-12 || from.r > hor + 1e-12 {
            return Err(Error::Domain {
                what: "start radius",
                value: from.r,
                lo: 0.0,
                hi: hor,
            });
        }

        if from.r < EPS_VERTEX {
            // from the pole every geodesic is an outgoing meridian
            return self.meridian_clamped(from, 1.0, length, strict);
        }
        if alpha <= ALPHA_MERIDIAN {
            return self.meridian_clamped(from, -1.0, length, strict);
        }
        if alpha >= PI - ALPHA_MERIDIAN {
            return self.meridian_clamped(from, 1.0, length, strict);
        }

        let (f0, _) = self.profile.f_fp(from.r);
        let nu = f0 * alpha.sin();
        let y0 = [from.r, from.theta, -alpha.cos(), alpha.sin() / f0];
        let profile = &*self.profile;
        let closed = profile.ell().is_some();
        let eps_pole = self.params.eps_pole;

        let solver = Dopri5 {
            rtol: self.params.rtol,
            atol: self.params.atol,
            h_max: 0.25 * hor.min(length),
            ..Default::default()
        };
        let sol = solver.solve(
            |_, y: &[f64; 4]| {
                let (f, fp) = profile.f_fp(y[0]);
                [
                    y[2],
                    y[3],
                    f * fp * y[3] * y[3],
                    -2.0 * (fp / f) * y[2] * y[3],
                ]
            },
            0.0,
            y0,
            length,
            |_, y| {
                let blocked = if y[0] <= eps_pole {
                    Some("geodesic reached a vertex with nonzero Clairaut constant")
                } else if closed && y[0] >= hor - eps_pole {
                    Some("geodesic reached the far vertex with nonzero Clairaut constant")
                } else if !closed && y[0] >= hor - 1e-9 {
                    Some("geodesic left the computed radial horizon")
                } else {
                    None
                };
                match blocked {
                    Some(msg) if strict => Control::Abort(msg),
                    Some(_) => Control::Stop,
                    None => Control::Continue,
                }
            },
        )?;

        Ok(GeodesicPath {
            start: from,
            initial_angle: alpha,
            clairaut: nu,
            length: sol.t_end,
            mirror: false,
            kind: PathKind::Shot(Box::new(sol)),
        })
    }

    /// The meridian branch of `shoot_capped`: clamp the requested length to
    /// what the domain supports before delegating.
    fn meridian_clamped(
        &self,
        from: SurfacePoint,
        dir: f64,
        length: f64,
        strict: bool,
    ) -> Result<GeodesicPath> {
        if strict {
            return self.meridian_path(from, dir, length);
        }
        let hor = self.profile.horizon();
        let cap = match self.profile.domain() {
            Domain::Open(_) => {
                if dir < 0.0 {
                    from.r + hor
                } else {
                    hor - from.r
                }
            }
            Domain::Closed(ell) => {
                if self.profile.has_cone_cap() {
                    if dir < 0.0 {
                        from.r + ell
                    } else {
                        ell - from.r
                    }
                } else {
                    f64::INFINITY
                }
            }
        };
        self.meridian_path(from, dir, length.min(cap.max(1e-9)))
    }

    /// Analytic meridian path; `dir = -1` heads for the pole first.
    pub fn meridian_path(&self, from: SurfacePoint, dir: f64, length: f64) -> Result<GeodesicPath> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::invalid(format!("meridian length {length} must be positive")));
        }
        let hor = self.profile.horizon();
        let u_end = from.r + dir * length;
        let ell = match self.profile.domain() {
            Domain::Open(_) => {
                if u_end.abs() > hor + 1e-9 {
                    return Err(Error::solver(format!(
                        "meridian leaves the computed horizon (|u| = {})",
                        u_end.abs()
                    )));
                }
                None
            }
            Domain::Closed(ell) => {
                // crossing the non-smooth far cap is not a geodesic
                // continuation (the pole itself is always smooth)
                if self.profile.has_cone_cap() && (u_end > ell + 1e-12 || u_end < -ell - 1e-12) {
                    return Err(Error::solver("meridian would cross a conical cap"));
                }
                Some(ell)
            }
        };
        Ok(GeodesicPath {
            start: from,
            initial_angle: if dir < 0.0 { 0.0 } else { PI },
            clairaut: 0.0,
            length,
            mirror: false,
            kind: PathKind::Meridian { dir, ell },
        })
    }

    // ------------------------------------------------------------- distance

    pub fn distance(&self, p: &SurfacePoint, q: &SurfacePoint) -> Result<DistanceResult> {
        self.distance_with_oracle(p, q, None)
    }

    /// Full multi-start distance.  When shooting cannot produce a single
    /// candidate and a grid oracle for `p` is supplied, its value is
    /// returned with `oracle_only` set.
    pub fn distance_with_oracle(
        &self,
        p: &SurfacePoint,
        q: &SurfacePoint,
        oracle: Option<&DistanceField>,
    ) -> Result<DistanceResult> {
        match self.distance_inner(p, q) {
            Ok(res) => Ok(res),
            Err(e) => {
                if let Some(field) = oracle {
                    let value = field.query(q.r, q.theta);
                    if value.is_finite() {
                        return Ok(DistanceResult {
                            distance: value,
                            segments: Vec::new(),
                            oracle_only: true,
                        });
                    }
                }
                Err(e)
            }
        }
    }

    fn distance_inner(&self, p: &SurfacePoint, q: &SurfacePoint) -> Result<DistanceResult> {
        if self.same_point(p, q, 1e-12) {
            return Ok(DistanceResult {
                distance: 0.0,
                segments: Vec::new(),
                oracle_only: false,
            });
        }
        let hor = self.profile.horizon();
        let closed = self.profile.ell().is_some();
        let smooth_cap = closed && !self.profile.has_cone_cap();

        // vertex endpoints: meridians are the only segments
        if p.r < EPS_VERTEX {
            let path = self.meridian_path(SurfacePoint::new(0.0, q.theta), 1.0, q.r)?;
            return Ok(DistanceResult { distance: q.r, segments: vec![path], oracle_only: false });
        }
        if closed && hor - p.r < EPS_VERTEX {
            let path = self.meridian_path(SurfacePoint::new(hor, q.theta), -1.0, hor - q.r)?;
            return Ok(DistanceResult {
                distance: hor - q.r,
                segments: vec![path],
                oracle_only: false,
            });
        }
        if q.r < EPS_VERTEX {
            let path = self.meridian_path(*p, -1.0, p.r)?;
            return Ok(DistanceResult { distance: p.r, segments: vec![path], oracle_only: false });
        }
        if closed && hor - q.r < EPS_VERTEX {
            let path = self.meridian_path(*p, 1.0, hor - p.r)?;
            return Ok(DistanceResult {
                distance: hor - p.r,
                segments: vec![path],
                oracle_only: false,
            });
        }

        let delta = reduce_angle(q.theta - p.theta);
        let da = delta.abs();
        let q_side_mirror = delta < 0.0; // final mirror fix-up

        // --- closed-form meridian candidates.  The fan below cannot sweep
        // angles much below ALPHA_EDGE * f, so targets hugging a meridian get
        // perturbative candidates instead: by Clairaut, a geodesic reaching
        // angular offset `da` across a radial gap carries nu = da / I with
        // I = integral of dr/f^2, costing |dr| + da^2/(2 I) in length.
        let mut mer_cands: Vec<Candidate> = Vec::new();
        if da <= MERIDIAN_SNAP {
            if (q.r - p.r).abs() > 1e-6 {
                let i_m = self.meridian_inertia(p.r.min(q.r), p.r.max(q.r));
                let nu = da / i_m;
                let sin_a = (nu / self.profile.f(p.r)).clamp(0.0, 1.0);
                let alpha = if q.r < p.r { sin_a.asin() } else { PI - sin_a.asin() };
                mer_cands.push(Candidate {
                    alpha,
                    t: (q.r - p.r).abs() + da * da / (2.0 * i_m),
                    mirror: false,
                });
            } else if da > self.params.arrival_tol {
                // radii nearly equal too: the pair is microscopically
                // separated and the locally flat chord is exact to O(d^3)
                let alpha = (self.profile.f(p.r) * da).atan2(q.r - p.r);
                mer_cands.push(Candidate { alpha, t: self.chordal(p, q), mirror: false });
            } else if (q.r - p.r).abs() > 1e-12 {
                let alpha = if q.r < p.r { 0.0 } else { PI };
                mer_cands.push(Candidate { alpha, t: (q.r - p.r).abs(), mirror: false });
            }
        }
        if (da - PI).abs() <= MERIDIAN_SNAP {
            mer_cands.push(Candidate { alpha: 0.0, t: p.r + q.r, mirror: false });
            if smooth_cap {
                mer_cands.push(Candidate {
                    alpha: PI,
                    t: 2.0 * hor - p.r - q.r,
                    mirror: false,
                });
            }
        }

        // horizon: a broken path through the pole always gives an upper
        // bound; the slack matters — near-tight bounds (targets close to the
        // opposite meridian) would otherwise cut off the far side of a
        // bracket before it reaches the section
        let mut horizon = p.r + q.r;
        if smooth_cap {
            horizon = horizon.min(2.0 * hor - p.r - q.r);
        }
        for c in &mer_cands {
            horizon = horizon.min(c.t);
        }
        let horizon = horizon + (0.25 * horizon).max(0.75);

        // --- admissible arrival lifts
        let mut lifts: Vec<Lift> = Vec::new();
        for k in 0..2 {
            let base = da + TAU * k as f64;
            if base > 1e-9 {
                lifts.push(Lift { value: base, mirror: false });
            }
            let rev = TAU - da + TAU * k as f64;
            if rev > 1e-9 && (rev - base).abs() > 1e-12 {
                lifts.push(Lift { value: rev, mirror: true });
            }
        }
        let antipodal_twin = (da - PI).abs() <= 1e-12;

        // --- coarse fan
        let n = self.params.coarse_shots.max(16);
        let mut alphas: Vec<f64> = Vec::with_capacity(n + 12);
        for &extra in &[ALPHA_EDGE, 1e-4, 1e-3, 3e-3] {
            alphas.push(extra);
            alphas.push(PI - extra);
        }
        for i in 0..=n {
            alphas.push(ALPHA_EDGE + (PI - 2.0 * ALPHA_EDGE) * i as f64 / n as f64);
        }
        alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        alphas.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let fan: Vec<(f64, Vec<Option<(f64, f64)>>)> = alphas
            .iter()
            .map(|&a| (a, self.sections(p, a, q.r, horizon, &lifts)))
            .collect();

        let mut candidates: Vec<Candidate> = Vec::new();
        for w in fan.windows(2) {
            for (j, lift) in lifts.iter().enumerate() {
                if w[0].1[j].is_none() && w[1].1[j].is_none() {
                    continue;
                }
                // a lost section counts as "far outside the target radius":
                // shots that stop short of the lift (horizon, sweep
                // asymptote) sit on the positive side of the residual
                let gl = w[0].1[j].map_or(f64::INFINITY, |(_, g)| g);
                let gr = w[1].1[j].map_or(f64::INFINITY, |(_, g)| g);
                if gl == 0.0 || gl.signum() != gr.signum() {
                    if let Some(c) =
                        self.refine_section(p, w[0].0, gl, w[1].0, lift, q.r, horizon)
                    {
                        candidates.push(c);
                    }
                }
            }
        }

        candidates.extend(mer_cands);

        if candidates.is_empty() {
            return Err(Error::solver(format!(
                "no geodesic bracket found for target (dr = {}, dtheta = {})",
                q.r - p.r,
                delta
            )));
        }

        // --- collect minimizers
        candidates.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
        let best = candidates[0].t;
        let keep: Vec<Candidate> = candidates
            .into_iter()
            .filter(|c| c.t <= best + self.params.merge_len)
            .collect();

        let mut final_cands: Vec<Candidate> = Vec::new();
        for c in keep {
            let dup = final_cands.iter().any(|d| {
                d.mirror == c.mirror && (d.alpha - c.alpha).abs() < self.params.merge_alpha
            });
            if !dup {
                let proper = c.alpha > ALPHA_MERIDIAN && c.alpha < PI - ALPHA_MERIDIAN;
                if antipodal_twin && proper {
                    // a target on the opposite meridian is also reached by
                    // the reflected twin (meridians are their own mirrors)
                    final_cands.push(Candidate { mirror: !c.mirror, ..c.clone() });
                }
                final_cands.push(c);
            }
        }
        final_cands.sort_by(|a, b| {
            a.alpha
                .partial_cmp(&b.alpha)
                .unwrap()
                .then(a.mirror.cmp(&b.mirror))
        });

        let mut segments = Vec::with_capacity(final_cands.len());
        for c in &final_cands {
            let mut path = if c.alpha <= ALPHA_MERIDIAN || c.alpha >= PI - ALPHA_MERIDIAN {
                let dir = if c.alpha <= ALPHA_MERIDIAN { -1.0 } else { 1.0 };
                self.meridian_path(*p, dir, c.t)?
            } else {
                self.shoot(*p, c.alpha, c.t)?
            };
            // orient towards the physical target side
            path.mirror = c.mirror != q_side_mirror;
            segments.push(path);
        }

        Ok(DistanceResult { distance: best, segments, oracle_only: false })
    }

    /// A cheap single-route distance for hot loops: sweeps a small window of
    /// initial angles around `hint` (or a reduced fan without one) and keeps
    /// the best arrival.  Falls back to the full sweep when the window sees
    /// nothing.  Returns `(distance, best initial angle)`.
    pub fn distance_fast(
        &self,
        p: &SurfacePoint,
        q: &SurfacePoint,
        hint: Option<f64>,
    ) -> Result<(f64, f64)> {
        if self.same_point(p, q, 1e-12) {
            return Ok((0.0, f64::NAN));
        }
        let vertexish = p.r < EPS_VERTEX
            || q.r < EPS_VERTEX
            || (self.profile.ell().is_some()
                && (self.profile.horizon() - p.r < EPS_VERTEX
                    || self.profile.horizon() - q.r < EPS_VERTEX));
        if vertexish {
            let res = self.distance(p, q)?;
            let alpha = res.segments.first().map(|s| s.initial_angle).unwrap_or(f64::NAN);
            return Ok((res.distance, alpha));
        }

        if let Some(h) = hint {
            if h.is_finite() {
                for window in [0.12, 0.5] {
                    let lo = (h - window).max(ALPHA_EDGE);
                    let hi = (h + window).min(PI - ALPHA_EDGE);
                    if hi <= lo {
                        continue;
                    }
                    if let Some((t, alpha)) = self.window_best(p, q, lo, hi, 17) {
                        return Ok((t, alpha));
                    }
                }
            }
        }
        let res = self.distance(p, q)?;
        let alpha = res.segments.first().map(|s| s.initial_angle).unwrap_or(f64::NAN);
        Ok((res.distance, alpha))
    }

    fn window_best(
        &self,
        p: &SurfacePoint,
        q: &SurfacePoint,
        lo: f64,
        hi: f64,
        n: usize,
    ) -> Option<(f64, f64)> {
        let delta = reduce_angle(q.theta - p.theta);
        let da = delta.abs();
        let mut horizon = p.r + q.r;
        if let Some(ell) = self.profile.ell() {
            if !self.profile.has_cone_cap() {
                horizon = horizon.min(2.0 * ell - p.r - q.r);
            }
        }
        let horizon = horizon + (0.25 * horizon).max(0.75);
        let mut lifts = Vec::new();
        if da > 1e-9 {
            lifts.push(Lift { value: da, mirror: false });
        }
        if (TAU - 2.0 * da).abs() > 1e-12 {
            lifts.push(Lift { value: TAU - da, mirror: true });
        }

        let fan: Vec<(f64, Vec<Option<(f64, f64)>>)> = (0..n)
            .map(|i| {
                let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (a, self.sections(p, a, q.r, horizon, &lifts))
            })
            .collect();
        let mut best: Option<(f64, f64)> = None;
        for w in fan.windows(2) {
            for (j, lift) in lifts.iter().enumerate() {
                if w[0].1[j].is_none() && w[1].1[j].is_none() {
                    continue;
                }
                let gl = w[0].1[j].map_or(f64::INFINITY, |(_, g)| g);
                let gr = w[1].1[j].map_or(f64::INFINITY, |(_, g)| g);
                if gl == 0.0 || gl.signum() != gr.signum() {
                    if let Some(c) =
                        self.refine_section(p, w[0].0, gl, w[1].0, lift, q.r, horizon)
                    {
                        if best.map_or(true, |(bt, _)| c.t < bt) {
                            best = Some((c.t, c.alpha));
                        }
                    }
                }
            }
        }
        // meridian routes still compete
        if da <= self.params.arrival_tol {
            let t = (q.r - p.r).abs();
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, if q.r < p.r { 0.0 } else { PI }));
            }
        }
        if (da - PI).abs() <= self.params.arrival_tol {
            let t = p.r + q.r;
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, 0.0));
            }
        }
        best
    }

    /// Section the shot `alpha` at every target lift: for each lift value
    /// `L`, the unique arc length with `theta = p.theta + L` (the longitude
    /// is strictly monotone along a non-meridian geodesic) and the radial
    /// residual there, as `(t, r(t) - r_target)`.  `None` where the shot
    /// never reaches the lift within the horizon (or could not be
    /// integrated, e.g. a vertex-grazing start).
    fn sections(
        &self,
        p: &SurfacePoint,
        alpha: f64,
        r_target: f64,
        horizon: f64,
        lifts: &[Lift],
    ) -> Vec<Option<(f64, f64)>> {
        // capped: a fan shot that exits the horizon early still contributes
        // the sections it reached before leaving
        let path = match self.shoot_capped(*p, alpha, horizon) {
            Ok(path) => path,
            Err(_) => return vec![None; lifts.len()],
        };
        let sol = match &path.kind {
            PathKind::Shot(sol) => sol,
            PathKind::Meridian { .. } => return vec![None; lifts.len()],
        };
        lifts
            .iter()
            .map(|lift| {
                section_at(sol, p.theta + lift.value).map(|(t, r)| (t, r - r_target))
            })
            .collect()
    }

    fn section_of(&self, p: &SurfacePoint, alpha: f64, target: f64, horizon: f64) -> Option<(f64, f64)> {
        let path = self.shoot_capped(*p, alpha, horizon).ok()?;
        let sol = match &path.kind {
            PathKind::Shot(sol) => sol,
            PathKind::Meridian { .. } => return None,
        };
        section_at(sol, target)
    }

    /// Bisect the initial angle between two fan nodes whose radial residual
    /// at the target longitude changes sign.
    #[allow(clippy::too_many_arguments)]
    fn refine_section(
        &self,
        p: &SurfacePoint,
        mut al: f64,
        mut gl: f64,
        mut ar: f64,
        lift: &Lift,
        r_target: f64,
        horizon: f64,
    ) -> Option<Candidate> {
        let target = p.theta + lift.value;
        for _ in 0..60 {
            if ar - al < 1e-13 {
                break;
            }
            let am = 0.5 * (al + ar);
            // the same convention as in the fan: a shot that loses the
            // section (vertex graze, lift not reached in the horizon) sits
            // on the positive side; if the bracket converges onto the
            // boundary of the reachable set instead of a root, the junk
            // gate below throws it away
            let gm = match self.section_of(p, am, target, horizon) {
                Some((_, rm)) => rm - r_target,
                None => f64::INFINITY,
            };
            if gm == 0.0 {
                al = am;
                ar = am;
                break;
            }
            if gm.signum() == gl.signum() {
                al = am;
                gl = gm;
            } else {
                ar = am;
            }
        }
        let alpha = 0.5 * (al + ar);
        let (t, r) = self.section_of(p, alpha, target, horizon)?;
        // junk gate: brackets produced by noise on a flat residual still
        // have to hit the target radius
        if (r - r_target).abs() > 1e-6 {
            return None;
        }
        Some(Candidate { alpha, t, mirror: lift.mirror })
    }

    // ------------------------------------------------------------- fields along paths

    /// First zero of the scalar field `J'' + K(r(t)) J = 0`, `J(0) = 0`,
    /// `J'(0) = 1` along the path: the first conjugate time, when it exists
    /// within the path length.
    pub fn conjugate_time(&self, path: &GeodesicPath) -> Result<Option<f64>> {
        let profile = &*self.profile;
        let solver = Dopri5 {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: path.length / 8.0,
            ..Default::default()
        };
        let sol = solver.solve(
            |t, y: &[f64; 2]| {
                let r = path.point_at(t).r;
                [y[1], -profile.curvature_fast(r) * y[0]]
            },
            0.0,
            [0.0, 1.0],
            path.length,
            |step, y| {
                if y[0] <= 0.0 && step.t_end() > 1e-9 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        )?;
        if sol.stopped_early || sol.y_end[0] <= 0.0 {
            let last = sol.steps.last().unwrap();
            // keep the left bracket end away from the trivial zero at t = 0
            let a = last.t0.max(1e-9);
            let tc = rootfind::brent_auto(|t| sol.eval_component(0, t), a, last.t_end(), 1e-11, 200)?;
            Ok(Some(tc))
        } else {
            Ok(None)
        }
    }

    /// Angle at the common start point of two geodesics, in `[0, pi]`.
    pub fn angle_between(&self, g1: &GeodesicPath, g2: &GeodesicPath) -> Result<f64> {
        if !self.same_point(&g1.start, &g2.start, 1e-9) {
            return Err(Error::invalid(
                "angle_between requires geodesics with a common start".to_string(),
            ));
        }
        let s1 = if g1.mirror { -1.0 } else { 1.0 };
        let s2 = if g2.mirror { -1.0 } else { 1.0 };
        let (a1, a2) = (g1.initial_angle, g2.initial_angle);
        let c = a1.cos() * a2.cos() + s1 * s2 * a1.sin() * a2.sin();
        Ok(c.clamp(-1.0, 1.0).acos())
    }
}

// ---------------------------------------------------------------- polar curves

/// A curve given as a strictly increasing angle grid with radii: the format
/// on which the partial order of curves is decided.
#[derive(Clone, Debug, Serialize)]
pub struct PolarCurve {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
}

/// Outcome of comparing two polar curves on their common angular range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum CurveOrder {
    /// First curve everywhere at or below the second.
    Le,
    Ge,
    Eq,
    Incomparable { theta: f64, r_a: f64, r_b: f64 },
}

impl PolarCurve {
    pub fn new(theta: Vec<f64>, r: Vec<f64>) -> Result<PolarCurve> {
        if theta.len() != r.len() || theta.len() < 2 {
            return Err(Error::invalid("polar curve needs >= 2 matched nodes"));
        }
        for w in theta.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(format!(
                    "polar curve angles must strictly increase ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(PolarCurve { theta, r })
    }

    /// Resample a non-meridian geodesic as a polar curve (`n` nodes).
    /// Mirrored paths are traversed in reverse so the angles increase.
    pub fn from_path(path: &GeodesicPath, n: usize) -> Result<PolarCurve> {
        if path.is_meridian() {
            return Err(Error::invalid(
                "meridian segments are not parameterized by the angle",
            ));
        }
        let n = n.max(2);
        let mut theta = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        for i in 0..n {
            let t = path.length * i as f64 / (n - 1) as f64;
            let pt = path.point_at(t);
            theta.push(pt.theta);
            r.push(pt.r);
        }
        if path.mirror {
            theta.reverse();
            r.reverse();
        }
        PolarCurve::new(theta, r)
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (self.theta[0], *self.theta.last().unwrap())
    }

    /// Linear interpolation inside the range, `None` outside.
    pub fn r_at(&self, theta: f64) -> Option<f64> {
        let (lo, hi) = self.theta_range();
        if theta < lo - 1e-12 || theta > hi + 1e-12 {
            return None;
        }
        let t = theta.clamp(lo, hi);
        let i = self
            .theta
            .partition_point(|&x| x <= t)
            .clamp(1, self.theta.len() - 1);
        let (t0, t1) = (self.theta[i - 1], self.theta[i]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        Some(self.r[i - 1] * (1.0 - w) + self.r[i] * w)
    }
}

/// Pointwise order of two polar curves over their common angular range,
/// decided on the union of both node sets with tolerance `tol`.
///
/// `Le` means the first curve stays radially at or below the second.
pub fn curve_order(a: &PolarCurve, b: &PolarCurve, tol: f64) -> Result<CurveOrder> {
    let (alo, ahi) = a.theta_range();
    let (blo, bhi) = b.theta_range();
    let lo = alo.max(blo);
    let hi = ahi.min(bhi);
    if hi - lo < 1e-12 {
        return Err(Error::invalid(format!(
            "curves have no angular overlap ([{alo}, {ahi}] vs [{blo}, {bhi}])"
        )));
    }
    let mut grid: Vec<f64> = a
        .theta
        .iter()
        .chain(b.theta.iter())
        .copied()
        .filter(|&t| t >= lo && t <= hi)
        .collect();
    grid.push(lo);
    grid.push(hi);
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup_by(|x, y| (*x - *y).abs() < 1e-14);

    let mut worst_pos: Option<(f64, f64, f64)> = None; // (diff, theta, ...)
    let mut worst_neg: Option<(f64, f64, f64)> = None;
    for &t in &grid {
        let (ra, rb) = match (a.r_at(t), b.r_at(t)) {
            (Some(x), Some(y)) => (x, y),
            _ => continue,
        };
        let d = ra - rb;
        if d > tol && worst_pos.map_or(true, |(w, _, _)| d > w) {
            worst_pos = Some((d, t, ra));
        }
        if d < -tol && worst_neg.map_or(true, |(w, _, _)| d < w) {
            worst_neg = Some((d, t, ra));
        }
    }
    Ok(match (worst_pos, worst_neg) {
        (None, None) => CurveOrder::Eq,
        (Some(_), None) => CurveOrder::Ge,
        (None, Some(_)) => CurveOrder::Le,
        (Some(p), Some(n)) => {
            // witness: the weaker of the two violations marks where the
            // curves genuinely cross
            let (_, t, ra) = if p.0.abs() < n.0.abs() { p } else { n };
            CurveOrder::Incomparable {
                theta: t,
                r_a: ra,
                r_b: b.r_at(t).unwrap_or(f64::NAN),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::RadialProfile;
    use proptest::prelude::*;

    fn flat() -> Surface {
        Surface::new(RadialProfile::flat(30.0))
    }

    fn sphere() -> Surface {
        Surface::new(RadialProfile::sphere(1.0))
    }

    fn flat_dist(r1: f64, r2: f64, dth: f64) -> f64 {
        (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * dth.cos()).sqrt()
    }

    fn sphere_dist(r1: f64, r2: f64, dth: f64) -> f64 {
        (r1.cos() * r2.cos() + r1.sin() * r2.sin() * dth.cos())
            .clamp(-1.0, 1.0)
            .acos()
    }

    #[test]
    fn flat_shot_is_a_straight_line() {
        let s = flat();
        // from (1, 0) perpendicular to the radius, 2 units: lands at
        // Cartesian (1, 2)
        let path = s.shoot(SurfacePoint::new(1.0, 0.0), PI / 2.0, 2.0).unwrap();
        let end = path.end();
        assert!((end.r - 5.0f64.sqrt()).abs() < 1e-9, "r = {}", end.r);
        assert!((end.theta - 2.0f64.atan2(1.0)).abs() < 1e-9, "theta = {}", end.theta);
        let (speed, clair) = path.drift(s.profile(), 200);
        assert!(speed < 1e-10 && clair < 1e-10);
    }

    #[test]
    fn flat_distances_match_the_law_of_cosines() {
        let s = flat();
        let cases = [
            (1.0, 2.0, PI / 3.0),
            (1.0, 1.0, 1.0),
            (0.3, 2.5, 2.0),
            (2.0, 2.0, 3.0),
            (0.7, 0.2, 0.4),
            (1.5, 2.5, 2.9),
        ];
        for &(r1, r2, dth) in &cases {
            let p = SurfacePoint::new(r1, 0.4);
            let q = SurfacePoint::new(r2, 0.4 + dth);
            let got = s.distance(&p, &q).unwrap();
            let want = flat_dist(r1, r2, dth);
            assert!(
                (got.distance - want).abs() < 1e-8,
                "flat d({r1},{r2},{dth}): got {} want {want}",
                got.distance
            );
            assert_eq!(got.segments.len(), 1, "flat minimizers are unique");
            // the segment must actually end at q
            let end = got.segments[0].end();
            assert!(s.same_point(&end, &q, 1e-7), "end {end:?} vs {q:?}");
        }
        // the pinned spot value
        let d = s
            .distance(&SurfacePoint::new(1.0, 0.0), &SurfacePoint::new(2.0, PI / 3.0))
            .unwrap();
        assert!((d.distance - 3.0f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn mirrored_targets_work() {
        let s = flat();
        let p = SurfacePoint::new(1.0, 0.0);
        let q = SurfacePoint::new(2.0, -PI / 3.0);
        let got = s.distance(&p, &q).unwrap();
        assert!((got.distance - 3.0f64.sqrt()).abs() < 1e-9);
        let end = got.segments[0].end();
        assert!(s.same_point(&end, &q, 1e-7), "end {end:?}");
        assert!(got.segments[0].mirror);
    }

    #[test]
    fn sphere_distances_match_the_law_of_cosines() {
        let s = sphere();
        let cases = [
            (1.0, 2.0, 1.0),
            (0.5, 0.5, 3.0),
            (PI / 2.0, PI / 2.0, 1.5),
            (0.8, 2.6, 0.3),
            (1.2, 1.9, 2.6),
        ];
        for &(r1, r2, dth) in &cases {
            let p = SurfacePoint::new(r1, -0.3);
            let q = SurfacePoint::new(r2, -0.3 + dth);
            let got = s.distance(&p, &q).unwrap().distance;
            let want = sphere_dist(r1, r2, dth);
            assert!(
                (got - want).abs() < 1e-8,
                "sphere d({r1},{r2},{dth}): got {got} want {want}"
            );
        }
    }

    #[test]
    fn sphere_equator_closes_up() {
        let s = sphere();
        let path = s.shoot(SurfacePoint::new(PI / 2.0, 0.0), PI / 2.0, TAU).unwrap();
        let end = path.end();
        assert!((end.r - PI / 2.0).abs() < 1e-9);
        assert!((end.theta - TAU).abs() < 1e-8);
        let (speed, clair) = path.drift(s.profile(), 400);
        assert!(speed < 1e-9 && clair < 1e-9, "speed {speed} clairaut {clair}");
    }

    #[test]
    fn sphere_antipodal_pair_reports_a_fan() {
        let s = sphere();
        let p = SurfacePoint::new(1.0, 0.0);
        let q = SurfacePoint::new(PI - 1.0, PI);
        let got = s.distance(&p, &q).unwrap();
        assert!((got.distance - PI).abs() < 1e-9);
        assert!(
            got.segments.len() >= 8,
            "antipodal multiplicity should be a fan, got {}",
            got.segments.len()
        );
        for seg in &got.segments {
            assert!((seg.length - PI).abs() < 1e-7);
        }
    }

    #[test]
    fn vertex_targets_use_meridians() {
        let s = sphere();
        let p = SurfacePoint::new(1.0, 0.7);
        let pole = SurfacePoint::new(0.0, 0.0);
        let far = SurfacePoint::new(PI, 0.0);
        assert!((s.distance(&p, &pole).unwrap().distance - 1.0).abs() < 1e-12);
        assert!((s.distance(&p, &far).unwrap().distance - (PI - 1.0)).abs() < 1e-12);
        assert!((s.distance(&pole, &p).unwrap().distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_and_through_pole_targets() {
        let s = flat();
        let d = s
            .distance(&SurfacePoint::new(0.5, 1.2), &SurfacePoint::new(2.0, 1.2))
            .unwrap();
        assert!((d.distance - 1.5).abs() < 1e-12);
        assert!(d.segments[0].is_meridian());
        let d = s
            .distance(&SurfacePoint::new(1.0, 0.0), &SurfacePoint::new(2.0, PI))
            .unwrap();
        assert!((d.distance - 3.0).abs() < 1e-12);
    }

    #[test]
    fn meridian_paths_flip_theta_at_the_pole() {
        let s = flat();
        let path = s.meridian_path(SurfacePoint::new(1.0, 0.5), -1.0, 3.0).unwrap();
        let mid = path.point_at(0.25);
        assert!((mid.r - 0.75).abs() < 1e-12 && (mid.theta - 0.5).abs() < 1e-12);
        let end = path.end();
        assert!((end.r - 2.0).abs() < 1e-12);
        assert!((reduce_angle(end.theta - (0.5 + PI))).abs() < 1e-12);
        let (dr, _) = path.velocity_at(3.0);
        assert!((dr - 1.0).abs() < 1e-12, "moving away after the pole");
    }

    #[test]
    fn meridian_paths_reflect_at_the_far_vertex() {
        let s = sphere();
        let path = s.meridian_path(SurfacePoint::new(1.0, 0.0), 1.0, PI).unwrap();
        let end = path.end();
        assert!((end.r - (PI - 1.0)).abs() < 1e-12);
        assert!((reduce_angle(end.theta - PI)).abs() < 1e-12);
    }

    #[test]
    fn conjugate_time_on_the_sphere_is_pi() {
        let s = sphere();
        let path = s.shoot(SurfacePoint::new(PI / 2.0, 0.0), 1.2, 3.5).unwrap();
        let tc = s.conjugate_time(&path).unwrap().unwrap();
        assert!((tc - PI).abs() < 1e-7, "conjugate at {tc}");
        let s = flat();
        let path = s.shoot(SurfacePoint::new(1.0, 0.0), 1.2, 5.0).unwrap();
        assert!(s.conjugate_time(&path).unwrap().is_none());
    }

    #[test]
    fn angles_between_shots() {
        let s = sphere();
        let p = SurfacePoint::new(PI / 2.0, 0.0);
        let g1 = s.shoot(p, 0.7, 1.0).unwrap();
        let g2 = s.shoot(p, 1.9, 1.0).unwrap();
        assert!((s.angle_between(&g1, &g2).unwrap() - 1.2).abs() < 1e-12);
        // mirrored copy opens the angle to the sum
        let mut g3 = s.shoot(p, 0.7, 1.0).unwrap();
        g3.mirror = true;
        let want = (0.7f64.cos() * 1.9f64.cos() - 0.7f64.sin() * 1.9f64.sin())
            .clamp(-1.0, 1.0)
            .acos();
        assert!((s.angle_between(&g3, &g2).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn membership_relative_to_a_base_meridian() {
        let s = sphere();
        let base = SurfacePoint::new(1.0, 0.3);
        assert_eq!(
            s.half_surface_membership(&base, &SurfacePoint::new(1.0, 0.4)),
            Half::Plus
        );
        assert_eq!(
            s.half_surface_membership(&base, &SurfacePoint::new(2.0, 0.3 - 0.4)),
            Half::Minus
        );
        assert_eq!(
            s.half_surface_membership(&base, &SurfacePoint::new(2.0, 0.3 + PI)),
            Half::Boundary
        );
        assert_eq!(
            s.half_surface_membership(&base, &SurfacePoint::new(0.0, 1.7)),
            Half::Boundary
        );
    }

    #[test]
    fn polar_curve_order_of_nested_shots() {
        let s = sphere();
        let p = SurfacePoint::new(PI / 2.0, 0.0);
        let lower = s.shoot(p, 0.9, 1.2).unwrap();
        let upper = s.shoot(p, 1.3, 1.2).unwrap();
        let a = PolarCurve::from_path(&lower, 200).unwrap();
        let b = PolarCurve::from_path(&upper, 200).unwrap();
        match curve_order(&a, &b, 1e-9).unwrap() {
            CurveOrder::Le => {}
            other => panic!("expected Le, got {other:?}"),
        }
    }

    #[test]
    fn polar_curve_order_detects_crossings() {
        let n = 50;
        let theta: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let a = PolarCurve::new(theta.clone(), vec![1.0; n]).unwrap();
        let r: Vec<f64> = theta.iter().map(|t| 0.9 + 0.2 * t).collect();
        let b = PolarCurve::new(theta, r).unwrap();
        match curve_order(&a, &b, 1e-6).unwrap() {
            CurveOrder::Incomparable { theta, .. } => {
                assert!((0.0..=1.0).contains(&theta));
            }
            other => panic!("expected Incomparable, got {other:?}"),
        }
    }

    #[test]
    fn triangle_inequality_spot_checks() {
        let s = sphere();
        let pts = [
            SurfacePoint::new(0.9, 0.1),
            SurfacePoint::new(2.1, 1.7),
            SurfacePoint::new(1.4, -2.2),
            SurfacePoint::new(0.4, 2.9),
        ];
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                for k in 0..pts.len() {
                    if k == i || k == j {
                        continue;
                    }
                    let dij = s.distance(&pts[i], &pts[j]).unwrap().distance;
                    let dik = s.distance(&pts[i], &pts[k]).unwrap().distance;
                    let dkj = s.distance(&pts[k], &pts[j]).unwrap().distance;
                    assert!(dij <= dik + dkj + 1e-9);
                }
            }
        }
    }

    #[test]
    fn fast_distance_agrees_with_the_full_router() {
        let s = sphere();
        let p = SurfacePoint::new(1.1, 0.2);
        let q = SurfacePoint::new(1.9, 1.4);
        let full = s.distance(&p, &q).unwrap();
        let alpha = full.segments[0].initial_angle;
        let (fast, _) = s.distance_fast(&p, &q, Some(alpha + 0.03)).unwrap();
        assert!((fast - full.distance).abs() < 1e-9);
        let (cold, _) = s.distance_fast(&p, &q, None).unwrap();
        assert!((cold - full.distance).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn shots_conserve_speed_and_clairaut(
            r0 in 0.3f64..2.8,
            alpha in 0.05f64..3.0,
            len in 0.2f64..5.0,
        ) {
            let s = sphere();
            if let Ok(path) = s.shoot(SurfacePoint::new(r0, 0.0), alpha, len) {
                let (speed, clair) = path.drift(s.profile(), 100);
                prop_assert!(speed < 1e-8 * len.max(1.0));
                prop_assert!(clair < 1e-8 * len.max(1.0));
            }
        }

        #[test]
        fn distance_is_symmetric(
            r1 in 0.4f64..2.7,
            r2 in 0.4f64..2.7,
            dth in 0.1f64..3.0,
        ) {
            let s = sphere();
            let p = SurfacePoint::new(r1, 0.0);
            let q = SurfacePoint::new(r2, dth);
            let dpq = s.distance(&p, &q).unwrap().distance;
            let dqp = s.distance(&q, &p).unwrap().distance;
            prop_assert!((dpq - dqp).abs() < 1e-9);
            let want = sphere_dist(r1, r2, dth);
            prop_assert!((dpq - want).abs() < 1e-8);
        }
    }
}

