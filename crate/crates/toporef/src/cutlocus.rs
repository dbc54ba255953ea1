//! Cut times along geodesic rays, cut-locus tracing, and the extremal
//! (upper/lower) minimizing segments into a multi-geodesic target.
//!
//! The cut time along a unit-speed ray `t -> gamma(t)` is found from the
//! gap `g(t) = t - d(p, gamma(t))`, which is zero exactly while the ray is
//! minimizing and non-decreasing afterwards (the distance is 1-Lipschitz
//! along the ray).  We bisect for the first `t` where the gap exceeds a
//! small threshold, extrapolate the branch slope back to the actual zero,
//! and cap the result with the first conjugate time from the Jacobi field.
//!
//! Extremal segments: where several minimizers join `p` to `q`, the two
//! geometrically extreme ones are obtained as limits of the (unique)
//! minimizers to nearby points on the generalized ellipse
//! `{ r(x) + d(p, x) = r(q) + d(p, q) }` as they slide into `q` from either
//! side.  An independent route — ranking the minimizers by their radial
//! position just before arrival — crosses-checks the limit construction.

use rayon::prelude::*;

use crate::ellipse::{radius_on_ray, EllipseConfig};
use crate::error::{Error, Result};
use crate::surface::{reduce_angle, GeodesicPath, PolarCurve, Surface, SurfacePoint};

const PI: f64 = std::f64::consts::PI;

/// Tunables for the cut search.
#[derive(Clone, Copy, Debug)]
pub struct CutConfig {
    /// Rays traced by [`cut_locus`] (initial angles uniform over `[0, pi]`).
    pub rays: usize,
    /// Search length along each ray.  `None` picks `1.02 * ell` on a closed
    /// surface (no distance exceeds the pole gap `ell`) and half the radial
    /// horizon on an open one.  Rays are truncated where they leave the
    /// chart, so a generous value is safe but slow.
    pub horizon: Option<f64>,
    /// Gap threshold, relative to the per-ray search length.
    pub eps_rel: f64,
    /// Bisection tolerance on the cut time, relative to the search length.
    pub t_tol_rel: f64,
}

impl Default for CutConfig {
    /// The gap threshold must sit well below the gap actually reached at
    /// the end of the search: branch cuts between nearly-parallel escaping
    /// geodesics (slowly winding profiles) open the gap at only a few
    /// thousandths per unit length.
    fn default() -> Self {
        CutConfig { rays: 33, horizon: None, eps_rel: 1e-3, t_tol_rel: 1e-4 }
    }
}

/// A detected cut point along one ray.
#[derive(Clone, Debug)]
pub struct RayCut {
    /// Initial angle of the ray at `p`.
    pub alpha: f64,
    pub t_cut: f64,
    pub point: SurfacePoint,
    /// The traced ray (out to its effective search length).
    pub path: GeodesicPath,
    /// Number of minimizing segments the distance router reports at the cut
    /// point (2 or more for a branch cut; 1 can occur at conjugate caps).
    pub multiplicity: usize,
    /// First conjugate time along the ray, when one exists in range.
    pub conjugate: Option<f64>,
    /// The reported `t_cut` is the conjugate time (the gap never opened
    /// first).
    pub conjugate_capped: bool,
    /// `|d(p, point) - t_cut|`: how consistently the router sees the cut.
    pub distance_residual: f64,
}

fn default_horizon(surface: &Surface) -> f64 {
    match surface.profile().ell() {
        Some(ell) => 1.02 * ell,
        None => 0.5 * surface.profile().horizon(),
    }
}

/// Cut time along the ray from `p` with initial angle `alpha` (`0` heads
/// for the pole).  `Ok(None)` means the ray minimizes over the whole search
/// length.
pub fn cut_time(
    surface: &Surface,
    p: &SurfacePoint,
    alpha: f64,
    cfg: &CutConfig,
) -> Result<Option<RayCut>> {
    let horizon = cfg.horizon.unwrap_or_else(|| default_horizon(surface));
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::invalid(format!("cut search length {horizon} must be positive")));
    }
    let path = surface.shoot_capped(*p, alpha, horizon)?;
    let len = path.length;
    let eps = cfg.eps_rel * len;
    let t_tol = (cfg.t_tol_rel * len).max(1e-9);

    let gap = |t: f64| -> Result<f64> {
        let x = path.point_at(t);
        Ok(t - surface.distance(p, &x)?.distance)
    };

    let conjugate = surface.conjugate_time(&path)?;

    let g_end = gap(len)?;
    let (t_cut, capped) = if g_end <= eps {
        match conjugate {
            // the gap never opened but the Jacobi field vanished: a
            // conjugate cut the gap threshold is too blunt to see
            Some(tc) => (tc, true),
            None => return Ok(None),
        }
    } else {
        // monotone bisection for the first gap above the threshold
        let (mut lo, mut hi) = (0.0f64, len);
        let mut g_hi = g_end;
        while hi - lo > t_tol {
            let mid = 0.5 * (lo + hi);
            let gm = gap(mid)?;
            if gm > eps {
                hi = mid;
                g_hi = gm;
            } else {
                lo = mid;
            }
        }
        // extrapolate the branch slope back to gap zero
        let t2 = (hi + (0.04 * len).max(8.0 * t_tol)).min(len);
        let slope = if t2 > hi + t_tol {
            (gap(t2)? - g_hi) / (t2 - hi)
        } else {
            0.0
        };
        let mut t_cut = if slope > 1e-3 { hi - g_hi / slope } else { hi };
        t_cut = t_cut.clamp(0.0, hi);
        match conjugate {
            Some(tc) if tc < t_cut => (tc, true),
            _ => (t_cut, false),
        }
    };

    let point = path.point_at(t_cut);
    // count minimizers with a merge window matching the detection accuracy:
    // the router's own window is far tighter than the cut location error
    let mut counting = surface.clone();
    counting.params.merge_len = surface.params.merge_len.max(2.0 * eps);
    let at_cut = counting.distance(p, &point)?;
    // the ray itself minimizes up to the cut by construction, but the
    // enumeration can miss it: at a conjugate point the arrival residual
    // has a double root in the launch angle and never changes sign
    let ray_beta = signed_initial_angle(&path);
    let represented = at_cut
        .segments
        .iter()
        .any(|s| (signed_initial_angle(s) - ray_beta).abs() < 5e-3);
    let multiplicity = at_cut.segments.len() + usize::from(!represented);
    Ok(Some(RayCut {
        alpha,
        t_cut,
        point,
        path,
        multiplicity,
        conjugate,
        conjugate_capped: capped,
        distance_residual: (at_cut.distance - t_cut).abs(),
    }))
}

/// Trace the cut locus of `p` over a fan of rays.  Only rays that actually
/// cut within the search length contribute; by the mirror symmetry of the
/// surface the fan over `[0, pi]` determines the whole locus.
pub fn cut_locus(surface: &Surface, p: &SurfacePoint, cfg: &CutConfig) -> Result<Vec<RayCut>> {
    let n = cfg.rays.max(3);
    let cuts: Result<Vec<Option<RayCut>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let alpha = PI * i as f64 / (n - 1) as f64;
            cut_time(surface, p, alpha, cfg)
        })
        .collect();
    Ok(cuts?.into_iter().flatten().collect())
}

/// The physical initial direction of a segment as a signed angle in
/// `(-pi, pi]`: positive on the side of increasing longitude, negative on
/// the mirrored side, `0` exactly for the pole-directed meridian.
pub fn signed_initial_angle(path: &GeodesicPath) -> f64 {
    if path.mirror {
        -path.initial_angle
    } else {
        path.initial_angle
    }
}

/// The upper and lower extremal minimizing segments from `p` to `q`.
#[derive(Clone, Debug)]
pub struct ExtremalPair {
    pub upper: GeodesicPath,
    pub lower: GeodesicPath,
    /// Signed initial angles (see [`signed_initial_angle`]) of the two
    /// segments.
    pub alpha_upper: f64,
    pub alpha_lower: f64,
    /// `q` sits on the meridian opposite `p`: the lower segment is the
    /// mirror image of the upper one rather than an independent limit.
    pub mirror_pair: bool,
    /// Total number of minimizing segments found.
    pub multiplicity: usize,
}

const BOUNDARY_TOL: f64 = 1e-9;

/// Compute the extremal pair by the ellipse-perturbation limits, falling
/// back to arrival ranking when the focal ball through `q` degenerates
/// (e.g. `q` realizes the largest focal sum, as the antipode on a round
/// sphere does).
pub fn extremal_segments(surface: &Surface, p: &SurfacePoint, q: &SurfacePoint) -> Result<ExtremalPair> {
    let res = surface.distance(p, q)?;
    let segs = res.segments;
    if segs.is_empty() {
        return Err(Error::solver("no segments between the endpoints"));
    }
    let multiplicity = segs.len();
    if multiplicity == 1 {
        let only = segs.into_iter().next().unwrap();
        let beta = signed_initial_angle(&only);
        return Ok(ExtremalPair {
            upper: only.clone(),
            lower: only,
            alpha_upper: beta,
            alpha_lower: beta,
            mirror_pair: false,
            multiplicity,
        });
    }

    let ds = reduce_angle(q.theta - p.theta);
    let boundary = (ds.abs() - PI).abs() <= BOUNDARY_TOL;
    let sgn = if ds >= 0.0 { 1.0 } else { -1.0 };
    let a = q.r + res.distance;

    let betas: Vec<f64> = segs.iter().map(signed_initial_angle).collect();
    let nearest = |target: f64| -> usize {
        let mut best = 0;
        for (i, b) in betas.iter().enumerate() {
            if (b - target).abs() < (betas[best] - target).abs() {
                best = i;
            }
        }
        best
    };

    // primary route: slide along the ellipse into q
    let limit = |side: f64| -> Result<f64> {
        let mut hint: Option<f64> = None;
        let mut prev: Option<f64> = None;
        let mut last = (0.0, 0.0); // (beta(2 delta), beta(delta))
        for (k, delta) in [0.08, 0.04, 0.02, 0.01].into_iter().enumerate() {
            let phi = q.theta + sgn * side * delta;
            let node = radius_on_ray(surface, p, a, phi, hint, &EllipseConfig::default())?;
            let at = surface.distance(p, &SurfacePoint::new(node.r, phi))?;
            // off the cut the minimizer is unique; if the router still
            // reports near-ties, stay on the branch we have been following
            let b = match prev {
                None => signed_initial_angle(&at.segments[0]),
                Some(pb) => at
                    .segments
                    .iter()
                    .map(signed_initial_angle)
                    .min_by(|x, y| {
                        (x - pb).abs().partial_cmp(&(y - pb).abs()).unwrap()
                    })
                    .unwrap(),
            };
            if node.alpha.is_finite() {
                hint = Some(node.alpha);
            }
            prev = Some(b);
            if k >= 2 {
                last = (last.1, b);
            } else {
                last = (b, b);
            }
        }
        // Richardson step: the leading error of the limit is linear in the
        // offset, and the offsets halve
        Ok(2.0 * last.1 - last.0)
    };

    let perturbed = if boundary {
        limit(-1.0).map(|bu| (bu, -bu))
    } else {
        limit(-1.0).and_then(|bu| limit(1.0).map(|bl| (bu, bl)))
    };

    let (beta_u, beta_l) = match perturbed {
        Ok(pair) => pair,
        Err(_) => {
            // degenerate focal ball: rank arrivals directly
            let (iu, il) = arrival_extremes(&segs, q, 1e-3)?;
            (betas[iu], betas[il])
        }
    };

    let iu = nearest(beta_u);
    let il = if boundary {
        nearest(-betas[iu])
    } else {
        nearest(beta_l)
    };

    Ok(ExtremalPair {
        upper: segs[iu].clone(),
        lower: segs[il].clone(),
        alpha_upper: betas[iu],
        alpha_lower: betas[il],
        mirror_pair: boundary,
        multiplicity,
    })
}

/// Independent ranking of minimizing segments by the radius they hold just
/// before arriving at `q` (probing the polar curves at a small angular
/// offset on the near side).  Returns indices of the (upper, lower)
/// extremes among the probe-comparable segments; meridians and segments
/// sweeping the far side carry no probe value and are skipped.
pub fn arrival_extremes(
    segments: &[GeodesicPath],
    q: &SurfacePoint,
    probe_delta: f64,
) -> Result<(usize, usize)> {
    if segments.is_empty() {
        return Err(Error::invalid("no segments to rank"));
    }
    let p = segments[0].start;
    let ds = reduce_angle(q.theta - p.theta);
    let sgn = if ds >= 0.0 { 1.0 } else { -1.0 };
    let probe = q.theta - sgn * probe_delta;

    let mut ranked: Vec<(usize, f64)> = Vec::new();
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_meridian() {
            continue;
        }
        let curve = PolarCurve::from_path(seg, 400)?;
        if let Some(r) = curve.r_at(probe) {
            ranked.push((i, r));
        }
    }
    let (mut iu, mut il) = match ranked.first() {
        Some(&(i, _)) => (i, i),
        None => return Err(Error::solver("no probe-comparable segments")),
    };
    let (mut ru, mut rl) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, r) in ranked {
        if r > ru {
            ru = r;
            iu = i;
        }
        if r < rl {
            rl = r;
            il = i;
        }
    }
    Ok((iu, il))
}
