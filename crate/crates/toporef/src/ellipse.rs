//! Generalized ellipses on a surface of revolution.
//!
//! The fixed focus is the pole (so its distance contribution to a chart
//! point is just the radius) and the moving focus is an arbitrary point
//! `p`.  The ellipse with focal sum `a` is the level set
//!
//! ```text
//! E(a) = { x :  r(x) + d(p, x) = a }
//! ```
//!
//! Along each meridian ray the focal sum is non-decreasing in the radius
//! (the distance to `p` is 1-Lipschitz in `r` while the radial term grows
//! with slope one), so the ellipse meets every ray in exactly one point and
//! can be computed by bracketing on `r`.  The curve is symmetric across the
//! meridian pair through `p`; only the half with angles in
//! `[theta_p, theta_p + pi]` is stored.  Its radius is maximal towards `p`
//! (`(a + c) / 2` with `c = r(p)`, reached on the ray through `p`) and
//! minimal on the opposite meridian (`(a - c) / 2`, through the pole).

use std::cell::Cell;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rootfind;
use crate::surface::{reduce_angle, Surface, SurfacePoint};

const PI: f64 = std::f64::consts::PI;

/// Tunables for ellipse construction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipseConfig {
    /// Tolerance on the focal-sum residual at each node.
    pub radial_tol: f64,
    /// Nodes over the half-range `[theta_p, theta_p + pi]`.
    pub nodes: usize,
    /// Re-verify every node against the full multi-start router (the
    /// construction itself uses the windowed fast path).
    pub verify_full: bool,
}

impl Default for EllipseConfig {
    fn default() -> Self {
        EllipseConfig { radial_tol: 1e-8, nodes: 193, verify_full: true }
    }
}

/// Focal sum `r(x) + d(p, x)` at a chart point.
pub fn focal_sum(surface: &Surface, p: &SurfacePoint, x: &SurfacePoint) -> Result<f64> {
    Ok(x.r + surface.distance(p, x)?.distance)
}

/// One solved node of the ellipse.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllipseNode {
    pub phi: f64,
    pub r: f64,
    /// Initial angle at `p` of the minimizing segment to the node (NaN for
    /// the two meridian endpoints, where the segment is radial).
    pub alpha: f64,
}

/// Half of a generalized ellipse (the other half is its mirror image).
#[derive(Clone, Debug, Serialize)]
pub struct GeneralizedEllipse {
    pub p: SurfacePoint,
    pub a: f64,
    pub nodes: Vec<EllipseNode>,
}

impl GeneralizedEllipse {
    /// Interpolated radius at an arbitrary angle, using the mirror symmetry
    /// across the meridian through `p`.
    pub fn radius_at(&self, phi: f64) -> f64 {
        let rel = reduce_angle(phi - self.p.theta).abs(); // fold into [0, pi]
        let i = self
            .nodes
            .partition_point(|n| n.phi - self.p.theta <= rel)
            .clamp(1, self.nodes.len() - 1);
        let (n0, n1) = (&self.nodes[i - 1], &self.nodes[i]);
        let (t0, t1) = (n0.phi - self.p.theta, n1.phi - self.p.theta);
        let w = if t1 > t0 { (rel - t0) / (t1 - t0) } else { 0.0 };
        n0.r * (1.0 - w) + n1.r * w
    }

    pub fn max_radius(&self) -> f64 {
        self.nodes.iter().map(|n| n.r).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.nodes.iter().map(|n| n.r).fold(f64::INFINITY, f64::min)
    }
}

/// Validate that the focal sum `a` describes a nonempty bounded ellipse
/// around distinct foci.
fn validate_focal_sum(surface: &Surface, p: &SurfacePoint, a: f64) -> Result<()> {
    let c = p.r;
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid(format!("focal sum {a} must be positive")));
    }
    if a <= c + 1e-12 {
        return Err(Error::invalid(format!(
            "focal sum {a} does not exceed the focal distance {c}"
        )));
    }
    if let Some(ell) = surface.profile().ell() {
        // the slack must dominate the distance-router noise: at the limit
        // the level set collapses to the far vertex and root finding on it
        // degenerates
        if a >= 2.0 * ell - c - 1e-8 {
            return Err(Error::invalid(format!(
                "focal sum {a} reaches around the closed surface (limit {})",
                2.0 * ell - c
            )));
        }
    }
    if a > 2.0 * surface.profile().horizon() {
        return Err(Error::Domain {
            what: "focal sum",
            value: a,
            lo: 0.0,
            hi: 2.0 * surface.profile().horizon(),
        });
    }
    Ok(())
}

/// The unique radius on the ray `theta = phi` with focal sum `a`.
/// Returns the node including the initial angle of the segment from `p`
/// (for warm-starting neighbors).
pub fn radius_on_ray(
    surface: &Surface,
    p: &SurfacePoint,
    a: f64,
    phi: f64,
    hint: Option<f64>,
    cfg: &EllipseConfig,
) -> Result<EllipseNode> {
    validate_focal_sum(surface, p, a)?;
    let c = p.r;
    let rel = reduce_angle(phi - p.theta).abs();

    // meridian endpoints in closed form
    if rel < 1e-12 {
        return Ok(EllipseNode { phi, r: 0.5 * (a + c), alpha: f64::NAN });
    }
    if (rel - PI).abs() < 1e-12 {
        return Ok(EllipseNode { phi, r: 0.5 * (a - c), alpha: f64::NAN });
    }

    let hi = a.min(surface.profile().horizon());
    let alpha_hint = Cell::new(hint);
    let focal = |r: f64| -> Result<f64> {
        if r <= 1e-12 {
            return Ok(c - a); // the pole: d(p, pole) = r(p)
        }
        let x = SurfacePoint::new(r, phi);
        let (d, alpha) = surface.distance_fast(p, &x, alpha_hint.get())?;
        if alpha.is_finite() {
            alpha_hint.set(Some(alpha));
        }
        Ok(r + d - a)
    };

    let g_lo = c - a; // negative by validation
    let g_hi = focal(hi)?;
    if g_hi < 0.0 {
        return Err(Error::solver(format!(
            "focal sum {a} not reached on the ray phi = {phi} (residual {g_hi} at r = {hi})"
        )));
    }
    let mut r = brent_result(&focal, 1e-12, hi, g_lo, g_hi, cfg.radial_tol * 0.1)?;

    if cfg.verify_full {
        let x = SurfacePoint::new(r, phi);
        let full = surface.distance(p, &x)?.distance;
        if (r + full - a).abs() > 10.0 * cfg.radial_tol {
            // the fast path latched onto a non-minimizing branch somewhere:
            // redo the bracket against the full router
            let focal_full = |r: f64| -> Result<f64> {
                if r <= 1e-12 {
                    return Ok(c - a);
                }
                let x = SurfacePoint::new(r, phi);
                Ok(r + surface.distance(p, &x)?.distance - a)
            };
            let g_hi = focal_full(hi)?;
            r = brent_result(&focal_full, 1e-12, hi, g_lo, g_hi, cfg.radial_tol * 0.1)?;
        }
    }

    let x = SurfacePoint::new(r, phi);
    let (_, alpha) = surface.distance_fast(p, &x, alpha_hint.get())?;
    Ok(EllipseNode { phi, r, alpha })
}

/// Brent iteration over a fallible function.
fn brent_result(
    f: &dyn Fn(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    g_lo: f64,
    g_hi: f64,
    xtol: f64,
) -> Result<f64> {
    // surface queries can fail (solver errors); propagate them out of the
    // iteration instead of poisoning the bracket
    let mut err: Option<Error> = None;
    let wrapped = |x: f64| -> f64 {
        if err.is_some() {
            return 0.0;
        }
        match f(x) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                0.0
            }
        }
    };
    let root = rootfind::brent(wrapped, lo, hi, g_lo, g_hi, xtol, 200);
    if let Some(e) = err {
        return Err(e);
    }
    root
}

/// Construct the half-ellipse over `[theta_p, theta_p + pi]`.
pub fn build_ellipse(
    surface: &Surface,
    p: &SurfacePoint,
    a: f64,
    cfg: &EllipseConfig,
) -> Result<GeneralizedEllipse> {
    validate_focal_sum(surface, p, a)?;
    let n = cfg.nodes.max(9);
    let mut nodes = Vec::with_capacity(n);
    let mut hint: Option<f64> = None;
    for i in 0..n {
        let phi = p.theta + PI * i as f64 / (n - 1) as f64;
        let node = radius_on_ray(surface, p, a, phi, hint, cfg)?;
        if node.alpha.is_finite() {
            hint = Some(node.alpha);
        }
        nodes.push(node);
    }
    Ok(GeneralizedEllipse { p: *p, a, nodes })
}

/// Whether `x` lies in the closed focal-sum ball `{ r + d(p, .) <= a }`.
pub fn ball_contains(surface: &Surface, p: &SurfacePoint, a: f64, x: &SurfacePoint, tol: f64) -> Result<bool> {
    Ok(focal_sum(surface, p, x)? <= a + tol)
}

/// Check that the focal-sum ball is star-shaped as seen from a boundary
/// point `q`: both the radial segment from the pole to `q` and the
/// minimizing segment from `p` to `q` must stay inside the ball.  Returns
/// the worst residual above `a` over the sampled points (nonpositive means
/// the check passed cleanly).
pub fn star_shape_residual(
    surface: &Surface,
    p: &SurfacePoint,
    a: f64,
    q: &SurfacePoint,
    samples: usize,
) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let samples = samples.max(4);
    // radial segment: vary the radius at fixed angle
    for i in 1..samples {
        let r = q.r * i as f64 / samples as f64;
        let x = SurfacePoint::new(r, q.theta);
        worst = worst.max(focal_sum(surface, p, &x)? - a);
    }
    // minimizing segment from p
    let seg = surface.distance(p, q)?;
    if let Some(path) = seg.segments.first() {
        for i in 1..samples {
            let t = path.length * i as f64 / samples as f64;
            let x = path.point_at(t);
            worst = worst.max(focal_sum(surface, p, &x)? - a);
        }
    }
    Ok(worst)
}
