//! Radial profiles: the warping function `f` of a metric
//! `dr^2 + f(r)^2 dtheta^2` on a surface of revolution.
//!
//! A profile is determined by its radial curvature function `K(r)` through
//! the Jacobi equation `f'' + K f = 0` with `f(0) = 0`, `f'(0) = 1`.  If `f`
//! returns to zero at some `ell` the surface closes up with a second pole
//! there; smoothness of that cap requires `f'(ell) = -1`, which holds for the
//! constant-curvature models and is checked numerically for everything else.
//!
//! Closed forms (flat, round sphere, hyperbolic) bypass the ODE solver; all
//! other curvature inputs are integrated with the adaptive Dormand–Prince
//! scheme and evaluated through its dense output, which keeps `f` and `f'`
//! consistent to the solver tolerance everywhere, not just at step ends.

use crate::error::{Error, Result};
use crate::ode::{Control, Dopri5, Solution};
use crate::rootfind;

/// Domain of the radial coordinate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Domain {
    /// `f(ell) = 0`: the surface closes with a second vertex at `r = ell`.
    Closed(f64),
    /// `f > 0` on the whole integrated range `(0, horizon]`; the surface is
    /// treated as unbounded and the horizon only limits how far we computed.
    Open(f64),
}

impl Domain {
    /// Largest radius the profile knows about.
    pub fn horizon(&self) -> f64 {
        match *self {
            Domain::Closed(l) => l,
            Domain::Open(h) => h,
        }
    }

    /// Meridian length `ell` when the surface closes, `None` otherwise.
    pub fn ell(&self) -> Option<f64> {
        match *self {
            Domain::Closed(l) => Some(l),
            Domain::Open(_) => None,
        }
    }
}

/// Radial curvature as supplied by the caller.
#[derive(Clone, Debug)]
pub enum CurvatureFn {
    Constant(f64),
    /// Parsed expression in the variable `r`.
    Expr { source: String, expr: meval::Expr },
    /// Piecewise-linear table of `(r, K)` samples; clamped outside the range.
    Table { rs: Vec<f64>, ks: Vec<f64> },
    /// `base - delta`, used by the curvature perturbation.
    Shifted { base: Box<CurvatureFn>, delta: f64 },
}

impl CurvatureFn {
    pub fn expression(source: &str) -> Result<CurvatureFn> {
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::invalid(format!("cannot parse curvature expression: {e}")))?;
        // reject unknown variables early
        let mut ctx = meval::Context::new();
        ctx.var("r", 1.0);
        expr.eval_with_context(&ctx)
            .map_err(|e| Error::invalid(format!("curvature expression: {e}")))?;
        Ok(CurvatureFn::Expr {
            source: source.to_string(),
            expr,
        })
    }

    pub fn table(pairs: &[(f64, f64)]) -> Result<CurvatureFn> {
        if pairs.len() < 2 {
            return Err(Error::invalid("curvature table needs at least 2 rows"));
        }
        let mut rs = Vec::with_capacity(pairs.len());
        let mut ks = Vec::with_capacity(pairs.len());
        for &(r, k) in pairs {
            if !r.is_finite() || !k.is_finite() {
                return Err(Error::invalid("non-finite entry in curvature table"));
            }
            if let Some(&last) = rs.last() {
                if r <= last {
                    return Err(Error::invalid("curvature table abscissae must increase"));
                }
            }
            rs.push(r);
            ks.push(k);
        }
        Ok(CurvatureFn::Table { rs, ks })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            CurvatureFn::Constant(k) => *k,
            CurvatureFn::Expr { expr, .. } => {
                let mut ctx = meval::Context::new();
                ctx.var("r", r);
                expr.eval_with_context(&ctx).unwrap_or(f64::NAN)
            }
            CurvatureFn::Table { rs, ks } => {
                if r <= rs[0] {
                    return ks[0];
                }
                if r >= *rs.last().unwrap() {
                    return *ks.last().unwrap();
                }
                let i = rs.partition_point(|&x| x <= r) - 1;
                let w = (r - rs[i]) / (rs[i + 1] - rs[i]);
                ks[i] * (1.0 - w) + ks[i + 1] * w
            }
            CurvatureFn::Shifted { base, delta } => base.eval(r) - delta,
        }
    }

    /// Human-readable form for reports.
    pub fn describe(&self) -> String {
        match self {
            CurvatureFn::Constant(k) => format!("K = {k}"),
            CurvatureFn::Expr { source, .. } => format!("K(r) = {source}"),
            CurvatureFn::Table { rs, .. } => format!("K table ({} rows)", rs.len()),
            CurvatureFn::Shifted { base, delta } => {
                format!("{} - {delta}", base.describe())
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Flat,
    /// `f = sin(sk r)/sk`, curvature `sk^2`.
    Sphere { sk: f64 },
    /// `f = sinh(sk r)/sk`, curvature `-sk^2`.
    Hyperbolic { sk: f64 },
    /// Dense ODE solution, state `(f, f')`.
    Dense(Box<Solution<2>>),
    /// Uniform cubic-Hermite grid (used for warping-function input).
    Grid { h: f64, f: Vec<f64>, fp: Vec<f64> },
}

/// A solved (or closed-form) warping function together with its curvature.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    curvature: CurvatureFn,
    repr: Repr,
    domain: Domain,
    /// `f'(ell)` when the domain is closed.
    cap_slope: Option<f64>,
    /// Closed profile whose cap is not smooth (`f'(ell)` far from -1).
    /// Only perturbed profiles are allowed to be in this state.
    cone: bool,
    /// Uniform curvature samples for hot loops (Jacobi fields).
    k_lut: Vec<f64>,
    k_step: f64,
}

const K_LUT_SIZE: usize = 4097;
/// Tolerance on `|f'(ell) + 1|` for accepting a profile as smoothly capped.
const CAP_SLOPE_TOL: f64 = 1e-6;

impl RadialProfile {
    // ---------------------------------------------------------------- closed forms

    pub fn flat(r_stop: f64) -> RadialProfile {
        Self::closed_form(CurvatureFn::Constant(0.0), Repr::Flat, Domain::Open(r_stop), None)
    }

    /// Constant curvature `kappa > 0`; closes at `ell = pi / sqrt(kappa)`.
    pub fn sphere(kappa: f64) -> RadialProfile {
        let sk = kappa.sqrt();
        Self::closed_form(
            CurvatureFn::Constant(kappa),
            Repr::Sphere { sk },
            Domain::Closed(std::f64::consts::PI / sk),
            Some(-1.0),
        )
    }

    /// Constant curvature `-kappa` with `kappa > 0`.
    pub fn hyperbolic(kappa: f64, r_stop: f64) -> RadialProfile {
        let sk = kappa.sqrt();
        Self::closed_form(
            CurvatureFn::Constant(-kappa),
            Repr::Hyperbolic { sk },
            Domain::Open(r_stop),
            None,
        )
    }

    /// Dispatch a constant curvature to the right closed form.
    pub fn constant(k: f64, r_stop: f64) -> RadialProfile {
        if k > 1e-12 {
            RadialProfile::sphere(k)
        } else if k < -1e-12 {
            RadialProfile::hyperbolic(-k, r_stop)
        } else {
            RadialProfile::flat(r_stop)
        }
    }

    fn closed_form(
        curvature: CurvatureFn,
        repr: Repr,
        domain: Domain,
        cap_slope: Option<f64>,
    ) -> RadialProfile {
        let mut p = RadialProfile {
            curvature,
            repr,
            domain,
            cap_slope,
            cone: false,
            k_lut: Vec::new(),
            k_step: 1.0,
        };
        p.build_k_lut();
        p
    }

    // ---------------------------------------------------------------- solver path

    /// Integrate `f'' + K f = 0` up to `r_stop` or the first zero of `f`.
    ///
    /// `tol` is the relative/absolute ODE tolerance (clamped to a sane
    /// range); the zero of `f`, when present, is located to 1e-12.
    pub fn solve(curvature: CurvatureFn, r_stop: f64, tol: f64) -> Result<RadialProfile> {
        Self::solve_inner(curvature, r_stop, tol, false)
    }

    fn solve_inner(
        curvature: CurvatureFn,
        r_stop: f64,
        tol: f64,
        allow_cone: bool,
    ) -> Result<RadialProfile> {
        if !r_stop.is_finite() || r_stop <= 0.0 {
            return Err(Error::invalid(format!("r_stop = {r_stop} must be positive")));
        }
        let tol = tol.clamp(1e-14, 1e-2);
        // reject non-finite curvature up front so the solver cannot wander
        for i in 0..=2048 {
            let r = r_stop * i as f64 / 2048.0;
            if !curvature.eval(r).is_finite() {
                return Err(Error::invalid(format!(
                    "curvature not finite at r = {r}"
                )));
            }
        }

        let solver = Dopri5 {
            rtol: tol.min(1e-10),
            atol: tol.min(1e-12),
            h_max: r_stop / 16.0,
            ..Default::default()
        };
        let rhs = |r: f64, y: &[f64; 2]| [y[1], -curvature.eval(r) * y[0]];
        let sol = solver.solve(rhs, 0.0, [0.0, 1.0], r_stop, |step, y| {
            if y[0] <= 0.0 && step.t_end() > 1e-9 {
                Control::Stop
            } else {
                Control::Continue
            }
        })?;

        let (domain, cap_slope, cone) = if sol.stopped_early || sol.y_end[0] <= 0.0 {
            // bracket the zero inside the last step
            let last = sol.steps.last().unwrap();
            let ell = rootfind::brent_auto(
                |r| sol.eval_component(0, r),
                last.t0,
                last.t_end(),
                1e-12,
                200,
            )?;
            let slope = sol.eval_component(1, ell);
            let cone = (slope + 1.0).abs() > CAP_SLOPE_TOL;
            if cone && !allow_cone {
                return Err(Error::invalid(format!(
                    "profile closes at ell = {ell} with f'(ell) = {slope}; \
                     the cap is not smooth"
                )));
            }
            (Domain::Closed(ell), Some(slope), cone)
        } else {
            (Domain::Open(r_stop), None, false)
        };

        let mut p = RadialProfile {
            curvature,
            repr: Repr::Dense(Box::new(sol)),
            domain,
            cap_slope,
            cone,
            k_lut: Vec::new(),
            k_step: 1.0,
        };
        p.build_k_lut();
        // positivity on the interior (guards against pathological tables)
        let hor = p.domain.horizon();
        for i in 1..512 {
            let r = hor * i as f64 / 512.0;
            if r < hor - 1e-9 && p.f(r) <= 0.0 {
                return Err(Error::invalid(format!(
                    "warping function not positive at r = {r}"
                )));
            }
        }
        Ok(p)
    }

    /// Build a profile from a warping function given directly as an
    /// expression in `r`.  Validates `f(0) = 0`, `f'(0) = 1` and positivity;
    /// the curvature is recovered numerically as `-f''/f`.
    pub fn from_warping_expression(source: &str, r_stop: f64) -> Result<RadialProfile> {
        if !r_stop.is_finite() || r_stop <= 0.0 {
            return Err(Error::invalid(format!("r_stop = {r_stop} must be positive")));
        }
        let expr: meval::Expr = source
            .parse()
            .map_err(|e| Error::invalid(format!("cannot parse warping expression: {e}")))?;
        let mut ctx = meval::Context::new();
        let fval = |r: f64, ctx: &mut meval::Context| -> Result<f64> {
            ctx.var("r", r);
            expr.eval_with_context(&*ctx)
                .map_err(|e| Error::invalid(format!("warping expression: {e}")))
        };

        let f0 = fval(0.0, &mut ctx)?;
        if f0.abs() > 1e-9 {
            return Err(Error::invalid(format!("warping f(0) = {f0}, expected 0")));
        }
        // one-sided 4th-order derivative at 0
        let hs = 1e-4;
        let d0 = (-25.0 * f0 + 48.0 * fval(hs, &mut ctx)? - 36.0 * fval(2.0 * hs, &mut ctx)?
            + 16.0 * fval(3.0 * hs, &mut ctx)?
            - 3.0 * fval(4.0 * hs, &mut ctx)?)
            / (12.0 * hs);
        if (d0 - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("warping f'(0) = {d0}, expected 1")));
        }

        let n = 8192usize;
        let h = r_stop / n as f64;
        let mut fs = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let v = fval(i as f64 * h, &mut ctx)?;
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "warping not finite at r = {}",
                    i as f64 * h
                )));
            }
            fs.push(v);
        }

        // first zero past the origin, refined on the expression itself
        let mut domain = Domain::Open(r_stop);
        let mut cap_slope = None;
        for i in 1..n {
            if fs[i] > 0.0 && fs[i + 1] <= 0.0 {
                let mut ctx2 = meval::Context::new();
                let ell = rootfind::brent_auto(
                    |r| {
                        ctx2.var("r", r);
                        expr.eval_with_context(&ctx2).unwrap_or(f64::NAN)
                    },
                    i as f64 * h,
                    (i + 1) as f64 * h,
                    1e-12,
                    200,
                )?;
                let slope = (fval(ell + hs, &mut ctx)? - fval(ell - hs, &mut ctx)?) / (2.0 * hs);
                if (slope + 1.0).abs() > 1e-4 {
                    return Err(Error::invalid(format!(
                        "warping closes at ell = {ell} with f'(ell) = {slope}; \
                         the cap is not smooth"
                    )));
                }
                domain = Domain::Closed(ell);
                cap_slope = Some(slope);
                break;
            }
            if fs[i] <= 0.0 {
                return Err(Error::invalid(format!(
                    "warping not positive at r = {}",
                    i as f64 * h
                )));
            }
        }

        // derivatives on the grid: 5-point central stencils, one-sided ends
        let mut fp = vec![0.0; n + 1];
        for i in 2..n - 1 {
            fp[i] = (fs[i - 2] - 8.0 * fs[i - 1] + 8.0 * fs[i + 1] - fs[i + 2]) / (12.0 * h);
        }
        fp[0] = d0;
        fp[1] = (fs[2] - fs[0]) / (2.0 * h);
        fp[n - 1] = (fs[n] - fs[n - 2]) / (2.0 * h);
        fp[n] = (3.0 * fs[n] - 4.0 * fs[n - 1] + fs[n - 2]) / (2.0 * h);

        // curvature table -f''/f (skip the ends where f -> 0)
        let mut krs = Vec::new();
        let mut kks = Vec::new();
        for i in 1..n {
            let r = i as f64 * h;
            if r >= domain.horizon() - 2.0 * h {
                break;
            }
            let fpp = (-fs[i - 1] + 2.0 * fs[i] - fs[i + 1]) / (h * h);
            if fs[i].abs() > 1e-6 {
                krs.push(r);
                kks.push(fpp / fs[i]); // note: -f''/f with fpp = -(f'' )
            }
        }
        // fpp above is the negated second difference, so kks already holds -f''/f
        let curvature = CurvatureFn::table(&krs.iter().copied().zip(kks).collect::<Vec<_>>())?;

        let mut p = RadialProfile {
            curvature,
            repr: Repr::Grid { h, f: fs, fp },
            domain,
            cap_slope,
            cone: false,
            k_lut: Vec::new(),
            k_step: 1.0,
        };
        p.build_k_lut();
        Ok(p)
    }

    /// Curvature perturbation: solve `f_d'' + (K - delta) f_d = 0` with the
    /// same initial data.  For a closed profile the perturbed one is
    /// integrated past the original `ell`, and its cap (if any) is allowed
    /// to be non-smooth: the perturbed surface is only ever used on balls.
    pub fn perturbed(&self, delta: f64) -> Result<RadialProfile> {
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::invalid(format!("delta = {delta} must be >= 0")));
        }
        if delta == 0.0 {
            return Ok(self.clone());
        }
        let r_stop = match self.domain {
            Domain::Closed(l) => 2.2 * l,
            Domain::Open(h) => h,
        };
        match self.repr {
            Repr::Flat => Ok(RadialProfile::hyperbolic(delta, r_stop)),
            Repr::Sphere { sk } => {
                let k = sk * sk - delta;
                Ok(RadialProfile::constant(k, r_stop))
            }
            Repr::Hyperbolic { sk } => Ok(RadialProfile::hyperbolic(sk * sk + delta, r_stop)),
            _ => Self::solve_inner(
                CurvatureFn::Shifted {
                    base: Box::new(self.curvature.clone()),
                    delta,
                },
                r_stop,
                1e-12,
                true,
            ),
        }
    }

    // ---------------------------------------------------------------- evaluation

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// `ell` when the surface closes.
    pub fn ell(&self) -> Option<f64> {
        self.domain.ell()
    }

    pub fn horizon(&self) -> f64 {
        self.domain.horizon()
    }

    pub fn cap_slope(&self) -> Option<f64> {
        self.cap_slope
    }

    /// True when the profile closes but the far cap is conical (only the
    /// output of `perturbed` can be in this state).
    pub fn has_cone_cap(&self) -> bool {
        self.cone
    }

    pub fn curvature_fn(&self) -> &CurvatureFn {
        &self.curvature
    }

    pub fn f(&self, r: f64) -> f64 {
        self.f_fp(r).0
    }

    pub fn fp(&self, r: f64) -> f64 {
        self.f_fp(r).1
    }

    /// `(f, f')` in one lookup; the geodesic right-hand side lives on this.
    pub fn f_fp(&self, r: f64) -> (f64, f64) {
        let r = r.clamp(0.0, self.domain.horizon());
        match &self.repr {
            Repr::Flat => (r, 1.0),
            Repr::Sphere { sk } => ((sk * r).sin() / sk, (sk * r).cos()),
            Repr::Hyperbolic { sk } => ((sk * r).sinh() / sk, (sk * r).cosh()),
            Repr::Dense(sol) => {
                let y = sol.eval(r.min(sol.t_end));
                (y[0], y[1])
            }
            Repr::Grid { h, f, fp } => {
                let x = (r / h).min((f.len() - 1) as f64);
                let i = (x as usize).min(f.len() - 2);
                let s = x - i as f64;
                // cubic Hermite on [i, i+1]
                let (f0, f1, d0, d1) = (f[i], f[i + 1], fp[i] * h, fp[i + 1] * h);
                let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
                let h10 = s * (1.0 - s) * (1.0 - s);
                let h01 = s * s * (3.0 - 2.0 * s);
                let h11 = s * s * (s - 1.0);
                let val = h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
                let dh00 = 6.0 * s * (s - 1.0);
                let dh10 = (1.0 - s) * (1.0 - 3.0 * s);
                let dh01 = -dh00;
                let dh11 = s * (3.0 * s - 2.0);
                let der = (dh00 * f0 + dh10 * d0 + dh01 * f1 + dh11 * d1) / h;
                (val, der)
            }
        }
    }

    /// Radial (= Gaussian) curvature at interior radius `r`.
    pub fn gauss_curvature(&self, r: f64) -> Result<f64> {
        let hor = self.domain.horizon();
        if !(r > 0.0 && r < hor) {
            return Err(Error::Domain {
                what: "r",
                value: r,
                lo: 0.0,
                hi: hor,
            });
        }
        Ok(self.curvature.eval(r))
    }

    /// LUT-backed curvature for hot loops (Jacobi integration).  Constant
    /// curvatures skip the table entirely.
    #[inline]
    pub fn curvature_fast(&self, r: f64) -> f64 {
        if let CurvatureFn::Constant(k) = self.curvature {
            return k;
        }
        let x = (r / self.k_step).clamp(0.0, (self.k_lut.len() - 1) as f64);
        let i = (x as usize).min(self.k_lut.len() - 2);
        let w = x - i as f64;
        self.k_lut[i] * (1.0 - w) + self.k_lut[i + 1] * w
    }

    fn build_k_lut(&mut self) {
        if let CurvatureFn::Constant(_) = self.curvature {
            self.k_lut = vec![self.curvature.eval(0.0); 2];
            self.k_step = self.domain.horizon();
            return;
        }
        let hor = self.domain.horizon();
        self.k_step = hor / (K_LUT_SIZE - 1) as f64;
        self.k_lut = (0..K_LUT_SIZE)
            .map(|i| self.curvature.eval(i as f64 * self.k_step))
            .collect();
    }

    // ---------------------------------------------------------------- diagnostics

    /// Uniform samples `(r, f, f')`, endpoints included.
    pub fn sample_grid(&self, n: usize) -> Vec<(f64, f64, f64)> {
        let hor = self.domain.horizon();
        (0..n)
            .map(|i| {
                let r = hor * i as f64 / (n - 1) as f64;
                let (f, fp) = self.f_fp(r);
                (r, f, fp)
            })
            .collect()
    }

    /// Max Jacobi-equation residual `|f'' + K f| / (1 + |K|)` over a uniform
    /// grid, with `f''` taken as a centered difference of the stored `f'`.
    pub fn jacobi_residual_max(&self, n: usize) -> f64 {
        let g = self.sample_grid(n);
        let h = g[1].0 - g[0].0;
        let mut worst: f64 = 0.0;
        for i in 1..n - 1 {
            let fpp = (g[i + 1].2 - g[i - 1].2) / (2.0 * h);
            let k = self.curvature.eval(g[i].0);
            let res = (fpp + k * g[i].1).abs() / (1.0 + k.abs());
            worst = worst.max(res);
        }
        worst
    }

    /// Short descriptor for reports.
    pub fn describe(&self) -> String {
        let dom = match self.domain {
            Domain::Closed(l) => format!("closed, ell = {l:.12}"),
            Domain::Open(h) => format!("open, horizon = {h}"),
        };
        format!("{} ({dom})", self.curvature.describe())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed form for `K = 1/(1+r^2)^2`: `f = sqrt(1+r^2) sin(sqrt2 atan r)/sqrt2`.
    fn von_mangoldt_f(r: f64) -> f64 {
        let s2 = 2f64.sqrt();
        (1.0 + r * r).sqrt() * (s2 * r.atan()).sin() / s2
    }

    #[test]
    fn solver_matches_sphere_closed_form() {
        let p = RadialProfile::solve(CurvatureFn::Constant(1.0), 5.0, 1e-12).unwrap();
        let ell = p.ell().expect("sphere closes");
        assert!((ell - PI).abs() < 1e-10, "ell = {ell}");
        assert!((p.cap_slope().unwrap() + 1.0).abs() < 1e-8);
        for i in 0..=200 {
            let r = ell * i as f64 / 200.0;
            assert!((p.f(r) - r.sin()).abs() < 1e-9, "r = {r}");
            assert!((p.fp(r) - r.cos()).abs() < 1e-9);
        }
    }

    #[test]
    fn solver_matches_flat_and_hyperbolic() {
        let flat = RadialProfile::solve(CurvatureFn::Constant(0.0), 5.0, 1e-12).unwrap();
        let hyp = RadialProfile::solve(CurvatureFn::Constant(-1.0), 5.0, 1e-12).unwrap();
        assert!(flat.ell().is_none());
        assert!(hyp.ell().is_none());
        for i in 1..=100 {
            let r = 5.0 * i as f64 / 100.0;
            assert!((flat.f(r) - r).abs() < 1e-9);
            assert!((hyp.f(r) - r.sinh()).abs() < 2e-8, "r={r} {}", hyp.f(r) - r.sinh());
        }
    }

    #[test]
    fn solver_matches_von_mangoldt_closed_form() {
        let k = CurvatureFn::expression("1/(1+r^2)^2").unwrap();
        let p = RadialProfile::solve(k, 8.0, 1e-12).unwrap();
        assert!(p.ell().is_none());
        for i in 1..=160 {
            let r = 8.0 * i as f64 / 160.0;
            assert!(
                (p.f(r) - von_mangoldt_f(r)).abs() < 1e-8,
                "r = {r}: {} vs {}",
                p.f(r),
                von_mangoldt_f(r)
            );
        }
    }

    #[test]
    fn perturbed_sphere_matches_constant_closed_form() {
        let p = RadialProfile::sphere(1.0);
        let q = p.perturbed(0.1).unwrap();
        let skd = 0.9f64.sqrt();
        let elld = q.ell().unwrap();
        assert!((elld - PI / skd).abs() < 1e-10);
        for i in 0..=100 {
            let r = elld * i as f64 / 100.0;
            assert!((q.f(r) - (skd * r).sin() / skd).abs() < 1e-10);
        }
        // full perturbation to flat
        let q = p.perturbed(1.0).unwrap();
        assert!(q.ell().is_none());
        assert!((q.f(2.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perturbed_numeric_profile_dominates_original() {
        let k = CurvatureFn::expression("1/(1+r^2)^2").unwrap();
        let p = RadialProfile::solve(k, 8.0, 1e-12).unwrap();
        let q = p.perturbed(0.05).unwrap();
        for i in 1..=100 {
            let r = 8.0 * i as f64 / 100.0;
            assert!(
                q.f(r) >= p.f(r) - 1e-10,
                "perturbed profile must dominate at r = {r}"
            );
        }
    }

    #[test]
    fn negative_delta_rejected() {
        let p = RadialProfile::sphere(1.0);
        assert!(p.perturbed(-0.1).is_err());
    }

    #[test]
    fn non_finite_curvature_rejected() {
        // 1/r blows up at the origin
        let k = CurvatureFn::expression("1/r").unwrap();
        assert!(RadialProfile::solve(k, 2.0, 1e-10).is_err());
    }

    #[test]
    fn warping_expression_recovers_sphere() {
        let p = RadialProfile::from_warping_expression("sin(r)", 5.0).unwrap();
        let ell = p.ell().unwrap();
        assert!((ell - PI).abs() < 1e-9, "ell = {ell}");
        for i in 1..=50 {
            let r = PI * i as f64 / 51.0;
            assert!((p.f(r) - r.sin()).abs() < 1e-9);
            assert!((p.fp(r) - r.cos()).abs() < 1e-7);
            let k = p.gauss_curvature(r).unwrap();
            assert!((k - 1.0).abs() < 2e-3, "K({r}) = {k}");
        }
    }

    #[test]
    fn warping_validation_catches_bad_initial_data() {
        assert!(RadialProfile::from_warping_expression("2*r", 2.0).is_err());
        assert!(RadialProfile::from_warping_expression("r + 1", 2.0).is_err());
    }

    #[test]
    fn gauss_curvature_domain_checked() {
        let p = RadialProfile::sphere(1.0);
        assert!(p.gauss_curvature(0.0).is_err());
        assert!(p.gauss_curvature(PI).is_err());
        assert!((p.gauss_curvature(1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_residual_small_for_solved_profiles() {
        let k = CurvatureFn::expression("1/(1+r^2)^2").unwrap();
        let p = RadialProfile::solve(k, 8.0, 1e-12).unwrap();
        let res = p.jacobi_residual_max(4001);
        assert!(res <= 1e-6, "residual {res}");
    }

    #[test]
    fn table_curvature_interpolates() {
        let t = CurvatureFn::table(&[(0.0, 1.0), (1.0, 0.0), (2.0, -1.0)]).unwrap();
        assert!((t.eval(0.5) - 0.5).abs() < 1e-15);
        assert!((t.eval(1.5) + 0.5).abs() < 1e-15);
        assert!((t.eval(5.0) + 1.0).abs() < 1e-15); // clamped
        let p = RadialProfile::solve(t, 2.0, 1e-10).unwrap();
        assert!(p.f(1.0) > 0.0);
    }
}
