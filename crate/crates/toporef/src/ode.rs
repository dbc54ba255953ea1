//! Adaptive Dormand–Prince 5(4) integrator with dense output.
//!
//! The 5th-order solution propagates, the embedded 4th-order one drives the
//! step controller, and every accepted step stores the quartic interpolation
//! coefficients so callers can evaluate the solution (and locate events with
//! a root finder) anywhere inside the integrated range without re-stepping.
//! The scheme is FSAL: the last stage of an accepted step seeds the next one.
//!
//! State is a fixed-size array `[f64; N]`; the problems in this crate are
//! 2- and 4-dimensional, so no allocation happens in the hot loop.

use crate::error::{Error, Result};

// Butcher tableau (Dormand & Prince 1980).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// 5th-order weights (also row 7 of A; FSAL).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights: b5 - b4.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output weights for the quartic interpolant (Hairer/Norsett/Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step together with its interpolation coefficients.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    /// `cont[c]` holds the five interpolation coefficients of component `c`.
    pub cont: [[f64; 5]; N],
}

impl<const N: usize> DenseStep<N> {
    /// Evaluate the interpolant at `t` (valid for `t0 <= t <= t0 + h`;
    /// evaluating slightly outside is the caller's responsibility).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for c in 0..N {
            let k = &self.cont[c];
            y[c] = k[0] + s * (k[1] + s1 * (k[2] + s * (k[3] + s1 * k[4])));
        }
        y
    }

    /// Evaluate a single component (avoids filling the whole state).
    pub fn eval_component(&self, c: usize, t: f64) -> f64 {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let k = &self.cont[c];
        k[0] + s * (k[1] + s1 * (k[2] + s * (k[3] + s1 * k[4])))
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Integration result: the final state plus the dense-step ladder.
#[derive(Clone, Debug)]
pub struct Solution<const N: usize> {
    pub t0: f64,
    pub t_end: f64,
    pub y_end: [f64; N],
    pub steps: Vec<DenseStep<N>>,
    pub n_accepted: usize,
    pub n_rejected: usize,
    /// True when a stop predicate ended the integration before `t_target`.
    pub stopped_early: bool,
}

impl<const N: usize> Solution<N> {
    /// Dense evaluation anywhere in `[t0, t_end]` (clamped at the ends).
    pub fn eval(&self, t: f64) -> [f64; N] {
        let step = self.locate(t);
        step.eval(t.clamp(self.t0, self.t_end))
    }

    pub fn eval_component(&self, c: usize, t: f64) -> f64 {
        let step = self.locate(t);
        step.eval_component(c, t.clamp(self.t0, self.t_end))
    }

    fn locate(&self, t: f64) -> &DenseStep<N> {
        debug_assert!(!self.steps.is_empty());
        // binary search over step starts
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.steps[mid].t0 <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        &self.steps[lo]
    }
}

/// What the stop predicate decided at the end of an accepted step.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Control {
    Continue,
    /// Keep this step in the output, then stop.
    Stop,
    /// Abort the whole integration with a solver error.
    Abort(&'static str),
}

/// Solver configuration.  The defaults match the tight tolerances that the
/// geodesic invariants demand (drift below 1e-8 per unit length).
#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Dopri5 {
            rtol: 1e-12,
            atol: 1e-12,
            h_max: f64::INFINITY,
            h_init: None,
            max_steps: 500_000,
        }
    }
}

impl Dopri5 {
    /// Integrate `y' = f(t, y)` from `(t0, y0)` to `t_target` (forward only).
    ///
    /// `inspect` runs after every accepted step with the step just taken and
    /// may stop or abort the run; it is how callers implement event horizons
    /// and forbidden-region guards without entangling them with the stepper.
    pub fn solve<const N: usize>(
        &self,
        mut f: impl FnMut(f64, &[f64; N]) -> [f64; N],
        t0: f64,
        y0: [f64; N],
        t_target: f64,
        mut inspect: impl FnMut(&DenseStep<N>, &[f64; N]) -> Control,
    ) -> Result<Solution<N>> {
        if !(t_target > t0) {
            return Err(Error::invalid(format!(
                "integration target {t_target} not ahead of start {t0}"
            )));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite initial state".to_string()));
        }

        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        let mut h = self.h_init.unwrap_or_else(|| {
            // crude version of Hairer's starting-step heuristic
            let sc = |i: usize| self.atol + self.rtol * y0[i].abs();
            let mut d0: f64 = 0.0;
            let mut d1: f64 = 0.0;
            for i in 0..N {
                d0 += (y0[i] / sc(i)).powi(2);
                d1 += (k1[i] / sc(i)).powi(2);
            }
            let (d0, d1) = (d0.sqrt(), d1.sqrt());
            if d0 < 1e-5 || d1 < 1e-5 {
                1e-6
            } else {
                0.01 * d0 / d1
            }
        });
        h = h.min(self.h_max).min(t_target - t0).max(1e-14);

        let mut steps: Vec<DenseStep<N>> = Vec::with_capacity(128);
        let mut n_accepted = 0usize;
        let mut n_rejected = 0usize;
        let mut stopped_early = false;

        'outer: for _ in 0..self.max_steps {
            if t >= t_target {
                break;
            }
            if h < 1e-14 * (1.0 + t.abs()) {
                return Err(Error::solver(format!("step size underflow at t = {t}")));
            }
            let last = t + h >= t_target;
            if last {
                h = t_target - t;
            }

            // stages
            let mut yt = [0.0; N];
            for i in 0..N {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            let k2 = f(t + C[1] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            let k3 = f(t + C[2] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            let k4 = f(t + C[3] * h, &yt);
            for i in 0..N {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            let k5 = f(t + C[4] * h, &yt);
            for i in 0..N {
                yt[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let k6 = f(t + C[5] * h, &yt);
            let mut y_new = [0.0; N];
            for i in 0..N {
                y_new[i] = y[i]
                    + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            let k7 = f(t + h, &y_new);

            // scaled RMS error estimate
            let mut err: f64 = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                        + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / N as f64).sqrt();

            if !err.is_finite() {
                return Err(Error::solver(format!(
                    "non-finite state during integration at t = {t}"
                )));
            }

            if err <= 1.0 {
                // accept: build dense coefficients
                let mut cont = [[0.0; 5]; N];
                for i in 0..N {
                    let ydiff = y_new[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    cont[i][0] = y[i];
                    cont[i][1] = ydiff;
                    cont[i][2] = bspl;
                    cont[i][3] = ydiff - h * k7[i] - bspl;
                    cont[i][4] = h
                        * (D1 * k1[i]
                            + D3 * k3[i]
                            + D4 * k4[i]
                            + D5 * k5[i]
                            + D6 * k6[i]
                            + D7 * k7[i]);
                }
                let step = DenseStep { t0: t, h, cont };
                t += h;
                y = y_new;
                k1 = k7; // FSAL
                n_accepted += 1;

                let ctrl = inspect(&step, &y);
                steps.push(step);
                match ctrl {
                    Control::Continue => {}
                    Control::Stop => {
                        stopped_early = t < t_target - 1e-14;
                        break 'outer;
                    }
                    Control::Abort(msg) => {
                        return Err(Error::solver(format!("{msg} (t = {t})")));
                    }
                }

                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                h = (h * fac).min(self.h_max);
            } else {
                n_rejected += 1;
                let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                h *= fac;
            }
        }

        if steps.is_empty() {
            return Err(Error::solver("no steps accepted".to_string()));
        }
        if !stopped_early && t < t_target - 1e-10 * (1.0 + t_target.abs()) {
            return Err(Error::solver(format!(
                "step budget exhausted at t = {t} of {t_target}"
            )));
        }

        Ok(Solution {
            t0,
            t_end: t,
            y_end: y,
            steps,
            n_accepted,
            n_rejected,
            stopped_early,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = Dopri5::default()
            .solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, |_, _| Control::Continue)
            .unwrap();
        assert!((sol.y_end[0] - (-3.0f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        // y'' = -y, the dense output should track cos/sin to ~1e-10
        let sol = Dopri5::default()
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                10.0,
                |_, _| Control::Continue,
            )
            .unwrap();
        for k in 0..100 {
            let t = 10.0 * k as f64 / 100.0;
            let y = sol.eval(t);
            assert!((y[0] - t.cos()).abs() < 5e-10, "t={t}: {} vs {}", y[0], t.cos());
            assert!((y[1] + t.sin()).abs() < 5e-10);
        }
    }

    #[test]
    fn stop_predicate_truncates() {
        let sol = Dopri5::default()
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                [1.0, 0.0],
                10.0,
                |_, y| {
                    if y[0] < 0.0 {
                        Control::Stop
                    } else {
                        Control::Continue
                    }
                },
            )
            .unwrap();
        assert!(sol.stopped_early);
        // stopped within one step after cos(t) went negative
        assert!(sol.t_end > std::f64::consts::FRAC_PI_2);
        assert!(sol.t_end < std::f64::consts::FRAC_PI_2 + 0.5);
    }

    #[test]
    fn sharp_tolerance_costs_more_steps() {
        let loose = Dopri5 {
            rtol: 1e-6,
            atol: 1e-6,
            ..Default::default()
        };
        let tight = Dopri5::default();
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let a = loose.solve(f, 0.0, [1.0, 0.0], 10.0, |_, _| Control::Continue).unwrap();
        let b = tight.solve(f, 0.0, [1.0, 0.0], 10.0, |_, _| Control::Continue).unwrap();
        assert!(b.n_accepted > a.n_accepted);
    }
}
