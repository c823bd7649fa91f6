//! Dormand-Prince 5(4) with PI step-size control, for small real state vectors.
//!
//! Complex states are stored as interleaved `(re, im)` pairs by the callers.

use crate::error::{Error, Result};

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
    pub safety: f64,
    pub fac_min: f64,
    pub fac_max: f64,
    /// PI stabilisation exponent.
    pub beta: f64,
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Dopri5 {
            rtol: tol,
            atol: tol,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
            safety: 0.9,
            fac_min: 0.2,
            fac_max: 10.0,
            beta: 0.04,
        }
    }

    pub fn h_max(mut self, h: f64) -> Self {
        self.h_max = h;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn combine<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        let hc = h * c;
        for i in 0..N {
            out[i] += hc * k[i];
        }
    }
    out
}

impl Dopri5 {
    /// Integrates `y' = f(t, y)` from `t0` to `t1 > t0`.
    ///
    /// `relative` selects, per component, whether the error scale includes the
    /// relative term `rtol·|y|`; components with `false` are controlled in
    /// absolute terms only. `observer` sees `(t, y)` at `t0` and after every
    /// accepted step.
    pub fn solve<const N: usize, F, O>(
        &self,
        mut f: F,
        t0: f64,
        t1: f64,
        y0: [f64; N],
        relative: &[bool; N],
        mut observer: O,
    ) -> Result<([f64; N], Stats)>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        O: FnMut(f64, &[f64; N]),
    {
        if !(t1 > t0) {
            return Err(Error::InvalidInput(format!(
                "need t1 > t0, got [{t0}, {t1}]"
            )));
        }
        let span = t1 - t0;
        let h_min = 1e-14 * span;
        let expo1 = 0.2 - self.beta * 0.75;
        let scale = |y: &[f64; N], yn: &[f64; N], i: usize| {
            if relative[i] {
                self.atol + self.rtol * y[i].abs().max(yn[i].abs())
            } else {
                self.atol
            }
        };

        let mut stats = Stats::default();
        let mut t = t0;
        let mut y = y0;
        let mut k1 = f(t, &y);
        stats.evaluations += 1;
        observer(t, &y);

        let mut h = match self.h0 {
            Some(h) => h,
            None => {
                let (hh, evals) = self.initial_step(&mut f, t, &y, &k1, span, &scale);
                stats.evaluations += evals;
                hh
            }
        }
        .min(self.h_max)
        .min(span);
        let mut facold: f64 = 1e-4;
        let mut last_rejected = false;

        while t < t1 {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepSizeUnderflow {
                    t,
                    step: h,
                    min: h_min,
                });
            }
            let mut last = false;
            if t + h >= t1 || t + 1.01 * h >= t1 {
                h = t1 - t;
                last = true;
            }
            if h < h_min && !last {
                return Err(Error::StepSizeUnderflow {
                    t,
                    step: h,
                    min: h_min,
                });
            }

            let y2 = combine(&y, h, &[(A21, &k1)]);
            let k2 = f(t + C2 * h, &y2);
            let y3 = combine(&y, h, &[(A31, &k1), (A32, &k2)]);
            let k3 = f(t + C3 * h, &y3);
            let y4 = combine(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            let k4 = f(t + C4 * h, &y4);
            let y5 = combine(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            let k5 = f(t + C5 * h, &y5);
            let y6 = combine(
                &y,
                h,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            );
            let k6 = f(t + h, &y6);
            let yn = combine(
                &y,
                h,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let tn = if last { t1 } else { t + h };
            let k7 = f(tn, &yn);
            stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..N {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let r = e / scale(&y, &yn, i);
                err += r * r;
            }
            let err = (err / N as f64).sqrt();
            if !err.is_finite() {
                h *= 0.1;
                stats.rejected += 1;
                last_rejected = true;
                continue;
            }

            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                let mut fac = fac11 / facold.powf(self.beta);
                fac = (fac / self.safety).clamp(1.0 / self.fac_max, 1.0 / self.fac_min);
                let mut hnew = (h / fac).min(self.h_max);
                if last_rejected {
                    hnew = hnew.min(h);
                }
                facold = err.max(1e-4);
                stats.accepted += 1;
                t = tn;
                y = yn;
                k1 = k7;
                observer(t, &y);
                if last {
                    break;
                }
                h = hnew;
                last_rejected = false;
            } else {
                h /= (fac11 / self.safety).min(1.0 / self.fac_min);
                stats.rejected += 1;
                last_rejected = true;
            }
        }
        Ok((y, stats))
    }

    fn initial_step<const N: usize, F, S>(
        &self,
        f: &mut F,
        t: f64,
        y: &[f64; N],
        f0: &[f64; N],
        span: f64,
        scale: &S,
    ) -> (f64, usize)
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
        S: Fn(&[f64; N], &[f64; N], usize) -> f64,
    {
        let rms = |v: &[f64; N]| {
            let s: f64 = (0..N).map(|i| (v[i] / scale(y, y, i)).powi(2)).sum();
            (s / N as f64).sqrt()
        };
        let (d0, d1) = (rms(y), rms(f0));
        let h0 = if d0 < 1e-10 || d1 < 1e-10 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let h0 = h0.min(self.h_max).min(span);
        let y1 = combine(y, h0, &[(1.0, f0)]);
        let f1 = f(t + h0, &y1);
        let mut diff = [0.0; N];
        for i in 0..N {
            diff[i] = f1[i] - f0[i];
        }
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        ((100.0 * h0).min(h1), 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let (y, stats) = Dopri5::new(1e-10)
            .solve(
                |_, y: &[f64; 1]| [-y[0]],
                0.0,
                5.0,
                [1.0],
                &[true],
                |_, _| {},
            )
            .unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-10);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let two_pi = 2.0 * std::f64::consts::PI;
        let (y, _) = Dopri5::new(1e-12)
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                0.0,
                two_pi,
                [1.0, 0.0],
                &[true; 2],
                |_, _| {},
            )
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-10 && y[1].abs() < 1e-10);
    }

    #[test]
    fn observer_sees_endpoints_and_is_monotone() {
        let mut ts = Vec::new();
        Dopri5::new(1e-8)
            .solve(
                |t, _: &[f64; 1]| [t.cos()],
                1.0,
                3.0,
                [0.0],
                &[true],
                |t, _| ts.push(t),
            )
            .unwrap();
        assert_eq!(ts[0], 1.0);
        assert_eq!(*ts.last().unwrap(), 3.0);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn fifth_order_convergence() {
        // error on y' = cos t shrinks ~ tol when tolerance is tightened
        let run = |tol: f64| {
            let (y, _) = Dopri5::new(tol)
                .solve(
                    |t, _: &[f64; 1]| [t.cos()],
                    0.0,
                    10.0,
                    [0.0],
                    &[true],
                    |_, _| {},
                )
                .unwrap();
            (y[0] - 10.0f64.sin()).abs()
        };
        assert!(run(1e-6) < 1e-5);
        assert!(run(1e-10) < 1e-9);
    }

    #[test]
    fn rejects_bad_interval_and_underflows() {
        let solver = Dopri5::new(1e-8);
        assert!(solver
            .solve(
                |_, y: &[f64; 1]| [y[0]],
                1.0,
                1.0,
                [1.0],
                &[true],
                |_, _| {}
            )
            .is_err());
        // finite-time blow-up of y' = y² from y(0) = 1 at t = 1
        let r = solver.solve(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            0.0,
            2.0,
            [1.0],
            &[true],
            |_, _| {},
        );
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. })));
    }
}
