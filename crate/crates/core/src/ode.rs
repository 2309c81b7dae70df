//! The scalar stationary NLS initial-value problem on one edge.
//!
//! `ψ'' = ε²ψ − 2ψ³`, `ψ(0) = a`, `ψ'(0) = b`, integrated with an adaptive
//! Dormand–Prince 5(4) pair. The first-order invariant
//! `E = ψ'² − ε²ψ² + ψ⁴` is monitored along every run but never enforced.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default integration tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_STEPS: usize = 1_000_000;

// Dormand–Prince 5(4) tableau
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*: coefficients of the embedded error estimate
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// First-order invariant `E = ψ'² − ε²ψ² + ψ⁴`.
#[inline]
pub fn first_invariant(psi: f64, dpsi: f64, eps: f64) -> f64 {
    dpsi * dpsi - eps * eps * psi * psi + psi.powi(4)
}

/// Four-term small-amplitude expansion of `ψ(x; εα, ε²β, ε)` and its derivative.
pub fn small_amplitude_expansion(alpha: f64, beta: f64, eps: f64, x: f64) -> (f64, f64) {
    let nl2 = alpha * (1.0 - 2.0 * alpha * alpha);
    let nl3 = (1.0 - 6.0 * alpha * alpha) * beta;
    let psi = eps * (alpha + eps * beta * x + 0.5 * eps * eps * nl2 * x * x + eps.powi(3) * nl3 * x.powi(3) / 6.0);
    let dpsi = eps * (eps * beta + eps * eps * nl2 * x + 0.5 * eps.powi(3) * nl3 * x * x);
    (psi, dpsi)
}

/// One sample `(x, ψ, ψ')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub psi: f64,
    pub dpsi: f64,
}

/// Result of [`Integrator::solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvpSolution {
    pub a: f64,
    pub b: f64,
    pub eps: f64,
    /// Requested abscissae plus both endpoints, ordered from `0` to `x_end`.
    pub samples: Vec<Sample>,
    /// `max |E(x) − E(0)|` over accepted steps.
    pub invariant_drift: f64,
    pub steps: usize,
}

impl IvpSolution {
    pub fn end(&self) -> Sample {
        self.samples[self.samples.len() - 1]
    }
}

/// Adaptive integrator for `ψ'' = ε²ψ − 2ψ³`.
///
/// The error of a step is measured against `tol · max(‖y‖∞, floor)`, so
/// accuracy is relative to the size of the state rather than per component;
/// this keeps tiny seeds near the origin as accurate as order-one states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Integrator {
    pub eps: f64,
    pub tol: f64,
    /// Absolute floor of the error scale.
    pub floor: f64,
    pub max_steps: usize,
}

struct Step {
    y: [f64; 2],
    f_end: [f64; 2],
    err: f64,
}

impl Integrator {
    pub fn new(eps: f64, tol: f64) -> Self {
        Self {
            eps,
            tol,
            floor: 1e-300,
            max_steps: MAX_STEPS,
        }
    }

    #[inline]
    fn rhs(&self, y: [f64; 2]) -> [f64; 2] {
        [y[1], y[0] * (self.eps * self.eps - 2.0 * y[0] * y[0])]
    }

    fn dp_step(&self, y: [f64; 2], k1: [f64; 2], h: f64) -> Step {
        let add = |c: &[(f64, [f64; 2])]| {
            let mut out = y;
            for (w, k) in c {
                out[0] += h * w * k[0];
                out[1] += h * w * k[1];
            }
            out
        };
        let k2 = self.rhs(add(&[(A21, k1)]));
        let k3 = self.rhs(add(&[(A31, k1), (A32, k2)]));
        let k4 = self.rhs(add(&[(A41, k1), (A42, k2), (A43, k3)]));
        let k5 = self.rhs(add(&[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
        let k6 = self.rhs(add(&[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]));
        let y_new = add(&[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
        let k7 = self.rhs(y_new);
        let mut e = [0.0; 2];
        for i in 0..2 {
            e[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let scale = self.tol * y[0].abs().max(y[1].abs()).max(y_new[0].abs()).max(y_new[1].abs()).max(self.floor);
        let err = e[0].abs().max(e[1].abs()) / scale;
        Step { y: y_new, f_end: k7, err }
    }

    /// Integrates from `x = 0` to `x_end > 0`, stopping exactly at every stop.
    ///
    /// `visit` sees each accepted state; `stops` must be increasing in `(0, x_end]`.
    fn run<V>(&self, y0: [f64; 2], x_end: f64, stops: &[f64], mut visit: V) -> Result<usize>
    where
        V: FnMut(f64, [f64; 2], bool),
    {
        if y0[0] == 0.0 && y0[1] == 0.0 {
            // zero solution; no work
            for &s in stops {
                visit(s, [0.0, 0.0], true);
            }
            return Ok(0);
        }
        let mut x = 0.0;
        let mut y = y0;
        let mut k1 = self.rhs(y);
        let mut h = initial_step(x_end, self.tol);
        let mut steps = 0usize;
        let mut next_stop = 0usize;
        while next_stop < stops.len() {
            let target = stops[next_stop];
            let remaining = target - x;
            let mut landing = false;
            let mut h_try = h;
            if h_try >= remaining * (1.0 - 1e-12) {
                h_try = remaining;
                landing = true;
            }
            let step = self.dp_step(y, k1, h_try);
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::Integration {
                    x,
                    reason: format!("exceeded {} steps", self.max_steps),
                });
            }
            if !step.y[0].is_finite() || !step.y[1].is_finite() {
                return Err(Error::Integration {
                    x,
                    reason: "non-finite state".into(),
                });
            }
            if step.err <= 1.0 {
                x = if landing { target } else { x + h_try };
                y = step.y;
                k1 = step.f_end;
                visit(x, y, landing);
                if landing {
                    next_stop += 1;
                }
                let fac = if step.err == 0.0 { 5.0 } else { (0.9 * step.err.powf(-0.2)).clamp(0.2, 5.0) };
                // do not let a short landing step shrink the next one
                h = if landing { h.max(h_try * fac) } else { h_try * fac };
            } else {
                h = h_try * (0.9 * step.err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * x_end.max(1.0) {
                    return Err(Error::Integration {
                        x,
                        reason: format!("step size underflow (h = {h:e})"),
                    });
                }
            }
        }
        Ok(steps)
    }

    /// `(ψ(len), ψ'(len))` for data `(a, b)` at 0. Negative `len` integrates backwards.
    pub fn propagate(&self, a: f64, b: f64, len: f64) -> Result<(f64, f64)> {
        if len == 0.0 {
            return Ok((a, b));
        }
        // reversibility: ψ(−x; a, b) = ψ(x; a, −b)
        let (sign, span) = if len > 0.0 { (1.0, len) } else { (-1.0, -len) };
        let mut out = [a, sign * b];
        self.run([a, sign * b], span, &[span], |_, y, _| out = y)?;
        Ok((out[0], sign * out[1]))
    }

    /// Like [`propagate`](Self::propagate) for `len > 0`, also returning the
    /// smallest `ψ` seen at accepted steps.
    pub fn propagate_with_min(&self, a: f64, b: f64, len: f64) -> Result<(f64, f64, f64)> {
        if !(len > 0.0) {
            return Err(Error::Domain(format!("length must be positive, got {len}")));
        }
        let mut out = [a, b];
        let mut min = a;
        self.run([a, b], len, &[len], |_, y, _| {
            min = min.min(y[0]);
            out = y;
        })?;
        Ok((out[0], out[1], min))
    }

    /// Solves on `[0, x_end]` (or `[x_end, 0]`), reporting the requested
    /// abscissae plus both endpoints.
    pub fn solve(&self, a: f64, b: f64, x_end: f64, at: &[f64]) -> Result<IvpSolution> {
        if !(x_end != 0.0 && x_end.is_finite()) {
            return Err(Error::Domain(format!("x_end must be nonzero and finite, got {x_end}")));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        let sign = x_end.signum();
        let span = x_end.abs();
        let mut stops: Vec<f64> = at
            .iter()
            .map(|&x| x * sign)
            .filter(|&s| s > 0.0 && s < span)
            .collect();
        stops.push(span);
        stops.sort_by(f64::total_cmp);
        stops.dedup();

        let y0 = [a, sign * b];
        let e0 = first_invariant(a, b, self.eps);
        let mut drift = 0.0_f64;
        let mut samples = Vec::with_capacity(stops.len() + 1);
        samples.push(Sample { x: 0.0, psi: a, dpsi: b });
        let steps = self.run(y0, span, &stops, |x, y, landed| {
            drift = drift.max((first_invariant(y[0], y[1], self.eps) - e0).abs());
            if landed {
                samples.push(Sample {
                    x: sign * x,
                    psi: y[0],
                    dpsi: sign * y[1],
                });
            }
        })?;
        Ok(IvpSolution {
            a,
            b,
            eps: self.eps,
            samples,
            invariant_drift: drift,
            steps,
        })
    }
}

fn initial_step(span: f64, tol: f64) -> f64 {
    (span * tol.powf(0.2)).min(span).max(1e-6 * span)
}

/// Solves the initial-value problem on `[0, x_end]` with samples at the
/// endpoints and at `at`.
pub fn integrate_ivp(a: f64, b: f64, eps: f64, x_end: f64, tol: f64, at: &[f64]) -> Result<IvpSolution> {
    Integrator::new(eps, tol).solve(a, b, x_end, at)
}
