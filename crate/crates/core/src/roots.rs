//! Bracketing root finders shared by the band finder, the symmetry curves and
//! the shooting routines.

use crate::error::{Error, Result};

/// Plain bisection on `[lo, hi]` until the bracket is narrower than `xtol`.
///
/// Only the sign of `f` is used, so `f` may be a classifier rather than a
/// smooth function.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NotBracketed {
            lo,
            hi,
            context: "bisection".into(),
        });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        context: format!("bisection bracket [{lo}, {hi}]"),
    })
}

/// Safeguarded secant (Illinois false position) on a sign-changing bracket.
///
/// Converges superlinearly for smooth `f` and never leaves the bracket.
pub fn illinois<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NotBracketed {
            lo,
            hi,
            context: "false position".into(),
        });
    }
    // which end was retained on the previous step: -1 lo, +1 hi
    let mut side = 0;
    for _ in 0..max_iter {
        if (hi - lo).abs() <= xtol {
            return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        // fall back to bisection when the secant point is unusable
        if !x.is_finite() || x <= lo.min(hi) || x >= lo.max(hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        context: format!("false position bracket [{lo}, {hi}]"),
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_min<F>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > xtol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
