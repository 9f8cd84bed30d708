//! Scalar root finding and one-dimensional search used by the solvers.

use crate::error::{Error, Result};

/// Inverse golden ratio, `(sqrt(5) - 1) / 2`.
pub(crate) const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Bisection on a bracketed sign change of `f`.
///
/// Iterates until the bracket cannot shrink any further in floating point,
/// so the returned point is accurate to a few ulps of the root.
pub(crate) fn bisect<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Solver(format!(
            "root not bracketed on [{lo:e}, {hi:e}]: f = ({f_lo:e}, {f_hi:e})"
        )));
    }
    let lo_negative = f_lo < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if (f_mid < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Smallest `hi >= start` (by doubling) with `pred(hi)` true.
pub(crate) fn expand_upper<P>(start: f64, pred: P) -> Result<f64>
where
    P: Fn(f64) -> bool,
{
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..2100 {
        if pred(hi) {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Solver(format!(
        "could not bracket from {start:e}: predicate never held"
    )))
}

/// Result of a golden-section maximization.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Maximum {
    pub x: f64,
    pub value: f64,
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`. The endpoints are compared
/// against the interior estimate so that monotone segments return the
/// better endpoint. Flat brackets (spread within `1e-12` relative) return
/// the bracket midpoint.
pub(crate) fn golden_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Maximum>
where
    F: Fn(f64) -> Result<f64>,
{
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut f_c = f(c)?;
    let mut f_d = f(d)?;
    while b - a > tol {
        let spread = (f_c - f_d).abs();
        let scale = f_c.abs().max(f_d.abs()).max(f64::MIN_POSITIVE);
        if spread <= 1e-12 * scale && (f_lo - f_c).abs() <= 1e-12 * scale
            && (f_hi - f_c).abs() <= 1e-12 * scale
        {
            let mid = 0.5 * (a + b);
            return Ok(Maximum { x: mid, value: f(mid)? });
        }
        if f_c >= f_d {
            b = d;
            d = c;
            f_d = f_c;
            c = b - INV_PHI * (b - a);
            f_c = f(c)?;
        } else {
            a = c;
            c = d;
            f_c = f_d;
            d = a + INV_PHI * (b - a);
            f_d = f(d)?;
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = Maximum { x: mid, value: f(mid)? };
    for (x, v) in [(lo, f_lo), (hi, f_hi)] {
        if v > best.value {
            best = Maximum { x, value: v };
        }
    }
    Ok(best)
}

/// `2^x - 1` without cancellation near zero.
#[inline]
pub(crate) fn exp2_m1(x: f64) -> f64 {
    (x * std::f64::consts::LN_2).exp_m1()
}
