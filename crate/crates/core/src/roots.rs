//! Safeguarded Newton iteration for increasing functions.

use crate::error::{Error, Result};

/// Root of `f` in `[lo, hi]` where `f(lo) < 0 < f(hi)`, given `f` and `f'`.
/// Newton steps that leave the bracket are replaced by bisection.
pub fn newton_bracketed<F: Fn(f64) -> (f64, f64)>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut x = hi;
    for _ in 0..500 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / dfx;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= rel_tol * x.abs().max(f64::MIN_POSITIVE) || hi - lo <= rel_tol * hi.abs() {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence(format!("root bracket [{lo:e}, {hi:e}] did not shrink")))
}

/// Root of an increasing function by bisection only.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = newton_bracketed(|x| (x * x - 2.0, 2.0 * x), 0.0, 4.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
        let b = bisect(|x| x * x * x - 3.0, 0.0, 2.0);
        assert!((b - 3f64.cbrt()).abs() < 1e-15);
    }
}
