//! Bracketed root finding: bisection safeguarding Newton steps.

use crate::error::{Error, Result};

/// Relative tolerance used throughout for monotone inversions.
pub const TOL_ROOT: f64 = 1e-12;

/// Finds a root of `f` inside `[lo, hi]`, where `f` returns the value and the
/// derivative. Newton steps that would leave the current bracket are replaced
/// by bisection.
pub fn bisect_newton<F>(f: F, mut lo: f64, mut hi: f64, tol_rel: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut flo, _) = f(lo);
    let (fhi, _) = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let tol = tol_rel * x.abs().max(1.0);
        let newton = x - fx / dfx;
        let next =
            if dfx != 0.0 && newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi) { newton } else { 0.5 * (lo + hi) };
        let step = (next - x).abs();
        x = next;
        if step <= 0.1 * tol || (hi - lo).abs() <= tol {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Bisection only, for targets without a convenient derivative.
pub fn bisect<F>(f: F, mut lo: f64, mut hi: f64, tol_abs: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::RootNotBracketed { lo, hi });
    }
    while (hi - lo).abs() > tol_abs {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
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
    Ok(0.5 * (lo + hi))
}

/// Index `i` with `y` between `ys[i]` and `ys[i + 1]` for a monotone table.
pub fn locate_monotone(ys: &[f64], y: f64) -> Option<usize> {
    let n = ys.len();
    if n < 2 {
        return None;
    }
    let increasing = ys[n - 1] >= ys[0];
    let (first, last) = (ys[0], ys[n - 1]);
    let inside = if increasing { y >= first && y <= last } else { y <= first && y >= last };
    if !inside {
        return None;
    }
    let (mut a, mut b) = (0usize, n - 1);
    while b - a > 1 {
        let m = (a + b) / 2;
        let below = if increasing { ys[m] <= y } else { ys[m] >= y };
        if below {
            a = m;
        } else {
            b = m;
        }
    }
    Some(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_cube_root() {
        let r = bisect_newton(|x| (x * x * x - 2.0, 3.0 * x * x), 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-14);
    }

    #[test]
    fn unbracketed_is_an_error() {
        assert!(bisect_newton(|x| (x * x + 1.0, 2.0 * x), -1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn locate_handles_both_orientations() {
        let up = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(locate_monotone(&up, 2.5), Some(2));
        let down = [3.0, 2.0, 1.0, 0.0];
        assert_eq!(locate_monotone(&down, 2.5), Some(0));
        assert_eq!(locate_monotone(&down, 4.0), None);
    }
}
