//! Smallest positive real roots on `(0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::MultiPoly;

pub const ROOT_TOL: f64 = 1e-12;

/// Grid used to look for the first sign change.
pub const SCAN_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    /// Final bracket; the function changes sign across it.
    pub lo: f64,
    pub hi: f64,
}

/// First sign change of `f` scanning `(0, 1]` left to right on a uniform
/// grid of `points` cells.
pub fn first_sign_change(f: impl Fn(f64) -> f64, points: usize) -> Option<(f64, f64)> {
    let mut lo = 0.0;
    let mut f_lo = f(lo);
    for i in 1..=points {
        let hi = i as f64 / points as f64;
        let f_hi = f(hi);
        if f_hi == 0.0 || (f_lo.signum() != f_hi.signum() && f_lo != 0.0) {
            return Some((lo, hi));
        }
        lo = hi;
        f_lo = f_hi;
    }
    None
}

/// Smallest root of `f` in `(0, 1]` by scan and bisection.
pub fn first_root(f: impl Fn(f64) -> f64, tol: f64) -> Result<Root> {
    let (mut lo, mut hi) = first_sign_change(&f, SCAN_POINTS).ok_or(Error::NoSignChange)?;
    let s_lo = f(lo).signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(Root { value: mid, lo: mid, hi: mid });
        }
        if fm.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Root {
        value: 0.5 * (lo + hi),
        lo,
        hi,
    })
}

/// Smallest positive root of a univariate polynomial with `p(0) > 0`,
/// bracketed by bisection and polished by Newton steps that stay inside the
/// bracket.
pub fn min_positive_root(p: &MultiPoly, tol: f64) -> Result<Root> {
    if p.nvars() != 1 {
        return Err(Error::ArityMismatch(1, p.nvars()));
    }
    if p.eval(&[0.0]) <= 0.0 {
        return Err(Error::InvalidInput(format!("polynomial must be positive at 0: {p}")));
    }
    let f = |t: f64| p.eval(&[t]);
    let mut root = first_root(f, tol.max(1e-15))?;
    let dp = p.derivative(0);
    let mut x = root.value;
    for _ in 0..8 {
        let d = dp.eval(&[x]);
        if d == 0.0 {
            break;
        }
        let next = x - f(x) / d;
        if !(root.lo..=root.hi).contains(&next) {
            break;
        }
        if (next - x).abs() < f64::EPSILON {
            x = next;
            break;
        }
        x = next;
    }
    root.value = x;
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear() {
        let r = min_positive_root(&MultiPoly::from_coeffs(&[1, -2]), ROOT_TOL).unwrap();
        assert_abs_diff_eq!(r.value, 0.5, epsilon = 1e-14);
    }

    #[test]
    fn quartic_with_residual() {
        let p = MultiPoly::from_coeffs(&[1, -3, 1, 0, 2]);
        let r = min_positive_root(&p, ROOT_TOL).unwrap();
        assert_abs_diff_eq!(r.value, 0.406_713_6, epsilon = 1e-7);
        assert!(p.eval(&[r.value]).abs() < 1e-10);
        assert!(p.eval(&[r.lo]) > 0.0 && p.eval(&[r.hi]) < 0.0);
    }

    #[test]
    fn no_root() {
        let p = MultiPoly::from_coeffs(&[1, 0, 1]);
        assert_eq!(min_positive_root(&p, ROOT_TOL).unwrap_err(), Error::NoSignChange);
        assert!(min_positive_root(&MultiPoly::from_coeffs(&[-1, 2]), ROOT_TOL).is_err());
        assert!(min_positive_root(&MultiPoly::one(2), ROOT_TOL).is_err());
    }

    #[test]
    fn closure_root() {
        let r = first_root(|t| 0.3 - t * t, 1e-13).unwrap();
        assert_abs_diff_eq!(r.value, 0.3f64.sqrt(), epsilon = 1e-12);
    }
}
