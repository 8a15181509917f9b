//! Growth rates and lower-bound constants.
//!
//! If at most `O(b^n)` permutations of length `n` are generable by `ell`
//! stacks, then `k_n >= (ell / log2 b) * log2 n + O(1)`.

pub mod optimize;
pub mod roots;
pub mod weights;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{MultiPoly, RationalGF};

pub use optimize::{optimize_surface, optimize_weights, OptimizationResult, OptimizeOptions, PolySurface, Surface};
pub use roots::{first_root, min_positive_root, Root, ROOT_TOL};
pub use weights::rationalize_weights;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub lambda_min: f64,
    pub per_string_growth: f64,
    /// Exponent of `x` carried by one element.
    pub letters_per_element: u32,
    pub b: f64,
}

impl GrowthReport {
    pub fn from_lambda(lambda_min: f64, letters_per_element: u32) -> Result<Self> {
        if !(lambda_min > 0.0 && lambda_min < 1.0) {
            return Err(Error::InvalidInput(format!("dominant root {lambda_min} outside (0, 1)")));
        }
        Ok(GrowthReport {
            lambda_min,
            per_string_growth: 1.0 / lambda_min,
            letters_per_element,
            b: lambda_min.powi(-(letters_per_element as i32)),
        })
    }
}

/// Growth per element of a univariate generating function: the dominant
/// root `lambda` of the denominator gives `b = lambda^{-letters_per_element}`.
pub fn growth_per_element(gf: &RationalGF, letters_per_element: u32) -> Result<GrowthReport> {
    growth_of_denominator(&gf.denominator, letters_per_element)
}

pub fn growth_of_denominator(den: &MultiPoly, letters_per_element: u32) -> Result<GrowthReport> {
    let root = min_positive_root(den, ROOT_TOL)?;
    GrowthReport::from_lambda(root.value, letters_per_element)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub ell: u32,
    pub b: f64,
    pub constant: f64,
}

/// `ell / log2 b`.
pub fn bound_constant(ell: u32, b: f64) -> Result<BoundReport> {
    if ell == 0 || !(b > 1.0) {
        return Err(Error::InvalidInput(format!("need ell >= 1 and b > 1, got ell={ell}, b={b}")));
    }
    Ok(BoundReport {
        ell,
        b,
        constant: ell as f64 / b.log2(),
    })
}
