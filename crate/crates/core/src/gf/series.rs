//! Power-series coefficients of rational generating functions.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::cluster::RationalGF;
use super::poly::Exponents;
use crate::error::{Error, Result};

/// Coefficients of every monomial with total degree up to `degree_cap`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesTable {
    pub nvars: usize,
    pub degree_cap: u32,
    pub coeffs: BTreeMap<Exponents, BigInt>,
}

impl SeriesTable {
    pub fn get(&self, e: &[u32]) -> BigInt {
        self.coeffs.get(e).cloned().unwrap_or_default()
    }

    /// Univariate view `[c_0, ..., c_cap]`.
    pub fn univariate(&self) -> Result<Vec<BigInt>> {
        if self.nvars != 1 {
            return Err(Error::ArityMismatch(1, self.nvars));
        }
        Ok((0..=self.degree_cap).map(|d| self.get(&[d])).collect())
    }
}

/// Default bound on the number of monomials a table may hold.
pub const DEFAULT_MAX_TERMS: usize = 5_000_000;

fn count_monomials(nvars: usize, cap: u32) -> Option<usize> {
    // C(cap + nvars, nvars)
    let mut acc: u128 = 1;
    for i in 1..=nvars as u128 {
        acc = acc.checked_mul(cap as u128 + i)? / i;
    }
    usize::try_from(acc).ok()
}

/// All exponent vectors of total degree `d`, in lex order.
fn graded(nvars: usize, d: u32, out: &mut Vec<Exponents>) {
    fn go(prefix: &mut Exponents, left: u32, slots: usize, out: &mut Vec<Exponents>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=left).rev() {
            prefix.push(first);
            go(prefix, left - first, slots - 1, out);
            prefix.pop();
        }
    }
    if nvars == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return;
    }
    go(&mut Vec::with_capacity(nvars), d, nvars, out);
}

/// Expands `gf` up to total degree `degree_cap`. The denominator's constant
/// term must be `1` or `-1` so the coefficients stay integral.
pub fn series_coefficients(gf: &RationalGF, degree_cap: u32) -> Result<SeriesTable> {
    series_coefficients_capped(gf, degree_cap, DEFAULT_MAX_TERMS)
}

pub fn series_coefficients_capped(gf: &RationalGF, degree_cap: u32, max_terms: usize) -> Result<SeriesTable> {
    let nvars = gf.nvars();
    let size = count_monomials(nvars, degree_cap).unwrap_or(usize::MAX);
    if size > max_terms {
        return Err(Error::CapExceeded {
            what: "series monomials",
            requested: size,
            cap: max_terms,
        });
    }
    let c0 = gf.denominator.constant_term();
    let sign = if c0 == BigInt::one() {
        BigInt::one()
    } else if c0 == -BigInt::one() {
        -BigInt::one()
    } else {
        return Err(Error::NonUnitConstantTerm(c0.to_string()));
    };
    let den: Vec<(&Exponents, &BigInt)> = gf
        .denominator
        .terms()
        .iter()
        .filter(|(e, _)| e.iter().any(|&d| d > 0))
        .collect();

    // D * F = N, so F_e = sign * (N_e - sum_{d != 0} D_d F_{e - d})
    let mut f: HashMap<Exponents, BigInt> = HashMap::with_capacity(size);
    let mut layer = Vec::new();
    for total in 0..=degree_cap {
        layer.clear();
        graded(nvars, total, &mut layer);
        for e in &layer {
            let mut acc = gf.numerator.coeff(e);
            for (d, c) in &den {
                if d.iter().zip(e).all(|(a, b)| a <= b) {
                    let prev: Exponents = e.iter().zip(d.iter()).map(|(a, b)| a - b).collect();
                    if let Some(v) = f.get(&prev) {
                        acc -= *c * v;
                    }
                }
            }
            if !acc.is_zero() {
                f.insert(e.clone(), &sign * acc);
            }
        }
    }
    Ok(SeriesTable {
        nvars,
        degree_cap,
        coeffs: f.into_iter().collect(),
    })
}
