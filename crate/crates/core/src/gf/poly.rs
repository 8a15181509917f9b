//! Sparse multivariate polynomials with exact integer coefficients.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Exponents = Vec<u32>;

/// Polynomial in a fixed number of variables. Terms are keyed by exponent
/// vector; zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Exponents, BigInt>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        MultiPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, 1)
    }

    pub fn constant(nvars: usize, c: impl Into<BigInt>) -> Self {
        Self::monomial(nvars, vec![0; nvars], c)
    }

    /// The variable `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars, "variable {i} out of range for {nvars} variables");
        let mut e = vec![0; nvars];
        e[i] = 1;
        Self::monomial(nvars, e, 1)
    }

    pub fn monomial(nvars: usize, exponents: Exponents, c: impl Into<BigInt>) -> Self {
        assert_eq!(exponents.len(), nvars, "exponent vector arity");
        let mut p = Self::zero(nvars);
        p.add_term(exponents, c.into());
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated exponents.
    pub fn from_terms<C: Into<BigInt>>(
        nvars: usize,
        terms: impl IntoIterator<Item = (Exponents, C)>,
    ) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::ArityMismatch(nvars, e.len()));
            }
            p.add_term(e, c.into());
        }
        Ok(p)
    }

    /// Univariate polynomial from coefficients of `1, x, x^2, ...`.
    pub fn from_coeffs<C: Into<BigInt> + Clone>(coeffs: &[C]) -> Self {
        let mut p = Self::zero(1);
        for (d, c) in coeffs.iter().enumerate() {
            p.add_term(vec![d as u32], c.clone().into());
        }
        p
    }

    fn add_term(&mut self, e: Exponents, c: BigInt) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, BigInt> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[u32]) -> BigInt {
        self.terms.get(e).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> BigInt {
        self.coeff(&vec![0; self.nvars])
    }

    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|e| e.iter().sum()).max()
    }

    /// Univariate coefficients `[c_0, c_1, ..., c_deg]`.
    pub fn univariate_coeffs(&self) -> Result<Vec<BigInt>> {
        if self.nvars != 1 {
            return Err(Error::ArityMismatch(1, self.nvars));
        }
        let deg = self.total_degree().unwrap_or(0) as usize;
        let mut out = vec![BigInt::zero(); deg + 1];
        for (e, c) in &self.terms {
            out[e[0] as usize] = c.clone();
        }
        Ok(out)
    }

    pub fn check_arity(&self, other: &MultiPoly) -> Result<()> {
        if self.nvars == other.nvars {
            Ok(())
        } else {
            Err(Error::ArityMismatch(self.nvars, other.nvars))
        }
    }

    pub fn scale(&self, c: &BigInt) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(self.nvars);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Applies `x_i -> y_{map[i]}` into a ring with `new_nvars` variables.
    pub fn merge_variables(&self, map: &[usize], new_nvars: usize) -> Result<MultiPoly> {
        if map.len() != self.nvars {
            return Err(Error::ArityMismatch(self.nvars, map.len()));
        }
        if let Some(&bad) = map.iter().find(|&&j| j >= new_nvars) {
            return Err(Error::InvalidInput(format!("target variable {bad} out of range")));
        }
        let mut out = MultiPoly::zero(new_nvars);
        for (e, c) in &self.terms {
            let mut ne = vec![0; new_nvars];
            for (i, &d) in e.iter().enumerate() {
                ne[map[i]] += d;
            }
            out.add_term(ne, c.clone());
        }
        Ok(out)
    }

    /// Univariate image under `x_i -> x^{alpha_i}`.
    pub fn substitute(&self, weights: &WeightAssignment) -> Result<MultiPoly> {
        if weights.alphas.len() != self.nvars {
            return Err(Error::ArityMismatch(self.nvars, weights.alphas.len()));
        }
        let mut out = MultiPoly::zero(1);
        for (e, c) in &self.terms {
            let d: u32 = e.iter().zip(&weights.alphas).map(|(a, b)| a * b).sum();
            out.add_term(vec![d], c.clone());
        }
        Ok(out)
    }

    pub fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut ne = e.clone();
                ne[i] -= 1;
                out.add_term(ne, c * BigInt::from(e[i]));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "evaluation point arity");
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e.iter().zip(x).map(|(&d, &xi)| xi.powi(d as i32)).product();
                c.to_f64().unwrap_or(f64::NAN) * m
            })
            .sum()
    }

    /// Exact quotient `self / divisor`, or `None` if the division leaves a
    /// remainder. Uses the lex leading term.
    pub fn div_exact(&self, divisor: &MultiPoly) -> Option<MultiPoly> {
        assert_eq!(self.nvars, divisor.nvars, "division arity");
        let (lead_e, lead_c) = divisor.terms.iter().next_back()?;
        let mut rem = self.clone();
        let mut quot = MultiPoly::zero(self.nvars);
        while let Some((e, c)) = rem.terms.iter().next_back() {
            if e.iter().zip(lead_e).any(|(a, b)| a < b) {
                return None;
            }
            let (q, r) = c.div_rem(lead_c);
            if !r.is_zero() {
                return None;
            }
            let qe: Exponents = e.iter().zip(lead_e).map(|(a, b)| a - b).collect();
            for (de, dc) in &divisor.terms {
                let e: Exponents = de.iter().zip(&qe).map(|(a, b)| a + b).collect();
                rem.add_term(e, -(dc * &q));
            }
            quot.add_term(qe, q);
        }
        Some(quot)
    }

    /// Content: gcd of all coefficients, signed like the lex leading term.
    pub fn content(&self) -> BigInt {
        let g = self.terms.values().fold(BigInt::zero(), |g, c| g.gcd(c));
        match self.terms.values().next_back() {
            Some(lead) if lead.is_negative() => -g,
            _ => g,
        }
    }

    /// Univariate gcd over the integers (primitive remainder sequence),
    /// normalized to a positive leading coefficient.
    pub fn univariate_gcd(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_arity(other)?;
        if self.nvars != 1 {
            return Err(Error::ArityMismatch(1, self.nvars));
        }
        let primitive = |p: &MultiPoly| {
            if p.is_zero() {
                p.clone()
            } else {
                p.div_exact(&MultiPoly::constant(1, p.content())).expect("content divides")
            }
        };
        let cont = self.content().abs().gcd(&other.content().abs());
        let (mut a, mut b) = (primitive(self), primitive(other));
        if a.total_degree() < b.total_degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = pseudo_remainder(&a, &b);
            a = b;
            b = primitive(&r);
        }
        if a.is_zero() {
            return Ok(a);
        }
        Ok(a.scale(&cont))
    }
}

fn pseudo_remainder(a: &MultiPoly, b: &MultiPoly) -> MultiPoly {
    let db = b.total_degree().unwrap_or(0);
    let lb = b.terms.values().next_back().cloned().unwrap_or_else(BigInt::one);
    let mut r = a.clone();
    while let Some(dr) = r.total_degree() {
        if r.is_zero() || dr < db {
            break;
        }
        let lr = r.terms.values().next_back().unwrap().clone();
        let shift = MultiPoly::monomial(1, vec![dr - db], lr);
        r = &r.scale(&lb) - &(&shift * b);
    }
    r
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.nvars, rhs.nvars, "polynomial arity mismatch");
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&BigInt::from(-1))
    }
}

macro_rules! owned_ops {
    ($($tr:ident $f:ident),*) => {$(
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $f(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$f(&rhs)
            }
        }
    )*};
}
owned_ops!(Add add, Sub sub, Mul mul);

impl fmt::Display for MultiPoly {
    /// Graded, highest degree last: `1 - 3*x + x^2`. Variables print as `x`
    /// when univariate and `x1, x2, ...` otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut keys: Vec<&Exponents> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        for (n, e) in keys.into_iter().enumerate() {
            let c = &self.terms[e];
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .map(|(i, &d)| {
                    let name = if self.nvars == 1 { "x".to_string() } else { format!("x{}", i + 1) };
                    if d == 1 {
                        name
                    } else {
                        format!("{name}^{d}")
                    }
                })
                .collect();
            let mag = c.abs();
            let body = match (mono.is_empty(), mag.is_one()) {
                (true, _) => mag.to_string(),
                (false, true) => mono.join("*"),
                (false, false) => format!("{mag}*{}", mono.join("*")),
            };
            match (n, c.is_negative()) {
                (0, false) => write!(f, "{body}")?,
                (0, true) => write!(f, "-{body}")?,
                (_, false) => write!(f, " + {body}")?,
                (_, true) => write!(f, " - {body}")?,
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exponents: Exponents,
    coeff: serde_json::Value,
}

impl Serialize for MultiPoly {
    /// Array of `{exponents, coeff}` sorted by exponent vector. Coefficients
    /// that fit in an `i64` are numbers, larger ones decimal strings. The
    /// arity is read back from the exponent vectors, so the zero polynomial
    /// round-trips with no variables.
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let terms: Vec<TermJson> = self
            .terms
            .iter()
            .map(|(e, c)| TermJson {
                exponents: e.clone(),
                coeff: match c.to_i64() {
                    Some(v) => serde_json::Value::from(v),
                    None => serde_json::Value::String(c.to_string()),
                },
            })
            .collect();
        terms.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MultiPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = Vec::<TermJson>::deserialize(d)?;
        let nvars = wire.first().map_or(0, |t| t.exponents.len());
        let mut terms = Vec::with_capacity(wire.len());
        for t in wire {
            let c: BigInt = match &t.coeff {
                serde_json::Value::Number(n) => n
                    .as_i64()
                    .map(BigInt::from)
                    .ok_or_else(|| D::Error::custom("coefficient must be an integer"))?,
                serde_json::Value::String(s) => s.parse().map_err(D::Error::custom)?,
                _ => return Err(D::Error::custom("coefficient must be a number or string")),
            };
            terms.push((t.exponents, c));
        }
        MultiPoly::from_terms(nvars, terms).map_err(D::Error::custom)
    }
}

/// Per-letter positive integer exponents for `x_i -> x^{alpha_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WeightAssignment {
    pub alphas: Vec<u32>,
}

impl WeightAssignment {
    pub fn new(alphas: Vec<u32>) -> Result<Self> {
        if alphas.is_empty() || alphas.contains(&0) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        Ok(WeightAssignment { alphas })
    }

    pub fn uniform(n: usize) -> Self {
        WeightAssignment { alphas: vec![1; n] }
    }

    pub fn total(&self) -> u32 {
        self.alphas.iter().sum()
    }
}
