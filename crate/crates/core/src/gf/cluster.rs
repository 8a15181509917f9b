//! Goulden-Jackson cluster method.
//!
//! For a forbidden set `B` with letter weights `w`, the generating function
//! of strings avoiding every word of `B` is `1 / (1 - sum_a w(a) - C)` with
//! `C = sum_v C_v` and, for each `v` in `B`,
//!
//! ```text
//! C_v = -w(v) - sum_{u in B} sum_{overlaps} w(v without the overlap) * C_u
//! ```
//!
//! where an overlap is a proper, non-empty suffix of `u` equal to a prefix
//! of `v`. The system is triangular along the strongly connected components
//! of the overlap graph, so it is solved one component at a time.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::poly::{Exponents, MultiPoly, WeightAssignment};
use crate::error::{Error, Result};
use crate::game::Move;
use crate::relations::ForbiddenWordSet;

/// Assignment of a monomial to each letter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LetterWeights {
    nvars: usize,
    letters: Vec<Exponents>,
}

impl LetterWeights {
    pub fn new(nvars: usize, letters: Vec<Exponents>) -> Result<Self> {
        if letters.iter().any(|e| e.len() != nvars) {
            return Err(Error::ArityMismatch(nvars, letters.iter().map(Vec::len).find(|&l| l != nvars).unwrap()));
        }
        Ok(LetterWeights { nvars, letters })
    }

    /// Every letter weighs `x`.
    pub fn uniform(alphabet: usize) -> Self {
        LetterWeights {
            nvars: 1,
            letters: vec![vec![1]; alphabet],
        }
    }

    /// Letter `i` weighs `x_i`.
    pub fn per_letter(alphabet: usize) -> Self {
        Self::identified(&(0..alphabet).collect::<Vec<_>>(), alphabet).expect("identity map")
    }

    /// Letter `i` weighs `x_{map[i]}`.
    pub fn identified(map: &[usize], nvars: usize) -> Result<Self> {
        let letters = map
            .iter()
            .map(|&j| {
                if j >= nvars {
                    return Err(Error::InvalidInput(format!("variable {j} out of range")));
                }
                let mut e = vec![0; nvars];
                e[j] = 1;
                Ok(e)
            })
            .collect::<Result<_>>()?;
        Ok(LetterWeights { nvars, letters })
    }

    /// Letter `i` weighs `x^{alpha_i}`.
    pub fn weighted(weights: &WeightAssignment) -> Self {
        LetterWeights {
            nvars: 1,
            letters: weights.alphas.iter().map(|&a| vec![a]).collect(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn alphabet_size(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, m: Move) -> &Exponents {
        &self.letters[m.index() - 1]
    }

    pub fn exponents_of(&self, word: &[Move]) -> Exponents {
        let mut e = vec![0; self.nvars];
        for &m in word {
            for (a, b) in e.iter_mut().zip(self.letter(m)) {
                *a += b;
            }
        }
        e
    }

    fn monomial(&self, word: &[Move]) -> MultiPoly {
        MultiPoly::monomial(self.nvars, self.exponents_of(word), 1)
    }

    /// `sum_a w(a)`.
    pub fn letter_sum(&self) -> MultiPoly {
        let mut s = MultiPoly::zero(self.nvars);
        for e in &self.letters {
            s = &s + &MultiPoly::monomial(self.nvars, e.clone(), 1);
        }
        s
    }

    fn check_words(&self, forbidden: &ForbiddenWordSet) -> Result<()> {
        let k = self.alphabet_size().saturating_sub(1);
        match forbidden.words().iter().find(|w| !w.fits(k)) {
            Some(w) => Err(Error::InvalidInput(format!(
                "forbidden word {w} uses letters outside an alphabet of size {}",
                self.alphabet_size()
            ))),
            None => Ok(()),
        }
    }
}

/// `numerator / denominator` with a denominator whose constant term is
/// nonzero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalGF {
    pub numerator: MultiPoly,
    pub denominator: MultiPoly,
}

impl RationalGF {
    pub fn new(numerator: MultiPoly, denominator: MultiPoly) -> Result<Self> {
        numerator.check_arity(&denominator)?;
        if denominator.constant_term() == BigInt::from(0) {
            return Err(Error::InvalidInput("denominator has zero constant term".into()));
        }
        Ok(RationalGF { numerator, denominator })
    }

    /// `1 / den`.
    pub fn reciprocal(den: MultiPoly) -> Result<Self> {
        Self::new(MultiPoly::one(den.nvars()), den)
    }

    pub fn nvars(&self) -> usize {
        self.denominator.nvars()
    }

    pub fn has_unit_numerator(&self) -> bool {
        self.numerator == MultiPoly::one(self.nvars())
    }

    pub fn substitute(&self, weights: &WeightAssignment) -> Result<Self> {
        Self::new(self.numerator.substitute(weights)?, self.denominator.substitute(weights)?)
    }

    pub fn merge_variables(&self, map: &[usize], new_nvars: usize) -> Result<Self> {
        Self::new(
            self.numerator.merge_variables(map, new_nvars)?,
            self.denominator.merge_variables(map, new_nvars)?,
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.numerator.eval(x) / self.denominator.eval(x)
    }
}

/// One overlap: a suffix of `from` equals a prefix of `to`; `tail` is the
/// part of `to` after the overlap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlap {
    pub from: usize,
    pub to: usize,
    pub tail: Exponents,
}

/// Overlap structure of a forbidden set, grouped into strongly connected
/// components listed so that every overlap goes from an earlier component
/// to a later one or stays inside one.
#[derive(Debug, Clone)]
pub struct OverlapGraph {
    pub word_exponents: Vec<Exponents>,
    pub overlaps: Vec<Overlap>,
    pub components: Vec<Vec<usize>>,
    /// Whether each component carries a cycle (size above one or a self
    /// overlap).
    pub cyclic: Vec<bool>,
    incoming: Vec<Vec<usize>>,
}

impl OverlapGraph {
    pub fn new(weights: &LetterWeights, forbidden: &ForbiddenWordSet) -> Result<Self> {
        weights.check_words(forbidden)?;
        let words = forbidden.words();
        let digits: Vec<Vec<u8>> = words.iter().map(|w| w.as_digits()).collect();
        let mut overlaps = Vec::new();
        for (i, u) in digits.iter().enumerate() {
            for (j, v) in digits.iter().enumerate() {
                for t in 1..u.len().min(v.len()) {
                    if u[u.len() - t..] == v[..t] {
                        overlaps.push(Overlap {
                            from: i,
                            to: j,
                            tail: weights.exponents_of(&words[j].moves()[t..]),
                        });
                    }
                }
            }
        }
        let mut graph = DiGraph::<(), ()>::new();
        let nodes: Vec<_> = (0..words.len()).map(|_| graph.add_node(())).collect();
        let mut self_loop = vec![false; words.len()];
        for o in &overlaps {
            graph.update_edge(nodes[o.from], nodes[o.to], ());
            if o.from == o.to {
                self_loop[o.from] = true;
            }
        }
        let mut components: Vec<Vec<usize>> = tarjan_scc(&graph)
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                c.sort_unstable();
                c
            })
            .collect();
        components.reverse();
        let cyclic = components.iter().map(|c| c.len() > 1 || self_loop[c[0]]).collect();
        let mut incoming = vec![Vec::new(); words.len()];
        for (idx, o) in overlaps.iter().enumerate() {
            incoming[o.to].push(idx);
        }
        Ok(OverlapGraph {
            word_exponents: words.iter().map(|w| weights.exponents_of(w.moves())).collect(),
            overlaps,
            components,
            cyclic,
            incoming,
        })
    }

    pub fn largest_cyclic_component(&self) -> usize {
        self.components
            .iter()
            .zip(&self.cyclic)
            .filter(|(_, &c)| c)
            .map(|(c, _)| c.len())
            .max()
            .unwrap_or(0)
    }
}

/// Exact cluster generating function. Common factors between numerator and
/// denominator are removed where found: the component determinants are
/// tried as divisors, and univariate results are reduced by their gcd.
pub fn cluster_gf(weights: &LetterWeights, forbidden: &ForbiddenWordSet) -> Result<RationalGF> {
    let graph = OverlapGraph::new(weights, forbidden)?;
    let nv = weights.nvars();
    let mono = |e: &Exponents| MultiPoly::monomial(nv, e.clone(), 1);

    // C_v = numer[v] / common
    let mut common = MultiPoly::one(nv);
    let mut numer: Vec<MultiPoly> = vec![MultiPoly::zero(nv); graph.word_exponents.len()];
    let mut determinants = Vec::new();

    for (comp, &cyclic) in graph.components.iter().zip(&graph.cyclic) {
        let local = |v: usize| comp.binary_search(&v).ok();
        // right-hand sides over the current common denominator
        let rhs: Vec<MultiPoly> = comp
            .iter()
            .map(|&v| {
                let mut b = -&(&mono(&graph.word_exponents[v]) * &common);
                for &o in &graph.incoming[v] {
                    let o = &graph.overlaps[o];
                    if local(o.from).is_none() {
                        b = &b - &(&mono(&o.tail) * &numer[o.from]);
                    }
                }
                b
            })
            .collect();
        if !cyclic {
            numer[comp[0]] = rhs.into_iter().next().unwrap();
            continue;
        }
        let s = comp.len();
        let mut m: Vec<Vec<MultiPoly>> = (0..s)
            .map(|i| {
                let mut row = vec![MultiPoly::zero(nv); s + 1];
                row[i] = MultiPoly::one(nv);
                row[s] = rhs[i].clone();
                row
            })
            .collect();
        for (i, &v) in comp.iter().enumerate() {
            for &o in &graph.incoming[v] {
                let o = &graph.overlaps[o];
                if let Some(j) = local(o.from) {
                    m[i][j] = &m[i][j] + &mono(&o.tail);
                }
            }
        }
        let (det, solution) = bareiss_solve(m);
        for x in numer.iter_mut() {
            if !x.is_zero() {
                *x = &*x * &det;
            }
        }
        for (&v, x) in comp.iter().zip(solution) {
            numer[v] = x;
        }
        common = &common * &det;
        determinants.push(det);
    }

    let total = numer.iter().fold(MultiPoly::zero(nv), |acc, x| &acc + x);
    let one_minus = &MultiPoly::one(nv) - &weights.letter_sum();
    let mut num = common.clone();
    let mut den = &(&common * &one_minus) - &total;
    for d in &determinants {
        if d.total_degree() == Some(0) {
            continue;
        }
        while let (Some(a), Some(b)) = (num.div_exact(d), den.div_exact(d)) {
            num = a;
            den = b;
        }
    }
    if nv == 1 && num.total_degree() > Some(0) {
        let g = num.univariate_gcd(&den)?;
        if g.total_degree() > Some(0) {
            num = num.div_exact(&g).expect("gcd divides");
            den = den.div_exact(&g).expect("gcd divides");
        }
    }
    let c = den.constant_term();
    if c.is_negative() {
        num = -&num;
        den = -&den;
    }
    if c.abs() != BigInt::one() {
        // the constant term is 1 for any cluster system; keep the form honest
        return Err(Error::NonUnitConstantTerm(c.to_string()));
    }
    RationalGF::new(num, den)
}

/// Fraction-free elimination on `[A | b]` with `A(0) = I`, so every
/// leading principal minor has constant term 1 and no pivoting is needed.
/// Returns `det A` and the numerators `det A * A^{-1} b`.
fn bareiss_solve(mut m: Vec<Vec<MultiPoly>>) -> (MultiPoly, Vec<MultiPoly>) {
    let s = m.len();
    let nv = m[0][0].nvars();
    let mut prev = MultiPoly::one(nv);
    for k in 0..s {
        for i in k + 1..s {
            for j in k + 1..=s {
                let t = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = t.div_exact(&prev).expect("Bareiss division is exact");
            }
            m[i][k] = MultiPoly::zero(nv);
        }
        prev = m[k][k].clone();
    }
    let det = m[s - 1][s - 1].clone();
    let mut x = vec![MultiPoly::zero(nv); s];
    for i in (0..s).rev() {
        let mut acc = &det * &m[i][s];
        for j in i + 1..s {
            acc = &acc - &(&m[i][j] * &x[j]);
        }
        x[i] = acc.div_exact(&m[i][i]).expect("back substitution is exact");
    }
    (det, x)
}

/// `1 - sum_a w(a) + sum_{b in B} w(b)`: the cluster denominator with every
/// overlap ignored. Exact when no two forbidden words overlap.
pub fn single_word_denominator(weights: &LetterWeights, forbidden: &ForbiddenWordSet) -> Result<MultiPoly> {
    weights.check_words(forbidden)?;
    let mut p = &MultiPoly::one(weights.nvars()) - &weights.letter_sum();
    for w in forbidden.words() {
        p = &p + &weights.monomial(w.moves());
    }
    Ok(p)
}

/// Floating-point evaluation of the reciprocal `1 - sum_a w(a) - C` of the
/// cluster generating function, for forbidden sets whose exact form is too
/// large to expand.
#[derive(Debug, Clone)]
pub struct ClusterEvaluator {
    graph: OverlapGraph,
    letters: Vec<Exponents>,
    nvars: usize,
}

fn monomial_value(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(&d, &v)| v.powi(d as i32)).product()
}

/// `d x^e / d x_i`.
fn monomial_partial(e: &[u32], x: &[f64], i: usize) -> f64 {
    if e[i] == 0 {
        return 0.0;
    }
    let mut p = e[i] as f64;
    for (j, (&d, &v)) in e.iter().zip(x).enumerate() {
        p *= v.powi(if j == i { d as i32 - 1 } else { d as i32 });
    }
    p
}

impl ClusterEvaluator {
    pub fn new(weights: &LetterWeights, forbidden: &ForbiddenWordSet) -> Result<Self> {
        Ok(ClusterEvaluator {
            graph: OverlapGraph::new(weights, forbidden)?,
            letters: weights.letters.clone(),
            nvars: weights.nvars(),
        })
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn graph(&self) -> &OverlapGraph {
        &self.graph
    }

    /// Solves for every `C_v` at `x`.
    fn clusters(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.graph;
        let mut c = vec![0.0; g.word_exponents.len()];
        for (comp, &cyclic) in g.components.iter().zip(&g.cyclic) {
            let local = |v: usize| comp.binary_search(&v).ok();
            let mut rhs: Vec<f64> = comp.iter().map(|&v| -monomial_value(&g.word_exponents[v], x)).collect();
            let mut a = DMatrix::<f64>::identity(comp.len(), comp.len());
            for (i, &v) in comp.iter().enumerate() {
                for &o in &g.incoming[v] {
                    let o = &g.overlaps[o];
                    let t = monomial_value(&o.tail, x);
                    match local(o.from) {
                        Some(j) => a[(i, j)] += t,
                        None => rhs[i] -= t * c[o.from],
                    }
                }
            }
            if !cyclic {
                c[comp[0]] = rhs[0];
                continue;
            }
            let sol = a.lu().solve(&DVector::from_vec(rhs)).unwrap_or_else(|| DVector::from_element(comp.len(), f64::NAN));
            for (&v, val) in comp.iter().zip(sol.iter()) {
                c[v] = *val;
            }
        }
        c
    }

    /// `1 - sum_a w(a) - C` at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars, "evaluation point arity");
        let letters: f64 = self.letters.iter().map(|e| monomial_value(e, x)).sum();
        1.0 - letters - self.clusters(x).iter().sum::<f64>()
    }

    /// Value and gradient, the gradient by one adjoint solve.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(x.len(), self.nvars, "evaluation point arity");
        let g = &self.graph;
        let c = self.clusters(x);
        let n = c.len();
        // adjoint: (I + M)^T z = 1, M[v][u] = sum of overlap tails u -> v
        let mut outgoing: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (idx, o) in g.overlaps.iter().enumerate() {
            outgoing[o.from].push(idx);
        }
        let mut z = vec![0.0; n];
        for (comp, &cyclic) in g.components.iter().zip(&g.cyclic).rev() {
            let local = |v: usize| comp.binary_search(&v).ok();
            let mut rhs = vec![1.0; comp.len()];
            let mut at = DMatrix::<f64>::identity(comp.len(), comp.len());
            for (i, &u) in comp.iter().enumerate() {
                for &o in &outgoing[u] {
                    let o = &g.overlaps[o];
                    let t = monomial_value(&o.tail, x);
                    match local(o.to) {
                        Some(j) => at[(i, j)] += t,
                        None => rhs[i] -= t * z[o.to],
                    }
                }
            }
            if !cyclic {
                z[comp[0]] = rhs[0];
                continue;
            }
            let sol = at.lu().solve(&DVector::from_vec(rhs)).unwrap_or_else(|| DVector::from_element(comp.len(), f64::NAN));
            for (&u, val) in comp.iter().zip(sol.iter()) {
                z[u] = *val;
            }
        }
        let letters: f64 = self.letters.iter().map(|e| monomial_value(e, x)).sum();
        let value = 1.0 - letters - c.iter().sum::<f64>();
        let grad = (0..self.nvars)
            .map(|i| {
                let dl: f64 = self.letters.iter().map(|e| monomial_partial(e, x, i)).sum();
                // d(sum C)/dx_i = z . (db/dx_i - dM/dx_i C), b_v = -w(v)
                let mut dc = 0.0;
                for (v, e) in g.word_exponents.iter().enumerate() {
                    dc -= z[v] * monomial_partial(e, x, i);
                }
                for o in &g.overlaps {
                    dc -= z[o.to] * monomial_partial(&o.tail, x, i) * c[o.from];
                }
                -dl - dc
            })
            .collect();
        (value, grad)
    }
}
