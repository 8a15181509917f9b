//! Weight optimization on the zero set of a denominator.
//!
//! Each point `x` with `g(x) = 0` in the open unit box gives the growth
//! `beta = prod_j x_j^{-m_j}`, where `m_j` counts the letters sharing
//! variable `j`. The smallest such `beta` over the part of the zero set
//! that is seen first from the origin is the best available growth rate.
//!
//! Starts come from rays `x_j = t^{a_j}`: on each ray `t` is the first root
//! of `g`, giving `beta = t^{-sum m_j a_j}`. The best rays are then polished
//! by damped Newton on the Lagrange system in log coordinates,
//!
//! ```text
//! m_j + mu * x_j * dg/dx_j = 0,   g(x) = 0.
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::roots::{first_root, ROOT_TOL};
use crate::error::{Error, Result};
use crate::gf::{ClusterEvaluator, MultiPoly};

/// A smooth function on the positive orthant whose zero set bounds the
/// region of convergence.
pub trait Surface: Sync {
    fn nvars(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// Central differences of the gradient unless overridden.
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.nvars();
        let mut h = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = 1e-6 * x[j].abs().max(1e-3);
            let (mut a, mut b) = (x.to_vec(), x.to_vec());
            a[j] += step;
            b[j] -= step;
            let (ga, gb) = (self.gradient(&a), self.gradient(&b));
            for i in 0..n {
                h[(i, j)] = (ga[i] - gb[i]) / (2.0 * step);
            }
        }
        0.5 * (&h + h.transpose())
    }
}

/// Polynomial surface with exact derivatives.
pub struct PolySurface {
    poly: MultiPoly,
    grad: Vec<MultiPoly>,
    hess: Vec<Vec<MultiPoly>>,
}

impl PolySurface {
    pub fn new(poly: MultiPoly) -> Self {
        let n = poly.nvars();
        let grad: Vec<MultiPoly> = (0..n).map(|i| poly.derivative(i)).collect();
        let hess = grad.iter().map(|g| (0..n).map(|j| g.derivative(j)).collect()).collect();
        PolySurface { poly, grad, hess }
    }

    pub fn poly(&self) -> &MultiPoly {
        &self.poly
    }
}

impl Surface for PolySurface {
    fn nvars(&self) -> usize {
        self.poly.nvars()
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.poly.eval(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.nvars();
        DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval(x))
    }
}

impl Surface for ClusterEvaluator {
    fn nvars(&self) -> usize {
        ClusterEvaluator::nvars(self)
    }
    fn value(&self, x: &[f64]) -> f64 {
        ClusterEvaluator::value(self, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.value_and_gradient(x).1
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OptimizeOptions {
    /// Target for the Lagrange residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Ray exponents are `exp(u)` for `u` on this many grid steps per side.
    pub ray_grid: usize,
    pub ray_span: f64,
    /// Number of best rays handed to Newton.
    pub starts: usize,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            tol: 1e-10,
            max_iterations: 100,
            ray_grid: 12,
            ray_span: 1.5,
            starts: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    /// One coordinate per original variable.
    pub point: Vec<f64>,
    /// `prod_j x_j^{-1}` over the original variables.
    pub objective: f64,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
    pub multiplier: f64,
}

/// Splits an identification map such as `[0, 1, 0]` into group
/// multiplicities, checking that the groups are numbered `0..g`.
pub fn multiplicities(map: &[usize]) -> Result<Vec<usize>> {
    let groups = map.iter().max().map_or(0, |&m| m + 1);
    let mut m = vec![0; groups];
    for &g in map {
        m[g] += 1;
    }
    if m.contains(&0) {
        return Err(Error::InvalidInput(format!("identification {map:?} skips a group")));
    }
    Ok(m)
}

/// Optimizes over the zero set of `den`. `identifications[i]` names the
/// shared variable of letter `i`; `None` gives every letter its own
/// variable. `den` may be written in the letter variables, in which case the
/// identification is applied to it, or already in the shared variables.
pub fn optimize_weights(den: &MultiPoly, identifications: Option<&[usize]>, tol: f64) -> Result<OptimizationResult> {
    let map: Vec<usize> = match identifications {
        Some(m) => m.to_vec(),
        None => (0..den.nvars()).collect(),
    };
    let mult = multiplicities(&map)?;
    let merged = if den.nvars() == map.len() {
        den.merge_variables(&map, mult.len())?
    } else if den.nvars() == mult.len() {
        den.clone()
    } else {
        return Err(Error::ArityMismatch(den.nvars(), map.len()));
    };
    let opts = OptimizeOptions {
        tol,
        ..OptimizeOptions::default()
    };
    let reduced = optimize_surface(&PolySurface::new(merged), &mult, &opts)?;
    Ok(expand(&reduced, &map))
}

/// Maps a result over shared variables back to the original variables.
pub fn expand(reduced: &OptimizationResult, map: &[usize]) -> OptimizationResult {
    OptimizationResult {
        point: map.iter().map(|&g| reduced.point[g]).collect(),
        ..reduced.clone()
    }
}

fn ray_point(t: f64, a: &[f64]) -> Vec<f64> {
    a.iter().map(|&e| t.powf(e)).collect()
}

/// First root of the surface along `x_j = t^{a_j}`.
pub fn ray_root(surface: &dyn Surface, a: &[f64]) -> Result<f64> {
    Ok(first_root(|t| surface.value(&ray_point(t, a)), ROOT_TOL)?.value)
}

fn objective(x: &[f64], mult: &[usize]) -> f64 {
    (-x.iter().zip(mult).map(|(&v, &m)| m as f64 * v.ln()).sum::<f64>()).exp()
}

fn ray_directions(n: usize, opts: &OptimizeOptions) -> Vec<Vec<f64>> {
    let steps: Vec<f64> = (0..=2 * opts.ray_grid)
        .map(|i| opts.ray_span * (i as f64 / opts.ray_grid as f64 - 1.0))
        .collect();
    let mut dirs = vec![vec![1.0]];
    for _ in 1..n {
        dirs = dirs
            .into_iter()
            .flat_map(|d| {
                steps.iter().map(move |&u| {
                    let mut d = d.clone();
                    d.push(u.exp());
                    d
                })
            })
            .collect();
    }
    dirs
}

struct Candidate {
    x: Vec<f64>,
    beta: f64,
}

/// Lagrange residual `F(y, mu)` in log coordinates.
fn lagrange_residual(surface: &dyn Surface, x: &[f64], mu: f64, mult: &[usize]) -> DVector<f64> {
    let n = x.len();
    let g = surface.gradient(x);
    let mut f = DVector::zeros(n + 1);
    for j in 0..n {
        f[j] = mult[j] as f64 + mu * x[j] * g[j];
    }
    f[n] = surface.value(x);
    f
}

fn initial_multiplier(surface: &dyn Surface, x: &[f64], mult: &[usize]) -> f64 {
    let g = surface.gradient(x);
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..x.len() {
        let s = x[j] * g[j];
        num -= mult[j] as f64 * s;
        den += s * s;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn newton(
    surface: &dyn Surface,
    start: &[f64],
    mult: &[usize],
    opts: &OptimizeOptions,
) -> Option<(Vec<f64>, f64, f64)> {
    let n = start.len();
    let mut y: Vec<f64> = start.iter().map(|v| v.ln()).collect();
    let to_x = |y: &[f64]| y.iter().map(|v| v.exp()).collect::<Vec<f64>>();
    let mut mu = initial_multiplier(surface, start, mult);
    let mut x = to_x(&y);
    let mut f = lagrange_residual(surface, &x, mu, mult);
    for _ in 0..opts.max_iterations {
        if f.amax() < opts.tol {
            return Some((x, mu, f.amax()));
        }
        let g = surface.gradient(&x);
        let h = surface.hessian(&x);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for j in 0..n {
            for k in 0..n {
                jac[(j, k)] = mu * x[j] * x[k] * h[(j, k)];
            }
            jac[(j, j)] += mu * x[j] * g[j];
            jac[(j, n)] = x[j] * g[j];
            jac[(n, j)] = x[j] * g[j];
        }
        let step = jac.lu().solve(&(-&f))?;
        let norm = f.norm();
        let mut damping = 1.0;
        loop {
            let y_new: Vec<f64> = (0..n).map(|j| y[j] + damping * step[j]).collect();
            let mu_new = mu + damping * step[n];
            let x_new = to_x(&y_new);
            if x_new.iter().all(|&v| v > 0.0 && v < 1.0) {
                let f_new = lagrange_residual(surface, &x_new, mu_new, mult);
                if f_new.norm() < norm * (1.0 - 1e-4 * damping) || damping < 1e-3 && f_new.norm() < norm {
                    y = y_new;
                    mu = mu_new;
                    x = x_new;
                    f = f_new;
                    break;
                }
            }
            damping *= 0.5;
            if damping < 1e-8 {
                return None;
            }
        }
    }
    (f.amax() < opts.tol).then(|| (x, mu, f.amax()))
}

/// Checks that `x` is the first zero on its own ray, so no nearer part of
/// the zero set makes `beta` optimistic.
fn first_on_ray(surface: &dyn Surface, x: &[f64]) -> bool {
    let base = x[0].ln();
    let a: Vec<f64> = x.iter().map(|v| v.ln() / base).collect();
    match ray_root(surface, &a) {
        Ok(t) => (t - x[0]).abs() < 1e-7,
        Err(_) => false,
    }
}

/// Optimizes over a surface whose variable `j` stands for `mult[j]` letters.
pub fn optimize_surface(
    surface: &dyn Surface,
    mult: &[usize],
    opts: &OptimizeOptions,
) -> Result<OptimizationResult> {
    let n = surface.nvars();
    if mult.len() != n {
        return Err(Error::ArityMismatch(n, mult.len()));
    }
    if !(surface.value(&vec![0.0; n]) > 0.0) {
        return Err(Error::InvalidInput("surface must be positive at the origin".into()));
    }
    let mut rays: Vec<Candidate> = ray_directions(n, opts)
        .into_iter()
        .filter_map(|a| {
            let t = ray_root(surface, &a).ok()?;
            let x = ray_point(t, &a);
            if x.iter().all(|&v| v > 0.0 && v < 1.0) {
                Some(Candidate {
                    beta: objective(&x, mult),
                    x,
                })
            } else {
                None
            }
        })
        .collect();
    if rays.is_empty() {
        return Err(Error::NoFeasiblePoint("no ray meets the zero set inside the unit box".into()));
    }
    rays.sort_by(|a, b| a.beta.total_cmp(&b.beta).then_with(|| cmp_points(&a.x, &b.x)));

    let mut best: Option<OptimizationResult> = None;
    let mut failures = Vec::new();
    for start in rays.iter().take(opts.starts) {
        match newton(surface, &start.x, mult, opts) {
            Some((x, mu, res)) if first_on_ray(surface, &x) => {
                let cand = OptimizationResult {
                    objective: objective(&x, mult),
                    constraint_residual: surface.value(&x).abs(),
                    stationarity_residual: res,
                    multiplier: mu,
                    point: x,
                };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        cand.objective < b.objective - 1e-12
                            || (cand.objective - b.objective).abs() <= 1e-12
                                && cmp_points(&cand.point, &b.point).is_lt()
                    }
                };
                if better {
                    best = Some(cand);
                }
            }
            Some(_) => failures.push(format!("start {:?} converged behind the first zero", start.x)),
            None => failures.push(format!("start {:?} did not converge", start.x)),
        }
    }
    best.ok_or_else(|| Error::NonConvergence(failures.join("; ")))
}

fn cmp_points(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn u_den() -> MultiPoly {
        MultiPoly::from_terms(
            3,
            [
                (vec![0, 0, 0], 1),
                (vec![1, 0, 0], -1),
                (vec![0, 1, 0], -1),
                (vec![0, 0, 1], -1),
                (vec![1, 0, 1], 1),
                (vec![1, 2, 1], 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn lagrange_point_of_base_denominator() {
        let r = optimize_weights(&u_den(), None, 1e-12).unwrap();
        assert_abs_diff_eq!(r.point[0], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.point[1], 1.0 - 0.5f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(r.point[2], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(r.objective, 8.0 + 4.0 * 2f64.sqrt(), epsilon = 1e-8);
        assert!(r.constraint_residual < 1e-10);
        assert!(r.stationarity_residual < 1e-8);
    }

    #[test]
    fn symmetric_identification() {
        let p = MultiPoly::from_terms(2, [(vec![0, 0], 1), (vec![1, 0], -1), (vec![0, 1], -1)]).unwrap();
        let r = optimize_weights(&p, Some(&[0, 0]), 1e-12).unwrap();
        assert_abs_diff_eq!(r.point[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.point[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.objective, 4.0, epsilon = 1e-10);
    }

    #[test]
    fn identification_shape() {
        assert_eq!(multiplicities(&[0, 1, 0]).unwrap(), vec![2, 1]);
        assert!(multiplicities(&[0, 2]).is_err());
    }

    #[test]
    fn infeasible() {
        let p = MultiPoly::from_terms(1, [(vec![0], 1), (vec![2], 1)]).unwrap();
        assert!(matches!(optimize_weights(&p, None, 1e-10), Err(Error::NoFeasiblePoint(_))));
    }

    #[test]
    fn finite_difference_hessian_is_close() {
        struct Wrapped(PolySurface);
        impl Surface for Wrapped {
            fn nvars(&self) -> usize {
                self.0.nvars()
            }
            fn value(&self, x: &[f64]) -> f64 {
                self.0.value(x)
            }
            fn gradient(&self, x: &[f64]) -> Vec<f64> {
                self.0.gradient(x)
            }
        }
        let s = PolySurface::new(u_den());
        let w = Wrapped(PolySurface::new(u_den()));
        let x = [0.4, 0.3, 0.45];
        assert!((s.hessian(&x) - w.hessian(&x)).amax() < 1e-6);
        let r = optimize_surface(&w, &[1, 1, 1], &OptimizeOptions::default()).unwrap();
        assert_abs_diff_eq!(r.objective, 8.0 + 4.0 * 2f64.sqrt(), epsilon = 1e-8);
    }

    #[test]
    fn deterministic() {
        let a = optimize_weights(&u_den(), Some(&[0, 1, 0]), 1e-12).unwrap();
        let b = optimize_weights(&u_den(), Some(&[0, 1, 0]), 1e-12).unwrap();
        assert_eq!(a, b);
    }
}
