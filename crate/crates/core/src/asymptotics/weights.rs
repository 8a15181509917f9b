//! Integer weights from an optimal point.

use crate::error::{Error, Result};
use crate::gf::WeightAssignment;

/// Convergents `p/q` of the continued fraction of `r`, in order, stopping
/// once `p` or `q` exceeds `max`.
pub fn convergents(r: f64, max: u64) -> Vec<(u64, u64)> {
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = r;
    let mut out = Vec::new();
    for _ in 0..64 {
        let a = x.floor();
        if a > max as f64 {
            break;
        }
        let a = a as u64;
        let (p, q) = (a * p1 + p0, a * q1 + q0);
        if p > max || q > max {
            break;
        }
        out.push((p, q));
        (p0, q0, p1, q1) = (p1, q1, p, q);
        let frac = x - a as f64;
        if frac < 1e-12 {
            break;
        }
        x = 1.0 / frac;
    }
    out
}

/// Integer exponents approximating the ratios `log x_i / log x_b`, where
/// `x_b` is the largest coordinate, so every ratio is at least one. Candidate
/// values for `alpha_b` are the denominators of the continued-fraction
/// convergents of every ratio; the candidate with the smallest worst-case
/// ratio error wins, smaller denominators breaking ties.
pub fn rationalize_weights(point: &[f64], max_weight: u32) -> Result<WeightAssignment> {
    if point.is_empty() || point.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidInput(format!("coordinates must lie in (0, 1): {point:?}")));
    }
    if max_weight == 0 {
        return Err(Error::InvalidInput("max_weight must be positive".into()));
    }
    let base = (0..point.len())
        .max_by(|&i, &j| point[i].total_cmp(&point[j]).then(j.cmp(&i)))
        .unwrap();
    let ratios: Vec<f64> = point.iter().map(|v| v.ln() / point[base].ln()).collect();
    let mut denominators: Vec<u64> = ratios
        .iter()
        .flat_map(|&r| convergents(r, max_weight as u64))
        .map(|(_, q)| q)
        .collect();
    denominators.sort_unstable();
    denominators.dedup();

    let mut best: Option<(f64, Vec<u32>)> = None;
    for q in denominators {
        let alphas: Vec<u32> = ratios.iter().map(|r| (r * q as f64).round().max(1.0) as u32).collect();
        if alphas.iter().any(|&a| a > max_weight) {
            continue;
        }
        let err = ratios
            .iter()
            .zip(&alphas)
            .map(|(r, &a)| (a as f64 / q as f64 - r).abs())
            .fold(0.0, f64::max);
        if best.as_ref().map_or(true, |(e, _)| err < e - 1e-12) {
            best = Some((err, alphas));
        }
    }
    let (_, alphas) = best.unwrap_or_else(|| (0.0, vec![1; point.len()]));
    WeightAssignment::new(alphas)
}
