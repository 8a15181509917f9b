//! Stages from a forbidden set to a bound constant, with serializable
//! artifacts between them.

use serde::{Deserialize, Serialize};

use crate::asymptotics::optimize::{expand, multiplicities, optimize_surface, OptimizeOptions, PolySurface, Surface};
use crate::asymptotics::{bound_constant, first_root, growth_per_element, rationalize_weights, GrowthReport, ROOT_TOL};
use crate::error::{Error, Result};
use crate::gf::{cluster_gf, single_word_denominator, ClusterEvaluator, LetterWeights, MultiPoly, RationalGF, WeightAssignment};
use crate::relations::ForbiddenWordSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// Every letter weighs `x`.
    Uniform,
    /// Letter weights from the optimum of the multivariate denominator.
    Optimized,
}

/// Largest overlap component solved symbolically; bigger sets are
/// evaluated numerically.
pub const DEFAULT_EXACT_COMPONENT_LIMIT: usize = 8;
pub const DEFAULT_EXACT_WORD_LIMIT: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageConfig {
    pub k: usize,
    pub weights: WeightMode,
    /// Letter-to-variable map for optimized weights, e.g. `[0, 1, 0]`.
    pub identification: Option<Vec<usize>>,
    pub max_weight: u32,
    pub exact_component_limit: usize,
    pub exact_word_limit: usize,
}

impl StageConfig {
    pub fn new(k: usize, weights: WeightMode) -> Self {
        StageConfig {
            k,
            weights,
            identification: None,
            max_weight: 8,
            exact_component_limit: DEFAULT_EXACT_COMPONENT_LIMIT,
            exact_word_limit: DEFAULT_EXACT_WORD_LIMIT,
        }
    }

    fn letter_map(&self) -> Vec<usize> {
        match (&self.identification, self.weights) {
            (_, WeightMode::Uniform) => vec![0; self.k + 1],
            (Some(m), WeightMode::Optimized) => m.clone(),
            (None, WeightMode::Optimized) => (0..=self.k).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum GfForm {
    Exact {
        gf: RationalGF,
    },
    /// Too large to expand: evaluated numerically from the overlap system.
    Numeric {
        words: usize,
        overlaps: usize,
        largest_cyclic_component: usize,
        /// Denominator with every overlap dropped, for reference only.
        single_word_denominator: MultiPoly,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GfArtifact {
    pub weights: WeightMode,
    /// Variable of each letter.
    pub letter_map: Vec<usize>,
    #[serde(flatten)]
    pub form: GfForm,
}

fn letter_weights(map: &[usize]) -> Result<LetterWeights> {
    let nvars = multiplicities(map)?.len();
    LetterWeights::identified(map, nvars)
}

pub fn gf_stage(forbidden: &ForbiddenWordSet, cfg: &StageConfig) -> Result<GfArtifact> {
    let map = cfg.letter_map();
    let weights = letter_weights(&map)?;
    let ev = ClusterEvaluator::new(&weights, forbidden)?;
    let g = ev.graph();
    let form = if g.largest_cyclic_component() <= cfg.exact_component_limit && forbidden.len() <= cfg.exact_word_limit {
        GfForm::Exact {
            gf: cluster_gf(&weights, forbidden)?,
        }
    } else {
        GfForm::Numeric {
            words: forbidden.len(),
            overlaps: g.overlaps.len(),
            largest_cyclic_component: g.largest_cyclic_component(),
            single_word_denominator: single_word_denominator(&weights, forbidden)?,
        }
    };
    Ok(GfArtifact {
        weights: cfg.weights,
        letter_map: map,
        form,
    })
}

/// The reciprocal of the generating function, as a surface over the
/// shared variables.
enum Reciprocal {
    Poly(PolySurface),
    Cluster(ClusterEvaluator),
}

impl Reciprocal {
    fn new(gf: &GfArtifact, forbidden: &ForbiddenWordSet) -> Result<Self> {
        Ok(match &gf.form {
            GfForm::Exact { gf } => Reciprocal::Poly(PolySurface::new(gf.denominator.clone())),
            GfForm::Numeric { .. } => Reciprocal::Cluster(ClusterEvaluator::new(&letter_weights(&gf.letter_map)?, forbidden)?),
        })
    }

    fn surface(&self) -> &dyn Surface {
        match self {
            Reciprocal::Poly(p) => p,
            Reciprocal::Cluster(c) => c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumArtifact {
    /// Coordinates per letter.
    pub point: Vec<f64>,
    pub objective: f64,
    pub constraint_residual: f64,
    pub stationarity_residual: f64,
    pub weights: WeightAssignment,
}

pub fn optimum_stage(gf: &GfArtifact, forbidden: &ForbiddenWordSet, cfg: &StageConfig) -> Result<OptimumArtifact> {
    let mult = multiplicities(&gf.letter_map)?;
    let reciprocal = Reciprocal::new(gf, forbidden)?;
    let opts = OptimizeOptions {
        tol: if matches!(reciprocal, Reciprocal::Poly(_)) { 1e-10 } else { 1e-9 },
        ..OptimizeOptions::default()
    };
    let reduced = optimize_surface(reciprocal.surface(), &mult, &opts)?;
    let full = expand(&reduced, &gf.letter_map);
    let weights = rationalize_weights(&full.point, cfg.max_weight)?;
    Ok(OptimumArtifact {
        point: full.point,
        objective: full.objective,
        constraint_residual: full.constraint_residual,
        stationarity_residual: full.stationarity_residual,
        weights,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundArtifact {
    pub ell: u32,
    pub weights: WeightAssignment,
    /// Univariate denominator under `weights`, when known exactly.
    pub denominator: Option<MultiPoly>,
    pub lambda_min: f64,
    pub b: f64,
    pub constant: f64,
    /// Growth and constant at the continuous optimum, for optimized weights.
    pub continuous_b: Option<f64>,
    pub continuous_constant: Option<f64>,
}

/// Growth under integer letter weights.
pub fn weighted_growth(gf: &GfArtifact, forbidden: &ForbiddenWordSet, weights: &WeightAssignment) -> Result<(Option<MultiPoly>, GrowthReport)> {
    let total = weights.total();
    match &gf.form {
        GfForm::Exact { gf: exact } => {
            // per-letter exponents through the shared variables
            let nvars = exact.nvars();
            let mut var_alpha = vec![0u32; nvars];
            for (letter, &v) in gf.letter_map.iter().enumerate() {
                var_alpha[v] = weights.alphas[letter];
            }
            if gf.letter_map.iter().enumerate().any(|(l, &v)| weights.alphas[l] != var_alpha[v]) {
                return Err(Error::InvalidInput("weights must agree on identified letters".into()));
            }
            let uni = exact.substitute(&WeightAssignment::new(var_alpha)?)?;
            let report = growth_per_element(&uni, total)?;
            Ok((Some(uni.denominator), report))
        }
        GfForm::Numeric { .. } => {
            let ev = ClusterEvaluator::new(&LetterWeights::weighted(weights), forbidden)?;
            let root = first_root(|t| ev.value(&[t]), ROOT_TOL)?;
            Ok((None, GrowthReport::from_lambda(root.value, total)?))
        }
    }
}

pub fn bound_stage(
    gf: &GfArtifact,
    forbidden: &ForbiddenWordSet,
    optimum: Option<&OptimumArtifact>,
    cfg: &StageConfig,
) -> Result<BoundArtifact> {
    let ell = cfg.k as u32;
    let weights = match optimum {
        Some(o) => o.weights.clone(),
        None => WeightAssignment::uniform(cfg.k + 1),
    };
    let (denominator, growth) = weighted_growth(gf, forbidden, &weights)?;
    let bound = bound_constant(ell, growth.b)?;
    let continuous = optimum.map(|o| bound_constant(ell, o.objective)).transpose()?;
    Ok(BoundArtifact {
        ell,
        weights,
        denominator,
        lambda_min: growth.lambda_min,
        b: growth.b,
        constant: bound.constant,
        continuous_b: continuous.map(|c| c.b),
        continuous_constant: continuous.map(|c| c.constant),
    })
}
