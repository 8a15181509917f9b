//! Generating functions for strings avoiding forbidden factors.

pub mod brute;
pub mod cluster;
pub mod poly;
pub mod series;

pub use brute::{brute_count, Constraint};
pub use cluster::{cluster_gf, single_word_denominator, ClusterEvaluator, LetterWeights, OverlapGraph, RationalGF};
pub use poly::{MultiPoly, WeightAssignment};
pub use series::{series_coefficients, SeriesTable};
