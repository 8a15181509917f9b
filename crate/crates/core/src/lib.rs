//! Lower bounds for sorting with stacks in series.
//!
//! The pipeline runs from the move game on `k` stacks, through relations
//! between move strings and the generating function of the strings that
//! avoid them, to the growth rate of that function and the resulting bound
//! on the number of stacks needed to sort every permutation of length `n`.

pub mod asymptotics;
pub mod error;
pub mod game;
pub mod gf;
pub mod perms;
pub mod pipeline;
pub mod relations;

pub use asymptotics::{
    bound_constant, growth_per_element, min_positive_root, optimize_weights, rationalize_weights, BoundReport,
    GrowthReport, OptimizationResult,
};
pub use error::{Error, Result};
pub use game::{
    apply_move, apply_string, initial_state, is_n_complete, Language, Move, MoveString, SystemConfig, SystemState,
};
pub use gf::{brute_count, cluster_gf, series_coefficients, LetterWeights, MultiPoly, RationalGF, WeightAssignment};
pub use perms::{compute_kn, generable_perms, is_sortable, KnEntry, Perm, PermSet, SearchBudget};
pub use relations::{
    derive_forbidden, discover_relations, rewrite_to_canonical, verify_rules, ForbiddenWordSet, RewriteRule,
};
