//! Generating functions against enumeration, and their algebraic
//! invariants.

use num_bigint::BigInt;
use proptest::prelude::*;
use stacksort::gf::{brute_count, Constraint, ClusterEvaluator};
use stacksort::relations::extended_rules;
use stacksort::{
    cluster_gf, derive_forbidden, generable_perms, series_coefficients, ForbiddenWordSet, LetterWeights, MoveString,
    SearchBudget, WeightAssignment,
};

fn forbidden_set() -> impl Strategy<Value = ForbiddenWordSet> {
    prop::collection::vec(prop::collection::vec(1usize..=3, 2..=5), 1..=4).prop_map(|words| {
        ForbiddenWordSet::new(words.iter().map(|d| MoveString::from_indices(d).unwrap())).unwrap()
    })
}

fn multinomial(c: &[u32]) -> BigInt {
    let fact = |n: u32| (1..=n).map(BigInt::from).product::<BigInt>();
    fact(c.iter().sum()) / c.iter().map(|&v| fact(v)).product::<BigInt>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unit_constant_terms(f in forbidden_set()) {
        let gf = cluster_gf(&LetterWeights::per_letter(3), &f).unwrap();
        prop_assert_eq!(gf.denominator.constant_term(), BigInt::from(1));
        prop_assert_eq!(gf.numerator.constant_term(), BigInt::from(1));
    }

    #[test]
    fn series_matches_enumeration(f in forbidden_set()) {
        let uni = cluster_gf(&LetterWeights::uniform(3), &f).unwrap();
        let coeffs = series_coefficients(&uni, 10).unwrap().univariate().unwrap();
        for (len, c) in coeffs.iter().enumerate() {
            prop_assert_eq!(c, &BigInt::from(brute_count(&f, 3, &Constraint::Length(len)).unwrap()));
        }
        let per = cluster_gf(&LetterWeights::per_letter(3), &f).unwrap();
        let table = series_coefficients(&per, 8).unwrap();
        for a in 0..=4u32 {
            for b in 0..=4u32 {
                for c in 0..=(8 - a - b).min(4) {
                    let brute = brute_count(&f, 3, &Constraint::Counts(vec![a as usize, b as usize, c as usize])).unwrap();
                    prop_assert_eq!(table.get(&[a, b, c]), BigInt::from(brute));
                }
            }
        }
    }

    #[test]
    fn substitution_commutes(f in forbidden_set(), alphas in prop::collection::vec(1u32..=3, 3)) {
        let w = WeightAssignment::new(alphas).unwrap();
        let per = cluster_gf(&LetterWeights::per_letter(3), &f).unwrap();
        let direct = cluster_gf(&LetterWeights::weighted(&w), &f).unwrap();
        let substituted = per.substitute(&w).unwrap();
        for t in [0.05, 0.1, 0.2] {
            let (a, b) = (direct.eval(&[t]), substituted.eval(&[t]));
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
        }
    }

    #[test]
    fn coefficients_are_dominated(f in forbidden_set()) {
        let per = cluster_gf(&LetterWeights::per_letter(3), &f).unwrap();
        let table = series_coefficients(&per, 7).unwrap();
        for a in 0..=7u32 {
            for b in 0..=7 - a {
                for c in 0..=7 - a - b {
                    let v = table.get(&[a, b, c]);
                    prop_assert!(v >= BigInt::from(0) && v <= multinomial(&[a, b, c]));
                }
            }
        }
    }

    #[test]
    fn evaluator_matches_denominator(f in forbidden_set(), x in prop::collection::vec(0.05f64..0.3, 3)) {
        let weights = LetterWeights::per_letter(3);
        let gf = cluster_gf(&weights, &f).unwrap();
        let ev = ClusterEvaluator::new(&weights, &f).unwrap();
        let (a, b) = (1.0 / gf.eval(&x), ev.value(&x));
        prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
    }
}

#[test]
fn counting_chain() {
    let f = derive_forbidden(&extended_rules());
    let per = cluster_gf(&LetterWeights::per_letter(3), &f).unwrap();
    let table = series_coefficients(&per, 12).unwrap();
    for n in 0..=4 {
        let perms = generable_perms(n, 2, SearchBudget::default()).unwrap().len();
        assert!(BigInt::from(perms) <= table.get(&[n as u32; 3]), "n = {n}");
    }
}
