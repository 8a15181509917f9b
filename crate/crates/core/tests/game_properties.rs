//! Invariants of the move game, permutation search and rewriting.

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;
use stacksort::game::{
    apply_move, apply_string, complete_characterizations, enumerate_language, generated_permutation, initial_state,
    Language, SystemState,
};
use stacksort::perms::Perm;
use stacksort::relations::{extended_rules, probe_state, Relation, RewriteSystem};
use stacksort::{generable_perms, is_sortable, MoveString, SearchBudget};

fn word(max_len: usize, k: usize) -> impl Strategy<Value = MoveString> {
    prop::collection::vec(1..=k + 1, 0..=max_len).prop_map(|d| MoveString::from_indices(&d).unwrap())
}

/// Initial state with `n` elements advanced by a random prefix; may be
/// illegal.
fn state(k: usize) -> impl Strategy<Value = SystemState> {
    (0usize..=4, word(8, k), any::<bool>()).prop_map(move |(n, prefix, probe)| {
        let start = if probe { probe_state(12, k) } else { initial_state(n, k) };
        apply_string(&prefix, &start)
    })
}

fn sorted_labels(s: &SystemState) -> Option<Vec<u32>> {
    s.live().map(|l| {
        let mut v: Vec<u32> = l.labels().map(|x| x as u32).collect();
        v.sort_unstable();
        v
    })
}

/// Every normal form reachable by rewriting one match at a time, in any
/// order.
fn normal_forms(w: &MoveString, rules: &[(Vec<u8>, Vec<u8>)], memo: &mut HashMap<Vec<u8>, BTreeSet<Vec<u8>>>) -> BTreeSet<Vec<u8>> {
    fn go(d: Vec<u8>, rules: &[(Vec<u8>, Vec<u8>)], memo: &mut HashMap<Vec<u8>, BTreeSet<Vec<u8>>>) -> BTreeSet<Vec<u8>> {
        if let Some(r) = memo.get(&d) {
            return r.clone();
        }
        let mut out = BTreeSet::new();
        for (from, to) in rules {
            for i in 0..d.len().saturating_sub(from.len() - 1) {
                if d[i..i + from.len()] == from[..] {
                    let mut next = d.clone();
                    next[i..i + from.len()].copy_from_slice(to);
                    out.extend(go(next, rules, memo));
                }
            }
        }
        if out.is_empty() {
            out.insert(d.clone());
        }
        memo.insert(d, out.clone());
        out
    }
    go(w.as_digits(), rules, memo)
}

#[test]
fn rewriting_is_confluent_up_to_length_6() {
    let rules: Vec<(Vec<u8>, Vec<u8>)> =
        extended_rules().iter().map(|r| (r.from.as_digits(), r.to.as_digits())).collect();
    let sys = RewriteSystem::new(&extended_rules()).unwrap();
    let mut memo = HashMap::new();
    for len in 0..=6u32 {
        for code in 0..3usize.pow(len) {
            let mut c = code;
            let digits: Vec<usize> = (0..len)
                .map(|_| {
                    let d = c % 3 + 1;
                    c /= 3;
                    d
                })
                .collect();
            let w = MoveString::from_indices(&digits).unwrap();
            let forms = normal_forms(&w, &rules, &mut memo);
            assert_eq!(forms.len(), 1, "{w} has normal forms {forms:?}");
            assert_eq!(forms.into_iter().next().unwrap(), sys.rewrite(&w).as_digits());
        }
    }
}

#[test]
fn rewriting_preserves_action_on_complete_strings() {
    let sys = RewriteSystem::new(&extended_rules()).unwrap();
    for w in enumerate_language(3, 2, Language::Complete, 64).unwrap() {
        let c = sys.rewrite(&w);
        assert_eq!(generated_permutation(&c, 3, 2), generated_permutation(&w, 3, 2), "{w} -> {c}");
    }
}

proptest! {
    #[test]
    fn action_law(s in state(2), u in word(10, 2), v in word(10, 2)) {
        prop_assert_eq!(apply_string(&u.concat(&v), &s), apply_string(&v, &apply_string(&u, &s)));
    }

    #[test]
    fn illegal_absorbs(w in word(12, 3)) {
        prop_assert!(apply_string(&w, &SystemState::Illegal).is_illegal());
    }

    #[test]
    fn elements_are_conserved(s in state(3), w in word(12, 3)) {
        let after = apply_string(&w, &s);
        if !after.is_illegal() {
            prop_assert_eq!(sorted_labels(&after), sorted_labels(&s));
        }
    }

    #[test]
    fn single_moves_compose(s in state(2), w in word(10, 2)) {
        let folded = w.iter().fold(s.clone(), |acc, m| apply_move(m, &acc));
        prop_assert_eq!(folded, apply_string(&w, &s));
    }

    #[test]
    fn orientation_increases(u in word(8, 2), v in word(8, 2)) {
        let rel = Relation { lhs: u.clone(), rhs: v.clone() };
        match rel.orient() {
            None => prop_assert_eq!(u, v),
            Some(r) => {
                prop_assert!(r.from < r.to);
                prop_assert_eq!(BTreeSet::from([r.from, r.to]), BTreeSet::from([u, v]));
            }
        }
    }

    #[test]
    fn rewriting_preserves_action(w in word(9, 2), s in state(2)) {
        let sys = RewriteSystem::new(&extended_rules()).unwrap();
        let c = sys.rewrite(&w);
        prop_assert!(c >= w);
        prop_assert_eq!(c.len(), w.len());
        prop_assert_eq!(apply_string(&c, &s), apply_string(&w, &s));
    }

    #[test]
    fn completeness_characterizations_agree(w in word(9, 2), n in 0usize..=3) {
        prop_assert!(complete_characterizations(&w, n, 2).agree());
    }

    #[test]
    fn sortable_iff_inverse_generable(seed in any::<u64>(), n in 0usize..=5, k in 1usize..=2) {
        let all: Vec<Perm> = Perm::all(n).collect();
        let pi = &all[(seed % all.len() as u64) as usize];
        let gen = generable_perms(n, k, SearchBudget::default()).unwrap();
        prop_assert_eq!(is_sortable(pi, k, SearchBudget::default()).unwrap(), gen.contains(&pi.inverse()));
    }
}
