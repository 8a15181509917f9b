//! Direct enumeration of strings avoiding a forbidden set. Independent of
//! the cluster machinery and used as its oracle.

use std::collections::HashMap;

use aho_corasick::automaton::Automaton;
use aho_corasick::dfa::DFA;
use aho_corasick::{Anchored, MatchKind, StartKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::relations::ForbiddenWordSet;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Constraint {
    Length(usize),
    /// Exact number of occurrences of each letter.
    Counts(Vec<usize>),
}

impl Constraint {
    fn len(&self) -> usize {
        match self {
            Constraint::Length(n) => *n,
            Constraint::Counts(c) => c.iter().sum(),
        }
    }
}

pub const DEFAULT_BRUTE_CAP: usize = 14;

/// Counts strings over `alphabet` letters meeting `constraint` that contain
/// no forbidden word as a factor.
pub fn brute_count(forbidden: &ForbiddenWordSet, alphabet: usize, constraint: &Constraint) -> Result<u64> {
    brute_count_capped(forbidden, alphabet, constraint, DEFAULT_BRUTE_CAP)
}

pub fn brute_count_capped(
    forbidden: &ForbiddenWordSet,
    alphabet: usize,
    constraint: &Constraint,
    cap: usize,
) -> Result<u64> {
    let len = constraint.len();
    if len > cap {
        return Err(Error::CapExceeded {
            what: "enumeration length",
            requested: len,
            cap,
        });
    }
    if let Constraint::Counts(c) = constraint {
        if c.len() != alphabet {
            return Err(Error::ArityMismatch(alphabet, c.len()));
        }
    }
    let words: Vec<Vec<u8>> = forbidden
        .words()
        .iter()
        .map(|w| w.iter().map(|m| m.index() as u8).collect())
        .collect();
    let counts = match constraint {
        Constraint::Length(_) => None,
        Constraint::Counts(c) => Some(c.clone()),
    };
    if len == 0 {
        return Ok(1);
    }
    let total = (1..=alphabet as u8)
        .into_par_iter()
        .map(|first| {
            let mut search = Search {
                words: &words,
                len,
                alphabet: alphabet as u8,
                counts: counts.clone(),
                buf: Vec::with_capacity(len),
            };
            search.push_and_count(first)
        })
        .sum();
    Ok(total)
}

struct Search<'a> {
    words: &'a [Vec<u8>],
    len: usize,
    alphabet: u8,
    counts: Option<Vec<usize>>,
    buf: Vec<u8>,
}

impl Search<'_> {
    fn push_and_count(&mut self, a: u8) -> u64 {
        if let Some(c) = &mut self.counts {
            let slot = &mut c[a as usize - 1];
            if *slot == 0 {
                return 0;
            }
            *slot -= 1;
        }
        self.buf.push(a);
        let total = if self.words.iter().any(|w| self.buf.ends_with(w)) {
            0
        } else if self.buf.len() == self.len {
            1
        } else {
            (1..=self.alphabet).map(|b| self.push_and_count(b)).sum()
        };
        self.buf.pop();
        if let Some(c) = &mut self.counts {
            c[a as usize - 1] += 1;
        }
        total
    }
}

/// Transfer matrix of the strings avoiding a forbidden set: the states of
/// an Aho-Corasick automaton that has not yet seen a forbidden word.
pub struct AvoidanceAutomaton {
    alphabet: usize,
    /// `next[s][a]`, `None` when letter `a + 1` completes a forbidden word.
    next: Vec<Vec<Option<usize>>>,
}

impl AvoidanceAutomaton {
    pub fn new(forbidden: &ForbiddenWordSet, alphabet: usize) -> Result<Self> {
        let patterns: Vec<Vec<u8>> = forbidden.words().iter().map(|w| w.as_digits()).collect();
        let dfa = DFA::builder()
            .match_kind(MatchKind::Standard)
            .start_kind(StartKind::Unanchored)
            .build(&patterns)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let start = dfa
            .start_state(Anchored::No)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        let mut index = HashMap::from([(start, 0usize)]);
        let mut order = vec![start];
        let mut next = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let sid = order[i];
            let row = (1..=alphabet as u8)
                .map(|a| {
                    let t = dfa.next_state(Anchored::No, sid, b'0' + a);
                    if dfa.is_match(t) {
                        return None;
                    }
                    let fresh = index.len();
                    let id = *index.entry(t).or_insert(fresh);
                    if id == fresh {
                        order.push(t);
                    }
                    Some(id)
                })
                .collect();
            next.push(row);
            i += 1;
        }
        Ok(AvoidanceAutomaton { alphabet, next })
    }

    pub fn states(&self) -> usize {
        self.next.len()
    }

    /// Number of avoiding strings of each length `0..=max_len`.
    pub fn counts_by_length(&self, max_len: usize) -> Result<Vec<u128>> {
        let mut v = vec![0u128; self.states()];
        v[0] = 1;
        let mut out = vec![1u128];
        for _ in 0..max_len {
            let mut w = vec![0u128; self.states()];
            for (s, &c) in v.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for t in self.next[s].iter().flatten() {
                    w[*t] = w[*t].checked_add(c).ok_or(Error::CapExceeded {
                        what: "u128 string count",
                        requested: max_len,
                        cap: out.len(),
                    })?;
                }
            }
            out.push(w.iter().try_fold(0u128, |a, &b| a.checked_add(b)).ok_or(Error::CapExceeded {
                what: "u128 string count",
                requested: max_len,
                cap: out.len(),
            })?);
            v = w;
        }
        Ok(out)
    }

    /// `sum` over avoiding strings of length at most `max_len` of the product
    /// of their letter values.
    pub fn weighted_sum(&self, letter_values: &[f64], max_len: usize) -> Result<f64> {
        if letter_values.len() != self.alphabet {
            return Err(Error::ArityMismatch(self.alphabet, letter_values.len()));
        }
        let mut v = vec![0f64; self.states()];
        v[0] = 1.0;
        let mut total = 1.0;
        for _ in 0..max_len {
            let mut w = vec![0f64; self.states()];
            for (s, &c) in v.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (a, t) in self.next[s].iter().enumerate() {
                    if let Some(t) = t {
                        w[*t] += c * letter_values[a];
                    }
                }
            }
            total += w.iter().sum::<f64>();
            v = w;
        }
        Ok(total)
    }
}
