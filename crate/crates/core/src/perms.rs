//! Brute-force ground truth for permutations generated and sorted by stacks
//! in series.
//!
//! Permutations are kept in one-line notation: `pi(j)` is the `j`-th element
//! of the output queue (or of the input queue, for a permutation being
//! sorted). Composition is `(a ∘ b)(i) = a(b(i))`. With this convention a
//! series of stacks generating `pi_1, ..., pi_k` one at a time produces
//! `pi_1 ∘ pi_2 ∘ ... ∘ pi_k`.

use std::collections::{BTreeSet, BinaryHeap, HashSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{is_n_complete, Label, Move, MoveString};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Label>", into = "Vec<Label>")]
pub struct Perm(Vec<Label>);

impl Perm {
    /// Validates that `values` is a bijection on `1..=values.len()`.
    pub fn new(values: Vec<Label>) -> Result<Self> {
        let n = values.len();
        let mut seen = vec![false; n + 1];
        for &v in &values {
            let i = v as usize;
            if i == 0 || i > n || seen[i] {
                return Err(Error::InvalidInput(format!("{values:?} is not a permutation")));
            }
            seen[i] = true;
        }
        Ok(Perm(values))
    }

    pub fn identity(n: usize) -> Self {
        Perm((1..=n as Label).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Label] {
        &self.0
    }

    /// `pi(i)` for 1-based `i`.
    pub fn at(&self, i: usize) -> Label {
        self.0[i - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &v)| v as usize == i + 1)
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &v) in self.0.iter().enumerate() {
            inv[v as usize - 1] = i as Label + 1;
        }
        Perm(inv)
    }

    /// `self ∘ other`. Both must act on the same number of elements.
    pub fn compose(&self, other: &Perm) -> Perm {
        assert_eq!(self.len(), other.len(), "composing permutations of different sizes");
        Perm(other.0.iter().map(|&j| self.0[j as usize - 1]).collect())
    }

    /// All of `S_n` in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Perm> {
        let mut current = Some(Perm::identity(n));
        std::iter::from_fn(move || {
            let out = current.take()?;
            let mut next = out.0.clone();
            if next_permutation(&mut next) {
                current = Some(Perm(next));
            }
            Some(out)
        })
    }
}

fn next_permutation(a: &mut [Label]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

impl TryFrom<Vec<Label>> for Perm {
    type Error = Error;
    fn try_from(v: Vec<Label>) -> Result<Self> {
        Perm::new(v)
    }
}

impl From<Perm> for Vec<Label> {
    fn from(p: Perm) -> Self {
        p.0
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() <= 9 {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
            f.write_str(&parts.join(","))
        }
    }
}

/// Accepts either a digit string (`4231`) or a comma-separated list.
impl FromStr for Perm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_start_matches('[').trim_end_matches(']');
        let values: Result<Vec<Label>> = if s.contains(',') {
            s.split(',')
                .map(|t| t.trim().parse::<Label>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
                .collect()
        } else {
            s.chars()
                .map(|c| {
                    c.to_digit(10)
                        .ok_or_else(|| Error::Parse(format!("bad permutation digit {c:?}")))
                })
                .collect()
        };
        Perm::new(values?)
    }
}

/// A duplicate-free set of permutations of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PermSet {
    pub n: usize,
    pub members: BTreeSet<Perm>,
}

impl PermSet {
    pub fn new(n: usize) -> Self {
        PermSet {
            n,
            members: BTreeSet::new(),
        }
    }

    pub fn singleton(p: Perm) -> Self {
        let n = p.len();
        PermSet {
            n,
            members: BTreeSet::from([p]),
        }
    }

    pub fn symmetric_group(n: usize) -> Self {
        PermSet {
            n,
            members: Perm::all(n).collect(),
        }
    }

    pub fn insert(&mut self, p: Perm) -> Result<bool> {
        if p.len() != self.n {
            return Err(Error::InvalidInput(format!(
                "permutation of {} elements in a set over {}",
                p.len(),
                self.n
            )));
        }
        Ok(self.members.insert(p))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, p: &Perm) -> bool {
        self.members.contains(p)
    }

    pub fn is_subset(&self, other: &PermSet) -> bool {
        self.n == other.n && self.members.is_subset(&other.members)
    }
}

/// Row of the `k_n` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnEntry {
    pub n: usize,
    pub k_n: usize,
}

/// Limit on distinct states visited by a single search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_states: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_states: 20_000_000,
        }
    }
}

/// Packed labels are 4-bit nibbles with 0 as a separator.
const MAX_SEARCH_ELEMENTS: usize = 15;

/// Mutable search state shared by the generating and sorting searches.
/// The input queue is always a suffix of the starting sequence, so only the
/// number of consumed elements is tracked.
struct Board {
    consumed: usize,
    stacks: Vec<Vec<u8>>,
    output: Vec<u8>,
}

impl Board {
    fn new(k: usize, n: usize) -> Self {
        Board {
            consumed: 0,
            stacks: vec![Vec::with_capacity(n); k],
            output: Vec::with_capacity(n),
        }
    }

    /// Injective packing for states with at most 15 elements and
    /// `n + k + 2 <= 32`. The leading 1 nibble keeps sequences of different
    /// lengths apart.
    fn key(&self, with_output: bool) -> u128 {
        let mut key: u128 = 1;
        key = (key << 4) | self.consumed as u128;
        for s in &self.stacks {
            for &x in s {
                key = (key << 4) | x as u128;
            }
            key <<= 4;
        }
        if with_output {
            for &x in &self.output {
                key = (key << 4) | x as u128;
            }
        }
        key
    }
}

fn check_search_size(n: usize, k: usize) -> Result<()> {
    if n > MAX_SEARCH_ELEMENTS || n + k + 2 > 32 {
        return Err(Error::CapExceeded {
            what: "elements plus stacks in a packed search",
            requested: n + k,
            cap: 30,
        });
    }
    Ok(())
}

struct Generator<'a> {
    n: usize,
    board: Board,
    seen: HashSet<u128>,
    found: &'a mut PermSet,
    budget: SearchBudget,
}

impl Generator<'_> {
    fn dfs(&mut self) -> Result<()> {
        let k = self.board.stacks.len();
        if self.board.output.len() == self.n {
            let p = Perm(self.board.output.iter().map(|&x| x as Label).collect());
            self.found.insert(p)?;
            return Ok(());
        }
        for i in (1..=k + 1).rev() {
            let x = if i == 1 {
                if self.board.consumed == self.n {
                    continue;
                }
                self.board.consumed += 1;
                self.board.consumed as u8
            } else {
                match self.board.stacks[i - 2].pop() {
                    Some(x) => x,
                    None => continue,
                }
            };
            if i == k + 1 {
                self.board.output.push(x);
            } else {
                self.board.stacks[i - 1].push(x);
            }

            if self.seen.insert(self.board.key(true)) {
                if self.seen.len() > self.budget.max_states {
                    return Err(Error::BudgetExhausted {
                        what: "generable_perms states",
                        limit: self.budget.max_states,
                    });
                }
                self.dfs()?;
            }

            if i == k + 1 {
                self.board.output.pop();
            } else {
                self.board.stacks[i - 1].pop();
            }
            if i == 1 {
                self.board.consumed -= 1;
            } else {
                self.board.stacks[i - 2].push(x);
            }
        }
        Ok(())
    }
}

/// `P(n, k)`: output orders of every final state reachable from `I(n, k)`.
pub fn generable_perms(n: usize, k: usize, budget: SearchBudget) -> Result<PermSet> {
    check_search_size(n, k)?;
    let mut found = PermSet::new(n);
    let mut g = Generator {
        n,
        board: Board::new(k, n),
        seen: HashSet::new(),
        found: &mut found,
        budget,
    };
    g.dfs()?;
    Ok(found)
}

struct Sorter<'a> {
    input: &'a [u8],
    board: Board,
    seen: HashSet<u128>,
    budget: SearchBudget,
}

impl Sorter<'_> {
    fn next_needed(&self) -> u8 {
        self.board.output.len() as u8 + 1
    }

    /// Output must receive `1, 2, ..., n` in order, so the last stack has to
    /// stay decreasing from bottom to top, and popping the next needed
    /// element from it is always safe to do immediately.
    fn dfs(&mut self) -> Result<bool> {
        let n = self.input.len();
        let k = self.board.stacks.len();
        if self.board.output.len() == n {
            return Ok(true);
        }
        if self.board.stacks[k - 1].last() == Some(&self.next_needed()) {
            let x = self.board.stacks[k - 1].pop().unwrap();
            self.board.output.push(x);
            let ok = self.dfs()?;
            self.board.output.pop();
            self.board.stacks[k - 1].push(x);
            return Ok(ok);
        }
        for i in (1..=k).rev() {
            let x = if i == 1 {
                if self.board.consumed == n {
                    continue;
                }
                self.input[self.board.consumed]
            } else {
                match self.board.stacks[i - 2].last() {
                    Some(&x) => x,
                    None => continue,
                }
            };
            if i == k && self.board.stacks[k - 1].last().is_some_and(|&top| top < x) {
                continue;
            }
            if i == 1 {
                self.board.consumed += 1;
            } else {
                self.board.stacks[i - 2].pop();
            }
            self.board.stacks[i - 1].push(x);

            let mut ok = false;
            if self.seen.insert(self.board.key(false)) {
                if self.seen.len() > self.budget.max_states {
                    return Err(Error::BudgetExhausted {
                        what: "is_sortable states",
                        limit: self.budget.max_states,
                    });
                }
                ok = self.dfs()?;
            }

            self.board.stacks[i - 1].pop();
            if i == 1 {
                self.board.consumed -= 1;
            } else {
                self.board.stacks[i - 2].push(x);
            }
            if ok {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// Whether some move string sends `s_pi` to `F(n, k)`.
pub fn is_sortable(pi: &Perm, k: usize, budget: SearchBudget) -> Result<bool> {
    let n = pi.len();
    if k == 0 {
        return Ok(pi.is_identity());
    }
    check_search_size(n, k)?;
    let input: Vec<u8> = pi.as_slice().iter().map(|&x| x as u8).collect();
    let mut s = Sorter {
        input: &input,
        board: Board::new(k, n),
        seen: HashSet::new(),
        budget,
    };
    s.dfs()
}

/// Smallest `k` such that every permutation of `n` elements is sortable by
/// `k` stacks. Each candidate `k` stops at its first unsortable permutation.
pub fn compute_kn(n: usize, budget: SearchBudget) -> Result<KnEntry> {
    let mut k = 0;
    loop {
        let blocker = Perm::all(n)
            .par_bridge()
            .map(|pi| is_sortable(&pi, k, budget).map(|ok| (!ok).then_some(pi)))
            .find_map_any(|r| match r {
                Ok(None) => None,
                other => Some(other),
            });
        match blocker {
            None => return Ok(KnEntry { n, k_n: k }),
            Some(Err(e)) => return Err(e),
            Some(Ok(_)) => k += 1,
        }
    }
}

/// `AB = { a ∘ b : a ∈ A, b ∈ B }`.
pub fn compose_sets(a: &PermSet, b: &PermSet) -> Result<PermSet> {
    if a.n != b.n {
        return Err(Error::InvalidInput(format!(
            "cannot compose permutation sets over {} and {} elements",
            a.n, b.n
        )));
    }
    let mut out = PermSet::new(a.n);
    for x in &a.members {
        for y in &b.members {
            out.members.insert(x.compose(y));
        }
    }
    Ok(out)
}

/// Merges per-stack strings `w_1, ..., w_k` (with `w_i` over `{m_i, m_{i+1}}`
/// and each a complete single-stack string for `n` elements) into one
/// `n`-complete string for `k` stacks whose restriction to the moves touching
/// stack `i` is exactly `w_i`.
///
/// The `j`-th occurrence of `m_i` is shared between `w_{i-1}` and `w_i`;
/// consecutive symbols of every `w_i` give precedence constraints, and the
/// result is a topological order of those constraints. Among available
/// symbols the one with the highest move index goes first.
pub fn interleave(per_stack: &[MoveString], n: usize) -> Result<MoveString> {
    let k = per_stack.len();
    if k == 0 {
        return Err(Error::InvalidInput("need at least one per-stack string".into()));
    }
    for (s, w) in per_stack.iter().enumerate() {
        let (push, pop) = (s + 1, s + 2);
        let local: Option<Vec<usize>> = w
            .iter()
            .map(|m| match m.index() {
                i if i == push => Some(1),
                i if i == pop => Some(2),
                _ => None,
            })
            .collect();
        let ok = local
            .and_then(|l| MoveString::from_indices(&l).ok())
            .is_some_and(|l| is_n_complete(&l, n, 1));
        if !ok {
            return Err(Error::InvalidInput(format!(
                "{w} is not a complete string over m{push}, m{pop} for {n} elements"
            )));
        }
    }

    // node id (letter - 1) * n + occurrence
    let nodes = (k + 1) * n;
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut indegree = vec![0usize; nodes];
    for w in per_stack {
        let mut seen = vec![0usize; k + 2];
        let mut prev: Option<usize> = None;
        for m in w.iter() {
            let i = m.index();
            let id = (i - 1) * n + seen[i];
            seen[i] += 1;
            if let Some(p) = prev {
                succ[p].push(id);
                indegree[id] += 1;
            }
            prev = Some(id);
        }
    }

    let mut ready: BinaryHeap<(usize, std::cmp::Reverse<usize>)> = BinaryHeap::new();
    let key = |id: usize| (id / n, std::cmp::Reverse(id % n));
    for id in 0..nodes {
        if indegree[id] == 0 {
            ready.push(key(id));
        }
    }
    let mut out = MoveString::empty();
    while let Some((letter, std::cmp::Reverse(occ))) = ready.pop() {
        let id = letter * n + occ;
        out.push(Move::new(letter + 1)?);
        for &s in &succ[id] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(key(s));
            }
        }
    }
    if out.len() != nodes {
        return Err(Error::CyclicPrecedence);
    }
    Ok(out)
}
