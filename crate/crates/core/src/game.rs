//! The stack-system game.
//!
//! A system of `k` stacks sits in series between an input queue and an
//! output queue. Move `m_i` (for `1 <= i <= k + 1`) transfers one element
//! from container `i - 1` to container `i`, where container `0` is the input
//! queue and container `k + 1` is the output queue. Move strings act on
//! states from the left: [`apply_string`] folds [`apply_move`] over the
//! string, and any illegal move sends the state to [`SystemState::Illegal`],
//! which absorbs every further move.
//!
//! The degenerate system `k = 0` is accepted everywhere: its single move
//! `m_1` takes the front of the input queue straight to the output queue.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::perms::Perm;

/// Element label. Labels are positive and distinct within a state.
pub type Label = u32;

/// Moves are written as single digits, so at most nine letters.
pub const MAX_ALPHABET: usize = 9;

/// A move `m_i`, stored by its 1-based index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move(u8);

impl Move {
    pub fn new(index: usize) -> Result<Self> {
        if index == 0 || index > MAX_ALPHABET {
            return Err(Error::InvalidInput(format!(
                "move index {index} outside 1..={MAX_ALPHABET}"
            )));
        }
        Ok(Move(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Whether this move exists in a system of `k` stacks.
    pub fn fits(self, k: usize) -> bool {
        self.index() <= k + 1
    }
}

/// A finite word over the move alphabet, compared lexicographically with
/// `m_1 < m_2 < ... < m_{k+1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveString(Vec<Move>);

impl MoveString {
    pub fn new(moves: Vec<Move>) -> Self {
        MoveString(moves)
    }

    pub fn empty() -> Self {
        MoveString(Vec::new())
    }

    /// Builds a string from 1-based move indices.
    pub fn from_indices(indices: &[usize]) -> Result<Self> {
        indices.iter().map(|&i| Move::new(i)).collect::<Result<Vec<_>>>().map(MoveString)
    }

    /// Parses the digit notation and checks every letter against `k`.
    pub fn parse_for(s: &str, k: usize) -> Result<Self> {
        let w: MoveString = s.parse()?;
        if let Some(m) = w.0.iter().find(|m| !m.fits(k)) {
            return Err(Error::Parse(format!(
                "move m{} does not exist with {k} stack(s) in {s:?}",
                m.index()
            )));
        }
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn moves(&self) -> &[Move] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = Move> + '_ {
        self.0.iter().copied()
    }

    pub fn push(&mut self, m: Move) {
        self.0.push(m);
    }

    pub fn concat(&self, other: &MoveString) -> MoveString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        MoveString(v)
    }

    /// `|w|_i`.
    pub fn count(&self, index: usize) -> usize {
        self.0.iter().filter(|m| m.index() == index).count()
    }

    /// Letter counts `|w|_1, ..., |w|_alphabet`; letters beyond the alphabet
    /// are ignored.
    pub fn counts(&self, alphabet: usize) -> Vec<usize> {
        let mut c = vec![0; alphabet];
        for m in &self.0 {
            if m.index() <= alphabet {
                c[m.index() - 1] += 1;
            }
        }
        c
    }

    pub fn fits(&self, k: usize) -> bool {
        self.0.iter().all(|m| m.fits(k))
    }

    /// Digit bytes (`b'1'..=b'9'`), used for substring matching.
    pub fn as_digits(&self) -> Vec<u8> {
        self.0.iter().map(|m| b'0' + m.0).collect()
    }

    /// Whether `needle` occurs as a contiguous factor.
    pub fn contains(&self, needle: &MoveString) -> bool {
        needle.is_empty() || self.0.windows(needle.len()).any(|w| w == needle.0.as_slice())
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> MoveString {
        MoveString(self.0[range].to_vec())
    }
}

impl FromIterator<Move> for MoveString {
    fn from_iter<I: IntoIterator<Item = Move>>(iter: I) -> Self {
        MoveString(iter.into_iter().collect())
    }
}

impl FromStr for MoveString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d >= 1 => Ok(Move(d as u8)),
                _ => Err(Error::Parse(format!("bad move digit {c:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(MoveString)
    }
}

impl fmt::Display for MoveString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for m in &self.0 {
            write!(f, "{}", m.0)?;
        }
        Ok(())
    }
}

impl Serialize for MoveString {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MoveString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Number of stacks in series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub k: usize,
}

impl SystemConfig {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 || k + 1 > MAX_ALPHABET {
            return Err(Error::InvalidInput(format!(
                "stack count must be in 1..={}, got {k}",
                MAX_ALPHABET - 1
            )));
        }
        Ok(SystemConfig { k })
    }

    pub fn alphabet_size(&self) -> usize {
        self.k + 1
    }
}

/// Contents of every container. Stacks list bottom first, queues front first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LiveState {
    pub input: VecDeque<Label>,
    pub stacks: Vec<Vec<Label>>,
    pub output: Vec<Label>,
}

impl LiveState {
    pub fn k(&self) -> usize {
        self.stacks.len()
    }

    /// Applies `m` in place. Returns `false` (leaving the state untouched)
    /// when the move is illegal.
    pub fn try_apply(&mut self, m: Move) -> bool {
        let i = m.index();
        let k = self.stacks.len();
        if i > k + 1 {
            return false;
        }
        let x = if i == 1 {
            match self.input.pop_front() {
                Some(x) => x,
                None => return false,
            }
        } else {
            match self.stacks[i - 2].pop() {
                Some(x) => x,
                None => return false,
            }
        };
        if i == k + 1 {
            self.output.push(x);
        } else {
            self.stacks[i - 1].push(x);
        }
        true
    }

    pub fn is_final(&self) -> bool {
        self.input.is_empty() && self.stacks.iter().all(Vec::is_empty)
    }

    pub fn is_initial(&self) -> bool {
        self.output.is_empty() && self.stacks.iter().all(Vec::is_empty)
    }

    /// All labels, in container order.
    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.input
            .iter()
            .chain(self.stacks.iter().flatten())
            .chain(self.output.iter())
            .copied()
    }

    pub fn element_count(&self) -> usize {
        self.input.len() + self.stacks.iter().map(Vec::len).sum::<usize>() + self.output.len()
    }
}

/// A game state, or the absorbing illegal state.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SystemState {
    Illegal,
    Live(LiveState),
}

impl SystemState {
    pub fn is_illegal(&self) -> bool {
        matches!(self, SystemState::Illegal)
    }

    pub fn live(&self) -> Option<&LiveState> {
        match self {
            SystemState::Live(s) => Some(s),
            SystemState::Illegal => None,
        }
    }

    pub fn is_final(&self) -> bool {
        self.live().is_some_and(LiveState::is_final)
    }
}

fn fmt_labels<'a>(f: &mut fmt::Formatter<'_>, it: impl Iterator<Item = &'a Label>) -> fmt::Result {
    f.write_str("[")?;
    for (i, x) in it.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{x}")?;
    }
    f.write_str("]")
}

impl fmt::Display for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemState::Illegal => f.write_str("illegal"),
            SystemState::Live(s) => {
                f.write_str("in:")?;
                fmt_labels(f, s.input.iter())?;
                for (i, st) in s.stacks.iter().enumerate() {
                    write!(f, " s{}:", i + 1)?;
                    fmt_labels(f, st.iter())?;
                }
                f.write_str(" out:")?;
                fmt_labels(f, s.output.iter())
            }
        }
    }
}

/// `I(n, k)`: elements `1..=n` in the input queue, in order.
pub fn initial_state(n: usize, k: usize) -> SystemState {
    SystemState::Live(LiveState {
        input: (1..=n as Label).collect(),
        stacks: vec![Vec::new(); k],
        output: Vec::new(),
    })
}

/// `s_pi`: the input queue holds `pi(1), ..., pi(n)` front to back.
pub fn state_of_permutation(pi: &Perm, k: usize) -> SystemState {
    SystemState::Live(LiveState {
        input: pi.as_slice().iter().copied().collect(),
        stacks: vec![Vec::new(); k],
        output: Vec::new(),
    })
}

/// `t_pi`: the output queue holds `pi(1), ..., pi(n)` front to back.
pub fn final_state_of_permutation(pi: &Perm, k: usize) -> SystemState {
    SystemState::Live(LiveState {
        input: VecDeque::new(),
        stacks: vec![Vec::new(); k],
        output: pi.as_slice().to_vec(),
    })
}

/// `F(n, k)`.
pub fn final_state(n: usize, k: usize) -> SystemState {
    final_state_of_permutation(&Perm::identity(n), k)
}

pub fn apply_move(m: Move, s: &SystemState) -> SystemState {
    match s {
        SystemState::Illegal => SystemState::Illegal,
        SystemState::Live(live) => {
            let mut next = live.clone();
            if next.try_apply(m) {
                SystemState::Live(next)
            } else {
                SystemState::Illegal
            }
        }
    }
}

/// `w * s`.
pub fn apply_string(w: &MoveString, s: &SystemState) -> SystemState {
    match s {
        SystemState::Illegal => SystemState::Illegal,
        SystemState::Live(live) => {
            let mut next = live.clone();
            for m in w.iter() {
                if !next.try_apply(m) {
                    return SystemState::Illegal;
                }
            }
            SystemState::Live(next)
        }
    }
}

/// Prefix-count test: every prefix `u` has `|u|_1 >= ... >= |u|_{k+1}` and
/// the whole string has every count equal to `n`.
pub fn is_n_complete(w: &MoveString, n: usize, k: usize) -> bool {
    if !w.fits(k) {
        return false;
    }
    let mut counts = vec![0usize; k + 1];
    for m in w.iter() {
        let i = m.index() - 1;
        counts[i] += 1;
        if i > 0 && counts[i] > counts[i - 1] {
            return false;
        }
    }
    counts.iter().all(|&c| c == n)
}

/// The three equivalent characterizations of `n`-completeness, each
/// evaluated on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Characterizations {
    /// `w * I(n, k)` is a final state.
    pub simulation: bool,
    /// `w` splits into `n` subsequences `m_1 m_2 ... m_{k+1}`.
    pub partition: bool,
    /// The prefix-count condition.
    pub prefix_counts: bool,
}

impl Characterizations {
    pub fn agree(&self) -> bool {
        self.simulation == self.partition && self.partition == self.prefix_counts
    }
}

fn partitions_into_runs(w: &MoveString, n: usize, k: usize) -> bool {
    // progress[c] = number of letters of m_1 ... m_{k+1} consumed by copy c
    let mut progress: Vec<usize> = Vec::with_capacity(n);
    for m in w.iter() {
        let i = m.index();
        if i > k + 1 {
            return false;
        }
        if i == 1 {
            if progress.len() == n {
                return false;
            }
            progress.push(1);
        } else {
            match progress.iter_mut().find(|p| **p == i - 1) {
                Some(p) => *p = i,
                None => return false,
            }
        }
    }
    progress.len() == n && progress.iter().all(|&p| p == k + 1)
}

pub fn complete_characterizations(w: &MoveString, n: usize, k: usize) -> Characterizations {
    let simulation = w.fits(k)
        && match apply_string(w, &initial_state(n, k)) {
            SystemState::Live(s) => s.is_final(),
            SystemState::Illegal => false,
        };
    Characterizations {
        simulation,
        partition: partitions_into_runs(w, n, k),
        prefix_counts: is_n_complete(w, n, k),
    }
}

/// The output order of `w * I(n, k)` when that state is final.
pub fn generated_permutation(w: &MoveString, n: usize, k: usize) -> Option<Perm> {
    match apply_string(w, &initial_state(n, k)) {
        SystemState::Live(s) if s.is_final() => Perm::new(s.output).ok(),
        _ => None,
    }
}

/// The three nested string languages of a given element count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Language {
    /// Type I: `n`-complete strings.
    Complete,
    /// Type II: every letter exactly `n` times.
    Balanced,
    /// Type III: every string of length `n(k + 1)`.
    FixedLength,
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" | "complete" => Ok(Language::Complete),
            "ii" | "2" | "balanced" => Ok(Language::Balanced),
            "iii" | "3" | "fixed-length" | "fixed_length" => Ok(Language::FixedLength),
            _ => Err(Error::Parse(format!("unknown language tier {s:?}"))),
        }
    }
}

/// Lexicographic enumeration of one of the three languages.
pub struct LanguageIter {
    n: usize,
    alphabet: usize,
    language: Language,
    word: Vec<usize>,
    counts: Vec<usize>,
    len: usize,
    state: IterState,
}

enum IterState {
    Fresh,
    Running,
    Done,
}

impl LanguageIter {
    fn allowed(&self, letter: usize) -> bool {
        match self.language {
            Language::FixedLength => true,
            Language::Balanced => self.counts[letter] < self.n,
            Language::Complete => {
                self.counts[letter] < self.n
                    && (letter == 0 || self.counts[letter] < self.counts[letter - 1])
            }
        }
    }

    fn place(&mut self, letter: usize) {
        self.word.push(letter);
        self.counts[letter] += 1;
    }

    fn unplace(&mut self) -> Option<usize> {
        let letter = self.word.pop()?;
        self.counts[letter] -= 1;
        Some(letter)
    }

    /// Extends the current prefix with the smallest allowed letters. Every
    /// valid prefix of these languages can be completed, so this never
    /// stalls.
    fn fill(&mut self) -> bool {
        while self.word.len() < self.len {
            match (0..self.alphabet).find(|&a| self.allowed(a)) {
                Some(a) => self.place(a),
                None => return false,
            }
        }
        true
    }

    fn advance(&mut self) -> bool {
        while let Some(last) = self.unplace() {
            if let Some(a) = (last + 1..self.alphabet).find(|&a| self.allowed(a)) {
                self.place(a);
                if self.fill() {
                    return true;
                }
            }
        }
        false
    }

    fn current(&self) -> MoveString {
        self.word.iter().map(|&a| Move((a + 1) as u8)).collect()
    }
}

impl Iterator for LanguageIter {
    type Item = MoveString;

    fn next(&mut self) -> Option<MoveString> {
        let ok = match self.state {
            IterState::Done => return None,
            IterState::Fresh => {
                self.state = IterState::Running;
                self.fill()
            }
            IterState::Running => self.advance(),
        };
        if ok {
            Some(self.current())
        } else {
            self.state = IterState::Done;
            None
        }
    }
}

/// Streams `Λ(n, k)` of the requested type in lexicographic order. Fails when
/// the string length `n(k + 1)` exceeds `max_len`.
pub fn enumerate_language(
    n: usize,
    k: usize,
    language: Language,
    max_len: usize,
) -> Result<LanguageIter> {
    let len = n * (k + 1);
    if len > max_len {
        return Err(Error::CapExceeded {
            what: "string length",
            requested: len,
            cap: max_len,
        });
    }
    Ok(LanguageIter {
        n,
        alphabet: k + 1,
        language,
        word: Vec::with_capacity(len),
        counts: vec![0; k + 1],
        len,
        state: IterState::Fresh,
    })
}

/// Cardinality of a language without materializing it.
pub fn count_language(n: usize, k: usize, language: Language) -> Result<u128> {
    let overflow = || Error::CapExceeded {
        what: "language size (u128)",
        requested: n * (k + 1),
        cap: 0,
    };
    let alphabet = k + 1;
    let len = n * alphabet;
    match language {
        Language::FixedLength => (alphabet as u128)
            .checked_pow(len as u32)
            .ok_or_else(overflow),
        Language::Balanced => {
            // multinomial(len; n, ..., n) as a product of binomials
            let mut total: u128 = 1;
            let mut placed = 0usize;
            for _ in 0..alphabet {
                placed += n;
                total = total
                    .checked_mul(binomial(placed, n).ok_or_else(overflow)?)
                    .ok_or_else(overflow)?;
            }
            Ok(total)
        }
        Language::Complete => {
            // paths through non-increasing count vectors bounded by n
            let mut memo: HashMap<Vec<usize>, u128> = HashMap::new();
            fn walk(
                c: &mut Vec<usize>,
                n: usize,
                memo: &mut HashMap<Vec<usize>, u128>,
            ) -> Option<u128> {
                if c.iter().all(|&x| x == n) {
                    return Some(1);
                }
                if let Some(&v) = memo.get(c.as_slice()) {
                    return Some(v);
                }
                let mut total: u128 = 0;
                for i in 0..c.len() {
                    let ok = c[i] < n && (i == 0 || c[i] < c[i - 1]);
                    if ok {
                        c[i] += 1;
                        let sub = walk(c, n, memo);
                        c[i] -= 1;
                        total = total.checked_add(sub?)?;
                    }
                }
                memo.insert(c.clone(), total);
                Some(total)
            }
            walk(&mut vec![0; alphabet], n, &mut memo).ok_or_else(overflow)
        }
    }
}

pub(crate) fn binomial(n: usize, r: usize) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}
