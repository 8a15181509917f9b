//! Relations between move strings.
//!
//! Two strings are equivalent when they act identically on every state. A
//! single well-stocked probe state decides this: with `ℓ` elements in the
//! input queue and in every stack, no string of length `ℓ` can underflow a
//! container, and two strings agree everywhere iff they agree on the probe.
//!
//! Discovery partitions all strings of each length by their image of the
//! probe. Within a class the lexicographically greatest string is canonical;
//! every other member is reducible. Reducible strings are closed under taking
//! superstrings, so the rules worth keeping are the ones whose left side has
//! only canonical proper factors. Those left sides are exactly the minimal
//! forbidden factors of the canonical strings.

use std::collections::BTreeSet;
use std::sync::Mutex;

use aho_corasick::{AhoCorasick, MatchKind};
use arrayvec::ArrayVec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{apply_string, LiveState, Move, MoveString, SystemState};

/// Unoriented pair of equivalent strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Relation {
    pub lhs: MoveString,
    pub rhs: MoveString,
}

impl Relation {
    /// Orients the pair so that the rule increases lexicographically.
    pub fn orient(&self) -> Option<RewriteRule> {
        match self.lhs.cmp(&self.rhs) {
            std::cmp::Ordering::Less => Some(RewriteRule {
                from: self.lhs.clone(),
                to: self.rhs.clone(),
            }),
            std::cmp::Ordering::Greater => Some(RewriteRule {
                from: self.rhs.clone(),
                to: self.lhs.clone(),
            }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RewriteRule {
    pub from: MoveString,
    pub to: MoveString,
}

impl RewriteRule {
    pub fn new(from: &str, to: &str) -> Result<Self> {
        Ok(RewriteRule {
            from: from.parse()?,
            to: to.parse()?,
        })
    }
}

/// The three length-2 and length-4 rules.
pub fn base_rules() -> Vec<RewriteRule> {
    [("13", "31"), ("1223", "2312"), ("1232", "2123")]
        .iter()
        .map(|(f, t)| RewriteRule::new(f, t).unwrap())
        .collect()
}

/// The base rules plus the two length-6 rules.
pub fn extended_rules() -> Vec<RewriteRule> {
    let mut r = base_rules();
    r.push(RewriteRule::new("112223", "231122").unwrap());
    r.push(RewriteRule::new("122233", "223312").unwrap());
    r
}

/// Substring-minimal set of forbidden words, ordered by length then lex.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ForbiddenWordSet {
    words: Vec<MoveString>,
}

impl ForbiddenWordSet {
    /// Sorts, deduplicates and drops any word containing another. Empty
    /// words are rejected since they would forbid everything.
    pub fn new(words: impl IntoIterator<Item = MoveString>) -> Result<Self> {
        let mut sorted: Vec<MoveString> = words.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if sorted.iter().any(MoveString::is_empty) {
            return Err(Error::InvalidInput("forbidden words must be non-empty".into()));
        }
        sorted.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        let mut kept: Vec<MoveString> = Vec::with_capacity(sorted.len());
        // shorter words come first, so containment only needs checking backwards
        let matcher_words = sorted.clone();
        for w in matcher_words {
            if !kept.iter().any(|k| w.contains(k)) {
                kept.push(w);
            }
        }
        Ok(ForbiddenWordSet { words: kept })
    }

    pub fn parse_list(words: &[&str]) -> Result<Self> {
        Self::new(words.iter().map(|w| w.parse()).collect::<Result<Vec<MoveString>>>()?)
    }

    pub fn words(&self) -> &[MoveString] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Whether `w` avoids every forbidden word as a factor.
    pub fn avoided_by(&self, w: &MoveString) -> bool {
        !self.words.iter().any(|f| w.contains(f))
    }

    pub fn max_len(&self) -> usize {
        self.words.iter().map(MoveString::len).max().unwrap_or(0)
    }
}

/// Live state with `len` distinct labels in the input queue and in each of
/// the `k` stacks; the output queue starts empty. Labels are `1..=len` in the
/// input, then each stack gets the next block of `len` labels.
pub fn probe_state(len: usize, k: usize) -> SystemState {
    let block = |b: usize| (b * len + 1) as u32..=((b + 1) * len) as u32;
    SystemState::Live(LiveState {
        input: block(0).collect(),
        stacks: (1..=k).map(|b| block(b).collect()).collect(),
        output: Vec::new(),
    })
}

/// Decides `u ~ v` with one probe of size `max(|u|, |v|)`.
pub fn equivalent(u: &MoveString, v: &MoveString, k: usize) -> bool {
    if !u.fits(k) || !v.fits(k) {
        return false;
    }
    let probe = probe_state(u.len().max(v.len()).max(1), k);
    let a = apply_string(u, &probe);
    let b = apply_string(v, &probe);
    !a.is_illegal() && a == b
}

/// Reference implementation of the discovery rule set, on top of
/// [`apply_string`]. Quadratic in the number of strings; for tests and small
/// lengths only.
pub fn discover_relations_naive(max_len: usize, k: usize) -> Vec<RewriteRule> {
    use std::collections::BTreeMap;
    let alphabet = k + 1;
    let mut rules: Vec<RewriteRule> = Vec::new();
    for len in 1..=max_len {
        let probe = probe_state(len, k);
        let mut classes: BTreeMap<String, Vec<MoveString>> = BTreeMap::new();
        let total = alphabet.pow(len as u32);
        for code in 0..total {
            let w = decode_word(code as u64, len, alphabet);
            let image = apply_string(&w, &probe).to_string();
            classes.entry(image).or_default().push(w);
        }
        let mut grouped: Vec<Vec<MoveString>> = classes.into_values().collect();
        for g in &mut grouped {
            g.sort();
        }
        grouped.sort_by(|a, b| a.last().cmp(&b.last()));
        let mut fresh = Vec::new();
        for g in grouped {
            let target = g.last().unwrap().clone();
            for v in &g[..g.len() - 1] {
                if !rules.iter().any(|r| v.contains(&r.from)) {
                    fresh.push(RewriteRule {
                        from: v.clone(),
                        to: target.clone(),
                    });
                }
            }
        }
        rules.extend(fresh);
    }
    rules
}

/// Resource limits for [`discover_relations`].
#[derive(Debug, Clone, Copy)]
pub struct DiscoveryConfig {
    pub k: usize,
    pub max_len: usize,
    /// Upper bound on `(k + 1)^max_len`.
    pub max_strings: u64,
}

impl DiscoveryConfig {
    pub fn new(k: usize, max_len: usize) -> Self {
        DiscoveryConfig {
            k,
            max_len,
            max_strings: 1 << 27,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStats {
    pub len: usize,
    pub strings: u64,
    pub classes: u64,
    pub rules: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discovery {
    pub k: usize,
    pub max_len: usize,
    pub rules: Vec<RewriteRule>,
    pub per_length: Vec<LengthStats>,
}

/// Name recorded in rule files for the rule-selection convention used here.
pub const RULE_CONVENTION: &str = "lexmax-target/minimal-lhs";

const KEY_CAP: usize = 64;
type ImageKey = ArrayVec<u8, KEY_CAP>;

/// Word code: base-`(k+1)` digits, first letter most significant, so numeric
/// order on codes of one length is lexicographic order on strings.
fn decode_word(mut code: u64, len: usize, alphabet: usize) -> MoveString {
    let mut digits = vec![0usize; len];
    for d in digits.iter_mut().rev() {
        *d = (code % alphabet as u64) as usize + 1;
        code /= alphabet as u64;
    }
    MoveString::from_indices(&digits).expect("digits within alphabet")
}

/// Probe replay on byte labels. Stack contents below the lowest point a
/// stack reached are untouched probe labels, so a state is pinned down by
/// those low-water marks and the labels above them.
struct ProbeRunner {
    len: usize,
    stacks: Vec<Vec<u8>>,
    low: Vec<usize>,
    output: Vec<u8>,
    consumed: usize,
}

impl ProbeRunner {
    fn new(len: usize, k: usize) -> Self {
        ProbeRunner {
            len,
            stacks: vec![Vec::with_capacity(2 * len); k],
            low: vec![len; k],
            output: Vec::with_capacity(len),
            consumed: 0,
        }
    }

    fn reset(&mut self) {
        for (b, s) in self.stacks.iter_mut().enumerate() {
            s.clear();
            let start = (b + 1) * self.len + 1;
            s.extend((start..start + self.len).map(|x| x as u8));
        }
        self.low.fill(self.len);
        self.output.clear();
        self.consumed = 0;
    }

    /// Runs a word given as 0-based letters and returns its image key. The
    /// key is injective among words with equal letter counts.
    fn image(&mut self, letters: &[u8]) -> ImageKey {
        self.reset();
        let k = self.stacks.len();
        for &a in letters {
            let i = a as usize + 1;
            let x = if i == 1 {
                self.consumed += 1;
                self.consumed as u8
            } else {
                let s = &mut self.stacks[i - 2];
                let x = s.pop().expect("probe never underflows");
                if s.len() < self.low[i - 2] {
                    self.low[i - 2] = s.len();
                }
                x
            };
            if i == k + 1 {
                self.output.push(x);
            } else {
                self.stacks[i - 1].push(x);
            }
        }
        let mut key = ImageKey::new();
        for &l in &self.low {
            key.push(l as u8);
        }
        for (s, &l) in self.stacks.iter().zip(&self.low) {
            key.try_extend_from_slice(&s[l..]).expect("key fits");
        }
        key.try_extend_from_slice(&self.output).expect("key fits");
        key
    }
}

struct Bitset(Vec<u64>);

impl Bitset {
    fn new(bits: u64) -> Self {
        Bitset(vec![0; bits.div_ceil(64) as usize])
    }
    fn set(&mut self, i: u64) {
        self.0[(i / 64) as usize] |= 1 << (i % 64);
    }
    fn get(&self, i: u64) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
}

fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Every word with the given letter counts, as 0-based letters, in lex order.
fn words_with_counts(counts: &[usize], mut emit: impl FnMut(&[u8])) {
    fn go(counts: &mut [usize], word: &mut Vec<u8>, emit: &mut dyn FnMut(&[u8])) {
        if counts.iter().all(|&c| c == 0) {
            emit(word);
            return;
        }
        for a in 0..counts.len() {
            if counts[a] > 0 {
                counts[a] -= 1;
                word.push(a as u8);
                go(counts, word, emit);
                word.pop();
                counts[a] += 1;
            }
        }
    }
    let mut c = counts.to_vec();
    let mut word = Vec::with_capacity(c.iter().sum());
    go(&mut c, &mut word, &mut emit);
}

fn encode(letters: &[u8], alphabet: u64) -> u64 {
    letters.iter().fold(0u64, |acc, &a| acc * alphabet + a as u64)
}

/// Discovers the rule set for all lengths up to `config.max_len`.
pub fn discover_relations(config: DiscoveryConfig) -> Result<Discovery> {
    discover_relations_with_progress(config, |_| {})
}

pub fn discover_relations_with_progress(
    config: DiscoveryConfig,
    mut progress: impl FnMut(&LengthStats),
) -> Result<Discovery> {
    let DiscoveryConfig { k, max_len, max_strings } = config;
    let alphabet = (k + 1) as u64;
    if k == 0 || k + 1 > crate::game::MAX_ALPHABET {
        return Err(Error::InvalidInput(format!("unsupported stack count {k}")));
    }
    let total = alphabet.checked_pow(max_len as u32).filter(|&t| t <= max_strings);
    let Some(_) = total else {
        return Err(Error::CapExceeded {
            what: "strings of maximum length",
            requested: max_len,
            cap: max_strings as usize,
        });
    };
    if (k + 1) * max_len > u8::MAX as usize || max_len + k > KEY_CAP {
        return Err(Error::CapExceeded {
            what: "probe labels",
            requested: (k + 1) * max_len,
            cap: u8::MAX as usize,
        });
    }

    let mut rules: Vec<RewriteRule> = Vec::new();
    let mut per_length = Vec::new();
    // canonical flags for the previous length; the empty word is canonical
    let mut prev = Bitset::new(1);
    prev.set(0);

    for len in 1..=max_len {
        let size = alphabet.pow(len as u32);
        let tail_mod = alphabet.pow(len as u32 - 1);
        let canonical = Mutex::new(Bitset::new(size));
        let vectors = compositions(len, k + 1);

        let per_vector: Vec<(Vec<(u64, u64)>, u64)> = vectors
            .par_iter()
            .map(|counts| {
                let mut runner = ProbeRunner::new(len, k);
                let mut images: Vec<(ImageKey, u64)> = Vec::new();
                words_with_counts(counts, |letters| {
                    images.push((runner.image(letters), encode(letters, alphabet)));
                });
                images.sort_unstable();

                let mut found: Vec<(u64, u64)> = Vec::new();
                let mut targets: Vec<u64> = Vec::new();
                let mut start = 0;
                while start < images.len() {
                    let mut end = start + 1;
                    while end < images.len() && images[end].0 == images[start].0 {
                        end += 1;
                    }
                    let target = images[end - 1].1;
                    targets.push(target);
                    for &(_, v) in &images[start..end - 1] {
                        if prev.get(v % tail_mod) && prev.get(v / alphabet) {
                            found.push((target, v));
                        }
                    }
                    start = end;
                }
                let classes = targets.len() as u64;
                let mut c = canonical.lock().unwrap();
                for t in targets {
                    c.set(t);
                }
                (found, classes)
            })
            .collect();

        let classes: u64 = per_vector.iter().map(|(_, c)| c).sum();
        let mut fresh: Vec<(u64, u64)> = per_vector.into_iter().flat_map(|(f, _)| f).collect();
        fresh.sort_unstable();
        let stats = LengthStats {
            len,
            strings: size,
            classes,
            rules: fresh.len(),
        };
        rules.extend(fresh.into_iter().map(|(target, v)| RewriteRule {
            from: decode_word(v, len, alphabet as usize),
            to: decode_word(target, len, alphabet as usize),
        }));
        progress(&stats);
        per_length.push(stats);
        prev = canonical.into_inner().unwrap();
    }

    Ok(Discovery {
        k,
        max_len,
        rules,
        per_length,
    })
}

/// Left sides of the rules, pruned to substring-minimal words.
pub fn derive_forbidden(rules: &[RewriteRule]) -> ForbiddenWordSet {
    ForbiddenWordSet::new(rules.iter().map(|r| r.from.clone()).filter(|w| !w.is_empty()))
        .expect("empty words filtered")
}

/// Rewriting by leftmost, then longest, matching left side.
pub struct RewriteSystem {
    rules: Vec<RewriteRule>,
    matcher: Option<AhoCorasick>,
}

impl RewriteSystem {
    pub fn new(rules: &[RewriteRule]) -> Result<Self> {
        let mut kept: Vec<RewriteRule> = Vec::with_capacity(rules.len());
        let mut seen = std::collections::HashSet::new();
        for (index, r) in rules.iter().enumerate() {
            if r.from.len() != r.to.len() || r.to <= r.from {
                return Err(Error::InvalidRule {
                    index,
                    from: r.from.to_string(),
                    to: r.to.to_string(),
                    reason: "rule must preserve length and increase lexicographically".into(),
                });
            }
            if seen.insert(r.from.clone()) {
                kept.push(r.clone());
            }
        }
        let matcher = if kept.is_empty() {
            None
        } else {
            let patterns: Vec<Vec<u8>> = kept.iter().map(|r| r.from.as_digits()).collect();
            Some(
                AhoCorasick::builder()
                    .match_kind(MatchKind::LeftmostLongest)
                    .build(patterns)
                    .map_err(|e| Error::InvalidInput(e.to_string()))?,
            )
        };
        Ok(RewriteSystem { rules: kept, matcher })
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    /// Applies rules until none matches. Each step makes the word strictly
    /// larger at a fixed length, so this terminates.
    pub fn rewrite(&self, w: &MoveString) -> MoveString {
        let Some(matcher) = &self.matcher else {
            return w.clone();
        };
        let mut digits = w.as_digits();
        while let Some(m) = matcher.find(digits.as_slice()) {
            let to = self.rules[m.pattern().as_usize()].to.as_digits();
            digits[m.start()..m.end()].copy_from_slice(&to);
        }
        MoveString::new(
            digits
                .iter()
                .map(|&d| Move::new((d - b'0') as usize).expect("digit move"))
                .collect(),
        )
    }
}

pub fn rewrite_to_canonical(w: &MoveString, rules: &[RewriteRule]) -> Result<MoveString> {
    Ok(RewriteSystem::new(rules)?.rewrite(w))
}

/// Audits every rule: moves exist for `k` stacks, lengths and letter counts
/// match, the rule increases lexicographically, and both sides act the same
/// on the probe state. Reports the first failure.
pub fn verify_rules(rules: &[RewriteRule], k: usize) -> Result<()> {
    for (index, r) in rules.iter().enumerate() {
        let fail = |reason: &str| Error::InvalidRule {
            index,
            from: r.from.to_string(),
            to: r.to.to_string(),
            reason: reason.to_string(),
        };
        if !r.from.fits(k) || !r.to.fits(k) {
            return Err(fail("uses a move outside the alphabet"));
        }
        if r.from.len() != r.to.len() {
            return Err(fail("sides differ in length"));
        }
        if r.from.counts(k + 1) != r.to.counts(k + 1) {
            return Err(fail("sides differ in letter counts"));
        }
        if r.to <= r.from {
            return Err(fail("target is not lexicographically greater"));
        }
        if !equivalent(&r.from, &r.to, k) {
            return Err(fail("sides act differently on the probe state"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFileHeader {
    pub k: usize,
    pub max_len: usize,
    pub convention: String,
}

/// On-disk rule set: a header and `{from, to}` digit-string pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleFile {
    pub header: RuleFileHeader,
    pub rules: Vec<RewriteRule>,
}

impl RuleFile {
    pub fn from_discovery(d: &Discovery) -> Self {
        RuleFile {
            header: RuleFileHeader {
                k: d.k,
                max_len: d.max_len,
                convention: RULE_CONVENTION.to_string(),
            },
            rules: d.rules.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
