//! Operation words in the Dyer-Lashof algebra, admissibility, excess,
//! and Adem rewriting to admissible normal form.
//!
//! A word is stored outermost letter first: `bQ3 Q1` is β Q^3 applied
//! after Q^1. Pairs are admissible when `s_left <= p*s_right - eps_right`
//! (at p = 2: `s_left <= 2*s_right`).

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::RwLock;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fp_core::{binom_mod, PrimeField};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OpsError {
    #[error("pair {0} {1} is admissible; no Adem relation applies")]
    AdmissiblePair(OpLetter, OpLetter),
    #[error("rewriting exceeded the step budget of {0}")]
    StepBudget(u64),
    #[error("invalid letter {0} for p = {1}")]
    InvalidLetter(OpLetter, u32),
    #[error("cannot parse operation word: {0}")]
    Parse(String),
}

/// β^eps Q^s.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OpLetter {
    pub s: u32,
    pub eps: u8,
}

impl OpLetter {
    pub fn q(s: u32) -> Self {
        OpLetter { s, eps: 0 }
    }

    pub fn bq(s: u32) -> Self {
        OpLetter { s, eps: 1 }
    }

    pub fn is_valid(&self, p: u32) -> bool {
        self.eps <= 1 && self.s >= self.eps as u32 && (p != 2 || self.eps == 0)
    }

    /// (deg_Q, deg_beta)
    pub fn bidegree(&self, p: u32) -> (i64, i64) {
        if p == 2 {
            (self.s as i64, 0)
        } else {
            (2 * self.s as i64 * (p as i64 - 1), -(self.eps as i64))
        }
    }

    pub fn degree(&self, p: u32) -> i64 {
        let (q, b) = self.bidegree(p);
        q + b
    }
}

impl fmt::Display for OpLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.eps == 1 {
            write!(f, "bQ{}", self.s)
        } else {
            write!(f, "Q{}", self.s)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordDegree {
    pub deg_q: i64,
    pub deg_beta: i64,
    pub total: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct OpWord {
    pub letters: Vec<OpLetter>,
}

impl OpWord {
    pub fn empty() -> Self {
        OpWord { letters: Vec::new() }
    }

    pub fn new(letters: Vec<OpLetter>) -> Self {
        OpWord { letters }
    }

    /// Q^{s_1} ... Q^{s_k}
    pub fn qs(ss: &[u32]) -> Self {
        OpWord { letters: ss.iter().map(|&s| OpLetter::q(s)).collect() }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_valid(&self, p: u32) -> bool {
        self.letters.iter().all(|l| l.is_valid(p))
    }

    /// `self` followed by `other`: (self·other) x = self(other(x)).
    pub fn concat(&self, other: &OpWord) -> OpWord {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        OpWord { letters }
    }

    pub fn tail(&self) -> OpWord {
        OpWord { letters: self.letters[1.min(self.letters.len())..].to_vec() }
    }

    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for OpWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", l)?;
        }
        Ok(())
    }
}

impl FromStr for OpWord {
    type Err = OpsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "1" || s.is_empty() {
            return Ok(OpWord::empty());
        }
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            let (eps, rest) = if let Some(r) = tok.strip_prefix("bQ") {
                (1, r)
            } else if let Some(r) = tok.strip_prefix('Q') {
                (0, r)
            } else {
                return Err(OpsError::Parse(tok.to_string()));
            };
            let s: u32 = rest.parse().map_err(|_| OpsError::Parse(tok.to_string()))?;
            letters.push(OpLetter { s, eps });
        }
        Ok(OpWord { letters })
    }
}

pub fn word_degree(w: &OpWord, p: u32) -> WordDegree {
    let (mut q, mut b) = (0, 0);
    for l in &w.letters {
        let (lq, lb) = l.bidegree(p);
        q += lq;
        b += lb;
    }
    WordDegree { deg_q: q, deg_beta: b, total: q + b }
}

#[inline]
pub fn pair_admissible(left: OpLetter, right: OpLetter, p: u32) -> bool {
    (left.s as i64) <= p as i64 * right.s as i64 - right.eps as i64
}

pub fn is_admissible(w: &OpWord, p: u32) -> bool {
    w.letters.windows(2).all(|x| pair_admissible(x[0], x[1], p))
}

/// Excess; `None` stands for +infinity (the empty word).
pub fn excess(w: &OpWord, p: u32) -> Option<i64> {
    let first = w.letters.first()?;
    let rest: i64 = w.letters[1..].iter().map(|l| l.degree(p)).sum();
    if p == 2 {
        Some(first.s as i64 - rest)
    } else {
        Some(2 * first.s as i64 - first.eps as i64 - rest)
    }
}

/// b(I) = eps_1, zero for the empty word.
pub fn b_of(w: &OpWord) -> u8 {
    w.letters.first().map_or(0, |l| l.eps)
}

/// Whether `e(I) + b(I) > d` (the generator condition over a class of degree d).
pub fn excess_b_exceeds(w: &OpWord, p: u32, d: i64) -> bool {
    match excess(w, p) {
        None => true,
        Some(e) => e + b_of(w) as i64 > d,
    }
}

/// Whether `e(I) >= d`.
pub fn excess_at_least(w: &OpWord, p: u32, d: i64) -> bool {
    match excess(w, p) {
        None => true,
        Some(e) => e >= d,
    }
}

/// F_p-linear combination of words of one prime.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCombination {
    pub field: PrimeField,
    pub terms: BTreeMap<OpWord, u32>,
}

impl OpCombination {
    pub fn zero(field: PrimeField) -> Self {
        OpCombination { field, terms: BTreeMap::new() }
    }

    pub fn word(field: PrimeField, w: OpWord) -> Self {
        let mut c = Self::zero(field);
        c.add_term(w, 1);
        c
    }

    pub fn add_term(&mut self, w: OpWord, c: u32) {
        let f = self.field;
        let c = c % f.p();
        if c == 0 {
            return;
        }
        match self.terms.entry(w) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let n = f.add(*o.get(), c);
                if n == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = n;
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &OpCombination, c: u32) {
        for (w, &x) in &other.terms {
            self.add_term(w.clone(), self.field.mul(x, c));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Left multiplication by a word: w·self.
    pub fn left_mul(&self, w: &OpWord) -> OpCombination {
        let mut out = Self::zero(self.field);
        for (t, &c) in &self.terms {
            out.add_term(w.concat(t), c);
        }
        out
    }

    /// Right multiplication by a word: self·w.
    pub fn right_mul(&self, w: &OpWord) -> OpCombination {
        let mut out = Self::zero(self.field);
        for (t, &c) in &self.terms {
            out.add_term(t.concat(w), c);
        }
        out
    }
}

impl fmt::Display for OpCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if *c == 1 {
                write!(f, "{}", w)?;
            } else {
                write!(f, "{}*({})", c, w)?;
            }
        }
        Ok(())
    }
}

/// Right-hand side of the Adem relation for an inadmissible pair.
pub fn adem_expand_pair(field: PrimeField, left: OpLetter, right: OpLetter) -> Result<OpCombination, OpsError> {
    let p = field.p();
    for l in [left, right] {
        if !l.is_valid(p) {
            return Err(OpsError::InvalidLetter(l, p));
        }
    }
    if pair_admissible(left, right, p) {
        return Err(OpsError::AdmissiblePair(left, right));
    }
    let (r, s) = (left.s as i64, right.s as i64);
    let pi = p as i64;
    let mut out = OpCombination::zero(field);
    let two = |a: OpLetter, b: OpLetter| OpWord::new(vec![a, b]);
    if right.eps == 0 {
        // β^ε Q^r Q^s, r > ps
        let top = r - (pi - 1) * s - 1;
        for i in 0..=top.max(-1) {
            let c = binom_mod(pi * i - r, top - i, p);
            if c == 0 {
                continue;
            }
            let c = field.mul(field.sign(r + i), c);
            out.add_term(two(OpLetter { s: (r + s - i) as u32, eps: left.eps }, OpLetter::q(i as u32)), c);
        }
    } else if left.eps == 0 {
        // Q^r β Q^s, r >= ps
        let top = r - (pi - 1) * s;
        for i in 0..=top.max(-1) {
            let sg = field.sign(r + i);
            let c1 = binom_mod(pi * i - r, top - i, p);
            if c1 != 0 {
                out.add_term(two(OpLetter::bq((r + s - i) as u32), OpLetter::q(i as u32)), field.mul(sg, c1));
            }
            let c2 = binom_mod(pi * i - r - 1, top - i, p);
            if c2 != 0 {
                out.add_term(two(OpLetter::q((r + s - i) as u32), OpLetter::bq(i as u32)), field.neg(field.mul(sg, c2)));
            }
        }
    } else {
        // β Q^r β Q^s, r >= ps
        let top = r - (pi - 1) * s;
        for i in 0..=top.max(-1) {
            let c = binom_mod(pi * i - r - 1, top - i, p);
            if c == 0 {
                continue;
            }
            let c = field.neg(field.mul(field.sign(r + i), c));
            out.add_term(two(OpLetter::bq((r + s - i) as u32), OpLetter::bq(i as u32)), c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    LeftmostFirst,
    RightmostFirst,
}

pub const DEFAULT_STEP_BUDGET: u64 = 10_000_000;

/// Adem rewriting with a memo of single-word normal forms.
///
/// The memo is shared between threads behind a read/write lock; a racing
/// insert only ever stores the same normal form twice.
pub struct Normalizer {
    pub field: PrimeField,
    pub strategy: Strategy,
    pub step_budget: u64,
    memo: RwLock<FxHashMap<OpWord, OpCombination>>,
}

impl Normalizer {
    pub fn new(field: PrimeField) -> Self {
        Self::with_options(field, Strategy::LeftmostFirst, DEFAULT_STEP_BUDGET)
    }

    pub fn with_options(field: PrimeField, strategy: Strategy, step_budget: u64) -> Self {
        Normalizer { field, strategy, step_budget, memo: RwLock::new(FxHashMap::default()) }
    }

    fn bad_pair(&self, w: &OpWord) -> Option<usize> {
        let p = self.field.p();
        let n = w.letters.len();
        if n < 2 {
            return None;
        }
        match self.strategy {
            Strategy::LeftmostFirst => (0..n - 1).find(|&i| !pair_admissible(w.letters[i], w.letters[i + 1], p)),
            Strategy::RightmostFirst => (0..n - 1).rev().find(|&i| !pair_admissible(w.letters[i], w.letters[i + 1], p)),
        }
    }

    fn nf_word(&self, w: &OpWord, budget: &mut u64) -> Result<OpCombination, OpsError> {
        if let Some(c) = self.memo.read().unwrap().get(w) {
            return Ok(c.clone());
        }
        let Some(i) = self.bad_pair(w) else {
            return Ok(OpCombination::word(self.field, w.clone()));
        };
        if *budget == 0 {
            return Err(OpsError::StepBudget(self.step_budget));
        }
        *budget -= 1;
        let rhs = adem_expand_pair(self.field, w.letters[i], w.letters[i + 1])?;
        let mut out = OpCombination::zero(self.field);
        for (pair, &c) in &rhs.terms {
            let mut letters = w.letters[..i].to_vec();
            letters.extend_from_slice(&pair.letters);
            letters.extend_from_slice(&w.letters[i + 2..]);
            let sub = self.nf_word(&OpWord::new(letters), budget)?;
            out.add_scaled(&sub, c);
        }
        self.memo.write().unwrap().insert(w.clone(), out.clone());
        Ok(out)
    }

    pub fn normalize_word(&self, w: &OpWord) -> Result<OpCombination, OpsError> {
        let p = self.field.p();
        if let Some(l) = w.letters.iter().find(|l| !l.is_valid(p)) {
            return Err(OpsError::InvalidLetter(*l, p));
        }
        let mut budget = self.step_budget;
        self.nf_word(w, &mut budget)
    }

    pub fn normalize(&self, c: &OpCombination) -> Result<OpCombination, OpsError> {
        let mut out = OpCombination::zero(self.field);
        for (w, &x) in &c.terms {
            out.add_scaled(&self.normalize_word(w)?, x);
        }
        Ok(out)
    }
}

/// Rewrites to admissible form with the default leftmost-first strategy.
pub fn normalize(c: &OpCombination, step_budget: u64) -> Result<OpCombination, OpsError> {
    Normalizer::with_options(c.field, Strategy::LeftmostFirst, step_budget).normalize(c)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleMonomial {
    pub word: OpWord,
    pub degree: WordDegree,
    /// `None` for the empty word (excess +infinity).
    pub excess: Option<i64>,
    pub b: u8,
}

impl AdmissibleMonomial {
    pub fn from_word(w: OpWord, p: u32) -> Self {
        let degree = word_degree(&w, p);
        let excess = excess(&w, p);
        let b = b_of(&w);
        AdmissibleMonomial { word: w, degree, excess, b }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExcessCondition {
    Any,
    /// e(I) >= d: the basis condition of the free unstable module.
    AtLeast(i64),
    /// e(I) + b(I) > d: the basis condition of the free Q-unstable module.
    PlusBExceeds(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LetterPattern {
    Any,
    AllEpsilonZero,
    AllEven,
    /// At least one odd s (p = 2 words outside the all-even span).
    SomeOdd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibleFilter {
    pub excess: ExcessCondition,
    pub pattern: LetterPattern,
    pub include_empty: bool,
}

impl AdmissibleFilter {
    pub fn any() -> Self {
        AdmissibleFilter { excess: ExcessCondition::Any, pattern: LetterPattern::Any, include_empty: false }
    }

    pub fn q_unstable(d: i64) -> Self {
        AdmissibleFilter { excess: ExcessCondition::PlusBExceeds(d), pattern: LetterPattern::Any, include_empty: false }
    }

    pub fn unstable(d: i64) -> Self {
        AdmissibleFilter { excess: ExcessCondition::AtLeast(d), pattern: LetterPattern::Any, include_empty: false }
    }

    pub fn with_pattern(mut self, pattern: LetterPattern) -> Self {
        self.pattern = pattern;
        self
    }

    pub fn accepts(&self, w: &OpWord, p: u32) -> bool {
        if w.is_empty() && !self.include_empty {
            return false;
        }
        let ok = match self.excess {
            ExcessCondition::Any => true,
            ExcessCondition::AtLeast(d) => excess_at_least(w, p, d),
            ExcessCondition::PlusBExceeds(d) => excess_b_exceeds(w, p, d),
        };
        ok && match self.pattern {
            LetterPattern::Any => true,
            LetterPattern::AllEpsilonZero => w.letters.iter().all(|l| l.eps == 0),
            LetterPattern::AllEven => w.letters.iter().all(|l| l.s % 2 == 0),
            LetterPattern::SomeOdd => w.letters.iter().any(|l| l.s % 2 == 1),
        }
    }

    fn tail_bound(&self) -> Option<i64> {
        match self.excess {
            ExcessCondition::Any => None,
            ExcessCondition::AtLeast(d) | ExcessCondition::PlusBExceeds(d) => Some(d),
        }
    }
}

/// Admissible words with every s >= 1 and total degree <= `max_total_degree`
/// that pass `filter`, ordered by (total degree, length, letters).
///
/// Letters Q^0 are never produced: in an admissible word they can only
/// form a leading run, and such words have negative excess over any class
/// of positive degree.
pub fn enumerate_admissible(p: u32, max_total_degree: i64, filter: &AdmissibleFilter) -> Vec<AdmissibleMonomial> {
    let bound = filter.tail_bound();
    let pattern_ok = |l: &OpLetter| match filter.pattern {
        LetterPattern::AllEpsilonZero => l.eps == 0,
        LetterPattern::AllEven => l.s.is_multiple_of(2),
        _ => true,
    };
    let mut found: Vec<OpWord> = Vec::new();
    if filter.accepts(&OpWord::empty(), p) && max_total_degree >= 0 {
        found.push(OpWord::empty());
    }
    // Admissible tails of a word have excess at least that of the word, so
    // every intermediate word must already meet the excess bound.
    let mut stack: Vec<(OpWord, i64)> = Vec::new();
    let max_eps = if p == 2 { 0 } else { 1 };
    for eps in 0..=max_eps {
        let mut s = 1u32;
        loop {
            let l = OpLetter { s, eps };
            let d = l.degree(p);
            if d > max_total_degree {
                break;
            }
            s += 1;
            if !pattern_ok(&l) {
                continue;
            }
            let w = OpWord::new(vec![l]);
            if bound.is_none_or(|m| excess(&w, p).unwrap() >= m) {
                stack.push((w, d));
            }
        }
    }
    while let Some((w, d)) = stack.pop() {
        let head = w.letters[0];
        let max_s = p as i64 * head.s as i64 - head.eps as i64;
        for eps in 0..=max_eps {
            for s in (eps as i64).max(1)..=max_s {
                let l = OpLetter { s: s as u32, eps };
                let nd = d + l.degree(p);
                if nd > max_total_degree {
                    break;
                }
                if !pattern_ok(&l) {
                    continue;
                }
                let e = if p == 2 { s - d } else { 2 * s - eps as i64 - d };
                if let Some(m) = bound {
                    if e < m {
                        continue;
                    }
                }
                let mut letters = Vec::with_capacity(w.len() + 1);
                letters.push(l);
                letters.extend_from_slice(&w.letters);
                stack.push((OpWord::new(letters), nd));
            }
        }
        if filter.accepts(&w, p) {
            found.push(w);
        }
    }
    let mut out: Vec<AdmissibleMonomial> = found.into_iter().map(|w| AdmissibleMonomial::from_word(w, p)).collect();
    out.sort_by(|a, b| (a.degree.total, a.word.len(), &a.word).cmp(&(b.degree.total, b.word.len(), &b.word)));
    out
}
