//! Degreewise Hopf algebra models of H_*(Q_0 X; F_p) for X = S^0, CP∞₊, ΣCP∞₊.
//!
//! Classes live in the base component. A generator is τ·Q^I x, where τ
//! multiplies by the unit [-w] and w = p^len(I)·weight(x), so monomials
//! never carry units. Operations on a translated class are recovered from
//! the total operation Q_t = Σ Q^s t^s, which is multiplicative:
//! Q_t[m] = [pm]·Y^m with Y = 1 + Σ_{i>0} τQ^iι t^i, and β Q_t[m] = m Y^{m-1} Z
//! with Z = Σ τβQ^iι t^i. Weights are always 0 or powers of p, so Y^{p^j}
//! is the j-fold Frobenius twist of Y.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock, RwLock};

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admissible_ops::{
    enumerate_admissible, excess_b_exceeds, is_admissible, word_degree, AdmissibleFilter, Normalizer, OpLetter,
    OpWord, OpsError, Strategy, DEFAULT_STEP_BUDGET,
};
use crate::fp_core::{Echelon, Insert, PrimeField, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HopfError {
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("degree {0} exceeds the table bound {1}")]
    DegreeOverflow(i64, i64),
    #[error("P -> Q is not injective in degree {0}; no unique primitive lift")]
    LiftNotUnique(i64),
    #[error("no primitive lifts the given class in degree {0}")]
    NoLift(i64),
    #[error("class is not homogeneous")]
    NotHomogeneous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    S0,
    CP,
    SigmaCP,
}

impl SpaceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpaceKind::S0 => "s0",
            SpaceKind::CP => "cp",
            SpaceKind::SigmaCP => "sigma-cp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseClass {
    pub name: String,
    pub degree: i64,
    pub deg_beta: i64,
    /// Component of the class before translation: 1 for classes of X₊
    /// coming from X, 0 for suspension classes.
    pub weight: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub field: PrimeField,
}

impl SpaceSpec {
    pub fn new(kind: SpaceKind, field: PrimeField) -> Self {
        SpaceSpec { kind, field }
    }

    /// Reduced-homology basis through `max_degree`.
    pub fn base_classes(&self, max_degree: i64) -> Vec<BaseClass> {
        let p = self.field.p();
        match self.kind {
            SpaceKind::S0 => vec![BaseClass { name: "iota".into(), degree: 0, deg_beta: 0, weight: 1 }],
            SpaceKind::CP => (0..=max_degree / 2)
                .map(|k| BaseClass {
                    name: if k == 0 { "iota".into() } else { format!("x{}", 2 * k) },
                    degree: 2 * k,
                    deg_beta: 0,
                    weight: 1,
                })
                .collect(),
            SpaceKind::SigmaCP => (1..=max_degree)
                .step_by(2)
                .map(|s| BaseClass { name: format!("a{}", s), degree: s, deg_beta: if p == 2 { 0 } else { -1 }, weight: 0 })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraGenerator {
    pub word: OpWord,
    pub base: usize,
    pub degree: i64,
    pub deg_beta: i64,
    /// log_p of the translation weight (meaningless when the base weight is 0)
    pub length: u32,
    pub label: String,
}

impl AlgebraGenerator {
    pub fn is_odd(&self) -> bool {
        self.degree % 2 != 0
    }
}

/// Monomial: sorted (generator index, exponent) pairs.
pub type Mono = Vec<(u32, u32)>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Elem {
    pub terms: FxHashMap<Mono, u32>,
}

impl Elem {
    pub fn zero() -> Self {
        Elem { terms: FxHashMap::default() }
    }

    pub fn one() -> Self {
        Self::mono(Vec::new())
    }

    pub fn mono(m: Mono) -> Self {
        let mut e = Self::zero();
        e.terms.insert(m, 1);
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, f: PrimeField, m: Mono, c: u32) {
        let c = c % f.p();
        if c == 0 {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(m) {
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

    pub fn add_scaled(&mut self, f: PrimeField, other: &Elem, c: u32) {
        if c.is_multiple_of(f.p()) {
            return;
        }
        for (m, &x) in &other.terms {
            self.add_term(f, m.clone(), f.mul(x, c));
        }
    }

    pub fn scaled(&self, f: PrimeField, c: u32) -> Elem {
        let mut e = Elem::zero();
        e.add_scaled(f, self, c);
        e
    }

    /// Terms sorted by monomial, for deterministic output.
    pub fn sorted_terms(&self) -> Vec<(Mono, u32)> {
        let mut v: Vec<(Mono, u32)> = self.terms.iter().map(|(m, c)| (m.clone(), *c)).collect();
        v.sort();
        v
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tensor {
    pub terms: FxHashMap<(Mono, Mono), u32>,
}

impl Tensor {
    pub fn zero() -> Self {
        Tensor { terms: FxHashMap::default() }
    }

    pub fn add_term(&mut self, f: PrimeField, l: Mono, r: Mono, c: u32) {
        let c = c % f.p();
        if c == 0 {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry((l, r)) {
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

    pub fn add_scaled(&mut self, f: PrimeField, other: &Tensor, c: u32) {
        for ((l, r), &x) in &other.terms {
            self.add_term(f, l.clone(), r.clone(), f.mul(x, c));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

/// A class [m]·x of H_*(QX) with x in the base component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledClass {
    pub component: i64,
    pub class: Elem,
}

/// Power series in t with algebra coefficients; index = power of t.
type PSeries = Vec<Elem>;

/// A class of QX before translation: weight 0 or p^j, plus its
/// translated representative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Weight {
    Zero,
    Pow(u32),
}

impl Weight {
    fn times_p(self) -> Weight {
        match self {
            Weight::Zero => Weight::Zero,
            Weight::Pow(j) => Weight::Pow(j + 1),
        }
    }
}

/// Total operation (A = Σ Q^s x t^s, B = Σ βQ^s x t^s) of a class.
#[derive(Debug, Clone)]
struct TotalOp {
    a: PSeries,
    b: PSeries,
}

#[derive(Debug, Clone)]
pub struct PrimitiveData {
    pub degree: i64,
    /// Basis of P_n in coordinates of `basis(n)`.
    pub basis: Vec<SparseVec>,
    /// Monomial indices on which the primitive basis is in echelon form.
    pub pivots: Vec<u64>,
}

pub struct DegreewiseHopfAlgebra {
    pub spec: SpaceSpec,
    pub field: PrimeField,
    pub max_degree: i64,
    pub bases: Vec<BaseClass>,
    pub gens: Vec<AlgebraGenerator>,
    gen_index: FxHashMap<(OpWord, usize), u32>,
    pub norm: Normalizer,
    delta: i64,
    mono_bases: Vec<OnceLock<Arc<MonoBasis>>>,
    gen_action_memo: RwLock<FxHashMap<(OpLetter, u32), Arc<Elem>>>,
    eval_memo: RwLock<FxHashMap<(OpWord, usize), Arc<Elem>>>,
    gen_total_memo: RwLock<FxHashMap<u32, Arc<TotalOp>>>,
    gen_coproduct_memo: RwLock<FxHashMap<u32, Arc<Tensor>>>,
    twist_memo: RwLock<FxHashMap<(bool, u32), Arc<PSeries>>>,
    prim_memo: RwLock<FxHashMap<i64, Arc<PrimitiveData>>>,
}

pub struct MonoBasis {
    pub monos: Vec<Mono>,
    pub index: FxHashMap<Mono, u32>,
}

impl DegreewiseHopfAlgebra {
    pub fn new(spec: SpaceSpec, max_degree: i64) -> Self {
        Self::with_budget(spec, max_degree, DEFAULT_STEP_BUDGET)
    }

    pub fn with_budget(spec: SpaceSpec, max_degree: i64, step_budget: u64) -> Self {
        let field = spec.field;
        let p = field.p();
        let bases = spec.base_classes(max_degree);
        let gens = generator_set(&spec, max_degree);
        let gen_index = gens.iter().enumerate().map(|(i, g)| ((g.word.clone(), g.base), i as u32)).collect();
        let delta = if p == 2 { 1 } else { 2 * (p as i64 - 1) };
        let n = (max_degree.max(0) + 1) as usize;
        DegreewiseHopfAlgebra {
            spec,
            field,
            max_degree,
            bases,
            gens,
            gen_index,
            norm: Normalizer::with_options(field, Strategy::LeftmostFirst, step_budget),
            delta,
            mono_bases: (0..n).map(|_| OnceLock::new()).collect(),
            gen_action_memo: RwLock::new(FxHashMap::default()),
            eval_memo: RwLock::new(FxHashMap::default()),
            gen_total_memo: RwLock::new(FxHashMap::default()),
            gen_coproduct_memo: RwLock::new(FxHashMap::default()),
            twist_memo: RwLock::new(FxHashMap::default()),
            prim_memo: RwLock::new(FxHashMap::default()),
        }
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn generator_index(&self, word: &OpWord, base: usize) -> Option<u32> {
        self.gen_index.get(&(word.clone(), base)).copied()
    }

    pub fn base_index(&self, name: &str) -> Option<usize> {
        self.bases.iter().position(|b| b.name == name)
    }

    pub fn generator_label(&self, g: u32) -> &str {
        &self.gens[g as usize].label
    }

    // ---- monomials ----

    pub fn mono_degree(&self, m: &Mono) -> i64 {
        m.iter().map(|&(g, e)| self.gens[g as usize].degree * e as i64).sum()
    }

    pub fn mono_len(m: &Mono) -> u32 {
        m.iter().map(|x| x.1).sum()
    }

    fn odd(&self, g: u32) -> bool {
        self.p() != 2 && self.gens[g as usize].degree % 2 != 0
    }

    /// Product of monomials with its Koszul sign; `None` if an odd
    /// generator would be squared.
    pub fn mono_mul(&self, a: &Mono, b: &Mono) -> Option<(bool, Mono)> {
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let mut neg = false;
        // odd generators of `a` not yet passed: their count flips the sign
        // whenever an odd generator of `b` moves in front of them
        let mut odd_a_remaining = a.iter().filter(|x| self.odd(x.0)).count();
        while i < a.len() || j < b.len() {
            if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
                if self.odd(a[i].0) {
                    odd_a_remaining -= 1;
                }
                out.push(a[i]);
                i += 1;
            } else if i == a.len() || b[j].0 < a[i].0 {
                if self.odd(b[j].0) && odd_a_remaining % 2 == 1 {
                    neg = !neg;
                }
                out.push(b[j]);
                j += 1;
            } else {
                if self.odd(a[i].0) {
                    return None;
                }
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
        Some((neg, out))
    }

    pub fn mul(&self, x: &Elem, y: &Elem) -> Elem {
        let f = self.field;
        let mut out = Elem::zero();
        for (a, &ca) in &x.terms {
            let da = self.mono_degree(a);
            for (b, &cb) in &y.terms {
                if da + self.mono_degree(b) > self.max_degree {
                    continue;
                }
                if let Some((neg, m)) = self.mono_mul(a, b) {
                    let c = f.mul(ca, cb);
                    out.add_term(f, m, if neg { f.neg(c) } else { c });
                }
            }
        }
        out
    }

    /// p-th power of a homogeneous class.
    pub fn frobenius_elem(&self, x: &Elem) -> Elem {
        let f = self.field;
        let p = self.p();
        let mut out = Elem::zero();
        for (m, &c) in &x.terms {
            if m.iter().any(|x| self.odd(x.0)) {
                continue;
            }
            if self.mono_degree(m) * p as i64 > self.max_degree {
                continue;
            }
            let mm: Mono = m.iter().map(|&(g, e)| (g, e * p)).collect();
            out.add_term(f, mm, c);
        }
        out
    }

    pub fn elem_degree(&self, x: &Elem) -> Option<i64> {
        let mut d = None;
        for m in x.terms.keys() {
            let dm = self.mono_degree(m);
            match d {
                None => d = Some(dm),
                Some(e) if e != dm => return None,
                _ => {}
            }
        }
        d
    }

    pub fn generator_elem(&self, g: u32) -> Elem {
        Elem::mono(vec![(g, 1)])
    }

    pub fn render_mono(&self, m: &Mono) -> String {
        if m.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = m
            .iter()
            .map(|&(g, e)| {
                let l = &self.gens[g as usize].label;
                if e == 1 {
                    format!("[{}]", l)
                } else {
                    format!("[{}]^{}", l, e)
                }
            })
            .collect();
        parts.join("")
    }

    pub fn render(&self, x: &Elem) -> String {
        if x.is_zero() {
            return "0".into();
        }
        x.sorted_terms()
            .iter()
            .map(|(m, c)| if *c == 1 { self.render_mono(m) } else { format!("{}*{}", c, self.render_mono(m)) })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    // ---- monomial bases ----

    /// All monomials of degree n, ordered by (number of factors, generators).
    pub fn basis(&self, n: i64) -> Arc<MonoBasis> {
        assert!(n >= 0 && n <= self.max_degree, "degree {} outside 0..={}", n, self.max_degree);
        self.mono_bases[n as usize]
            .get_or_init(|| {
                let mut monos = Vec::new();
                let cands: Vec<u32> =
                    (0..self.gens.len() as u32).filter(|&g| self.gens[g as usize].degree <= n).collect();
                let mut cur: Mono = Vec::new();
                self.enum_monos(&cands, 0, n, &mut cur, &mut monos);
                monos.sort_by(|a, b| (Self::mono_len(a), a).cmp(&(Self::mono_len(b), b)));
                let index = monos.iter().enumerate().map(|(i, m)| (m.clone(), i as u32)).collect();
                Arc::new(MonoBasis { monos, index })
            })
            .clone()
    }

    fn enum_monos(&self, cands: &[u32], start: usize, rem: i64, cur: &mut Mono, out: &mut Vec<Mono>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for k in start..cands.len() {
            let g = cands[k];
            let d = self.gens[g as usize].degree;
            if d > rem {
                continue;
            }
            let max_e = if self.odd(g) { 1 } else { rem / d };
            for e in 1..=max_e {
                cur.push((g, e as u32));
                self.enum_monos(cands, k + 1, rem - d * e, cur, out);
                cur.pop();
            }
        }
    }

    pub fn dim(&self, n: i64) -> usize {
        self.basis(n).monos.len()
    }

    pub fn coords(&self, x: &Elem, n: i64) -> SparseVec {
        let b = self.basis(n);
        let pairs = x.terms.iter().map(|(m, &c)| (b.index[m] as u64, c)).collect();
        SparseVec::from_pairs(self.field, pairs)
    }

    pub fn from_coords(&self, v: &SparseVec, n: i64) -> Elem {
        let b = self.basis(n);
        let mut e = Elem::zero();
        for &(i, c) in &v.entries {
            e.add_term(self.field, b.monos[i as usize].clone(), c);
        }
        e
    }

    // ---- R-action ----

    /// τ(Q^J x) for an admissible word J on base class x, untranslated
    /// evaluation followed by translation.
    fn eval_admissible(&self, w: &OpWord, base: usize) -> Result<Arc<Elem>, HopfError> {
        let key = (w.clone(), base);
        if let Some(e) = self.eval_memo.read().unwrap().get(&key) {
            return Ok(e.clone());
        }
        let p = self.p();
        let bd = self.bases[base].degree;
        let total = word_degree(w, p).total + bd;
        let res = if total > self.max_degree {
            Elem::zero()
        } else if w.is_empty() {
            if bd == 0 {
                Elem::one()
            } else {
                self.generator_elem(self.generator_index(w, base).expect("base generator"))
            }
        } else if let Some(g) = self.generator_index(w, base) {
            self.generator_elem(g)
        } else {
            let head = w.letters[0];
            let tail = w.tail();
            let inner = word_degree(&tail, p).total + bd;
            // not a generator: either below the unstable range or the p-th power case
            let top = if p == 2 { head.s as i64 } else { 2 * head.s as i64 };
            if top != inner || head.eps == 1 {
                Elem::zero()
            } else {
                let x = self.eval_admissible(&tail, base)?;
                self.frobenius_elem(&x)
            }
        };
        let res = Arc::new(res);
        self.eval_memo.write().unwrap().insert(key, res.clone());
        Ok(res)
    }

    /// τ(L g) for a letter applied to an untranslated generator.
    fn gen_action(&self, l: OpLetter, g: u32) -> Result<Arc<Elem>, HopfError> {
        if let Some(e) = self.gen_action_memo.read().unwrap().get(&(l, g)) {
            return Ok(e.clone());
        }
        let p = self.p();
        let gen = &self.gens[g as usize];
        let deg = gen.degree + l.degree(p);
        let res = if deg > self.max_degree {
            Elem::zero()
        } else {
            let top = if p == 2 { l.s as i64 } else { 2 * l.s as i64 - l.eps as i64 };
            if top < gen.degree {
                Elem::zero()
            } else if l.eps == 0 && (if p == 2 { l.s as i64 } else { 2 * l.s as i64 }) == gen.degree {
                self.frobenius_elem(&self.generator_elem(g))
            } else {
                let nf = self.norm.normalize_word(&OpWord::new(vec![l]).concat(&gen.word))?;
                let mut out = Elem::zero();
                for (w, &c) in &nf.terms {
                    let e = self.eval_admissible(w, gen.base)?;
                    out.add_scaled(self.field, &e, c);
                }
                out
            }
        };
        let res = Arc::new(res);
        self.gen_action_memo.write().unwrap().insert((l, g), res.clone());
        Ok(res)
    }

    /// Largest s with Q^s of a degree-d class still in range.
    fn s_bound(&self, d: i64) -> usize {
        if d > self.max_degree {
            return 0;
        }
        // +1: a Bockstein lowers the degree by one
        ((self.max_degree - d + 1) / self.delta + 1) as usize
    }

    fn series_mul(&self, x: &PSeries, y: &PSeries, len: usize) -> PSeries {
        let mut out = vec![Elem::zero(); len];
        for (i, xi) in x.iter().enumerate().take(len) {
            if xi.is_zero() {
                continue;
            }
            for (j, yj) in y.iter().enumerate().take(len - i) {
                if yj.is_zero() {
                    continue;
                }
                let prod = self.mul(xi, yj);
                out[i + j].add_scaled(self.field, &prod, 1);
            }
        }
        out
    }

    fn series_len(&self) -> usize {
        (self.max_degree / self.delta + 1) as usize
    }

    /// Y^{±p^j}: `inverse` selects Y^{-1} before twisting.
    fn twisted_y(&self, inverse: bool, j: u32) -> Result<Arc<PSeries>, HopfError> {
        if let Some(s) = self.twist_memo.read().unwrap().get(&(inverse, j)) {
            return Ok(s.clone());
        }
        let len = self.series_len();
        let res = if j == 0 {
            let iota = self.base_index("iota").expect("translation needs the class iota");
            let mut y = vec![Elem::zero(); len];
            y[0] = Elem::one();
            for (i, yi) in y.iter_mut().enumerate().skip(1) {
                if let Some(g) = self.generator_index(&OpWord::qs(&[i as u32]), iota) {
                    *yi = self.generator_elem(g);
                }
            }
            if inverse {
                // v_0 = 1, v_n = -Σ_{i=1}^n y_i v_{n-i}
                let mut v = vec![Elem::zero(); len];
                v[0] = Elem::one();
                for n in 1..len {
                    let mut acc = Elem::zero();
                    for i in 1..=n {
                        if y[i].is_zero() || v[n - i].is_zero() {
                            continue;
                        }
                        acc.add_scaled(self.field, &self.mul(&y[i], &v[n - i]), 1);
                    }
                    v[n] = acc.scaled(self.field, self.field.neg(1));
                }
                v
            } else {
                y
            }
        } else {
            let prev = self.twisted_y(inverse, j - 1)?;
            let p = self.p() as usize;
            let mut out = vec![Elem::zero(); len];
            for (i, c) in prev.iter().enumerate() {
                if i * p < len {
                    out[i * p] = self.frobenius_elem(c);
                }
            }
            out
        };
        let res = Arc::new(res);
        self.twist_memo.write().unwrap().insert((inverse, j), res.clone());
        Ok(res)
    }

    fn z_series(&self) -> PSeries {
        let len = self.series_len();
        let mut z = vec![Elem::zero(); len];
        if self.p() == 2 {
            return z;
        }
        if let Some(iota) = self.base_index("iota") {
            for (i, zi) in z.iter_mut().enumerate().skip(1) {
                if let Some(g) = self.generator_index(&OpWord::new(vec![OpLetter::bq(i as u32)]), iota) {
                    *zi = self.generator_elem(g);
                }
            }
        }
        z
    }

    /// Total operation of the translated generator g.
    fn gen_total(&self, g: u32) -> Result<Arc<TotalOp>, HopfError> {
        if let Some(t) = self.gen_total_memo.read().unwrap().get(&g) {
            return Ok(t.clone());
        }
        let gen = &self.gens[g as usize];
        let len = self.s_bound(gen.degree).min(self.series_len());
        let mut ua = vec![Elem::zero(); len];
        let mut ub = vec![Elem::zero(); len];
        for s in 0..len {
            ua[s] = (*self.gen_action(OpLetter::q(s as u32), g)?).clone();
            if self.p() != 2 && s >= 1 {
                ub[s] = (*self.gen_action(OpLetter::bq(s as u32), g)?).clone();
            }
        }
        let res = if self.bases[gen.base].weight == 0 {
            TotalOp { a: ua, b: ub }
        } else {
            // τg = [-w] g with w = p^len
            let yinv = self.twisted_y(true, gen.length)?;
            let a = self.series_mul(&yinv, &ua, len);
            let mut b = self.series_mul(&yinv, &ub, len);
            if gen.length == 0 && self.p() != 2 {
                // β Q_t[-1] = -Y^{-2} Z
                let yinv0 = self.twisted_y(true, 0)?;
                let y2 = self.series_mul(&yinv0, &yinv0, len);
                let t = self.series_mul(&self.series_mul(&y2, &self.z_series(), len), &ua, len);
                for s in 0..len {
                    b[s].add_scaled(self.field, &t[s], self.field.neg(1));
                }
            }
            TotalOp { a, b }
        };
        let res = Arc::new(res);
        self.gen_total_memo.write().unwrap().insert(g, res.clone());
        Ok(res)
    }

    /// Total operation of a translated monomial, via the Cartan formula.
    fn mono_total(&self, m: &Mono, len: usize) -> Result<TotalOp, HopfError> {
        let mut a: PSeries = vec![Elem::zero(); len];
        let mut b: PSeries = vec![Elem::zero(); len];
        if len == 0 {
            return Ok(TotalOp { a, b });
        }
        a[0] = Elem::one();
        let mut deg_so_far = 0i64;
        for &(g, e) in m {
            let t = self.gen_total(g)?;
            for _ in 0..e {
                let na = self.series_mul(&a, &t.a, len);
                if self.p() != 2 {
                    let mut nb = self.series_mul(&b, &t.a, len);
                    let right = self.series_mul(&a, &t.b, len);
                    let sign = if deg_so_far % 2 == 0 { 1 } else { self.field.neg(1) };
                    for s in 0..len {
                        nb[s].add_scaled(self.field, &right[s], sign);
                    }
                    b = nb;
                }
                a = na;
                deg_so_far += self.gens[g as usize].degree;
            }
        }
        Ok(TotalOp { a, b })
    }

    fn elem_total(&self, x: &Elem, len: usize) -> Result<TotalOp, HopfError> {
        let mut a: PSeries = vec![Elem::zero(); len];
        let mut b: PSeries = vec![Elem::zero(); len];
        for (m, &c) in &x.terms {
            let t = self.mono_total(m, len)?;
            for s in 0..len {
                a[s].add_scaled(self.field, &t.a[s], c);
                b[s].add_scaled(self.field, &t.b[s], c);
            }
        }
        Ok(TotalOp { a, b })
    }

    /// β^eps Q^s applied to a class of H_*(Q_0 X).
    pub fn q_action(&self, l: OpLetter, x: &Elem) -> Result<Elem, HopfError> {
        let len = l.s as usize + 1;
        let t = self.elem_total(x, len)?;
        Ok(if l.eps == 0 { t.a[l.s as usize].clone() } else { t.b[l.s as usize].clone() })
    }

    /// Q^I applied to a class, innermost letter first.
    pub fn word_action(&self, w: &OpWord, x: &Elem) -> Result<Elem, HopfError> {
        let mut cur = x.clone();
        for l in w.letters.iter().rev() {
            cur = self.q_action(*l, &cur)?;
        }
        Ok(cur)
    }

    /// Total operation of the untranslated class [w]·u, in translated form.
    fn weighted_total(&self, w: Weight, u: &Elem, len: usize) -> Result<TotalOp, HopfError> {
        let t = self.elem_total(u, len)?;
        match w {
            Weight::Zero => Ok(t),
            Weight::Pow(j) => {
                let yw = self.twisted_y(false, j)?;
                let a = self.series_mul(&yw, &t.a, len);
                let mut b = self.series_mul(&yw, &t.b, len);
                if j == 0 && self.p() != 2 {
                    let zt = self.series_mul(&self.z_series(), &t.a, len);
                    for s in 0..len {
                        b[s].add_scaled(self.field, &zt[s], 1);
                    }
                }
                Ok(TotalOp { a, b })
            }
        }
    }

    /// Y^m for any integer m, from base-p digits of |m|.
    fn y_power(&self, m: i64) -> Result<PSeries, HopfError> {
        let len = self.series_len();
        let mut out = vec![Elem::zero(); len];
        out[0] = Elem::one();
        let p = self.p() as i64;
        let (mut rest, inverse) = (m.unsigned_abs() as i64, m < 0);
        let mut j = 0u32;
        while rest > 0 {
            let digit = rest % p;
            if digit > 0 {
                let tw = self.twisted_y(inverse, j)?;
                for _ in 0..digit {
                    out = self.series_mul(&out, &tw, len);
                }
            }
            rest /= p;
            j += 1;
        }
        Ok(out)
    }

    /// β^eps Q^s applied to the untranslated class [m]·x. The result lies
    /// in component p·m.
    pub fn q_action_labeled(&self, l: OpLetter, x: &LabeledClass) -> Result<LabeledClass, HopfError> {
        let len = l.s as usize + 1;
        let t = self.elem_total(&x.class, len)?;
        let ym = self.y_power(x.component)?;
        let s = l.s as usize;
        let mut out = Elem::zero();
        if l.eps == 0 {
            for i in 0..=s {
                out.add_scaled(self.field, &self.mul(&ym[i], &t.a[s - i]), 1);
            }
        } else {
            for i in 0..=s {
                out.add_scaled(self.field, &self.mul(&ym[i], &t.b[s - i]), 1);
            }
            let c = self.field.reduce(x.component);
            if c != 0 {
                let ym1 = self.y_power(x.component - 1)?;
                let dz = self.series_mul(&ym1, &self.z_series(), len);
                for i in 0..=s {
                    out.add_scaled(self.field, &self.mul(&dz[i], &t.a[s - i]), c);
                }
            }
        }
        Ok(LabeledClass { component: x.component * self.p() as i64, class: out })
    }

    /// The untranslated generator Q^I x as a labeled class.
    pub fn labeled_generator(&self, g: u32) -> LabeledClass {
        let gen = &self.gens[g as usize];
        let w = if self.bases[gen.base].weight == 0 { 0 } else { (self.p() as i64).pow(gen.length) };
        LabeledClass { component: w, class: self.generator_elem(g) }
    }

    pub fn multiply_labeled(&self, x: &LabeledClass, y: &LabeledClass) -> LabeledClass {
        LabeledClass { component: x.component + y.component, class: self.mul(&x.class, &y.class) }
    }

    // ---- coproduct ----

    fn base_coproduct(&self, base: usize) -> Vec<(Elem, Elem, u32)> {
        let b = &self.bases[base];
        match self.spec.kind {
            SpaceKind::S0 => vec![(Elem::one(), Elem::one(), 1)],
            SpaceKind::CP => {
                let k = b.degree / 2;
                let cls = |i: i64| -> Elem {
                    if i == 0 {
                        Elem::one()
                    } else {
                        let bi = self.base_index(&format!("x{}", 2 * i)).unwrap();
                        self.generator_elem(self.generator_index(&OpWord::empty(), bi).unwrap())
                    }
                };
                (0..=k).map(|i| (cls(i), cls(k - i), 1)).collect()
            }
            SpaceKind::SigmaCP => {
                let g = self.generator_elem(self.generator_index(&OpWord::empty(), base).unwrap());
                vec![(g.clone(), Elem::one(), 1), (Elem::one(), g, 1)]
            }
        }
    }

    /// Δ of a translated generator, memoized.
    pub fn gen_coproduct(&self, g: u32) -> Result<Arc<Tensor>, HopfError> {
        if let Some(t) = self.gen_coproduct_memo.read().unwrap().get(&g) {
            return Ok(t.clone());
        }
        let f = self.field;
        let gen = &self.gens[g as usize];
        let w0 = if self.bases[gen.base].weight == 0 { Weight::Zero } else { Weight::Pow(0) };
        // pure tensors left ⊗ right with coefficient
        let mut pure: Vec<(Elem, Elem, u32)> = self.base_coproduct(gen.base);
        let mut w = w0;
        let mut inner_deg = self.bases[gen.base].degree;
        for l in gen.word.letters.iter().rev() {
            let mut next = Vec::new();
            let room = self.s_bound(inner_deg);
            let len = (l.s as usize + 1).min(room.max(1));
            for (x, y, c) in &pure {
                let tx = self.weighted_total(w, x, len)?;
                let ty = self.weighted_total(w, y, len)?;
                let dx = self.elem_degree(x).unwrap_or(0);
                for s1 in 0..=l.s as usize {
                    let s2 = l.s as usize - s1;
                    if s1 >= len || s2 >= len {
                        continue;
                    }
                    if l.eps == 0 {
                        if !tx.a[s1].is_zero() && !ty.a[s2].is_zero() {
                            next.push((tx.a[s1].clone(), ty.a[s2].clone(), *c));
                        }
                    } else {
                        if !tx.b[s1].is_zero() && !ty.a[s2].is_zero() {
                            next.push((tx.b[s1].clone(), ty.a[s2].clone(), *c));
                        }
                        if !tx.a[s1].is_zero() && !ty.b[s2].is_zero() {
                            let sg = if dx % 2 == 0 { *c } else { f.neg(*c) };
                            next.push((tx.a[s1].clone(), ty.b[s2].clone(), sg));
                        }
                    }
                }
            }
            pure = next;
            w = w.times_p();
            inner_deg += l.degree(self.p());
        }
        let mut t = Tensor::zero();
        for (x, y, c) in pure {
            for (a, &ca) in &x.terms {
                for (b, &cb) in &y.terms {
                    t.add_term(f, a.clone(), b.clone(), f.mul(c, f.mul(ca, cb)));
                }
            }
        }
        let t = Arc::new(t);
        self.gen_coproduct_memo.write().unwrap().insert(g, t.clone());
        Ok(t)
    }

    /// (a⊗b)(c⊗d) = (-1)^{|b||c|} ac⊗bd
    fn tensor_mul(&self, x: &Tensor, y: &Tensor) -> Tensor {
        let f = self.field;
        let mut out = Tensor::zero();
        for ((a, b), &c1) in &x.terms {
            let db = self.mono_degree(b);
            for ((c, d), &c2) in &y.terms {
                let dc = self.mono_degree(c);
                let Some((n1, ac)) = self.mono_mul(a, c) else { continue };
                let Some((n2, bd)) = self.mono_mul(b, d) else { continue };
                let neg = n1 ^ n2 ^ (self.p() != 2 && db % 2 != 0 && dc % 2 != 0);
                let v = f.mul(c1, c2);
                out.add_term(f, ac, bd, if neg { f.neg(v) } else { v });
            }
        }
        out
    }

    pub fn mono_coproduct(&self, m: &Mono) -> Result<Tensor, HopfError> {
        let mut t = Tensor::zero();
        t.add_term(self.field, Vec::new(), Vec::new(), 1);
        for &(g, e) in m {
            let dg = self.gen_coproduct(g)?;
            for _ in 0..e {
                t = self.tensor_mul(&t, &dg);
            }
        }
        Ok(t)
    }

    pub fn coproduct(&self, x: &Elem) -> Result<Tensor, HopfError> {
        let mut out = Tensor::zero();
        for (m, &c) in &x.terms {
            out.add_scaled(self.field, &self.mono_coproduct(m)?, c);
        }
        Ok(out)
    }

    pub fn reduced_coproduct(&self, x: &Elem) -> Result<Tensor, HopfError> {
        let mut t = self.coproduct(x)?;
        let f = self.field;
        for (m, &c) in &x.terms {
            t.add_term(f, m.clone(), Vec::new(), f.neg(c));
            t.add_term(f, Vec::new(), m.clone(), f.neg(c));
        }
        Ok(t)
    }

    /// Terms L⊗R of Δ(m) passing `keep`, expanding factor by factor and
    /// dropping partial products that fail `partial`.
    fn filtered_coproduct(
        &self,
        m: &Mono,
        partial: &(dyn Fn(&Mono, &Mono) -> bool + Sync),
        keep: &(dyn Fn(&Mono, &Mono) -> bool + Sync),
    ) -> Result<Vec<(Mono, Mono, u32)>, HopfError> {
        let f = self.field;
        let mut state: FxHashMap<(Mono, Mono), u32> = FxHashMap::default();
        state.insert((Vec::new(), Vec::new()), 1);
        for &(g, e) in m {
            let dg = self.gen_coproduct(g)?;
            let parts: Vec<(&Mono, &Mono, u32)> =
                dg.terms.iter().filter(|((l, r), _)| partial(l, r)).map(|((l, r), &c)| (l, r, c)).collect();
            for _ in 0..e {
                let mut next: FxHashMap<(Mono, Mono), u32> = FxHashMap::default();
                for ((a, b), &c1) in &state {
                    let db = self.mono_degree(b);
                    for &(c, d, c2) in &parts {
                        let Some((n1, ac)) = self.mono_mul(a, c) else { continue };
                        let Some((n2, bd)) = self.mono_mul(b, d) else { continue };
                        if !partial(&ac, &bd) {
                            continue;
                        }
                        let dc = self.mono_degree(c);
                        let neg = n1 ^ n2 ^ (self.p() != 2 && db % 2 != 0 && dc % 2 != 0);
                        let v = f.mul(c1, c2);
                        let v = if neg { f.neg(v) } else { v };
                        let slot = next.entry((ac, bd)).or_insert(0);
                        *slot = f.add(*slot, v);
                    }
                }
                next.retain(|_, v| *v != 0);
                state = next;
            }
        }
        Ok(state.into_iter().filter(|((l, r), _)| keep(l, r)).map(|((l, r), c)| (l, r, c)).collect())
    }

    // ---- primitives and indecomposables ----

    /// PH_n, computed as the kernel of the reduced coproduct projected to
    /// left factors that pivot the primitives of lower degree.
    ///
    /// If Δ̄x ≠ 0, its component of lowest left degree i has left factor in
    /// P_i, and by cocommutativity i <= n/2; a nonzero element of
    /// P_i ⊗ A survives the projection onto the pivot coordinates of P_i.
    pub fn primitives(&self, n: i64) -> Result<Arc<PrimitiveData>, HopfError> {
        if n > self.max_degree {
            return Err(HopfError::DegreeOverflow(n, self.max_degree));
        }
        if let Some(d) = self.prim_memo.read().unwrap().get(&n) {
            return Ok(d.clone());
        }
        let f = self.field;
        let basis = self.basis(n);
        let data = if n == 0 {
            PrimitiveData { degree: 0, basis: Vec::new(), pivots: Vec::new() }
        } else {
            let mut keep: FxHashSet<Mono> = FxHashSet::default();
            let mut row_of: FxHashMap<Mono, u64> = FxHashMap::default();
            let mut next_row = 0u64;
            for i in 1..=n / 2 {
                let pi = self.primitives(i)?;
                let bi = self.basis(i);
                for &pv in &pi.pivots {
                    let m = bi.monos[pv as usize].clone();
                    row_of.insert(m.clone(), next_row);
                    next_row += 1;
                    keep.insert(m);
                }
            }
            let mut prefixes: FxHashSet<Mono> = FxHashSet::default();
            for m in &keep {
                for d in sub_monomials(m) {
                    prefixes.insert(d);
                }
            }
            let cols: Vec<SparseVec> = basis
                .monos
                .par_iter()
                .map(|m| -> Result<SparseVec, HopfError> {
                    let terms = self.filtered_coproduct(m, &|l, _| prefixes.contains(l), &|l, _| keep.contains(l))?;
                    let mut pairs = Vec::with_capacity(terms.len());
                    for (l, r, c) in terms {
                        let rd = self.mono_degree(&r);
                        let ri = self.basis(rd).index[&r] as u64;
                        pairs.push(((row_of[&l] << 32) | ri, c));
                    }
                    Ok(SparseVec::from_pairs(f, pairs))
                })
                .collect::<Result<_, _>>()?;
            let kernel = crate::fp_core::sparse_kernel(f, &cols);
            let mut piv = Echelon::new(f, false);
            let mut pivots = Vec::new();
            for k in &kernel {
                if let Insert::Independent(ix) = piv.insert(k) {
                    pivots.push(piv.rows()[ix].entries[0].0);
                }
            }
            PrimitiveData { degree: n, basis: kernel, pivots }
        };
        let data = Arc::new(data);
        self.prim_memo.write().unwrap().insert(n, data.clone());
        Ok(data)
    }

    pub fn primitive_dim(&self, n: i64) -> Result<usize, HopfError> {
        Ok(self.primitives(n)?.basis.len())
    }

    /// Full reduced-coproduct test (no projection).
    pub fn is_primitive(&self, x: &Elem) -> Result<bool, HopfError> {
        Ok(self.reduced_coproduct(x)?.is_zero())
    }

    /// Basis of QH_n as monomials outside the image of Ā⊗Ā → Ā.
    /// The image is spanned by products (generator)·(monomial).
    pub fn indecomposables(&self, n: i64) -> Vec<Mono> {
        let basis = self.basis(n);
        let mut hit: FxHashSet<u32> = FxHashSet::default();
        for (gi, g) in self.gens.iter().enumerate() {
            let d = g.degree;
            if d >= n || d == 0 {
                continue;
            }
            let other = self.basis(n - d);
            for m in &other.monos {
                if m.is_empty() {
                    continue;
                }
                if let Some((_, prod)) = self.mono_mul(&vec![(gi as u32, 1)], m) {
                    hit.insert(basis.index[&prod]);
                }
            }
        }
        basis.monos.iter().enumerate().filter(|(i, _)| !hit.contains(&(*i as u32))).map(|(_, m)| m.clone()).collect()
    }

    pub fn decomposable_rank(&self, n: i64) -> usize {
        self.dim(n) - self.indecomposables(n).len()
    }

    // ---- Frobenius and Verschiebung ----

    /// Images ξ(m) ∈ A_{pn} of the basis of A_n (as coordinate vectors).
    pub fn frobenius(&self, n: i64) -> Vec<SparseVec> {
        let pn = n * self.p() as i64;
        self.basis(n).monos.iter().map(|m| self.coords(&self.frobenius_elem(&Elem::mono(m.clone())), pn)).collect()
    }

    /// λ(x) = Σ_m c_m m where c_m is the coefficient of m^{⊗p} in the
    /// p-fold iterated coproduct of x; the dual of the p-th power map on
    /// the dual algebra.
    pub fn verschiebung_elem(&self, x: &Elem) -> Result<Elem, HopfError> {
        let f = self.field;
        let p = self.p() as i64;
        let Some(d) = self.elem_degree(x) else { return Ok(Elem::zero()) };
        if d % p != 0 {
            return Ok(Elem::zero());
        }
        let k = d / p;
        let mut out = Elem::zero();
        let deg_ok = |bound: i64| move |l: &Mono, r: &Mono| self.mono_degree(l) <= bound && self.mono_degree(r) <= bound;
        if p == 2 {
            for (m, &c) in &x.terms {
                for (l, _, c2) in self.filtered_coproduct(m, &deg_ok(k), &|l, r| l == r)? {
                    out.add_term(f, l, f.mul(c, c2));
                }
            }
            return Ok(out);
        }
        // peel one factor r of degree k at a time off the iterated coproduct
        for (m, &c) in &x.terms {
            let wide = |l: &Mono, r: &Mono| self.mono_degree(l) <= d - k && self.mono_degree(r) <= k;
            for (l, r, c1) in self.filtered_coproduct(m, &wide, &|_, r| self.mono_degree(r) == k)? {
                let c2 = self.diagonal_coefficient(&l, &r, p as u32 - 1)?;
                out.add_term(f, r, f.mul(c, f.mul(c1, c2)));
            }
        }
        Ok(out)
    }

    /// Coefficient of r^{⊗j} in the j-fold iterated coproduct of the monomial l.
    fn diagonal_coefficient(&self, l: &Mono, r: &Mono, j: u32) -> Result<u32, HopfError> {
        if j == 1 {
            return Ok(u32::from(l == r));
        }
        let f = self.field;
        let k = self.mono_degree(r);
        let d = self.mono_degree(l);
        let wide = |a: &Mono, b: &Mono| self.mono_degree(a) <= d - k && self.mono_degree(b) <= k;
        let mut total = 0;
        for (a, _, c) in self.filtered_coproduct(l, &wide, &|_, b| b == r)? {
            total = f.add(total, f.mul(c, self.diagonal_coefficient(&a, r, j - 1)?));
        }
        Ok(total)
    }

    /// Images λ(m) ∈ A_{n/p} of the basis of A_n.
    pub fn verschiebung(&self, n: i64) -> Result<Vec<SparseVec>, HopfError> {
        let p = self.p() as i64;
        let basis = self.basis(n);
        if n % p != 0 {
            return Ok(vec![SparseVec::new(); basis.monos.len()]);
        }
        basis
            .monos
            .par_iter()
            .map(|m| Ok(self.coords(&self.verschiebung_elem(&Elem::mono(m.clone()))?, n / p)))
            .collect()
    }

    /// The unique primitive b with b - x decomposable. Requires P -> Q
    /// injective in degree n.
    pub fn primitive_lift(&self, x: &Elem) -> Result<Elem, HopfError> {
        let Some(n) = self.elem_degree(x) else {
            return if x.is_zero() { Ok(Elem::zero()) } else { Err(HopfError::NotHomogeneous) };
        };
        let pd = self.primitives(n)?;
        let indec: FxHashSet<u32> = {
            let b = self.basis(n);
            self.indecomposables(n).iter().map(|m| b.index[m]).collect()
        };
        // coordinates of primitives on the indecomposable monomials
        let proj = |v: &SparseVec| -> SparseVec {
            SparseVec { entries: v.entries.iter().filter(|(i, _)| indec.contains(&(*i as u32))).copied().collect() }
        };
        let projected: Vec<SparseVec> = pd.basis.iter().map(proj).collect();
        let mut ech = Echelon::new(self.field, true);
        for v in &projected {
            if let Insert::Dependent(_) = ech.insert(v) {
                return Err(HopfError::LiftNotUnique(n));
            }
        }
        let target = proj(&self.coords(x, n));
        // solve Σ c_j projected_j = target
        let mut solver = Echelon::new(self.field, true);
        for v in &projected {
            solver.insert(v);
        }
        match solver.insert(&target.scale(self.field, self.field.neg(1))) {
            Insert::Dependent(Some(comb)) => {
                let mut out = Elem::zero();
                let me = projected.len() as u64;
                for &(j, c) in &comb.entries {
                    if j == me {
                        continue;
                    }
                    out.add_scaled(self.field, &self.from_coords(&pd.basis[j as usize], n), c);
                }
                // comb·(projected, -target) = 0 with coefficient of -target equal to comb[me]
                let cm = comb.get(me);
                let inv = self.field.inv(cm);
                Ok(out.scaled(self.field, inv))
            }
            _ => Err(HopfError::NoLift(n)),
        }
    }
}

/// All monomials dividing m (including 1 and m).
pub fn sub_monomials(m: &Mono) -> Vec<Mono> {
    let mut out: Vec<Mono> = vec![Vec::new()];
    for &(g, e) in m {
        let mut next = Vec::new();
        for d in &out {
            for k in 0..=e {
                let mut x = d.clone();
                if k > 0 {
                    x.push((g, k));
                }
                next.push(x);
            }
        }
        out = next;
    }
    out
}

/// The generating set T̃ of H_*(Q_0 X) through `max_degree`:
/// Q^I x with I admissible and e(I) + b(I) > deg x, of positive degree.
pub fn generator_set(spec: &SpaceSpec, max_degree: i64) -> Vec<AlgebraGenerator> {
    let p = spec.field.p();
    let mut out = Vec::new();
    for (bi, b) in spec.base_classes(max_degree).iter().enumerate() {
        if b.degree > max_degree {
            continue;
        }
        let mut filter = AdmissibleFilter::q_unstable(b.degree);
        filter.include_empty = b.degree > 0;
        for m in enumerate_admissible(p, max_degree - b.degree, &filter) {
            debug_assert!(is_admissible(&m.word, p) && excess_b_exceeds(&m.word, p, b.degree));
            let label = if m.word.is_empty() { b.name.clone() } else { format!("{} . {}", m.word, b.name) };
            out.push(AlgebraGenerator {
                degree: m.degree.total + b.degree,
                deg_beta: m.degree.deg_beta + b.deg_beta,
                length: m.word.len() as u32,
                word: m.word,
                base: bi,
                label,
            });
        }
    }
    out.sort_by(|a, b| (a.degree, a.base, &a.word).cmp(&(b.degree, b.base, &b.word)));
    out
}

/// Dimensions of H_n for n = 0..=max_degree by counting monomials.
pub fn monomial_dims(spec: &SpaceSpec, max_degree: i64) -> Vec<u64> {
    let p = spec.field.p();
    let gens = generator_set(spec, max_degree);
    let mut dims = vec![0u64; (max_degree + 1) as usize];
    dims[0] = 1;
    for g in &gens {
        let d = g.degree as usize;
        if p != 2 && d % 2 == 1 {
            for n in (d..dims.len()).rev() {
                dims[n] += dims[n - d];
            }
        } else {
            for n in d..dims.len() {
                dims[n] += dims[n - d];
            }
        }
    }
    dims
}

/// Degree histogram of generators: degree -> (odd count, even count).
pub fn generator_counts(spec: &SpaceSpec, max_degree: i64) -> BTreeMap<i64, usize> {
    let mut out = BTreeMap::new();
    for g in generator_set(spec, max_degree) {
        *out.entry(g.degree).or_insert(0) += 1;
    }
    out
}

/// One degree of the Milnor–Moore count
/// dim Pξ(A)_n - dim P_n + dim Q_n - dim Q(λA)_{n/p}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MilnorMooreRow {
    pub degree: i64,
    pub p_xi: usize,
    pub prim: usize,
    pub indec: usize,
    pub q_lambda: usize,
}

impl MilnorMooreRow {
    pub fn residual(&self) -> i64 {
        self.p_xi as i64 - self.prim as i64 + self.indec as i64 - self.q_lambda as i64
    }
}

type Triple = FxHashMap<(Mono, Mono, Mono), u32>;

impl DegreewiseHopfAlgebra {
    fn swap(&self, t: &Tensor) -> Tensor {
        let f = self.field;
        let mut out = Tensor::zero();
        for ((a, b), &c) in &t.terms {
            let odd = self.p() != 2 && self.mono_degree(a) % 2 != 0 && self.mono_degree(b) % 2 != 0;
            out.add_term(f, b.clone(), a.clone(), if odd { f.neg(c) } else { c });
        }
        out
    }

    /// Δ(g h) = Δ(g)Δ(h) for all generator pairs with degree sum <= n.
    /// Returns the first failing pair.
    pub fn check_bialgebra(&self, n: i64) -> Result<Option<(String, String)>, HopfError> {
        let idx: Vec<u32> = (0..self.gens.len() as u32).filter(|&g| self.gens[g as usize].degree <= n).collect();
        for &g in &idx {
            for &h in &idx {
                if self.gens[g as usize].degree + self.gens[h as usize].degree > n {
                    continue;
                }
                let lhs = self.coproduct(&self.mul(&self.generator_elem(g), &self.generator_elem(h)))?;
                let rhs = self.tensor_mul(&*self.gen_coproduct(g)?, &*self.gen_coproduct(h)?);
                if lhs != rhs {
                    return Ok(Some((self.gens[g as usize].label.clone(), self.gens[h as usize].label.clone())));
                }
            }
        }
        Ok(None)
    }

    fn apply_left(&self, t: &Tensor) -> Result<Triple, HopfError> {
        let f = self.field;
        let mut out = Triple::default();
        for ((a, b), &c) in &t.terms {
            for ((x, y), &c2) in &self.mono_coproduct(a)?.terms {
                let e = out.entry((x.clone(), y.clone(), b.clone())).or_insert(0);
                *e = f.add(*e, f.mul(c, c2));
            }
        }
        out.retain(|_, v| *v != 0);
        Ok(out)
    }

    fn apply_right(&self, t: &Tensor) -> Result<Triple, HopfError> {
        let f = self.field;
        let mut out = Triple::default();
        for ((a, b), &c) in &t.terms {
            for ((x, y), &c2) in &self.mono_coproduct(b)?.terms {
                let e = out.entry((a.clone(), x.clone(), y.clone())).or_insert(0);
                *e = f.add(*e, f.mul(c, c2));
            }
        }
        out.retain(|_, v| *v != 0);
        Ok(out)
    }

    /// Coassociativity, cocommutativity and counit on generators of degree <= n.
    /// Returns the label of the first failing generator and the failed law.
    pub fn check_coalgebra(&self, n: i64) -> Result<Option<(String, &'static str)>, HopfError> {
        for g in 0..self.gens.len() as u32 {
            let gen = &self.gens[g as usize];
            if gen.degree > n {
                continue;
            }
            let d = self.gen_coproduct(g)?;
            if self.apply_left(&d)? != self.apply_right(&d)? {
                return Ok(Some((gen.label.clone(), "coassociativity")));
            }
            if self.swap(&d) != *d {
                return Ok(Some((gen.label.clone(), "cocommutativity")));
            }
            let mono = vec![(g, 1)];
            let left_unit = d.terms.get(&(Vec::new(), mono.clone())).copied();
            let right_unit = d.terms.get(&(mono.clone(), Vec::new())).copied();
            let stray = d.terms.keys().any(|(l, r)| (l.is_empty() && *r != mono) || (r.is_empty() && *l != mono));
            if left_unit != Some(1) || right_unit != Some(1) || stray {
                return Ok(Some((gen.label.clone(), "counit")));
            }
        }
        Ok(None)
    }

    /// Δ(β^ε Q^s x) against Σ (β^{ε1}Q^{s1} ⊗ β^{ε2}Q^{s2}) Δx.
    pub fn check_action_coproduct(&self, l: OpLetter, x: &Elem) -> Result<bool, HopfError> {
        let f = self.field;
        let lhs = self.coproduct(&self.q_action(l, x)?)?;
        let len = l.s as usize + 1;
        let mut rhs = Tensor::zero();
        for ((a, b), &c) in &self.coproduct(x)?.terms {
            let ta = self.mono_total(a, len)?;
            let tb = self.mono_total(b, len)?;
            let da = self.mono_degree(a);
            for s1 in 0..len {
                let s2 = l.s as usize - s1;
                let mut pairs = Vec::new();
                if l.eps == 0 {
                    pairs.push((&ta.a[s1], &tb.a[s2], c));
                } else {
                    pairs.push((&ta.b[s1], &tb.a[s2], c));
                    pairs.push((&ta.a[s1], &tb.b[s2], if da % 2 == 0 { c } else { f.neg(c) }));
                }
                for (u, v, k) in pairs {
                    for (m1, &c1) in &u.terms {
                        for (m2, &c2) in &v.terms {
                            rhs.add_term(f, m1.clone(), m2.clone(), f.mul(k, f.mul(c1, c2)));
                        }
                    }
                }
            }
        }
        Ok(lhs == rhs)
    }

    /// ξ restricted to the polynomial factor (monomials in even generators)
    /// is injective A_n -> A_{pn}.
    pub fn frobenius_injective(&self, n: i64) -> bool {
        let b = self.basis(n);
        let even: Vec<SparseVec> = self
            .frobenius(n)
            .into_iter()
            .zip(&b.monos)
            .filter(|(_, m)| m.iter().all(|x| !self.odd(x.0)))
            .map(|(v, _)| v)
            .collect();
        let k = even.len();
        crate::fp_core::sparse_rank(self.field, &even) == k
    }

    /// λA_k = V(A_{pk}) and its indecomposables Q(λA)_k for k <= kmax,
    /// using representatives of Q(λA) in lower degrees to span decomposables.
    pub fn lambda_indecomposables(&self, kmax: i64) -> Result<Vec<(usize, usize)>, HopfError> {
        let f = self.field;
        let p = self.p() as i64;
        let mut out = vec![(1usize, 0usize)];
        let mut images: Vec<Vec<SparseVec>> = vec![vec![SparseVec::unit(0)]];
        let mut reps: Vec<Vec<Elem>> = vec![Vec::new()];
        for k in 1..=kmax {
            let cols = self.verschiebung(p * k)?;
            let mut ech = Echelon::new(f, false);
            let mut img = Vec::new();
            for c in &cols {
                if let Insert::Independent(_) = ech.insert(c) {
                    img.push(c.clone());
                }
            }
            let mut dec = Echelon::new(f, false);
            for i in 1..k {
                for g in &reps[i as usize] {
                    for v in &images[(k - i) as usize] {
                        let prod = self.mul(g, &self.from_coords(v, k - i));
                        dec.insert(&self.coords(&prod, k));
                    }
                }
            }
            let mut r = Vec::new();
            for v in &img {
                if let Insert::Independent(_) = dec.insert(v) {
                    r.push(self.from_coords(v, k));
                }
            }
            out.push((img.len(), r.len()));
            images.push(img);
            reps.push(r);
        }
        Ok(out)
    }

    pub fn milnor_moore(&self, nmax: i64) -> Result<Vec<MilnorMooreRow>, HopfError> {
        let f = self.field;
        let p = self.p() as i64;
        let lam = self.lambda_indecomposables(nmax / p)?;
        let mut rows = Vec::new();
        for n in 1..=nmax {
            let pd = self.primitives(n)?;
            let p_xi = if n % p == 0 {
                let xi: Vec<SparseVec> = self.frobenius(n / p);
                let rx = crate::fp_core::sparse_rank(f, &xi);
                let mut both = pd.basis.clone();
                both.extend(xi);
                pd.basis.len() + rx - crate::fp_core::sparse_rank(f, &both)
            } else {
                0
            };
            rows.push(MilnorMooreRow {
                degree: n,
                p_xi,
                prim: pd.basis.len(),
                indec: self.indecomposables(n).len(),
                q_lambda: if n % p == 0 { lam[(n / p) as usize].1 } else { 0 },
            });
        }
        Ok(rows)
    }
}
