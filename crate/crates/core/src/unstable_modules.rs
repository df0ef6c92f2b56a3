//! Free unstable (D) and free Q-unstable (D') modules over R on a set of
//! bigraded generators, degreewise linear maps between them, and
//! R-indecomposable quotients of degreewise-presented submodules.

use std::collections::BTreeMap;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admissible_ops::{
    enumerate_admissible, excess_at_least, excess_b_exceeds, is_admissible, word_degree, AdmissibleFilter,
    Normalizer, OpCombination, OpLetter, OpWord, OpsError,
};
use crate::fp_core::{Echelon, FpMatrix, PrimeField, RankKernel, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModuleError {
    #[error(transparent)]
    Ops(#[from] OpsError),
    #[error("the free unstable module on a degree-0 generator is infinite in degree 0")]
    DegreeZeroD,
    #[error("value for generator {name} has degree {got}, expected {want}")]
    DegreeMismatch { name: String, got: i64, want: i64 },
    #[error("submodule not closed under {letter} in degree {degree}")]
    Closure { degree: i64, letter: String },
    #[error("vector in degree {0} is not bihomogeneous")]
    NotBihomogeneous(i64),
    #[error("unknown basis element {0}")]
    UnknownBasis(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleGen {
    pub name: String,
    pub degree: i64,
    pub deg_beta: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSet {
    pub gens: Vec<ModuleGen>,
}

impl GeneratorSet {
    pub fn new(gens: Vec<ModuleGen>) -> Self {
        GeneratorSet { gens }
    }

    /// F_p·ι in degree 0.
    pub fn iota() -> Self {
        GeneratorSet { gens: vec![ModuleGen { name: "iota".into(), degree: 0, deg_beta: 0 }] }
    }

    /// The classes a_s of JH_*(ΣCP∞₊), s odd, s <= max_degree. For odd p
    /// they sit in deg_beta = -1.
    pub fn sigma_cp(p: u32, max_degree: i64) -> Self {
        let db = if p == 2 { 0 } else { -1 };
        let gens = (1..=max_degree)
            .step_by(2)
            .map(|s| ModuleGen { name: format!("a{}", s), degree: s, deg_beta: db })
            .collect();
        GeneratorSet { gens }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    D,
    DPrime,
}

/// Whether `Q^I x` is a basis element of the free module on `x`.
pub fn is_basis_pair(w: &OpWord, gen_degree: i64, variant: Variant, p: u32) -> bool {
    is_admissible(w, p)
        && match variant {
            Variant::D => excess_at_least(w, p, gen_degree),
            Variant::DPrime => excess_b_exceeds(w, p, gen_degree),
        }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisPair {
    pub word: OpWord,
    pub gen: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FreeBasis {
    pub field: PrimeField,
    pub variant: Variant,
    pub gens: GeneratorSet,
    pub max_degree: i64,
    pub by_degree: Vec<Vec<BasisPair>>,
    #[serde(skip)]
    index: FxHashMap<BasisPair, (usize, usize)>,
}

impl FreeBasis {
    pub fn degree_of(&self, b: &BasisPair) -> i64 {
        word_degree(&b.word, self.field.p()).total + self.gens.gens[b.gen].degree
    }

    pub fn deg_beta_of(&self, b: &BasisPair) -> i64 {
        word_degree(&b.word, self.field.p()).deg_beta + self.gens.gens[b.gen].deg_beta
    }

    pub fn dim(&self, n: i64) -> usize {
        if n < 0 || n > self.max_degree {
            0
        } else {
            self.by_degree[n as usize].len()
        }
    }

    pub fn basis(&self, n: i64) -> &[BasisPair] {
        if n < 0 || n > self.max_degree {
            &[]
        } else {
            &self.by_degree[n as usize]
        }
    }

    /// (degree, position) of a basis pair.
    pub fn locate(&self, b: &BasisPair) -> Option<(usize, usize)> {
        self.index.get(b).copied()
    }

    pub fn render(&self, b: &BasisPair) -> String {
        format!("{} . {}", b.word, self.gens.gens[b.gen].name)
    }

    fn rebuild_index(&mut self) {
        self.index.clear();
        for (n, v) in self.by_degree.iter().enumerate() {
            for (i, b) in v.iter().enumerate() {
                self.index.insert(b.clone(), (n, i));
            }
        }
    }

    /// Coordinates of an element in degree `n`.
    pub fn coords(&self, e: &FreeModuleElement, n: i64) -> Result<SparseVec, ModuleError> {
        let mut pairs = Vec::with_capacity(e.terms.len());
        for (b, &c) in &e.terms {
            match self.locate(b) {
                Some((d, i)) if d as i64 == n => pairs.push((i as u64, c)),
                _ => return Err(ModuleError::UnknownBasis(self.render(b))),
            }
        }
        Ok(SparseVec::from_pairs(self.field, pairs))
    }

    pub fn element(&self, n: i64, v: &SparseVec) -> FreeModuleElement {
        let mut e = FreeModuleElement::zero(self.field, self.variant);
        for &(i, c) in &v.entries {
            e.add_term(self.basis(n)[i as usize].clone(), c);
        }
        e
    }
}

/// Per-degree basis of the free module on `gens` through `max_degree`.
pub fn free_basis(gens: &GeneratorSet, variant: Variant, field: PrimeField, max_degree: i64) -> Result<FreeBasis, ModuleError> {
    let p = field.p();
    let mut by_degree = vec![Vec::new(); (max_degree.max(-1) + 1) as usize];
    for (gi, g) in gens.gens.iter().enumerate() {
        if g.degree > max_degree {
            continue;
        }
        if variant == Variant::D && g.degree == 0 {
            return Err(ModuleError::DegreeZeroD);
        }
        let mut filter = match variant {
            Variant::D => AdmissibleFilter::unstable(g.degree),
            Variant::DPrime => AdmissibleFilter::q_unstable(g.degree),
        };
        filter.include_empty = true;
        for m in enumerate_admissible(p, max_degree - g.degree, &filter) {
            let n = (m.degree.total + g.degree) as usize;
            by_degree[n].push(BasisPair { word: m.word, gen: gi });
        }
    }
    let mut fb = FreeBasis { field, variant, gens: gens.clone(), max_degree, by_degree, index: FxHashMap::default() };
    for v in fb.by_degree.iter_mut() {
        v.sort();
    }
    fb.rebuild_index();
    Ok(fb)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeModuleElement {
    pub field: PrimeField,
    pub variant: Variant,
    pub terms: BTreeMap<BasisPair, u32>,
}

impl FreeModuleElement {
    pub fn zero(field: PrimeField, variant: Variant) -> Self {
        FreeModuleElement { field, variant, terms: BTreeMap::new() }
    }

    pub fn basis(field: PrimeField, variant: Variant, word: OpWord, gen: usize) -> Self {
        let mut e = Self::zero(field, variant);
        e.add_term(BasisPair { word, gen }, 1);
        e
    }

    pub fn add_term(&mut self, b: BasisPair, c: u32) {
        let f = self.field;
        let c = c % f.p();
        if c == 0 {
            return;
        }
        let cur = self.terms.get(&b).copied().unwrap_or(0);
        let n = f.add(cur, c);
        if n == 0 {
            self.terms.remove(&b);
        } else {
            self.terms.insert(b, n);
        }
    }

    pub fn add_scaled(&mut self, other: &FreeModuleElement, c: u32) {
        for (b, &x) in &other.terms {
            self.add_term(b.clone(), self.field.mul(x, c));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn render(&self, gens: &GeneratorSet) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(b, c)| {
                let s = format!("{} . {}", b.word, gens.gens[b.gen].name);
                if *c == 1 {
                    s
                } else {
                    format!("{}*({})", c, s)
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Display for BasisPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} . #{}", self.word, self.gen)
    }
}

/// R-action: concatenate, normalize, drop pairs outside the basis.
pub fn act(
    norm: &Normalizer,
    gens: &GeneratorSet,
    op: &OpCombination,
    e: &FreeModuleElement,
) -> Result<FreeModuleElement, ModuleError> {
    let f = e.field;
    let p = f.p();
    let mut out = FreeModuleElement::zero(f, e.variant);
    for (u, &cu) in &op.terms {
        for (b, &cb) in &e.terms {
            let nf = norm.normalize_word(&u.concat(&b.word))?;
            let d = gens.gens[b.gen].degree;
            for (w, &c) in &nf.terms {
                if is_basis_pair(w, d, e.variant, p) {
                    out.add_term(BasisPair { word: w.clone(), gen: b.gen }, f.mul(c, f.mul(cu, cb)));
                }
            }
        }
    }
    Ok(out)
}

/// Letters of total degree exactly `d` (s >= 1).
pub fn letters_of_degree(p: u32, d: i64) -> Vec<OpLetter> {
    let mut out = Vec::new();
    if d <= 0 {
        return out;
    }
    if p == 2 {
        out.push(OpLetter::q(d as u32));
        return out;
    }
    let step = 2 * (p as i64 - 1);
    if d % step == 0 {
        out.push(OpLetter::q((d / step) as u32));
    }
    if (d + 1) % step == 0 {
        out.push(OpLetter::bq(((d + 1) / step) as u32));
    }
    out
}

/// Degreewise matrices of a map between free modules, with cached
/// rank/kernel/image in each degree. Column j of `mats[n]` is the image of
/// source basis element j.
#[derive(Debug, Clone)]
pub struct DegreewiseLinearMap {
    pub source: FreeBasis,
    pub target: FreeBasis,
    pub mats: Vec<FpMatrix>,
    pub analysis: Vec<RankKernel>,
}

impl DegreewiseLinearMap {
    pub fn from_matrices(source: FreeBasis, target: FreeBasis, mats: Vec<FpMatrix>) -> Self {
        let analysis = mats.iter().map(|m| m.rank_kernel()).collect();
        DegreewiseLinearMap { source, target, mats, analysis }
    }

    pub fn max_degree(&self) -> i64 {
        self.mats.len() as i64 - 1
    }

    pub fn rank(&self, n: i64) -> usize {
        self.analysis[n as usize].rank
    }

    pub fn kernel(&self, n: i64) -> Vec<SparseVec> {
        self.analysis[n as usize].kernel_basis.iter().map(|v| SparseVec::from_dense(v)).collect()
    }

    pub fn image(&self, n: i64) -> Vec<SparseVec> {
        self.analysis[n as usize].image_basis.iter().map(|v| SparseVec::from_dense(v)).collect()
    }

    pub fn apply(&self, n: i64, v: &SparseVec) -> SparseVec {
        let m = &self.mats[n as usize];
        SparseVec::from_dense(&m.mul_vec(&v.to_dense(m.cols)))
    }
}

/// The R-linear extension of `values` (one per source generator),
/// materialized degreewise through `max_degree`.
pub fn map_from_generator_values(
    norm: &Normalizer,
    source: &FreeBasis,
    target: &FreeBasis,
    values: &[FreeModuleElement],
    max_degree: i64,
) -> Result<DegreewiseLinearMap, ModuleError> {
    let f = source.field;
    for (g, v) in source.gens.gens.iter().zip(values) {
        for b in v.terms.keys() {
            let d = target.degree_of(b);
            if d != g.degree {
                return Err(ModuleError::DegreeMismatch { name: g.name.clone(), got: d, want: g.degree });
            }
        }
    }
    let mut mats = Vec::new();
    for n in 0..=max_degree {
        let src = source.basis(n);
        let mut m = FpMatrix::zero(f, target.dim(n), src.len());
        for (j, b) in src.iter().enumerate() {
            let op = OpCombination::word(f, b.word.clone());
            let img = act(norm, &target.gens, &op, &values[b.gen])?;
            for (t, &c) in &img.terms {
                let Some((d, i)) = target.locate(t) else {
                    return Err(ModuleError::UnknownBasis(target.render(t)));
                };
                debug_assert_eq!(d as i64, n);
                m.set(i, j, c);
            }
        }
        mats.push(m);
    }
    Ok(DegreewiseLinearMap::from_matrices(source.clone(), target.clone(), mats))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndecomposableReport {
    pub degree: i64,
    pub dim: usize,
    pub representatives: Vec<SparseVec>,
    /// deg_beta -> number of R-module generators in this degree
    pub by_deg_beta: BTreeMap<i64, usize>,
}

fn bidegree_of(basis: &FreeBasis, n: i64, v: &SparseVec) -> Result<Option<i64>, ModuleError> {
    let mut db = None;
    for &(i, _) in &v.entries {
        let b = basis.deg_beta_of(&basis.basis(n)[i as usize]);
        match db {
            None => db = Some(b),
            Some(x) if x != b => return Err(ModuleError::NotBihomogeneous(n)),
            _ => {}
        }
    }
    Ok(db)
}

/// F_p ⊗_R of a submodule presented degreewise by spanning vectors
/// (`sub[n]` spans the degree-n part). Closure under every letter is
/// checked along the way.
pub fn r_indecomposables(
    norm: &Normalizer,
    basis: &FreeBasis,
    sub: &[Vec<SparseVec>],
) -> Result<Vec<IndecomposableReport>, ModuleError> {
    let f = basis.field;
    let p = f.p();
    let top = sub.len() as i64 - 1;
    let mut reports = Vec::new();
    for n in 0..=top {
        let mut span = Echelon::new(f, false);
        for v in &sub[n as usize] {
            span.insert(v);
        }
        let mut dec = Echelon::new(f, false);
        for m in 0..n {
            for l in letters_of_degree(p, n - m) {
                let op = OpCombination::word(f, OpWord::new(vec![l]));
                for v in &sub[m as usize] {
                    let e = basis.element(m, v);
                    let img = act(norm, &basis.gens, &op, &e)?;
                    let w = basis.coords(&img, n)?;
                    if !span.contains(&w) {
                        return Err(ModuleError::Closure { degree: n, letter: l.to_string() });
                    }
                    dec.insert(&w);
                }
            }
        }
        let mut reps = Vec::new();
        let mut by_deg_beta = BTreeMap::new();
        for v in &sub[n as usize] {
            if let crate::fp_core::Insert::Independent(_) = dec.insert(v) {
                if let Some(db) = bidegree_of(basis, n, v)? {
                    *by_deg_beta.entry(db).or_insert(0) += 1;
                }
                reps.push(v.clone());
            }
        }
        reports.push(IndecomposableReport { degree: n, dim: reps.len(), representatives: reps, by_deg_beta });
    }
    Ok(reports)
}
