//! Arithmetic in F_p and exact linear algebra over it.
//!
//! Dense matrices are plain row-major residue arrays. The sparse side
//! (`SparseVec`, `Echelon`) is what the large degreewise computations use:
//! rows are indexed by `u64` keys so tensor coordinates can be packed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FpError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u32,
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self, FpError> {
        if p > u32::MAX as u64 / 2 || !is_prime(p) {
            return Err(FpError::NotPrime(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, x: i64) -> u32 {
        x.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1 % self.p;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// Inverse of a nonzero residue (Fermat).
    pub fn inv(&self, a: u32) -> u32 {
        assert!(!a.is_multiple_of(self.p), "inverse of zero in F_{}", self.p);
        self.pow(a, self.p as u64 - 2)
    }

    /// (-1)^k as a residue.
    #[inline]
    pub fn sign(&self, k: i64) -> u32 {
        if k.rem_euclid(2) == 0 {
            1 % self.p
        } else {
            self.neg(1)
        }
    }
}

/// `(a+b)!/(a!b!)` mod p, zero when either argument is negative.
///
/// Uses Lucas: the base-p digits of `a` and `b` must not carry.
pub fn binom_mod(a: i64, b: i64, p: u32) -> u32 {
    if a < 0 || b < 0 {
        return 0;
    }
    let p64 = p as u64;
    let mut n = (a + b) as u64;
    let mut k = a as u64;
    let mut acc: u64 = 1 % p64;
    while n > 0 || k > 0 {
        let ni = n % p64;
        let ki = k % p64;
        if ki > ni {
            return 0;
        }
        acc = acc * small_binom(ni, ki, p64) % p64;
        n /= p64;
        k /= p64;
    }
    acc as u32
}

fn small_binom(n: u64, k: u64, p: u64) -> u64 {
    let k = k.min(n - k);
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    let f = PrimeField { p: p as u32 };
    num * f.inv(den as u32) as u64 % p
}

/// Dense matrix over F_p, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpMatrix {
    pub rows: usize,
    pub cols: usize,
    pub field: PrimeField,
    data: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankKernel {
    pub rank: usize,
    /// Vectors `v` of length `cols` with `m·v = 0`, one per free column.
    pub kernel_basis: Vec<Vec<u32>>,
    /// Linearly independent columns of `m` spanning its column space.
    pub image_basis: Vec<Vec<u32>>,
    pub pivot_cols: Vec<usize>,
}

impl FpMatrix {
    pub fn zero(field: PrimeField, rows: usize, cols: usize) -> Self {
        FpMatrix { rows, cols, field, data: vec![0; rows * cols] }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zero(field, n, n);
        for i in 0..n {
            m.set(i, i, 1 % field.p());
        }
        m
    }

    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Result<Self, FpError> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Self::zero(field, r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(FpError::Shape(format!("row {} has length {}, expected {}", i, row.len(), c)));
            }
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, field.reduce(x));
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.field.p();
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<u32> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn mul_vec(&self, v: &[u32]) -> Vec<u32> {
        assert_eq!(v.len(), self.cols);
        let f = self.field;
        (0..self.rows)
            .map(|i| {
                let mut acc = 0u64;
                for (a, b) in self.row(i).iter().zip(v) {
                    acc += *a as u64 * *b as u64;
                }
                (acc % f.p() as u64) as u32
            })
            .collect()
    }

    pub fn mul(&self, other: &FpMatrix) -> Result<FpMatrix, FpError> {
        if self.cols != other.rows {
            return Err(FpError::Shape(format!("{}x{} * {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        let mut out = FpMatrix::zero(self.field, self.rows, other.cols);
        for j in 0..other.cols {
            let col = self.mul_vec(&other.column(j));
            for (i, x) in col.into_iter().enumerate() {
                out.set(i, j, x);
            }
        }
        Ok(out)
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut t = FpMatrix::zero(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Row reduction to reduced echelon form; returns rank, kernel, image.
    pub fn rank_kernel(&self) -> RankKernel {
        let f = self.field;
        let mut a = self.data.clone();
        let (r, c) = (self.rows, self.cols);
        let mut pivot_cols = Vec::new();
        let mut prow = 0;
        for col in 0..c {
            if prow == r {
                break;
            }
            let Some(sel) = (prow..r).find(|&i| a[i * c + col] != 0) else { continue };
            if sel != prow {
                for j in 0..c {
                    a.swap(sel * c + j, prow * c + j);
                }
            }
            let inv = f.inv(a[prow * c + col]);
            for j in 0..c {
                a[prow * c + j] = f.mul(a[prow * c + j], inv);
            }
            for i in 0..r {
                if i != prow && a[i * c + col] != 0 {
                    let factor = a[i * c + col];
                    for j in 0..c {
                        let sub = f.mul(factor, a[prow * c + j]);
                        a[i * c + j] = f.sub(a[i * c + j], sub);
                    }
                }
            }
            pivot_cols.push(col);
            prow += 1;
        }
        let rank = pivot_cols.len();
        let mut kernel_basis = Vec::new();
        for free in (0..c).filter(|j| !pivot_cols.contains(j)) {
            let mut v = vec![0u32; c];
            v[free] = 1 % f.p();
            for (k, &pc) in pivot_cols.iter().enumerate() {
                v[pc] = f.neg(a[k * c + free]);
            }
            kernel_basis.push(v);
        }
        let image_basis = pivot_cols.iter().map(|&j| self.column(j)).collect();
        RankKernel { rank, kernel_basis, image_basis, pivot_cols }
    }

    pub fn rank(&self) -> usize {
        self.rank_kernel().rank
    }
}

/// Sparse vector with strictly increasing `u64` indices and nonzero residues.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SparseVec {
    pub entries: Vec<(u64, u32)>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: Vec::new() }
    }

    /// Builds from unsorted pairs, merging duplicates mod p.
    pub fn from_pairs(field: PrimeField, mut pairs: Vec<(u64, u32)>) -> Self {
        pairs.sort_unstable_by_key(|x| x.0);
        let mut entries: Vec<(u64, u32)> = Vec::with_capacity(pairs.len());
        for (i, c) in pairs {
            let c = c % field.p();
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 = field.add(last.1, c),
                _ => entries.push((i, c)),
            }
        }
        entries.retain(|x| x.1 != 0);
        SparseVec { entries }
    }

    pub fn unit(i: u64) -> Self {
        SparseVec { entries: vec![(i, 1)] }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn leading(&self) -> Option<(u64, u32)> {
        self.entries.first().copied()
    }

    pub fn get(&self, i: u64) -> u32 {
        match self.entries.binary_search_by_key(&i, |x| x.0) {
            Ok(k) => self.entries[k].1,
            Err(_) => 0,
        }
    }

    pub fn scale(&self, field: PrimeField, c: u32) -> SparseVec {
        if c.is_multiple_of(field.p()) {
            return SparseVec::new();
        }
        SparseVec { entries: self.entries.iter().map(|&(i, x)| (i, field.mul(x, c))).collect() }
    }

    /// self + c·other
    pub fn axpy(&self, field: PrimeField, c: u32, other: &SparseVec) -> SparseVec {
        let c = c % field.p();
        if c == 0 {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (0, 0);
        let (x, y) = (&self.entries, &other.entries);
        while a < x.len() || b < y.len() {
            if b == y.len() || (a < x.len() && x[a].0 < y[b].0) {
                out.push(x[a]);
                a += 1;
            } else if a == x.len() || y[b].0 < x[a].0 {
                out.push((y[b].0, field.mul(c, y[b].1)));
                b += 1;
            } else {
                let v = field.add(x[a].1, field.mul(c, y[b].1));
                if v != 0 {
                    out.push((x[a].0, v));
                }
                a += 1;
                b += 1;
            }
        }
        SparseVec { entries: out }
    }

    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut v = vec![0; len];
        for &(i, c) in &self.entries {
            v[i as usize] = c;
        }
        v
    }

    pub fn from_dense(v: &[u32]) -> SparseVec {
        SparseVec { entries: v.iter().enumerate().filter(|x| *x.1 != 0).map(|(i, &c)| (i as u64, c)).collect() }
    }
}

/// Incremental echelon basis of sparse vectors.
///
/// Each stored vector is normalized to leading coefficient 1. When
/// `track` is on, every stored vector remembers which input combination
/// produced it, which is how kernels are extracted.
#[derive(Debug, Clone)]
pub struct Echelon {
    field: PrimeField,
    pivots: HashMap<u64, usize>,
    rows: Vec<SparseVec>,
    history: Vec<SparseVec>,
    track: bool,
    inserted: u64,
}

pub enum Insert {
    /// The vector was independent; index of the new echelon row.
    Independent(usize),
    /// The vector was dependent. With tracking on, the combination of
    /// earlier inputs (and this one, with coefficient 1) summing to zero.
    Dependent(Option<SparseVec>),
}

impl Echelon {
    pub fn new(field: PrimeField, track: bool) -> Self {
        Echelon { field, pivots: HashMap::new(), rows: Vec::new(), history: Vec::new(), track, inserted: 0 }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn pivot_indices(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.entries[0].0).collect()
    }

    /// Reduce `v` against the stored rows; also returns the combination
    /// of stored histories that was subtracted when tracking.
    fn reduce_inner(&self, v: &SparseVec, want_hist: bool) -> (SparseVec, SparseVec) {
        let f = self.field;
        let mut cur = v.clone();
        let mut hist = SparseVec::new();
        let mut pos = 0;
        while pos < cur.entries.len() {
            let (idx, c) = cur.entries[pos];
            if let Some(&r) = self.pivots.get(&idx) {
                let neg = f.neg(c);
                cur = cur.axpy(f, neg, &self.rows[r]);
                if want_hist {
                    hist = hist.axpy(f, neg, &self.history[r]);
                }
            } else {
                pos += 1;
            }
        }
        (cur, hist)
    }

    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        self.reduce_inner(v, false).0
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn insert(&mut self, v: &SparseVec) -> Insert {
        let me = self.inserted;
        self.inserted += 1;
        let (red, hist) = self.reduce_inner(v, self.track);
        if red.is_zero() {
            if self.track {
                return Insert::Dependent(Some(hist.axpy(self.field, 1, &SparseVec::unit(me))));
            }
            return Insert::Dependent(None);
        }
        let lead = red.entries[0].1;
        let inv = self.field.inv(lead);
        let row = red.scale(self.field, inv);
        let idx = self.rows.len();
        self.pivots.insert(row.entries[0].0, idx);
        self.rows.push(row);
        if self.track {
            let h = hist.axpy(self.field, 1, &SparseVec::unit(me));
            self.history.push(h.scale(self.field, inv));
        }
        Insert::Independent(idx)
    }
}

/// Rank and kernel of the map whose columns are `cols` (column `j` is the
/// image of source basis vector `j`).
pub fn sparse_rank_kernel(field: PrimeField, cols: &[SparseVec]) -> (usize, Vec<SparseVec>) {
    let mut ech = Echelon::new(field, true);
    let mut kernel = Vec::new();
    for c in cols {
        if let Insert::Dependent(Some(k)) = ech.insert(c) {
            kernel.push(k);
        }
    }
    (ech.rank(), kernel)
}

/// Rank of a family of sparse vectors.
pub fn sparse_rank(field: PrimeField, vs: &[SparseVec]) -> usize {
    let mut ech = Echelon::new(field, false);
    for v in vs {
        ech.insert(v);
    }
    ech.rank()
}

/// Kernel of the map with columns `cols`, in coordinates of the column index.
///
/// Rows meeting a single live column force that coordinate to zero, so those
/// columns are peeled off first (repeatedly); the survivors go through
/// tracked elimination. Worth it when the kernel is small and the matrix is
/// close to triangular.
pub fn sparse_kernel(field: PrimeField, cols: &[SparseVec]) -> Vec<SparseVec> {
    use std::collections::HashMap as Map;
    let mut row_cols: Map<u64, Vec<usize>> = Map::new();
    for (j, c) in cols.iter().enumerate() {
        for &(r, _) in &c.entries {
            row_cols.entry(r).or_default().push(j);
        }
    }
    let mut live_count: Map<u64, usize> = row_cols.iter().map(|(r, v)| (*r, v.len())).collect();
    let mut alive = vec![true; cols.len()];
    let mut stack: Vec<u64> = live_count.iter().filter(|(_, &n)| n == 1).map(|(r, _)| *r).collect();
    while let Some(r) = stack.pop() {
        if live_count[&r] != 1 {
            continue;
        }
        let Some(&j) = row_cols[&r].iter().find(|&&j| alive[j]) else { continue };
        alive[j] = false;
        for &(r2, _) in &cols[j].entries {
            let n = live_count.get_mut(&r2).unwrap();
            *n -= 1;
            if *n == 1 {
                stack.push(r2);
            }
        }
    }
    let survivors: Vec<usize> = (0..cols.len()).filter(|&j| alive[j]).collect();
    let mut ech = Echelon::new(field, true);
    let mut kernel = Vec::new();
    for &j in &survivors {
        if let Insert::Dependent(Some(k)) = ech.insert(&cols[j]) {
            let pairs = k.entries.iter().map(|&(i, c)| (survivors[i as usize] as u64, c)).collect();
            kernel.push(SparseVec::from_pairs(field, pairs));
        }
    }
    kernel
}
