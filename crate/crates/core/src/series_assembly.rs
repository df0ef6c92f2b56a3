//! Poincaré series arithmetic, Euler factorization into free commutative
//! generator counts, and the pipelines for H_*(Ω^∞ΣCP∞₋₁) and
//! H_*(Ω^∞_0 CP∞₋₁).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fp_core::{sparse_kernel, Echelon, FpError, PrimeField, SparseVec};
use crate::qx_homology::{monomial_dims, DegreewiseHopfAlgebra, Elem, Mono, SpaceKind, SpaceSpec};
use crate::transfer::{p_del, q_del, TransferData, TransferError, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeriesError {
    #[error("division is not integral in degree {degree}")]
    NonIntegral { degree: i64 },
    #[error("division gives {value} in degree {degree}")]
    Negative { degree: i64, value: i128 },
    #[error("Euler factorization residual {value} in degree {degree}")]
    NegativeResidual { degree: i64, value: i128 },
    #[error("truncations differ: {0} vs {1}")]
    Truncation(i64, i64),
    #[error("{0}")]
    Integrity(String),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Field(#[from] FpError),
}

impl From<crate::qx_homology::HopfError> for SeriesError {
    fn from(e: crate::qx_homology::HopfError) -> Self {
        SeriesError::Transfer(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoincareSeries {
    pub prime: u32,
    pub truncation: i64,
    pub coeffs: Vec<u64>,
}

impl PoincareSeries {
    pub fn one(prime: u32, truncation: i64) -> Self {
        let mut coeffs = vec![0; (truncation + 1) as usize];
        coeffs[0] = 1;
        PoincareSeries { prime, truncation, coeffs }
    }

    pub fn from_coeffs(prime: u32, coeffs: Vec<u64>) -> Self {
        PoincareSeries { prime, truncation: coeffs.len() as i64 - 1, coeffs }
    }

    pub fn get(&self, n: i64) -> u64 {
        if n < 0 || n > self.truncation {
            0
        } else {
            self.coeffs[n as usize]
        }
    }

    pub fn truncate(&self, n: i64) -> PoincareSeries {
        PoincareSeries::from_coeffs(self.prime, self.coeffs[..=(n.min(self.truncation) as usize)].to_vec())
    }

    pub fn mul(&self, other: &PoincareSeries) -> PoincareSeries {
        let n = self.truncation.min(other.truncation) as usize;
        let mut c = vec![0u64; n + 1];
        for i in 0..=n {
            if self.coeffs[i] == 0 {
                continue;
            }
            for j in 0..=n - i {
                c[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        PoincareSeries::from_coeffs(self.prime, c)
    }

    /// (1 + t^d)^k or (1 - t^d)^{-k}, truncated.
    pub fn factor(prime: u32, truncation: i64, d: i64, k: u64, exterior: bool) -> PoincareSeries {
        let mut s = PoincareSeries::one(prime, truncation);
        if d <= 0 {
            return s;
        }
        let n = truncation as usize;
        let d = d as usize;
        for _ in 0..k {
            if exterior {
                for i in (d..=n).rev() {
                    s.coeffs[i] += s.coeffs[i - d];
                }
            } else {
                for i in d..=n {
                    s.coeffs[i] += s.coeffs[i - d];
                }
            }
        }
        s
    }
}

/// The unique q with q·b = a through the common truncation.
pub fn divide(a: &PoincareSeries, b: &PoincareSeries) -> Result<PoincareSeries, SeriesError> {
    if a.truncation != b.truncation {
        return Err(SeriesError::Truncation(a.truncation, b.truncation));
    }
    let b0 = b.coeffs[0] as i128;
    if b0 == 0 {
        return Err(SeriesError::NonIntegral { degree: 0 });
    }
    let n = a.truncation as usize;
    let mut q: Vec<i128> = vec![0; n + 1];
    for k in 0..=n {
        let mut r = a.coeffs[k] as i128;
        for i in 1..=k {
            r -= b.coeffs[i] as i128 * q[k - i];
        }
        if r % b0 != 0 {
            return Err(SeriesError::NonIntegral { degree: k as i64 });
        }
        q[k] = r / b0;
        if q[k] < 0 {
            return Err(SeriesError::Negative { degree: k as i64, value: q[k] });
        }
    }
    Ok(PoincareSeries::from_coeffs(a.prime, q.into_iter().map(|x| x as u64).collect()))
}

/// S[V] = E[V^-] ⊗ F_p[V^+] by generator counts. At p = 2 every generator
/// is polynomial and sits in `polynomial`, whatever its degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerFactorization {
    pub prime: u32,
    pub truncation: i64,
    pub exterior: BTreeMap<i64, u64>,
    pub polynomial: BTreeMap<i64, u64>,
}

pub fn series_of_free_commutative(f: &EulerFactorization) -> PoincareSeries {
    let mut s = PoincareSeries::one(f.prime, f.truncation);
    for (&d, &k) in &f.exterior {
        s = s.mul(&PoincareSeries::factor(f.prime, f.truncation, d, k, true));
    }
    for (&d, &k) in &f.polynomial {
        s = s.mul(&PoincareSeries::factor(f.prime, f.truncation, d, k, false));
    }
    s
}

/// Degree-ascending extraction: the residual coefficient in degree d is
/// the number of new generators there.
pub fn euler_factorize(s: &PoincareSeries) -> Result<EulerFactorization, SeriesError> {
    let p = s.prime;
    let n = s.truncation as usize;
    if s.coeffs[0] != 1 {
        return Err(SeriesError::NegativeResidual { degree: 0, value: s.coeffs[0] as i128 - 1 });
    }
    let mut r: Vec<i128> = s.coeffs.iter().map(|&c| c as i128).collect();
    let mut f = EulerFactorization { prime: p, truncation: s.truncation, exterior: BTreeMap::new(), polynomial: BTreeMap::new() };
    for d in 1..=n {
        let c = r[d];
        if c < 0 {
            return Err(SeriesError::NegativeResidual { degree: d as i64, value: c });
        }
        if c == 0 {
            continue;
        }
        let exterior = p != 2 && d % 2 == 1;
        for _ in 0..c {
            if exterior {
                // divide by 1 + t^d
                for i in d..=n {
                    r[i] -= r[i - d];
                }
            } else {
                // multiply by 1 - t^d
                for i in (d..=n).rev() {
                    r[i] -= r[i - d];
                }
            }
        }
        let map = if exterior { &mut f.exterior } else { &mut f.polynomial };
        map.insert(d as i64, c as u64);
    }
    Ok(f)
}

/// Primitives of a primitively generated free commutative algebra: one per
/// exterior generator, and y^{p^k} for each polynomial generator y.
pub fn primitive_counts(f: &EulerFactorization) -> BTreeMap<i64, u64> {
    let p = f.prime as i64;
    let mut out = BTreeMap::new();
    for (&d, &k) in &f.exterior {
        *out.entry(d).or_insert(0) += k;
    }
    for (&d, &k) in &f.polynomial {
        let mut e = d;
        while e <= f.truncation {
            *out.entry(e).or_insert(0) += k;
            e *= p;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Ext,
    Poly,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BigradedGenerator {
    pub homological: i64,
    pub internal: i64,
    pub total: i64,
    pub kind: GenKind,
}

/// Generators of Cotor over the dual of a primitively generated free
/// commutative algebra, with total degree <= `max_total`.
pub fn cotor_generators(f: &EulerFactorization, max_total: i64) -> Vec<BigradedGenerator> {
    let p = f.prime as i64;
    let mut out = Vec::new();
    let mut push = |h: i64, internal: i64, kind: GenKind, k: u64| {
        if internal + h <= max_total {
            for _ in 0..k {
                out.push(BigradedGenerator { homological: h, internal, total: internal + h, kind });
            }
        }
    };
    for (&m, &k) in &f.exterior {
        push(-1, m, GenKind::Poly, k);
    }
    for (&d, &k) in &f.polynomial {
        let mut e = d;
        while e - 1 <= max_total {
            push(-1, e, GenKind::Ext, k);
            push(-2, e * p, GenKind::Poly, k);
            e *= p;
        }
    }
    out.sort();
    out
}

// ---- pipelines ----

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub degree: i64,
    #[serde(rename = "type")]
    pub kind: GenKind,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaAssembly {
    /// PS of the universal cover of Ω^∞ΣCP∞₋₁
    pub series: PoincareSeries,
    pub factorization: EulerFactorization,
    /// dim coker(Q∂)_d: generators (and primitives) of H_*(Q_0S^0)//∂
    pub coker_dims: Vec<u64>,
}

fn dims_series(p: u32, dims: Vec<u64>) -> PoincareSeries {
    PoincareSeries::from_coeffs(p, dims)
}

fn coker_dims(td: &TransferData) -> Vec<u64> {
    (0..=td.max_degree).map(|n| if n == 0 { 0 } else { (td.target.dim(n) - td.map.rank(n)) as u64 }).collect()
}

pub fn assemble_sigma_odd(p: u32, max_degree: i64, step_budget: u64) -> Result<SigmaAssembly, SeriesError> {
    if p == 2 {
        return Err(TransferError::WrongPrime { theorem: "omega-sigma".into(), p }.into());
    }
    let field = PrimeField::new(p as u64)?;
    let n = max_degree;
    let td = q_del(p, n, step_budget)?;
    if n >= 1 && td.kernel_bigraded(1).len() != 1 {
        return Err(SeriesError::Integrity("a_1 is not in ker Q∂".into()));
    }
    let sigma = dims_series(p, monomial_dims(&SpaceSpec::new(SpaceKind::SigmaCP, field), n));
    let s0 = dims_series(p, monomial_dims(&SpaceSpec::new(SpaceKind::S0, field), n));
    let cd = coker_dims(&td);
    let mut coker = PoincareSeries::one(p, n);
    for (d, &c) in cd.iter().enumerate() {
        coker = coker.mul(&PoincareSeries::factor(p, n, d as i64, c, false));
    }
    let k = divide(&sigma.mul(&coker), &s0)?;
    let circle = PoincareSeries::factor(p, n, 1, 1, true);
    let k_tilde = divide(&k, &circle)?;
    let mut series = k_tilde;
    for (d, &c) in cd.iter().enumerate() {
        series = series.mul(&PoincareSeries::factor(p, n, d as i64 - 1, c, true));
    }
    let factorization = euler_factorize(&series)?;
    Ok(SigmaAssembly { series, factorization, coker_dims: cd })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaAssembly {
    pub series: PoincareSeries,
    pub generators: Vec<Generator>,
}

/// Generators of H_*(Ω^∞_0 CP∞₋₁) for odd p from the primitives of the
/// universal cover of Ω^∞ΣCP∞₋₁: y of degree n-1 for every primitive of
/// degree n, plus βQ^s y of degree pn-2 when n = 2s is even.
pub fn omega_generators(p: u32, prims: &BTreeMap<i64, u64>, max_degree: i64) -> Vec<Generator> {
    let mut out = Vec::new();
    for (&n, &k) in prims {
        for i in 0..k {
            let y = format!("y{}.{}", n - 1, i);
            if n - 1 <= max_degree {
                let kind = if n % 2 == 1 { GenKind::Poly } else { GenKind::Ext };
                out.push(Generator { degree: n - 1, kind, label: y.clone() });
            }
            let partner = p as i64 * n - 2;
            if n % 2 == 0 && partner <= max_degree {
                out.push(Generator { degree: partner, kind: GenKind::Poly, label: format!("bQ{} {}", n / 2, y) });
            }
        }
    }
    out.sort_by(|a, b| (a.degree, a.kind, &a.label).cmp(&(b.degree, b.kind, &b.label)));
    out
}

fn generators_series(p: u32, gens: &[Generator], max_degree: i64) -> PoincareSeries {
    let mut s = PoincareSeries::one(p, max_degree);
    for g in gens {
        s = s.mul(&PoincareSeries::factor(p, max_degree, g.degree, 1, g.kind == GenKind::Ext));
    }
    s
}

pub fn assemble_omega_odd(p: u32, max_degree: i64, step_budget: u64) -> Result<(SigmaAssembly, OmegaAssembly), SeriesError> {
    let sigma = assemble_sigma_odd(p, max_degree + 1, step_budget)?;
    let prims = primitive_counts(&sigma.factorization);
    let generators = omega_generators(p, &prims, max_degree);
    let series = generators_series(p, &generators, max_degree);
    Ok((sigma, OmegaAssembly { series, generators }))
}

/// dim PH_n(Q_0S^0; F_2) for n <= N from P_n = ξ(P_{n/2}) ⊕ lifts of
/// Im(Q∂)_n, which holds once P∂ is onto.
pub fn s0_primitive_dims_p2(td: &TransferData) -> Vec<u64> {
    let mut out = vec![0u64; (td.max_degree + 1) as usize];
    for n in 1..=td.max_degree {
        let half = if n % 2 == 0 { out[(n / 2) as usize] } else { 0 };
        out[n as usize] = half + td.map.rank(n) as u64;
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OmegaP2 {
    pub series: PoincareSeries,
    /// dim PH_d(Q_0S^0), d = 0..=N+1
    pub primitive_dims: Vec<u64>,
}

/// PS(Q_0CP∞₊) / ∏_{d>=2} (1 + t^{d-1})^{π_d}.
pub fn assemble_omega_p2(max_degree: i64, step_budget: u64) -> Result<OmegaP2, SeriesError> {
    let n = max_degree;
    let field = PrimeField::new(2)?;
    let td = q_del(2, n + 1, step_budget)?;
    let prim = s0_primitive_dims_p2(&td);
    let mut loops = PoincareSeries::one(2, n);
    for (d, &c) in prim.iter().enumerate().skip(2) {
        loops = loops.mul(&PoincareSeries::factor(2, n, d as i64 - 1, c, true));
    }
    let cp = dims_series(2, monomial_dims(&SpaceSpec::new(SpaceKind::CP, field), n));
    let series = divide(&cp, &loops)?;
    Ok(OmegaP2 { series, primitive_dims: prim })
}

// ---- consistency checks ----

/// The Cotor generators of the universal cover of Ω^∞ΣCP∞₋₁ against the
/// generator table of Ω^∞_0CP∞₋₁, generator for generator.
pub fn consistency_emss(p: u32, max_degree: i64, step_budget: u64) -> Result<Verdict, SeriesError> {
    let mut verdict = Verdict { theorem: "emss-consistency".into(), prime: p, max_degree, pass: true, witnesses: Vec::new() };
    let (sigma, omega) = assemble_omega_odd(p, max_degree, step_budget)?;
    let mut cotor: Vec<(i64, GenKind)> =
        cotor_generators(&sigma.factorization, max_degree).iter().map(|g| (g.total, g.kind)).collect();
    let mut table: Vec<(i64, GenKind)> = omega.generators.iter().map(|g| (g.degree, g.kind)).collect();
    cotor.sort();
    table.sort();
    if cotor != table {
        verdict.pass = false;
        verdict.witnesses.push(format!("cotor {:?} vs table {:?}", cotor, table));
    }
    let mut f = EulerFactorization { prime: p, truncation: max_degree, exterior: BTreeMap::new(), polynomial: BTreeMap::new() };
    for (d, k) in &cotor {
        let m = if *k == GenKind::Ext { &mut f.exterior } else { &mut f.polynomial };
        *m.entry(*d).or_insert(0) += 1;
    }
    if series_of_free_commutative(&f) != omega.series {
        verdict.pass = false;
        verdict.witnesses.push("total-degree series differ".into());
    }
    verdict.witnesses.push(format!("{} generators through degree {}", table.len(), max_degree));
    Ok(verdict)
}

/// Polynomial algebra on s^{-1}PH_*(Q̃ΣCP∞₊) against H_*(Q_0CP∞₊), with
/// the primitives of H_*(QΣCP∞₊) computed directly.
pub fn suspension_consistency_p2(max_degree: i64, step_budget: u64) -> Result<Verdict, SeriesError> {
    let n = max_degree;
    let field = PrimeField::new(2)?;
    let mut verdict =
        Verdict { theorem: "suspension-consistency".into(), prime: 2, max_degree: n, pass: true, witnesses: Vec::new() };
    let h = DegreewiseHopfAlgebra::with_budget(SpaceSpec::new(SpaceKind::SigmaCP, field), n + 1, step_budget);
    let mut poly = PoincareSeries::one(2, n);
    let mut prims = Vec::new();
    for d in 1..=n + 1 {
        let mut c = h.primitive_dim(d)? as u64;
        if d == 1 {
            c -= 1;
        }
        prims.push(c);
        poly = poly.mul(&PoincareSeries::factor(2, n, d - 1, c, false));
    }
    let cp = dims_series(2, monomial_dims(&SpaceSpec::new(SpaceKind::CP, field), n));
    if poly != cp {
        verdict.pass = false;
        let d = (0..=n).find(|&i| poly.get(i) != cp.get(i)).unwrap_or(0);
        verdict.witnesses.push(format!("degree {}: {} vs {}", d, poly.get(d), cp.get(d)));
    }
    verdict.witnesses.push(format!("primitive dims of the cover {:?}", prims));
    Ok(verdict)
}

/// dim P(H_*(Q_0S^0)//∂)_n for n <= N, computed in the quotient of
/// H_*(Q_0S^0) by the ideal generated by the image of ∂ on algebra
/// generators (the primitive lifts Q^I·∂(a_s)).
pub fn coker_primitive_dims(p: u32, max_degree: i64, step_budget: u64) -> Result<Vec<usize>, SeriesError> {
    let field = PrimeField::new(p as u64)?;
    let n = max_degree;
    let td = q_del(p, n, step_budget)?;
    let h = DegreewiseHopfAlgebra::with_budget(SpaceSpec::new(SpaceKind::S0, field), n, step_budget);
    let pd = p_del(&td, &h)?;
    // ideal J degreewise, echelonized; normal forms live on non-pivot monomials
    let mut gens: Vec<(i64, SparseVec)> = Vec::new();
    for d in 1..=n {
        for v in pd.images(d)? {
            if !v.is_zero() {
                gens.push((d, v));
            }
        }
    }
    let mut ideal: Vec<Echelon> = (0..=n).map(|_| Echelon::new(field, false)).collect();
    for m in 1..=n {
        for (d, g) in &gens {
            if *d > m {
                continue;
            }
            let ge = h.from_coords(g, *d);
            for mono in &h.basis(m - d).monos {
                let prod = h.mul(&ge, &Elem::mono(mono.clone()));
                ideal[m as usize].insert(&h.coords(&prod, m));
            }
        }
    }
    let reduce = |m: i64, v: &SparseVec| -> SparseVec { ideal[m as usize].reduce(v) };
    let mut out = vec![0usize; (n + 1) as usize];
    for m in 1..=n {
        let basis = h.basis(m);
        let pivots: std::collections::HashSet<u64> = ideal[m as usize].pivot_indices().into_iter().collect();
        let reps: Vec<&Mono> =
            basis.monos.iter().enumerate().filter(|(i, _)| !pivots.contains(&(*i as u64))).map(|(_, x)| x).collect();
        let mut cols = Vec::new();
        for r in &reps {
            let t = h.reduced_coproduct(&Elem::mono((*r).clone()))?;
            // group by (deg l, r) then reduce the left factor modulo J
            let mut by_right: BTreeMap<(i64, Mono), Elem> = BTreeMap::new();
            for ((l, rr), &c) in &t.terms {
                by_right.entry((h.mono_degree(l), rr.clone())).or_default().add_term(field, l.clone(), c);
            }
            let mut rows: BTreeMap<(i64, u64, u64), u32> = BTreeMap::new();
            // (l ⊗ r) ↦ nf(l) ⊗ nf(r): first the left factors
            let mut mid: BTreeMap<(i64, u64, Mono), u32> = BTreeMap::new();
            for ((dl, rr), le) in &by_right {
                let v = reduce(*dl, &h.coords(le, *dl));
                for &(i, c) in &v.entries {
                    let e = mid.entry((*dl, i, rr.clone())).or_insert(0);
                    *e = field.add(*e, c);
                }
            }
            // then the right factors, grouped by left coordinate
            let mut by_left: BTreeMap<(i64, u64), Elem> = BTreeMap::new();
            for ((dl, i, rr), c) in mid {
                by_left.entry((dl, i)).or_default().add_term(field, rr, c);
            }
            for ((dl, i), re) in by_left {
                let v = reduce(m - dl, &h.coords(&re, m - dl));
                for &(j, c) in &v.entries {
                    let e = rows.entry((dl, i, j)).or_insert(0);
                    *e = field.add(*e, c);
                }
            }
            let pairs: Vec<(u64, u32)> =
                rows.into_iter().filter(|(_, c)| *c != 0).map(|((dl, i, j), c)| (((dl as u64) << 48) | (i << 24) | j, c)).collect();
            cols.push(SparseVec::from_pairs(field, pairs));
        }
        out[m as usize] = sparse_kernel(field, &cols).len();
    }
    Ok(out)
}
