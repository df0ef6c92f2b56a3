use dl_engine::fp_core::*;
use num_bigint::BigUint;
use proptest::prelude::*;

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, k| acc * k)
}

// (a+b)!/(a!b!) mod p straight from factorials.
fn binom_oracle(a: i64, b: i64, p: u32) -> u32 {
    if a < 0 || b < 0 {
        return 0;
    }
    let v = factorial((a + b) as u64) / (factorial(a as u64) * factorial(b as u64));
    u32::try_from(v % p).unwrap()
}

// Column-pivoting elimination over i64, independent of FpMatrix.
fn rank_oracle(rows: &[Vec<i64>], p: i64) -> usize {
    let mut m: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|x| x.rem_euclid(p)).collect()).collect();
    let ncols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    let mut used_cols = vec![false; ncols];
    for i in 0..m.len() {
        let Some(j) = (0..ncols).find(|&j| !used_cols[j] && m[i][j] != 0) else { continue };
        used_cols[j] = true;
        rank += 1;
        let inv = (1..p).find(|x| x * m[i][j] % p == 1).unwrap();
        for k in i + 1..m.len() {
            let factor = m[k][j] * inv % p;
            if factor != 0 {
                for c in 0..ncols {
                    m[k][c] = (m[k][c] - factor * m[i][c]).rem_euclid(p);
                }
            }
        }
    }
    rank
}

#[test]
fn binom_examples() {
    assert_eq!(binom_mod(2, 1, 3), 0);
    assert_eq!(binom_mod(0, 0, 5), 1);
    assert_eq!(binom_mod(-1, 5, 2), 0);
    assert_eq!(binom_mod(6, 4, 2), 0);
    assert_eq!(binom_oracle(6, 4, 2), 0);
}

#[test]
fn binom_matches_factorials() {
    for p in [2u32, 3, 5, 7] {
        for a in -2..40i64 {
            for b in -2..40i64 {
                assert_eq!(binom_mod(a, b, p), binom_oracle(a, b, p), "({}, {}) mod {}", a, b, p);
            }
        }
    }
}

#[test]
fn field_rejects_composites() {
    assert!(PrimeField::new(4).is_err());
    assert!(PrimeField::new(1).is_err());
    assert!(PrimeField::new(7).is_ok());
    let f = PrimeField::new(7).unwrap();
    for a in 1..7 {
        assert_eq!(f.mul(a, f.inv(a)), 1);
    }
    assert_eq!(f.reduce(-1), 6);
}

#[test]
fn rank_kernel_examples() {
    let f2 = PrimeField::new(2).unwrap();
    let id = FpMatrix::identity(f2, 3).rank_kernel();
    assert_eq!(id.rank, 3);
    assert!(id.kernel_basis.is_empty());

    let z = FpMatrix::zero(f2, 2, 3).rank_kernel();
    assert_eq!(z.rank, 0);
    assert_eq!(z.kernel_basis.len(), 3);

    let f5 = PrimeField::new(5).unwrap();
    let m = FpMatrix::from_rows(f5, &[vec![1, 2], vec![2, 4]]).unwrap();
    let rk = m.rank_kernel();
    assert_eq!(rk.rank, 1);
    assert_eq!(rk.kernel_basis, vec![vec![3, 1]]);
}

fn matrix_strategy() -> impl Strategy<Value = (u32, Vec<Vec<i64>>)> {
    (prop::sample::select(vec![2u32, 3, 5, 7]), 1usize..30, 1usize..30).prop_flat_map(|(p, r, c)| {
        // sparse-ish entries so that ranks below full occur often
        let entry = prop_oneof![3 => Just(0i64), 1 => 0..p as i64];
        (Just(p), prop::collection::vec(prop::collection::vec(entry, c), r))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn rank_kernel_agrees_with_oracle((p, rows) in matrix_strategy()) {
        let f = PrimeField::new(p as u64).unwrap();
        let m = FpMatrix::from_rows(f, &rows).unwrap();
        let rk = m.rank_kernel();
        prop_assert_eq!(rk.rank, rank_oracle(&rows, p as i64));
        prop_assert_eq!(rk.rank + rk.kernel_basis.len(), m.cols);
        for v in &rk.kernel_basis {
            prop_assert!(m.mul_vec(v).iter().all(|&x| x == 0));
        }
        prop_assert_eq!(rk.image_basis.len(), rk.rank);
    }

    #[test]
    fn sparse_routes_agree((p, rows) in matrix_strategy()) {
        let f = PrimeField::new(p as u64).unwrap();
        let m = FpMatrix::from_rows(f, &rows).unwrap();
        let cols: Vec<SparseVec> = (0..m.cols).map(|j| SparseVec::from_dense(&m.column(j))).collect();
        let (rank, ker) = sparse_rank_kernel(f, &cols);
        let peeled = sparse_kernel(f, &cols);
        prop_assert_eq!(rank, m.rank());
        prop_assert_eq!(ker.len(), m.cols - rank);
        prop_assert_eq!(peeled.len(), m.cols - rank);
        prop_assert_eq!(sparse_rank(f, &peeled), peeled.len());
        for k in ker.iter().chain(&peeled) {
            prop_assert!(m.mul_vec(&k.to_dense(m.cols)).iter().all(|&x| x == 0));
        }
    }

    #[test]
    fn axpy_is_linear(p in prop::sample::select(vec![2u32, 3, 5]), a in prop::collection::vec(0u32..5, 12), b in prop::collection::vec(0u32..5, 12), c in 0u32..5) {
        let f = PrimeField::new(p as u64).unwrap();
        let a: Vec<u32> = a.iter().map(|x| x % p).collect();
        let b: Vec<u32> = b.iter().map(|x| x % p).collect();
        let c = c % p;
        let got = SparseVec::from_dense(&a).axpy(f, c, &SparseVec::from_dense(&b)).to_dense(12);
        let want: Vec<u32> = a.iter().zip(&b).map(|(x, y)| f.add(*x, f.mul(c, *y))).collect();
        prop_assert_eq!(got, want);
    }
}
