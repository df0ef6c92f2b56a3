use dl_engine::admissible_ops::Strategy as Rewrite;
use dl_engine::admissible_ops::*;
use dl_engine::fp_core::PrimeField;
use num_bigint::BigInt;
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn w(s: &str) -> OpWord {
    s.parse().unwrap()
}

fn field(p: u32) -> PrimeField {
    PrimeField::new(p as u64).unwrap()
}

fn big_binom(a: i64, b: i64) -> BigInt {
    if a < 0 || b < 0 {
        return BigInt::from(0);
    }
    let mut acc = BigInt::from(1);
    for k in 1..=b {
        acc = acc * (a + k) / k;
    }
    acc
}

fn residue(x: &BigInt, p: u32) -> u32 {
    let p = BigInt::from(p);
    let r = ((x % &p) + &p) % &p;
    u32::try_from(r).unwrap()
}

// The three Adem sums evaluated over the full range i = 0..=r+s with exact
// integers, reduced at the end.
fn adem_oracle(p: u32, left: OpLetter, right: OpLetter) -> OpCombination {
    let f = field(p);
    let (r, s, pi) = (left.s as i64, right.s as i64, p as i64);
    let mut out = OpCombination::zero(f);
    let sign = |k: i64| if k % 2 == 0 { BigInt::from(1) } else { BigInt::from(-1) };
    let pair = |a: OpLetter, b: OpLetter| OpWord::new(vec![a, b]);
    for i in 0..=r + s {
        let hi = (r + s - i) as u32;
        let lo = i as u32;
        match (left.eps, right.eps) {
            (e, 0) => {
                let c = sign(r + i) * big_binom(pi * i - r, r - (pi - 1) * s - i - 1);
                out.add_term(pair(OpLetter { s: hi, eps: e }, OpLetter::q(lo)), residue(&c, p));
            }
            (0, 1) => {
                let c1 = sign(r + i) * big_binom(pi * i - r, r - (pi - 1) * s - i);
                out.add_term(pair(OpLetter::bq(hi), OpLetter::q(lo)), residue(&c1, p));
                let c2 = -sign(r + i) * big_binom(pi * i - r - 1, r - (pi - 1) * s - i);
                if lo >= 1 {
                    out.add_term(pair(OpLetter::q(hi), OpLetter::bq(lo)), residue(&c2, p));
                } else {
                    assert_eq!(residue(&c2, p), 0);
                }
            }
            _ => {
                let c = -sign(r + i) * big_binom(pi * i - r - 1, r - (pi - 1) * s - i);
                if lo >= 1 {
                    out.add_term(pair(OpLetter::bq(hi), OpLetter::bq(lo)), residue(&c, p));
                } else {
                    assert_eq!(residue(&c, p), 0);
                }
            }
        }
    }
    out
}

fn letters(p: u32, max_s: u32) -> Vec<OpLetter> {
    let mut out = Vec::new();
    for s in 0..=max_s {
        out.push(OpLetter::q(s));
        if p != 2 && s >= 1 {
            out.push(OpLetter::bq(s));
        }
    }
    out
}

#[test]
fn bidegree_examples() {
    let d = word_degree(&w("bQ2 Q1"), 3);
    assert_eq!((d.deg_q, d.deg_beta, d.total), (12, -1, 11));
    let d = word_degree(&w("Q3 Q1"), 2);
    assert_eq!((d.deg_q, d.deg_beta, d.total), (4, 0, 4));
    let d = word_degree(&OpWord::empty(), 5);
    assert_eq!((d.deg_q, d.deg_beta, d.total), (0, 0, 0));
}

#[test]
fn admissibility_examples() {
    assert!(is_admissible(&w("Q2 Q1"), 2));
    assert!(!is_admissible(&w("Q3 Q1"), 2));
    assert!(is_admissible(&w("bQ3 Q1"), 3));
    assert!(!is_admissible(&w("Q3 bQ1"), 3));
}

#[test]
fn excess_examples() {
    assert_eq!(excess(&w("Q3 Q1"), 2), Some(2));
    assert_eq!(excess(&w("bQ2 Q1"), 3), Some(-1));
    assert_eq!(excess(&OpWord::empty(), 3), None);
    assert_eq!(b_of(&OpWord::empty()), 0);
    assert!(excess_b_exceeds(&OpWord::empty(), 3, 100));
}

#[test]
fn parse_round_trip() {
    for s in ["Q3 Q1", "bQ2 Q1", "1", "Q0"] {
        assert_eq!(w(s).to_string(), s);
    }
    assert!("X1".parse::<OpWord>().is_err());
}

#[test]
fn known_p2_rewrites() {
    let f = field(2);
    assert!(adem_expand_pair(f, OpLetter::q(3), OpLetter::q(1)).unwrap().is_zero());
    let q4q1 = adem_expand_pair(f, OpLetter::q(4), OpLetter::q(1)).unwrap();
    assert_eq!(q4q1, OpCombination::word(f, w("Q3 Q2")));
    let n = Normalizer::new(f);
    assert_eq!(n.normalize_word(&w("Q2 Q1")).unwrap(), OpCombination::word(f, w("Q2 Q1")));
    assert!(n.normalize_word(&w("Q3 Q1")).unwrap().is_zero());
    assert_eq!(n.normalize_word(&w("Q4 Q1")).unwrap(), OpCombination::word(f, w("Q3 Q2")));
}

#[test]
fn p3_mixed_relation_preserves_degree() {
    let f = field(3);
    let c = adem_expand_pair(f, OpLetter::q(3), OpLetter::bq(1)).unwrap();
    assert!(!c.is_zero());
    let d = word_degree(&w("Q3 bQ1"), 3);
    for word in c.terms.keys() {
        assert_eq!(word_degree(word, 3), d);
    }
    assert_eq!(c, adem_oracle(3, OpLetter::q(3), OpLetter::bq(1)));
}

#[test]
fn adem_pairs_match_exact_oracle() {
    for p in [2u32, 3, 5] {
        let f = field(p);
        let ls = letters(p, 14);
        for &l in &ls {
            for &r in &ls {
                if pair_admissible(l, r, p) {
                    assert!(adem_expand_pair(f, l, r).is_err());
                    continue;
                }
                let got = adem_expand_pair(f, l, r).unwrap();
                assert_eq!(got, adem_oracle(p, l, r), "p={} {} {}", p, l, r);
                let e = excess(&OpWord::new(vec![l, r]), p).unwrap();
                for word in got.terms.keys() {
                    assert!(excess(word, p).unwrap() <= e, "excess rose: {} {} -> {}", l, r, word);
                }
            }
        }
    }
}

#[test]
fn invalid_letters_rejected() {
    let f = field(2);
    assert!(Normalizer::new(f).normalize_word(&w("bQ1")).is_err());
    let f = field(3);
    assert!(Normalizer::new(f).normalize_word(&w("bQ0")).is_err());
}

#[test]
fn step_budget_is_enforced() {
    let f = field(2);
    let n = Normalizer::with_options(f, Rewrite::LeftmostFirst, 0);
    assert!(matches!(n.normalize_word(&w("Q9 Q1 Q1")), Err(OpsError::StepBudget(0))));
}

#[test]
fn enumeration_examples() {
    let words = |p, n, filt: &AdmissibleFilter| -> Vec<String> {
        enumerate_admissible(p, n, filt).into_iter().map(|m| m.word.to_string()).collect()
    };
    assert_eq!(words(2, 3, &AdmissibleFilter::q_unstable(0)), ["Q1", "Q2", "Q3", "Q2 Q1"]);
    assert_eq!(
        words(3, 8, &AdmissibleFilter::q_unstable(0).with_pattern(LetterPattern::AllEpsilonZero)),
        ["Q1", "Q2"]
    );
    assert_eq!(words(3, 4, &AdmissibleFilter::q_unstable(0)), ["bQ1", "Q1"]);
}

// Brute force over words of length <= 4, filtered by hand.
#[test]
fn enumeration_matches_brute_force() {
    for (p, n) in [(2u32, 14i64), (3, 30), (5, 40)] {
        for d in [0i64, 1, 3] {
            let filt = AdmissibleFilter::q_unstable(d);
            let got: Vec<OpWord> = enumerate_admissible(p, n, &filt).into_iter().map(|m| m.word).collect();
            let mut want = Vec::new();
            let ls: Vec<OpLetter> = letters(p, n as u32).into_iter().filter(|l| l.s >= 1 && l.degree(p) <= n).collect();
            let mut frontier: Vec<OpWord> = vec![OpWord::empty()];
            for _ in 0..4 {
                let mut next = Vec::new();
                for base in &frontier {
                    for &l in &ls {
                        let mut letters = vec![l];
                        letters.extend_from_slice(&base.letters);
                        let cand = OpWord::new(letters);
                        if word_degree(&cand, p).total <= n {
                            next.push(cand);
                        }
                    }
                }
                want.extend(next.iter().filter(|c| is_admissible(c, p) && excess_b_exceeds(c, p, d)).cloned());
                frontier = next;
            }
            let short: Vec<OpWord> = got.iter().filter(|x| x.len() <= 4).cloned().collect();
            let mut a = short.clone();
            a.sort();
            want.sort();
            assert_eq!(a, want, "p={} n={} d={}", p, n, d);
        }
    }
}

fn word_strategy(p: u32) -> impl proptest::strategy::Strategy<Value = OpWord> {
    let max_eps = if p == 2 { 0u8 } else { 1 };
    prop::collection::vec((1u32..8, 0u8..=max_eps), 1..4)
        .prop_map(|ls| OpWord::new(ls.into_iter().map(|(s, eps)| OpLetter { s, eps }).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_linear(p in prop::sample::select(vec![2u32, 3, 5]), seed in any::<u64>()) {
        let f = field(p);
        let mut rng = seed;
        let mut next = || { rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (rng >> 33) as u32 };
        let mut x = OpCombination::zero(f);
        let mut y = OpCombination::zero(f);
        for _ in 0..3 {
            let mk = |a: u32, b: u32, e: u32| {
                let eps = if p == 2 { 0 } else { (e % 2) as u8 };
                OpWord::new(vec![OpLetter { s: 1 + a % 9, eps }, OpLetter::q(1 + b % 5)])
            };
            x.add_term(mk(next(), next(), next()), next() % p);
            y.add_term(mk(next(), next(), next()), next() % p);
        }
        let (a, b) = (next() % p, next() % p);
        let n = Normalizer::new(f);
        let mut combo = OpCombination::zero(f);
        combo.add_scaled(&x, a);
        combo.add_scaled(&y, b);
        let mut want = OpCombination::zero(f);
        want.add_scaled(&n.normalize(&x).unwrap(), a);
        want.add_scaled(&n.normalize(&y).unwrap(), b);
        prop_assert_eq!(n.normalize(&combo).unwrap(), want);
    }

    #[test]
    fn strategies_agree_p3(word in word_strategy(3)) {
        let f = field(3);
        let l = Normalizer::with_options(f, Rewrite::LeftmostFirst, DEFAULT_STEP_BUDGET);
        let r = Normalizer::with_options(f, Rewrite::RightmostFirst, DEFAULT_STEP_BUDGET);
        let nl = l.normalize_word(&word).unwrap();
        prop_assert_eq!(&nl, &r.normalize_word(&word).unwrap());
        for out in nl.terms.keys() {
            prop_assert!(is_admissible(out, 3));
            prop_assert_eq!(word_degree(out, 3), word_degree(&word, 3));
        }
    }

    #[test]
    fn normal_form_is_idempotent(p in prop::sample::select(vec![2u32, 3, 5]), seed in 0usize..1000) {
        let f = field(p);
        let words: Vec<_> = enumerate_admissible(p, 24, &AdmissibleFilter::q_unstable(0)).into_iter().map(|m| m.word).collect();
        let word = &words[seed % words.len()];
        prop_assert_eq!(Normalizer::new(f).normalize_word(word).unwrap(), OpCombination::word(f, word.clone()));
    }

    #[test]
    fn right_multiplication_commutes_with_normalization(a in word_strategy(2), b in word_strategy(2)) {
        // associativity of the quotient: nf(nf(a)·b) = nf(a·b)
        let f = field(2);
        let n = Normalizer::new(f);
        let left = n.normalize(&n.normalize_word(&a).unwrap().right_mul(&b)).unwrap();
        prop_assert_eq!(left, n.normalize_word(&a.concat(&b)).unwrap());
    }
}
