use dl_engine::admissible_ops::{OpWord, DEFAULT_STEP_BUDGET as B};
use dl_engine::fp_core::Echelon;
use dl_engine::qx_homology::Elem;
use dl_engine::transfer::*;
use dl_engine::unstable_modules::{BasisPair, FreeModuleElement};

fn w(s: &str) -> OpWord {
    s.parse().unwrap()
}

fn value(td: &TransferData, s: i64) -> Vec<(String, u32)> {
    let g = td.source.gens.index_of(&format!("a{}", s)).unwrap();
    td.values[g].terms.iter().map(|(b, &c)| (b.word.to_string(), c)).collect()
}

#[test]
fn q_del_values_odd() {
    let td = q_del(3, 12, B).unwrap();
    assert_eq!(value(&td, 1), []);
    assert_eq!(value(&td, 3), [("bQ1".to_string(), 2)]);
    assert_eq!(value(&td, 5), []);
    assert_eq!(value(&td, 7), [("bQ2".to_string(), 1)]);
    assert_eq!(td.map.mats[3].get(0, 0), 2);
    assert_eq!(td.map.rank(1), 0);
    let td = q_del(5, 16, B).unwrap();
    assert_eq!(value(&td, 7), [("bQ1".to_string(), 4)]);
    assert_eq!(value(&td, 15), [("bQ2".to_string(), 1)]);
}

#[test]
fn q_del_values_p2() {
    let td = q_del(2, 12, B).unwrap();
    assert_eq!(value(&td, 1), [("Q1".to_string(), 1)]);
    let mut v3 = value(&td, 3);
    v3.sort();
    assert_eq!(v3, [("Q2 Q1".to_string(), 1), ("Q3".to_string(), 1)]);
    let mut v5 = value(&td, 5);
    v5.sort();
    assert_eq!(v5, [("Q3 Q2".to_string(), 1), ("Q5".to_string(), 1)]);
}

#[test]
fn regression_p2() {
    let td = q_del(2, 8, B).unwrap();
    assert!(td.apply_word(&w("Q3"), 1).unwrap().is_zero());
    assert!(td.apply_word(&w("Q2 Q1"), 1).unwrap().is_zero());
    assert!(!td.kernel_bigraded(4).is_empty());
    let v = regression_mmm(&td).unwrap();
    assert!(v.pass, "{:?}", v);
    assert!(regression_mmm(&q_del(3, 8, B).unwrap()).is_err());
}

#[test]
fn right_ideal_small() {
    for p in [2u32, 3, 5, 7] {
        let v = verify_right_ideal(p, 20, B).unwrap();
        assert!(v.pass, "{:?}", v);
    }
}

#[test]
fn image_examples_p3() {
    let td = q_del(3, 8, B).unwrap();
    // degree 3: image is span{βQ^1 ι}; degree 4: both sides vanish
    assert_eq!(td.map.rank(3), 1);
    assert_eq!(td.target.dim(3), 1);
    assert_eq!(td.target.basis(3)[0].word, w("bQ1"));
    assert_eq!(td.map.rank(4), 0);
    let (_, j) = td.source.locate(&BasisPair { word: w("bQ1"), gen: 0 }).unwrap();
    assert!(td.column(4, j).is_zero());
    assert!(verify_image_bigraded(&td).unwrap().pass);
    assert!(matches!(verify_image_bigraded(&q_del(2, 8, B).unwrap()), Err(TransferError::WrongPrime { .. })));
}

#[test]
fn kernel_through_4_p3() {
    let kg = kernel_r_generators(&q_del(3, 4, B).unwrap()).unwrap();
    assert_eq!(kg.histogram.len(), 1);
    assert_eq!(kg.histogram.get(&-1), Some(&1));
    assert_eq!(kg.reports[1].dim, 1);
}

#[test]
fn kernel_bidegrees_p3_30() {
    let td = q_del(3, 30, B).unwrap();
    let v = verify_kernel_bidegrees(&td).unwrap();
    assert!(v.pass, "{:?}", v);
    assert!(rank_nullity_holds(&td));
}

#[test]
fn lambda_shortcut_examples() {
    assert_eq!(lambda_shortcut(&w("Q4 Q2"), 2), Some(w("Q2 Q1")));
    assert_eq!(lambda_shortcut(&w("Q3"), 2), None);
    assert_eq!(lambda_shortcut(&w("Q3"), 3), Some(w("Q1")));
    assert_eq!(lambda_shortcut(&w("bQ3"), 3), None);
    assert_eq!(lambda_shortcut(&OpWord::empty(), 3), Some(OpWord::empty()));
}

#[test]
fn coker_small() {
    for (p, n) in [(2u32, 16i64), (3, 24), (5, 40)] {
        let td = q_del(p, n, B).unwrap();
        let h = s0_algebra(p, n, B).unwrap();
        let v = verify_coker(&td, Some(&h), n).unwrap();
        assert!(v.pass, "{:?}", v);
    }
}

#[test]
fn p_del_examples_p2() {
    let n = 10;
    let td = q_del(2, n, B).unwrap();
    let h = s0_algebra(2, n, B).unwrap();
    let pd = p_del(&td, &h).unwrap();
    // a1 goes to Q1
    let q1 = h.generator_index(&w("Q1"), h.base_index("iota").unwrap()).unwrap();
    assert_eq!(pd.values[0], h.generator_elem(q1));
    assert_eq!(pd.images(1).unwrap().len(), 1);
    // degree 3: both primitives are hit
    let mut e = Echelon::new(h.field, false);
    for v in pd.images(3).unwrap() {
        e.insert(&v);
    }
    assert_eq!(e.rank(), h.primitive_dim(3).unwrap());
    assert!(verify_p_surjective_p2(&td, &h).unwrap().pass);
}

#[test]
fn power_sums_are_primitive() {
    let h = s0_algebra(2, 12, B).unwrap();
    let sums = power_sum_primitives(&h, 12);
    for (n, s) in sums.iter().enumerate().skip(1) {
        assert!(h.is_primitive(s).unwrap(), "degree {}", n);
    }
}

#[test]
fn p_del_images_primitive_odd() {
    let n = 20;
    let td = q_del(3, n, B).unwrap();
    let h = s0_algebra(3, n, B).unwrap();
    let pd = p_del(&td, &h).unwrap();
    for k in 1..=n {
        for v in pd.images(k).unwrap() {
            assert!(h.is_primitive(&h.from_coords(&v, k)).unwrap());
        }
    }
}

#[test]
fn d_prime_to_elem_maps_words_to_generators() {
    let td = q_del(3, 8, B).unwrap();
    let h = s0_algebra(3, 8, B).unwrap();
    let x = FreeModuleElement::basis(td.field, td.target.variant, w("bQ1"), 0);
    let g = h.generator_index(&w("bQ1"), 0).unwrap();
    assert_eq!(d_prime_to_elem(&h, &x), Elem::mono(vec![(g, 1)]));
}

#[test]
fn period_values() {
    assert_eq!(period(2), 1);
    assert_eq!(period(3), 4);
    assert_eq!(period(5), 8);
}
