//! Invariants of the label algebra, the closed form and the certificates.

use num_rational::Ratio;
use proptest::prelude::*;
use quasipure_core::modmath::{decompose_m, t_permutation};
use quasipure_core::numeric::{mes_from_label, reduced_density, Side};
use quasipure_core::{
    decompose, entanglement, entanglement_of_tree, gcd, script_b, split_gcd, trace_branch, LabelWord, MesLabel,
};

#[test]
fn modular_identity_exhaustive() {
    for d in 1..=64u64 {
        for k in 1..=64u64 {
            let split = split_gcd(d, k).unwrap();
            for m in 0..d {
                let (_, t) = decompose_m(m, &split).unwrap();
                assert_eq!((k * m) % d, t_permutation(&split, t).unwrap(), "d={d} k={k} m={m}");
            }
        }
    }
}

#[test]
fn terraces_and_monotonicity() {
    for d in 1..=8u64 {
        for k in 1..=4 * d {
            let e = entanglement(d, k).unwrap();
            let next = entanglement(d, k + 1).unwrap();
            assert!(next.checked_sub(&e).is_some(), "not monotone at d={d} k={k}");
            if k % d == 0 && k >= 2 {
                assert_eq!(e, entanglement(d, k - 1).unwrap(), "terrace at d={d} k={k}");
            }
        }
    }
}

#[test]
fn leaf_probabilities_sum_to_one_exactly() {
    for d in 1..=12u64 {
        for k in 1..=12u64 {
            let tree = decompose(d, k).unwrap();
            let total: Ratio<u64> = tree.leaves.iter().map(|l| l.probability).sum();
            assert_eq!(total, Ratio::from_integer(1), "d={d} k={k}");
            assert_eq!(entanglement_of_tree(&tree).unwrap(), entanglement(d, k).unwrap());
        }
    }
}

#[test]
fn every_branch_lands_in_one_leaf() {
    for d in 1..=8u64 {
        for k in 1..=6u64 {
            let tree = decompose(d, k).unwrap();
            for m in 0..d {
                for n in 0..d {
                    let trace = trace_branch(&tree, m, n).unwrap();
                    let leaf = tree.leaf_for_group(trace.group).unwrap();
                    leaf.accepts(&trace.slots).unwrap();
                }
            }
        }
    }
}

#[test]
fn reduced_states_are_maximally_mixed() {
    for d in 2..=6u64 {
        for m in 0..d {
            for n in 0..d {
                let state = mes_from_label(MesLabel::new(d, m, n).unwrap());
                for side in [Side::A, Side::B] {
                    let rho = reduced_density(&state, side, 64).unwrap();
                    for i in 0..d as usize {
                        for j in 0..d as usize {
                            let ideal = if i == j { 1.0 / d as f64 } else { 0.0 };
                            assert!((rho.get(i, j).re - ideal).abs() < 1e-12);
                            assert!(rho.get(i, j).im.abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn closed_form_is_log_of_quotient(d in 1u64..200, k in 1u64..40) {
        let e = entanglement(d, k).unwrap();
        let g = gcd(d, k).unwrap();
        let expected = (k - 1) as f64 * (d as f64).log2() - (g as f64).log2();
        prop_assert!((e.bits() - expected).abs() < 1e-9 * expected.max(1.0));
    }

    #[test]
    fn bxor_round_is_a_bijection_on_words(d in 2u64..7, k in 2usize..5, seed in any::<u64>()) {
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (x >> 33) % d };
        let a: Vec<MesLabel> = (0..k).map(|_| MesLabel::new(d, next(), next()).unwrap()).collect();
        let b: Vec<MesLabel> = (0..k).map(|_| MesLabel::new(d, next(), next()).unwrap()).collect();
        let (wa, wb) = (LabelWord::new(a).unwrap(), LabelWord::new(b).unwrap());
        let (ra, rb) = (script_b(&wa).unwrap(), script_b(&wb).unwrap());
        prop_assert_eq!(wa == wb, ra == rb);
    }

    #[test]
    fn uniform_words_collapse(d in 1u64..10, k in 1usize..8, m in 0u64..10, n in 0u64..10) {
        let (m, n) = (m % d, n % d);
        let out = script_b(&LabelWord::uniform(MesLabel::new(d, m, n).unwrap(), k).unwrap()).unwrap();
        prop_assert_eq!(out.pairs()[k - 1], MesLabel::new(d, (k as u64 * m) % d, n).unwrap());
    }
}
