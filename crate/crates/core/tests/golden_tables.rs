//! Published table and decomposition examples, d = 2..6.

use quasipure_core::{decompose, entanglement, script_b, split_gcd, ExactEntanglement, FlagKind, LabelWord, MesLabel};

/// `(d, [E for k = 1..])` as printed.
const TABLE_E: &[(u64, &[&str])] = &[
    (2, &["0", "0", "2 log 2", "2 log 2"]),
    (3, &["0", "log 3", "log 3", "3 log 3"]),
    (4, &["0", "log 2", "2 log 4", "2 log 4", "4 log 4"]),
    (5, &["0", "log 5", "2 log 5", "3 log 5", "3 log 5", "5 log 5"]),
    (
        6,
        &[
            "0",
            "log 3",
            "log 3 + 2 log 2",
            "3 log 3 + 2 log 2",
            "4 log 3 + 4 log 2",
            "4 log 3 + 4 log 2",
            "6 log 3 + 6 log 2",
        ],
    ),
];

/// Shift index of the last pair after the BXOR round, per row `k ≥ 2`, per `m`.
const TABLE_LAST_SHIFT: &[(u64, &[&[u64]])] = &[
    (2, &[&[0, 0], &[0, 1], &[0, 0]]),
    (3, &[&[0, 2, 1], &[0, 0, 0], &[0, 1, 2]]),
    (4, &[&[0, 2, 0, 2], &[0, 3, 2, 1], &[0, 0, 0, 0], &[0, 1, 2, 3]]),
    (
        5,
        &[
            &[0, 2, 4, 1, 3],
            &[0, 3, 1, 4, 2],
            &[0, 4, 3, 2, 1],
            &[0, 0, 0, 0, 0],
            &[0, 1, 2, 3, 4],
        ],
    ),
    (
        6,
        &[
            &[0, 2, 4, 0, 2, 4],
            &[0, 3, 0, 3, 0, 3],
            &[0, 4, 2, 0, 4, 2],
            &[0, 5, 4, 3, 2, 1],
            &[0, 0, 0, 0, 0, 0],
            &[0, 1, 2, 3, 4, 5],
        ],
    ),
];

#[test]
fn entanglement_column_matches_tables() {
    for &(d, column) in TABLE_E {
        for (i, &expected) in column.iter().enumerate() {
            let k = i as u64 + 1;
            let e = entanglement(d, k).unwrap();
            assert_eq!(e.render_in_base(d), expected, "d = {d}, k = {k}");
        }
    }
}

#[test]
fn entanglement_column_exact_exponents() {
    let two_log_two = ExactEntanglement::from_prime_exponents([(2, 2)]);
    assert_eq!(entanglement(2, 3).unwrap(), two_log_two);
    assert_eq!(
        entanglement(4, 5).unwrap(),
        ExactEntanglement::from_prime_exponents([(2, 8)])
    );
    assert_eq!(entanglement(6, 6).unwrap(), ExactEntanglement::log_of(6).times(4));
    assert_eq!(
        entanglement(6, 3).unwrap(),
        ExactEntanglement::from_prime_exponents([(3, 1), (2, 2)])
    );
}

#[test]
fn bxor_round_words_match_tables() {
    for &(d, rows) in TABLE_LAST_SHIFT {
        for (i, row) in rows.iter().enumerate() {
            let k = i + 2;
            for (m, &last) in row.iter().enumerate() {
                for n in 0..d {
                    let word = LabelWord::uniform(MesLabel::new(d, m as u64, n).unwrap(), k).unwrap();
                    let out = script_b(&word).unwrap();
                    let head = MesLabel::new(d, m as u64, 0).unwrap();
                    assert!(out.pairs()[..k - 1].iter().all(|&l| l == head), "d={d} k={k} m={m}");
                    assert_eq!(
                        out.pairs()[k - 1],
                        MesLabel::new(d, last, n).unwrap(),
                        "d={d} k={k} m={m}"
                    );
                }
            }
        }
    }
}

fn tag_values(d: u64, k: u64) -> Vec<(u64, u64)> {
    decompose(d, k)
        .unwrap()
        .leaves
        .iter()
        .map(|l| {
            let tag = l.tag.unwrap();
            assert_eq!(tag.flag.kind, FlagKind::SumOverN);
            (l.t, tag.flag.value)
        })
        .collect()
}

#[test]
fn readout_groups_match_worked_examples() {
    // ρ_3^(2): P_00 Σ P_0n + P_10 Σ P_2n + P_20 Σ P_1n
    assert_eq!(tag_values(3, 2), vec![(0, 0), (1, 2), (2, 1)]);
    // ρ_3^(3): a single group with tag Σ P_0n
    assert_eq!(tag_values(3, 3), vec![(0, 0)]);
    // ρ_4^(2): (P_00 + P_20) Σ P_0n + (P_10 + P_30) Σ P_2n
    assert_eq!(tag_values(4, 2), vec![(0, 0), (1, 2)]);
    // ρ_4^(3): four groups, tags 0, 3, 2, 1
    assert_eq!(tag_values(4, 3), vec![(0, 0), (1, 3), (2, 2), (3, 1)]);
    // ρ_6^(3): even and odd m with tags 0 and 3
    assert_eq!(tag_values(6, 3), vec![(0, 0), (1, 3)]);
    // ρ_6^(4): three pairs of m with tags 0, 4, 2
    assert_eq!(tag_values(6, 4), vec![(0, 0), (1, 4), (2, 2)]);
    // ρ_6^(7): tag follows m
    assert_eq!(tag_values(6, 7), (0..6).map(|t| (t, t)).collect::<Vec<_>>());
}

#[test]
fn leaf_shapes_of_worked_examples() {
    let tree = decompose(5, 2).unwrap();
    assert_eq!(tree.leaves.len(), 5);
    for leaf in &tree.leaves {
        assert_eq!(leaf.probability.to_string(), "1/5");
        assert_eq!(leaf.pure_part.len(), 1);
        assert_eq!((leaf.pure_part[0].dim, leaf.pure_part[0].copies), (5, 1));
    }

    let tree = decompose(6, 3).unwrap();
    assert_eq!(tree.leaves.len(), 2);
    for leaf in &tree.leaves {
        assert_eq!(leaf.probability.to_string(), "1/2");
        // φ_00(2)^⊗2 on the fine factors and φ_00(3) on one coarse factor.
        let shapes: Vec<(u64, u64)> = leaf.pure_part.iter().map(|p| (p.dim, p.copies)).collect();
        assert_eq!(shapes, vec![(2, 2), (3, 1)]);
        assert_eq!(leaf.separable_part.len(), 1);
        let flags = &leaf.separable_part[0].flags;
        assert_eq!(flags.len(), 1);
        assert_eq!((flags[0].d, flags[0].kind, flags[0].value), (3, FlagKind::SumOverN, 0));
    }

    // ρ_2^(2) is separable: one copy of φ_00(1) on the fine factor is trivial.
    let tree = decompose(2, 2).unwrap();
    assert!(tree.leaves.iter().all(|l| l.pure_entanglement().is_zero()));

    let tree = decompose(2, 1).unwrap();
    assert_eq!(tree.leaves.len(), 1);
    assert!(tree.leaves[0].tag.is_none());
    assert_eq!(tree.entanglement.bits(), 0.0);
}

#[test]
fn quoted_entanglement_values() {
    assert_eq!(entanglement(4, 3).unwrap().bits(), 4.0);
    assert_eq!(entanglement(4, 5).unwrap().bits(), 8.0);
    assert_eq!(entanglement(4, 2).unwrap().bits(), 1.0);
    assert_eq!(entanglement(2, 3).unwrap().bits(), 2.0);
    assert_eq!(entanglement(6, 6).unwrap().render_in_base(6), "4 log 3 + 4 log 2");
    let split = split_gcd(6, 4).unwrap();
    assert_eq!((split.g, split.d_tilde, split.k_tilde), (2, 3, 2));
}
