//! The bit-set disjunctness search against a plain set-based enumeration.

use std::collections::BTreeSet;

use proptest::prelude::*;
use walktest::designs::{design1, design2, MeasurementMatrix};
use walktest::graph::gen_complete;
use walktest::grouptest::{is_disjunct, is_disjunct_with_budget, Verdict};
use walktest::walks::{ItemKind, StartRule, WalkMode};

/// Every d-subset of the other columns, in lexicographic order.
fn subsets(pool: &[u32], d: usize) -> Vec<Vec<u32>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (i, &x) in pool.iter().enumerate() {
        for mut rest in subsets(&pool[i + 1..], d - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

fn oracle(m: &MeasurementMatrix, d: usize, e: usize) -> bool {
    let cols = m.columns();
    let column = |x: u32| -> BTreeSet<usize> {
        m.rows.iter().enumerate().filter(|(_, r)| r.contains(&x)).map(|(i, _)| i).collect()
    };
    let d = d.min(cols.len().saturating_sub(1));
    for &s0 in &cols {
        let own = column(s0);
        let others: Vec<u32> = cols.iter().copied().filter(|&x| x != s0).collect();
        for set in subsets(&others, d) {
            let union: BTreeSet<usize> = set.iter().flat_map(|&x| column(x)).collect();
            if own.difference(&union).count() <= e {
                return false;
            }
        }
    }
    true
}

fn random_matrix() -> impl Strategy<Value = MeasurementMatrix> {
    (2usize..9, 0usize..12).prop_flat_map(|(n, m)| {
        (
            Just(n),
            prop::collection::vec(prop::collection::vec(0..n as u32, 0..n), m),
            prop::collection::vec(0..n as u32, 0..2),
        )
            .prop_map(|(n, rows, stripped)| {
                MeasurementMatrix::from_rows(ItemKind::Vertex, n, rows, stripped).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(600))]

    #[test]
    fn search_matches_enumeration(m in random_matrix(), d in 0usize..4, e in 0usize..3) {
        let cert = is_disjunct(&m, d, e).unwrap();
        prop_assert_eq!(cert.is_disjunct(), oracle(&m, d, e));
        if let Some(w) = &cert.witness {
            prop_assert_eq!(w.others.len(), cert.d_checked);
            prop_assert!(!w.others.contains(&w.s0));
            prop_assert!(w.others.iter().all(|&x| !m.is_stripped(x)));
            let left = w.replay(&m);
            prop_assert_eq!(left, w.uncovered);
            prop_assert!(left <= e);
        }
    }

    #[test]
    fn antitone_in_d_and_e(m in random_matrix(), d in 1usize..4, e in 1usize..3) {
        if is_disjunct(&m, d, e).unwrap().is_disjunct() {
            prop_assert!(is_disjunct(&m, d - 1, e).unwrap().is_disjunct());
            prop_assert!(is_disjunct(&m, d, e - 1).unwrap().is_disjunct());
        }
    }
}

#[test]
fn design1_on_k64_agrees_with_oracle() {
    let g = gen_complete(64).unwrap();
    let mut disjunct = 0;
    for seed in 0..100 {
        let m = design1(&g, &[], 25, 12, WalkMode::Simple, seed).unwrap();
        let cert = is_disjunct(&m, 1, 0).unwrap();
        assert_eq!(cert.is_disjunct(), oracle(&m, 1, 0), "seed {seed}");
        disjunct += cert.is_disjunct() as usize;
    }
    // both verdicts should occur for this size
    assert!(disjunct < 100);
}

#[test]
fn d2_walk_matrices_agree_with_oracle() {
    let g = gen_complete(24).unwrap();
    let mut seen = [0usize; 2];
    for seed in 0..100 {
        let m = design1(&g, &[], 30 + (seed as usize % 30), 6, WalkMode::Simple, seed).unwrap();
        let cert = is_disjunct(&m, 2, 0).unwrap();
        assert_eq!(cert.is_disjunct(), oracle(&m, 2, 0), "seed {seed}");
        seen[cert.is_disjunct() as usize] += 1;
        let m = design2(&gen_complete(8).unwrap(), StartRule::UniformRandom, 30, 5, WalkMode::Simple, seed).unwrap();
        for e in 0..2 {
            assert_eq!(is_disjunct(&m, 2, e).unwrap().is_disjunct(), oracle(&m, 2, e), "seed {seed}");
        }
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn witnesses_are_stable_across_runs() {
    let g = gen_complete(30).unwrap();
    let m = design1(&g, &[], 20, 5, WalkMode::Simple, 4).unwrap();
    let a = is_disjunct(&m, 2, 0).unwrap();
    let b = is_disjunct(&m, 2, 0).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.verdict, Verdict::Violated);
    assert_eq!(is_disjunct_with_budget(&m, 2, 0, u128::MAX).unwrap(), a);
}
