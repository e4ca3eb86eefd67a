use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use toroidlab::group::{
    block_action, block_of, eta_projection, group_3343, hyperoctahedral, is_normalized_by, low_index_subgroups,
    named_group, named_group_in, pgl25_generators, generate, GroupElement, ParentFamily, Permutation, PointGroup,
    Subgroup,
};

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

#[test]
fn group_orders() {
    for n in 3..=6 {
        assert_eq!(hyperoctahedral(n).order(), (1 << n) * factorial(n), "B{n}");
    }
    assert_eq!(group_3343().order(), 1152);
}

#[test]
fn pgl25_is_sharply_three_transitive() {
    let g = generate(&pgl25_generators(), 1000).unwrap();
    assert_eq!(g.order(), 120);
    let mut images = BTreeSet::new();
    for e in g.elements() {
        let p = eta_projection(e).unwrap();
        assert!(images.insert((p.image(0), p.image(1), p.image(2))), "two elements agree on three points");
    }
    assert_eq!(images.len(), 6 * 5 * 4);
}

#[test]
fn eta_is_a_homomorphism_with_kernel_c2n() {
    for n in [3, 4] {
        let g = hyperoctahedral(n);
        let mut kernel = 0;
        for a in g.elements() {
            let pa = eta_projection(a).unwrap();
            if pa.is_identity() {
                kernel += 1;
                assert!(a.twice_entries().iter().enumerate().all(|(k, &x)| (k / n == k % n) == (x != 0)));
            }
            for b in g.elements().iter().step_by(7) {
                let pb = eta_projection(b).unwrap();
                assert_eq!(eta_projection(&a.mul(b)).unwrap(), pa.then(&pb));
            }
        }
        assert_eq!(kernel, 1 << n);
    }
}

fn weight(s: &[i8]) -> usize {
    s.iter().filter(|&&x| x < 0).count()
}

/// Subgroups of `C2^n` normalized by `A_n`, by brute force over unions of
/// weight classes.
fn normalized_sign_subgroups(n: usize) -> Vec<BTreeSet<usize>> {
    let g = Arc::new(hyperoctahedral(n));
    let an = named_group_in(&g, ParentFamily::Cubic, "A_n").unwrap().generators();
    let mut found = Vec::new();
    for mask in 0u32..(1 << (n + 1)) {
        if mask & 1 == 0 {
            continue;
        }
        let in_set = |s: &[i8]| mask & (1 << weight(s)) != 0;
        let signs: Vec<Vec<i8>> = (0u32..(1 << n))
            .map(|b| (0..n).map(|i| if b >> i & 1 == 1 { -1 } else { 1 }).collect())
            .filter(|s: &Vec<i8>| in_set(s))
            .collect();
        let closed = signs
            .iter()
            .all(|a| signs.iter().all(|b| in_set(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>())));
        if !closed {
            continue;
        }
        let h = Subgroup::from_predicate(&g, |e| eta_projection(e).unwrap().is_identity() && in_set(&e.sign_vector().unwrap()));
        if is_normalized_by(&h, &an) {
            found.push(h.member_ids().map(|id| weight(&g.element(id).sign_vector().unwrap())).collect());
        }
    }
    found
}

#[test]
fn sign_subgroups_normalized_by_alternating_group() {
    for n in [4, 5] {
        let found: BTreeSet<BTreeSet<usize>> = normalized_sign_subgroups(n).into_iter().collect();
        let expected: BTreeSet<BTreeSet<usize>> = [
            BTreeSet::from([0]),
            BTreeSet::from([0, n]),
            (0..=n).step_by(2).collect(),
            (0..=n).collect(),
        ]
        .into_iter()
        .collect();
        assert_eq!(found, expected, "n = {n}");
    }
}

#[test]
fn blocks_of_3343() {
    let g = Arc::new(group_3343());
    assert_eq!(block_of(&[2, 0, 0, 0]), Some(0));
    assert_eq!(block_of(&[1, 1, 1, 1]), Some(1));
    assert_eq!(block_of(&[-1, 1, 1, 1]), Some(2));
    let r1 = g.named("R1").unwrap().clone();
    let r2 = g.named("R2").unwrap().clone();
    let sub = Subgroup::generated_by(&g, &[r1, r2]).unwrap();
    let perms: BTreeSet<Vec<usize>> = sub
        .elements()
        .map(|e| {
            let p = block_action(e).unwrap();
            (0..3).map(|i| p.image(i)).collect()
        })
        .collect();
    assert_eq!(perms.len(), 6);
    let kernel = Subgroup::from_predicate(&g, |e| block_action(e).unwrap().is_identity());
    assert_eq!(kernel.order(), 192);
    assert_eq!(kernel, named_group_in(&g, ParentFamily::T3343, "C2n_plus*S_n").unwrap());
}

/// `[B_n : K] >= [S_n : eta(K)]`.
fn projection_inequality(k: &Subgroup) -> bool {
    let n = k.parent().dim();
    let images: BTreeSet<Permutation> = k.elements().map(|e| eta_projection(e).unwrap()).collect();
    k.index() >= factorial(n) / images.len()
}

#[test]
fn projection_inequality_on_low_index_subgroups() {
    for n in [3, 4, 5] {
        let g = Arc::new(hyperoctahedral(n));
        for j in 2..=4 {
            for h in low_index_subgroups(&g, j, false).unwrap() {
                assert!(projection_inequality(&h));
            }
        }
    }
    for spec in ["B_n_plus", "C2n_plus*S_n", "C2n*A_n", "C2n*D4", "C2n_plus*A_n"] {
        assert!(projection_inequality(&named_group(spec, 4).unwrap()), "{spec}");
    }
}

fn random_element(g: &PointGroup) -> impl Strategy<Value = GroupElement> + '_ {
    (0..g.order()).prop_map(move |i| g.element(i).clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn conjugation_preserves_order_and_det(i in 0usize..384, j in 0usize..384) {
        let g = hyperoctahedral(4);
        let (a, b) = (g.element(i), g.element(j));
        let c = a.conjugate_by(b);
        prop_assert_eq!(c.order(), a.order());
        prop_assert_eq!(c.det(), a.det());
        prop_assert!(a.mul(&a.inverse()).is_identity());
    }
}

#[test]
fn random_elements_of_3343_preserve_vertex_lattice() {
    let g = group_3343();
    let mut runner = proptest::test_runner::TestRunner::default();
    runner
        .run(&random_element(&g), |e| {
            for v in [[2, 0, 0, 0], [1, 1, 1, 1], [1, -1, 1, 1]] {
                let w = e.apply(&v).unwrap();
                prop_assert!(block_of(&w).is_some());
            }
            Ok(())
        })
        .unwrap();
}
