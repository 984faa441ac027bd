use super::*;
use crate::error::Error;
use crate::fixtures::{majority_algebra, semilattice, z2_affine, z2_affine_squared, z3_affine};
use std::collections::BTreeSet;

fn term(arity: usize, node: TermNode) -> Term {
    Term::new(arity, node).unwrap()
}

fn app(op: usize, args: Vec<TermNode>) -> TermNode {
    TermNode::App { op, args }
}

#[test]
fn evaluate_maltsev_identity_term() {
    let alg = z2_affine();
    // m(x0, x1, x1) collapses to x0
    let t = term(2, app(0, vec![TermNode::Var(0), TermNode::Var(1), TermNode::Var(1)]));
    assert_eq!(evaluate_term(&alg, &t, &[1, 0]).unwrap(), 1);
}

#[test]
fn evaluate_xor_term_directly() {
    let alg = z2_affine();
    let t = term(3, app(0, vec![TermNode::Var(0), TermNode::Var(1), TermNode::Var(2)]));
    assert_eq!(evaluate_term(&alg, &t, &[1, 0, 1]).unwrap(), 0);
}

#[test]
fn evaluate_idempotent_majority() {
    let alg = majority_algebra();
    let t = term(1, app(0, vec![TermNode::Var(0), TermNode::Var(0), TermNode::Var(0)]));
    assert_eq!(evaluate_term(&alg, &t, &[1]).unwrap(), 1);
}

#[test]
fn evaluate_rejects_arity_mismatch() {
    let alg = z2_affine();
    let t = term(3, app(0, vec![TermNode::Var(0), TermNode::Var(1), TermNode::Var(2)]));
    assert!(matches!(
        evaluate_term(&alg, &t, &[1, 0]),
        Err(Error::ArityMismatch { expected: 3, got: 2 })
    ));
}

#[test]
fn coordinatewise_xor_on_pairs() {
    let alg = z2_affine();
    let m = &alg.ops()[0];
    let out = m
        .apply_coordinatewise(&[vec![0, 0], vec![1, 1], vec![0, 1]])
        .unwrap();
    assert_eq!(out, vec![1, 0]);
}

#[test]
fn coordinatewise_idempotent_on_equal_tuples() {
    for alg in [z2_affine(), semilattice(), majority_algebra()] {
        let op = &alg.ops()[0];
        let tuple = vec![1usize, 0, 1];
        let tuples: Vec<Vec<usize>> = (0..op.arity()).map(|_| tuple.clone()).collect();
        assert_eq!(op.apply_coordinatewise(&tuples).unwrap(), tuple);
    }
}

#[test]
fn coordinatewise_empty_tuples() {
    let alg = z2_affine();
    let out = alg.ops()[0]
        .apply_coordinatewise(&[vec![], vec![], vec![]])
        .unwrap();
    assert!(out.is_empty());
}

fn tuple_set(tuples: &[&[usize]]) -> BTreeSet<Vec<usize>> {
    tuples.iter().map(|t| t.to_vec()).collect()
}

#[test]
fn subuniverse_of_affine_line_is_itself() {
    let alg = z2_affine();
    let gens = tuple_set(&[&[0, 0], &[1, 1]]);
    assert_eq!(generate_subuniverse(&alg, 2, &gens).unwrap(), gens);
}

#[test]
fn subuniverse_of_three_pairs_fills_the_square() {
    let alg = z2_affine();
    let gens = tuple_set(&[&[0, 0], &[0, 1], &[1, 1]]);
    let closed = generate_subuniverse(&alg, 2, &gens).unwrap();
    assert_eq!(closed.len(), 4);
    assert!(closed.contains(&vec![1, 0]));
}

#[test]
fn singleton_generates_itself() {
    for alg in [z2_affine(), semilattice(), majority_algebra(), z3_affine()] {
        let gens = tuple_set(&[&[1]]);
        assert_eq!(generate_subuniverse(&alg, 1, &gens).unwrap(), gens);
    }
}

#[test]
fn empty_generators_rejected() {
    let alg = z2_affine();
    assert!(matches!(
        generate_subuniverse(&alg, 1, &BTreeSet::new()),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn closure_is_idempotent_and_monotone() {
    let alg = z3_affine();
    let gens_small = tuple_set(&[&[0, 1], &[1, 2]]);
    let gens_big = tuple_set(&[&[0, 1], &[1, 2], &[2, 2]]);
    let once = generate_subuniverse(&alg, 2, &gens_small).unwrap();
    let twice = generate_subuniverse(&alg, 2, &once).unwrap();
    assert_eq!(once, twice);
    let big = generate_subuniverse(&alg, 2, &gens_big).unwrap();
    assert!(once.is_subset(&big));
}

/// Independent oracle: all partitions of {0..n-1} as restricted growth
/// strings, compatibility checked naively over every pair of blockwise
/// related argument tuples.
fn brute_force_congruences(alg: &FiniteAlgebra) -> Vec<Congruence> {
    fn grow(n: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let next_free = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for b in 0..=next_free {
            prefix.push(b);
            grow(n, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    grow(alg.size(), &mut Vec::new(), &mut parts);
    parts
        .into_iter()
        .map(Congruence::from_blocks)
        .filter(|c| naive_compatible(alg, c))
        .collect()
}

fn naive_compatible(alg: &FiniteAlgebra, part: &Congruence) -> bool {
    let n = alg.size();
    for op in alg.ops() {
        let total = n.pow(op.arity() as u32);
        let decode = |mut idx: usize| {
            let mut t = vec![0usize; op.arity()];
            for slot in t.iter_mut().rev() {
                *slot = idx % n;
                idx /= n;
            }
            t
        };
        for u in 0..total {
            for v in 0..total {
                let tu = decode(u);
                let tv = decode(v);
                let related = tu.iter().zip(&tv).all(|(&a, &b)| part.same_block(a, b));
                if related && !part.same_block(op.eval(&tu), op.eval(&tv)) {
                    return false;
                }
            }
        }
    }
    true
}

#[test]
fn congruences_of_two_element_affine() {
    let alg = z2_affine();
    let all = all_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
    assert_eq!(all.len(), 2);
}

#[test]
fn congruences_of_affine_square_match_brute_force() {
    let alg = z2_affine_squared();
    let all = all_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
    assert_eq!(all.len(), 5);
    let expected: BTreeSet<Congruence> = brute_force_congruences(&alg).into_iter().collect();
    let got: BTreeSet<Congruence> = all.into_iter().collect();
    assert_eq!(got, expected);
}

#[test]
fn congruences_of_semilattice() {
    let alg = semilattice();
    let all = all_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
    assert_eq!(all.len(), 2);
    let expected: BTreeSet<Congruence> = brute_force_congruences(&alg).into_iter().collect();
    assert_eq!(all.into_iter().collect::<BTreeSet<_>>(), expected);
}

#[test]
fn congruence_enumeration_respects_cap() {
    let alg = z2_affine_squared();
    assert!(matches!(all_congruences(&alg, 3), Err(Error::ResourceLimit(_))));
}

#[test]
fn every_enumerated_congruence_is_compatible() {
    for alg in [z2_affine(), z2_affine_squared(), z3_affine(), semilattice(), majority_algebra()] {
        for c in all_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap() {
            assert!(naive_compatible(&alg, &c), "incompatible congruence on {}", alg.name());
        }
    }
}

#[test]
fn maximal_congruences_of_simple_algebra_is_diagonal() {
    let alg = z2_affine();
    let max = maximal_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
    assert_eq!(max, vec![Congruence::zero(2)]);
}

#[test]
fn maximal_congruences_of_affine_square() {
    let alg = z2_affine_squared();
    let max = maximal_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
    assert_eq!(max.len(), 3);
    for theta in &max {
        assert_eq!(theta.block_count(), 2);
        assert!(theta.block_sets().iter().all(|b| b.len() == 2));
    }
}

#[test]
fn one_element_algebra_has_no_maximal_congruence() {
    let one = FiniteAlgebra::new(
        "one",
        1,
        vec![OperationTable::from_fn("f", 2, 1, |_| 0).unwrap()],
    )
    .unwrap();
    assert!(maximal_congruences(&one, DEFAULT_CONGRUENCE_CAP).unwrap().is_empty());
}

#[test]
fn quotient_by_diagonal_is_isomorphic_copy() {
    let alg = z3_affine();
    let q = quotient(&alg, &Congruence::zero(3)).unwrap();
    assert_eq!(q.algebra.size(), 3);
    assert!(find_isomorphism(&q.algebra, &alg).unwrap().is_some());
}

#[test]
fn quotient_by_full_relation_is_one_element() {
    let alg = z3_affine();
    let q = quotient(&alg, &Congruence::one(3)).unwrap();
    assert_eq!(q.algebra.size(), 1);
}

#[test]
fn quotient_of_affine_square_by_maximal_is_affine_line() {
    let alg = z2_affine_squared();
    let z2 = z2_affine();
    for theta in maximal_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap() {
        let q = quotient(&alg, &theta).unwrap();
        assert_eq!(q.algebra.size(), 2);
        assert!(find_isomorphism(&q.algebra, &z2).unwrap().is_some());
    }
}

#[test]
fn quotient_rejects_incompatible_partition() {
    let alg = z2_affine_squared();
    // merging 0 and 1 only is not compatible with the coordinatewise xor
    let part = Congruence::from_blocks(vec![0, 0, 1, 2]);
    assert!(matches!(quotient(&alg, &part), Err(Error::IncompatiblePartition(_))));
}

#[test]
fn congruences_above_theta_match_quotient_congruences() {
    for alg in [z2_affine_squared(), semilattice(), z3_affine()] {
        let all = all_congruences(&alg, DEFAULT_CONGRUENCE_CAP).unwrap();
        for theta in &all {
            let q = quotient(&alg, theta).unwrap();
            let above = all.iter().filter(|c| theta.leq(c)).count();
            let q_all = all_congruences(&q.algebra, DEFAULT_CONGRUENCE_CAP).unwrap();
            assert_eq!(above, q_all.len(), "correspondence fails on {}", alg.name());
        }
    }
}

#[test]
fn simplicity_judgements() {
    assert!(is_simple(&z2_affine(), DEFAULT_CONGRUENCE_CAP).unwrap());
    assert!(!is_simple(&z2_affine_squared(), DEFAULT_CONGRUENCE_CAP).unwrap());
    assert!(is_simple(&z3_affine(), DEFAULT_CONGRUENCE_CAP).unwrap());
    assert_eq!(
        brute_force_congruences(&z3_affine()).len(),
        2,
        "exhaustive partition check agrees"
    );
}

#[test]
fn one_element_simplicity_is_degenerate() {
    let one = FiniteAlgebra::new(
        "one",
        1,
        vec![OperationTable::from_fn("f", 1, 1, |_| 0).unwrap()],
    )
    .unwrap();
    assert!(matches!(is_simple(&one, 12), Err(Error::DegenerateAlgebra(_))));
}

#[test]
fn linkedness_of_identity_graph_is_diagonal() {
    let alg = z2_affine();
    let rel: BTreeSet<(usize, usize)> = [(0, 0), (1, 1)].into();
    let (a, b) = linkedness_congruences(&rel, &alg, &alg).unwrap();
    assert!(a.is_zero());
    assert!(b.is_zero());
}

#[test]
fn linkedness_of_full_product_is_full() {
    let alg = z2_affine();
    let rel: BTreeSet<(usize, usize)> = [(0, 0), (0, 1), (1, 0), (1, 1)].into();
    let (a, b) = linkedness_congruences(&rel, &alg, &alg).unwrap();
    assert!(a.is_one());
    assert!(b.is_one());
}

#[test]
fn linkedness_of_semilattice_order_is_full() {
    let alg = semilattice();
    let rel: BTreeSet<(usize, usize)> = [(0, 0), (0, 1), (1, 1)].into();
    let (a, b) = linkedness_congruences(&rel, &alg, &alg).unwrap();
    assert!(a.is_one());
    assert!(b.is_one());
}

#[test]
fn linkedness_is_symmetric_under_swap() {
    let alg = semilattice();
    let rel: BTreeSet<(usize, usize)> = [(0, 0), (0, 1), (1, 1)].into();
    let swapped: BTreeSet<(usize, usize)> = rel.iter().map(|&(a, b)| (b, a)).collect();
    let (a1, b1) = linkedness_congruences(&rel, &alg, &alg).unwrap();
    let (a2, b2) = linkedness_congruences(&swapped, &alg, &alg).unwrap();
    assert_eq!(a1, b2);
    assert_eq!(b1, a2);
}

#[test]
fn linkedness_rejects_non_subdirect_input() {
    let alg = z2_affine();
    let rel: BTreeSet<(usize, usize)> = [(0, 0)].into();
    assert!(matches!(
        linkedness_congruences(&rel, &alg, &alg),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn isomorphism_of_algebra_with_itself_is_identity() {
    let alg = z2_affine();
    assert_eq!(find_isomorphism(&alg, &alg).unwrap(), Some(vec![0, 1]));
}

#[test]
fn isomorphism_rejects_signature_mismatch() {
    assert!(matches!(
        find_isomorphism(&z2_affine(), &semilattice()),
        Err(Error::SignatureMismatch { .. })
    ));
}

#[test]
fn isomorphism_distinguishes_operations() {
    // same signature shape, different behaviour: xor3 vs majority
    assert_eq!(find_isomorphism(&z2_affine(), &majority_algebra()).unwrap(), None);
}

#[test]
fn power_encoding_round_trips() {
    let alg = z3_affine();
    let sq = alg.power(2).unwrap();
    assert_eq!(sq.size(), 9);
    for e in 0..9 {
        let t = decode_power_tuple(e, 3, 2);
        assert_eq!(encode_power_tuple(&t, 3), e);
    }
    // the power operation acts coordinatewise
    let m = &sq.ops()[0];
    let a = encode_power_tuple(&[1, 2], 3);
    let b = encode_power_tuple(&[0, 1], 3);
    let c = encode_power_tuple(&[2, 0], 3);
    let expect = encode_power_tuple(&[(1 + 3 - 0 + 2) % 3, (2 + 3 - 1 + 0) % 3], 3);
    assert_eq!(m.eval(&[a, b, c]), expect);
}

#[test]
fn ternary_clone_of_affine_line_closes_with_four_tables() {
    let alg = z2_affine();
    let clone = generate_clone(&alg, 3, 4, 256, 1 << 20);
    assert!(clone.closed);
    assert_eq!(clone.tables.len(), 4); // three projections and xor3
}

#[test]
fn subalgebra_restricts_operations() {
    let alg = semilattice();
    let sub = subalgebra(&alg, crate::sets::mask_of([0])).unwrap();
    assert_eq!(sub.algebra.size(), 1);
    assert_eq!(sub.to_parent(0), 0);
    // {0,1} with meet is a subuniverse of itself
    assert!(alg.is_subuniverse(crate::sets::full(2)));
    // {1} is closed under meet
    assert!(alg.is_subuniverse(crate::sets::mask_of([1])));
}

#[test]
fn subuniverses_generated_lists_all_small_ones() {
    let alg = z2_affine_squared();
    let subs = subuniverses_generated(&alg, crate::sets::full(4), 2, 64).unwrap();
    // four singletons, six two-element lines, the whole square
    assert_eq!(subs.len(), 11);
    assert!(subs.iter().all(|&m| alg.is_subuniverse(m)));
    // sorted by cardinality then elements
    assert_eq!(subs[0].count_ones(), 1);
    assert_eq!(subs.last().unwrap().count_ones(), 4);
}
