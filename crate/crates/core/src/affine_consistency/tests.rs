use super::*;
use crate::algebra::FiniteAlgebra;
use crate::consistency::{
    enforce_1_consistency, enforce_23_consistency, run_slac, BinaryInstance, Propagation, Rel,
    Trace,
};
use crate::fixtures::{random_binary_instance, semilattice, z2_affine, z2_affine_squared};
use crate::sets::{bit, full, to_vec};
use std::sync::Arc;

fn z2() -> Arc<FiniteAlgebra> {
    Arc::new(z2_affine())
}

fn swap(universe: usize) -> Rel {
    Rel::from_pairs(universe, [(0, 1), (1, 0)])
}

fn ident(universe: usize) -> Rel {
    Rel::from_pairs(universe, [(0, 0), (1, 1)])
}

fn instance(
    alg: &Arc<FiniteAlgebra>,
    domains: Vec<u64>,
    constraints: &[(usize, usize, Rel)],
) -> BinaryInstance {
    let names = (0..domains.len()).map(|v| format!("v{v}")).collect();
    let mut out = BinaryInstance::new(alg.clone(), names, domains, Default::default()).unwrap();
    for (x, y, rel) in constraints {
        out.add_constraint(*x, *y, rel.clone()).unwrap();
    }
    out
}

fn established(b: &BinaryInstance) -> BinaryInstance {
    enforce_23_consistency(b, &mut Trace::off())
        .consistent()
        .expect("fixture instances are consistent")
}

/// x + y = 1, y + z = 1 over the two-element affine algebra.
fn even_chain() -> BinaryInstance {
    let alg = z2();
    instance(
        &alg,
        vec![full(2); 3],
        &[(0, 1, swap(2)), (1, 2, swap(2))],
    )
}

/// x + y = 1, y + z = 1, x + z = 1: unsatisfiable parity triangle.
fn odd_triangle() -> BinaryInstance {
    let alg = z2();
    instance(
        &alg,
        vec![full(2); 3],
        &[(0, 1, swap(2)), (1, 2, swap(2)), (0, 2, swap(2))],
    )
}

#[test]
fn one_pair_per_variable_on_affine_domains() {
    let b = established(&even_chain());
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    assert_eq!(pairs.len(), 3);
    for (i, pair) in pairs.iter().enumerate() {
        assert_eq!(pair.var, i);
        assert_eq!(pair.sub_mask, full(2));
        assert!(pair.theta.is_zero());
        assert_eq!(pair.quotient.algebra.size(), 2);
        assert_eq!(pair.coord.field.modulus(), 2);
    }
}

#[test]
fn semilattice_domains_admit_no_pairs() {
    let alg = Arc::new(semilattice());
    let order = Rel::from_pairs(2, [(0, 0), (0, 1), (1, 1)]);
    let b = established(&instance(&alg, vec![full(2); 2], &[(0, 1, order)]));
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    assert!(pairs.is_empty());
}

#[test]
fn affine_square_domain_lists_pairs_largest_first() {
    let alg = Arc::new(z2_affine_squared());
    let b = instance(&alg, vec![full(4); 1], &[]);
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    // the whole algebra with each of its three maximal congruences, then
    // the six two-element affine subuniverses with the diagonal
    assert_eq!(pairs.len(), 9);
    for pair in &pairs[..3] {
        assert_eq!(pair.sub_mask.count_ones(), 4);
        assert_eq!(pair.theta.block_count(), 2);
    }
    for pair in &pairs[3..] {
        assert_eq!(pair.sub_mask.count_ones(), 2);
        assert!(pair.theta.is_zero());
    }
}

#[test]
fn identity_constraints_make_variables_relevant() {
    let alg = z2();
    let b = established(&instance(&alg, vec![full(2); 2], &[(0, 1, ident(2))]));
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    let rv = relevant_congruence(&b, pair, 1, false).unwrap().expect("relevant");
    assert!(rv.alpha.is_zero());
    assert_eq!(rv.block_link, vec![0, 1]);
}

#[test]
fn full_products_are_not_relevant() {
    let alg = z2();
    let b = established(&instance(
        &alg,
        vec![full(2); 2],
        &[(0, 1, Rel::full(2, full(2), full(2)))],
    ));
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    assert!(relevant_congruence(&b, pair, 1, false).unwrap().is_none());
}

#[test]
fn swapped_blocks_stay_relevant() {
    let alg = z2();
    let b = established(&instance(&alg, vec![full(2); 2], &[(0, 1, swap(2))]));
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    let rv = relevant_congruence(&b, pair, 1, false).unwrap().expect("relevant");
    assert!(rv.alpha.is_zero());
    assert_eq!(rv.block_link, vec![1, 0], "blocks are linked crosswise");
}

#[test]
fn two_three_consistency_already_refutes_the_triangle() {
    // at three variables the parity contradiction is visible to the pair
    // extension check itself
    let mut trace = Trace::off();
    assert!(enforce_23_consistency(&odd_triangle(), &mut trace).is_unsat());
}

#[test]
fn odd_triangle_compiles_to_an_unsat_system() {
    // built on the raw 1-consistent triangle: every constraint is present
    let b = odd_triangle();
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    let ti = build_test_instance(&b, pair, &AffineCaps::default()).unwrap();
    assert_eq!(ti.relevant.len(), 3, "all variables are relevant");
    assert!(!ti.solve().is_sat(), "the three parity rows sum to 0 = 1");
    for block in 0..2 {
        assert!(!ti.block_appears(pair, block).unwrap());
    }
}

#[test]
fn even_chain_compiles_to_a_sat_system() {
    let b = established(&even_chain());
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    let ti = build_test_instance(&b, pair, &AffineCaps::default()).unwrap();
    assert!(ti.solve().is_sat());
    for block in 0..2 {
        assert!(ti.block_appears(pair, block).unwrap(), "both blocks appear in solutions");
    }
    let strands = ti.strands();
    assert_eq!(strands.len(), 2);
    assert_eq!(strands[0].blocks.len(), ti.relevant.len());
}

#[test]
fn irrelevant_variables_are_excluded_from_the_system() {
    let alg = z2();
    // x tied to y, z free on both
    let b = established(&instance(
        &alg,
        vec![full(2); 3],
        &[
            (0, 1, swap(2)),
            (0, 2, Rel::full(2, full(2), full(2))),
            (1, 2, Rel::full(2, full(2), full(2))),
        ],
    ));
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    let ti = build_test_instance(&b, pair, &AffineCaps::default()).unwrap();
    let vars: Vec<usize> = ti.relevant.iter().map(|r| r.var).collect();
    assert_eq!(vars, vec![0, 1], "the unconstrained variable is not relevant");
}

#[test]
fn pass_refutes_the_odd_triangle() {
    let b = odd_triangle();
    let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut Trace::off()).unwrap();
    assert!(out.result.is_unsat());
    assert!(out.blocks_pruned() >= 2);
}

#[test]
fn pass_keeps_the_even_chain_intact() {
    let b = established(&even_chain());
    let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut Trace::off()).unwrap();
    assert_eq!(out.blocks_pruned(), 0);
    let reduced = match &out.result {
        Propagation::Consistent(r) => r.clone(),
        Propagation::Unsat => panic!("chain is satisfiable"),
    };
    assert_eq!(reduced, b, "nothing to prune");
    // one live passive subinstance per (pair, block)
    assert_eq!(out.live_passive(), 6);
    for entry in out.passive.iter().filter(|p| p.live) {
        assert_eq!(entry.block_mask.count_ones(), 1);
        // stabilized domains pin every variable to the linked block
        assert!(entry.domains.iter().all(|&d| d.count_ones() == 1));
    }

    // the pass is idempotent on its output
    let again = affine_consistency_pass(&reduced, &AffineCaps::default(), &mut Trace::off()).unwrap();
    assert_eq!(again.blocks_pruned(), 0);
    match again.result {
        Propagation::Consistent(r) => assert_eq!(r, reduced),
        Propagation::Unsat => panic!("second pass must not refute"),
    }
}

#[test]
fn pass_is_vacuous_without_affine_quotients() {
    let alg = Arc::new(semilattice());
    let order = Rel::from_pairs(2, [(0, 0), (0, 1), (1, 1)]);
    let b = established(&instance(&alg, vec![full(2); 2], &[(0, 1, order)]));
    let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut Trace::off()).unwrap();
    match out.result {
        Propagation::Consistent(r) => assert_eq!(r, b),
        Propagation::Unsat => panic!("vacuous pass cannot refute"),
    }
    assert!(out.passive.is_empty());
    assert!(out.reports.is_empty());
}

#[test]
fn pass_preserves_solution_sets() {
    let alg = z2();
    for seed in 0..30 {
        let raw = random_binary_instance(&alg, 5, seed);
        let mut trace = Trace::off();
        let Some(b) = enforce_23_consistency(&raw, &mut trace).consistent() else {
            continue;
        };
        let before = b.enumerate_solutions(1 << 16).unwrap();
        let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut trace).unwrap();
        match out.result {
            Propagation::Unsat => {
                assert!(before.is_empty(), "pass refuted a satisfiable instance (seed {seed})");
            }
            Propagation::Consistent(reduced) => {
                let after = reduced.enumerate_solutions(1 << 16).unwrap();
                assert_eq!(before, after, "solution set changed (seed {seed})");
            }
        }
    }
}

#[test]
fn live_passive_subinstances_are_stable() {
    let alg = z2();
    for seed in 0..15 {
        let raw = random_binary_instance(&alg, 4, seed);
        let mut trace = Trace::off();
        let Some(b) = enforce_23_consistency(&raw, &mut trace).consistent() else {
            continue;
        };
        let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut trace).unwrap();
        let Propagation::Consistent(reduced) = out.result else {
            continue;
        };
        for entry in out.passive.iter().filter(|p| p.live) {
            let probe = entry.materialize(&reduced);
            let one = enforce_1_consistency(&probe, &mut trace)
                .consistent()
                .expect("live passive subinstances are 1-consistent");
            assert_eq!(one, probe);
            let store = run_slac(&probe, &mut trace)
                .consistent()
                .expect("live passive subinstances are SLAC-consistent");
            assert_eq!(store.masks(), probe.domains(), "SLAC must not prune (seed {seed})");
        }
    }
}

#[test]
fn path_independence_holds_on_linear_chains() {
    let b = established(&even_chain());
    let caps = AffineCaps { verify_paths: true, ..AffineCaps::default() };
    let out = affine_consistency_pass(&b, &caps, &mut Trace::off()).unwrap();
    assert!(!out.result.is_unsat());
}

#[test]
fn update_passive_examples() {
    let b = established(&even_chain());
    let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut Trace::off()).unwrap();
    let passive = out.passive;
    let live_before = passive.iter().filter(|p| p.live).count();

    // a reduction that keeps all blocks leaves the list unchanged
    let same = update_passive(passive.clone(), &b);
    assert_eq!(same.iter().filter(|p| p.live).count(), live_before);

    // reducing variable 0 to block {0} kills the entries based at {1}
    let mut reduced = b.clone();
    reduced.remove_values(0, bit(1));
    let updated = update_passive(passive, &reduced);
    let dead: Vec<_> = updated.iter().filter(|p| !p.live).collect();
    assert_eq!(dead.len(), 3, "one entry per variable was based on the dropped block");
    for entry in &dead {
        assert!(entry.domains.iter().any(|&d| d == 0), "intersection emptied somewhere");
    }

    // an empty list stays empty
    assert!(update_passive(Vec::new(), &reduced).is_empty());
}

#[test]
fn stale_pairs_are_skipped() {
    let b = established(&even_chain());
    let pairs = enumerate_test_pairs(&b, &AffineCaps::default()).unwrap();
    assert!(!pairs.is_empty());
    // shrink a domain behind the enumeration's back
    let mut shrunk = b.clone();
    shrunk.remove_values(0, bit(1));
    let pair = pairs.iter().find(|p| p.var == 0).unwrap();
    assert!(!crate::sets::is_subset(pair.sub_mask, shrunk.domain(0)));
    let out = affine_consistency_pass(&shrunk, &AffineCaps::default(), &mut Trace::off()).unwrap();
    // the pass enumerates fresh pairs for the shrunken instance instead
    assert!(out.reports.iter().all(|r| !r.skipped_stale || r.blocks_pruned == 0));
}

#[test]
fn reports_render_one_line_per_pair() {
    let b = established(&even_chain());
    let out = affine_consistency_pass(&b, &AffineCaps::default(), &mut Trace::off()).unwrap();
    assert_eq!(out.reports.len(), 3);
    for report in &out.reports {
        let line = report.render();
        assert!(line.contains("pair var="));
        assert!(line.contains("SAT"));
    }
    let vars: Vec<usize> = out.reports.iter().map(|r| r.var).collect();
    assert_eq!(vars, vec![0, 1, 2], "reports follow list order");
}

#[test]
fn r_plus_wrapper_matches_method() {
    let b = established(&even_chain());
    assert_eq!(
        r_plus(&b, 0, 1, bit(0)).unwrap(),
        b.r_plus(0, 1, bit(0)).unwrap()
    );
    assert_eq!(to_vec(r_plus(&b, 0, 1, full(2)).unwrap()), vec![0, 1]);
}
