use super::*;
use crate::csp::{Constraint, CspInstance};
use crate::fixtures::{
    linear_template, majority_algebra, random_binary_instance, twosat_template, z2_affine,
};
use crate::sets::{bit, full, mask_of, to_set, to_vec};
use std::sync::Arc;

/// Three-element algebra with only the identity operation; every relation
/// is closed, which keeps propagation examples over arbitrary constraints
/// structurally valid.
fn bare3() -> Arc<FiniteAlgebra> {
    let id = crate::algebra::OperationTable::from_fn("id", 1, 3, |a| a[0]).unwrap();
    Arc::new(FiniteAlgebra::new("bare3", 3, vec![id]).unwrap())
}

fn maj() -> Arc<FiniteAlgebra> {
    Arc::new(majority_algebra())
}

fn neq(universe: usize, dx: u64, dy: u64) -> Rel {
    let mut rel = Rel::empty(universe);
    for a in crate::sets::iter(dx) {
        for b in crate::sets::iter(dy) {
            if a != b {
                rel = {
                    let mut r = rel;
                    r.rows[a] |= bit(b);
                    r
                };
            }
        }
    }
    rel
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

fn triangle_neq(alg: &Arc<FiniteAlgebra>, domain: u64) -> BinaryInstance {
    let n = alg.size();
    let rel = neq(n, domain, domain);
    instance(
        alg,
        vec![domain; 3],
        &[(0, 1, rel.clone()), (1, 2, rel.clone()), (0, 2, rel)],
    )
}

#[test]
fn two_coloring_a_triangle_fails() {
    let b = triangle_neq(&maj(), full(2));
    let mut trace = Trace::off();
    assert!(enforce_23_consistency(&b, &mut trace).is_unsat());
}

#[test]
fn three_coloring_a_triangle_is_two_three_consistent() {
    let b = triangle_neq(&bare3(), full(3));
    let mut trace = Trace::off();
    let out = enforce_23_consistency(&b, &mut trace).consistent().unwrap();
    for (x, y) in [(0, 1), (1, 2), (0, 2)] {
        let rel = out.constraint(x, y).unwrap();
        assert_eq!(rel.count(), 6, "disequality untouched on ({x},{y})");
    }
    assert!(is_23_consistent(&out));
}

#[test]
fn constraint_free_instance_passes_untouched() {
    let b = instance(&maj(), vec![full(2); 3], &[]);
    let mut trace = Trace::off();
    let out = enforce_23_consistency(&b, &mut trace).consistent().unwrap();
    assert_eq!(out.domains(), b.domains());
    // missing constraints were completed to full products
    for (x, y) in [(0, 1), (1, 2), (0, 2)] {
        assert_eq!(out.constraint(x, y).unwrap().count(), 4);
    }
}

#[test]
fn two_three_enforcement_is_idempotent() {
    for seed in 0..20 {
        let b = random_binary_instance(&maj(), 5, seed);
        let mut trace = Trace::off();
        match enforce_23_consistency(&b, &mut trace) {
            Propagation::Unsat => {}
            Propagation::Consistent(once) => {
                let again = enforce_23_consistency(&once, &mut trace).consistent().unwrap();
                assert_eq!(once, again, "second application must be a no-op (seed {seed})");
                assert!(is_23_consistent(&once));
            }
        }
    }
}

#[test]
fn two_three_enforcement_preserves_solutions() {
    let algebras = [maj(), Arc::new(z2_affine())];
    for alg in &algebras {
        for seed in 0..25 {
            let b = random_binary_instance(alg, 5, seed);
            let before = b.enumerate_solutions(1 << 16).unwrap();
            let mut trace = Trace::off();
            match enforce_23_consistency(&b, &mut trace) {
                Propagation::Unsat => assert!(before.is_empty()),
                Propagation::Consistent(out) => {
                    let after = out.enumerate_solutions(1 << 16).unwrap();
                    assert_eq!(before, after, "solutions changed (seed {seed})");
                }
            }
        }
    }
}

#[test]
fn one_consistency_examples() {
    let alg = maj();
    // already subdirect: unchanged
    let sub = instance(&alg, vec![full(2); 2], &[(0, 1, neq(2, full(2), full(2)))]);
    let mut trace = Trace::off();
    let out = enforce_1_consistency(&sub, &mut trace).consistent().unwrap();
    assert_eq!(out, sub);

    // a single admissible pair shrinks both domains
    let pinned = instance(&alg, vec![full(2); 2], &[(0, 1, Rel::from_pairs(2, [(0, 0)]))]);
    let out = enforce_1_consistency(&pinned, &mut trace).consistent().unwrap();
    assert_eq!(out.domain(0), bit(0));
    assert_eq!(out.domain(1), bit(0));

    // an empty constraint is a contradiction
    let empty = instance(&alg, vec![full(2); 2], &[(0, 1, Rel::empty(2))]);
    assert!(enforce_1_consistency(&empty, &mut trace).is_unsat());
}

#[test]
fn pattern_images_compose_stepwise() {
    let alg = maj();
    let ident = Rel::from_pairs(2, [(0, 0), (1, 1)]);
    let swap = Rel::from_pairs(2, [(0, 1), (1, 0)]);
    let b = instance(&alg, vec![full(2); 3], &[(0, 1, ident), (1, 2, swap)]);

    let step = PathPattern::new(&b, vec![(0, 1)]).unwrap();
    assert_eq!(pattern_image(&b, bit(0), &step).unwrap(), bit(0));

    let two = PathPattern::new(&b, vec![(0, 1), (1, 2)]).unwrap();
    assert_eq!(pattern_image(&b, bit(0), &two).unwrap(), bit(1));
    assert_eq!(pattern_image(&b, 0, &two).unwrap(), 0);

    // the inverse pattern traverses the converse constraints
    let back = two.inverse();
    assert_eq!(back.steps(), &[(2, 1), (1, 0)]);
    assert_eq!(pattern_image(&b, bit(1), &back).unwrap(), bit(0));

    assert!(PathPattern::new(&b, vec![(0, 2)]).is_err());
    assert!(PathPattern::new(&b, vec![(0, 1), (0, 1)]).is_err());
}

#[test]
fn lac_on_a_single_variable_is_consistent() {
    let alg = maj();
    let b = instance(&alg, vec![full(2)], &[]);
    let store = UnaryFactStore::new(&b, vec![bit(0)]).unwrap();
    assert_eq!(run_lac(&b, &store), LacOutcome::Consistent);
}

#[test]
fn lac_walks_a_chain() {
    let alg = maj();
    let ident = Rel::from_pairs(2, [(0, 0), (1, 1)]);
    let swap = Rel::from_pairs(2, [(0, 1), (1, 0)]);
    let b = instance(&alg, vec![full(2); 3], &[(0, 1, ident), (1, 2, swap)]);
    let store = UnaryFactStore::new(&b, vec![bit(0), full(2), full(2)]).unwrap();
    assert_eq!(run_lac(&b, &store), LacOutcome::Consistent);
}

#[test]
fn lac_detects_an_empty_image() {
    let alg = maj();
    let rel = Rel::from_pairs(2, [(1, 0)]);
    let b = instance(&alg, vec![full(2); 2], &[(0, 1, rel)]);
    let store = UnaryFactStore::new(&b, vec![bit(0), full(2)]).unwrap();
    assert_eq!(run_lac(&b, &store), LacOutcome::Contradiction);
}

#[test]
fn slac_keeps_full_domains_without_constraints() {
    let alg = maj();
    let b = instance(&alg, vec![full(2); 3], &[]);
    let mut trace = Trace::off();
    let store = run_slac(&b, &mut trace).consistent().unwrap();
    assert_eq!(store.masks(), b.domains());
}

#[test]
fn slac_refutes_the_odd_disequality_triangle() {
    let b = triangle_neq(&maj(), full(2));
    let mut trace = Trace::off();
    assert!(run_slac(&b, &mut trace).is_unsat());
}

#[test]
fn slac_keeps_both_values_on_an_even_cycle() {
    let alg = maj();
    let rel = neq(2, full(2), full(2));
    let b = instance(
        &alg,
        vec![full(2); 4],
        &[
            (0, 1, rel.clone()),
            (1, 2, rel.clone()),
            (2, 3, rel.clone()),
            (0, 3, rel),
        ],
    );
    let mut trace = Trace::off();
    let store = run_slac(&b, &mut trace).consistent().unwrap();
    for x in 0..4 {
        assert_eq!(store.get(x), full(2));
    }
}

#[test]
fn slac_survivors_stay_closed_under_operations() {
    let algebras = [maj(), Arc::new(z2_affine())];
    for alg in &algebras {
        for seed in 0..20 {
            let b = random_binary_instance(alg, 4, seed);
            let mut trace = Trace::off();
            if let Propagation::Consistent(store) = run_slac(&b, &mut trace) {
                for x in 0..b.num_vars() {
                    let mask = store.get(x);
                    assert!(
                        mask == 0 || alg.is_subuniverse(mask),
                        "store at {x} not closed (seed {seed})"
                    );
                }
            }
        }
    }
}

fn parity_instance(vars: usize, scopes: &[[usize; 3]], constants: &[usize]) -> (crate::csp::RelationalTemplate, CspInstance) {
    let t = linear_template(2);
    let constraints = scopes
        .iter()
        .zip(constants)
        .map(|(scope, c)| Constraint {
            relation: t.relation_index(&format!("lin_111_{c}")).unwrap(),
            scope: scope.to_vec(),
        })
        .collect();
    let names = (0..vars).map(|v| format!("v{v}")).collect();
    let i = CspInstance::new(&t, names, constraints).unwrap();
    (t, i)
}

#[test]
fn binary_instances_stay_binary_under_binarization() {
    let t = twosat_template();
    let or_rel = t.relation_index("or").unwrap();
    let i = CspInstance::new(
        &t,
        vec!["a".into(), "b".into()],
        vec![Constraint { relation: or_rel, scope: vec![0, 1] }],
    )
    .unwrap();
    let alg = maj();
    let b = binarize(&t, &i, &alg, 3).unwrap();
    assert_eq!(b.num_vars(), 2);
    assert_eq!(b.universe_size(), 2);
    let rel = b.constraint(0, 1).unwrap();
    assert_eq!(rel.pair_set(), [(0, 1), (1, 0), (1, 1)].into());
    // the converse is stored for the opposite order
    assert_eq!(b.constraint(1, 0).unwrap().pair_set(), [(0, 1), (1, 0), (1, 1)].into());
}

#[test]
fn ternary_parity_groups_into_pairs() {
    let (t, i) = parity_instance(3, &[[0, 1, 2]], &[0]);
    let alg = Arc::new(z2_affine());
    let b = binarize(&t, &i, &alg, 2).unwrap();
    assert_eq!(b.num_vars(), 3, "one variable per two-element variable set");
    assert_eq!(b.universe_size(), 4);
    assert_eq!(b.enumerate_solutions(1 << 16).unwrap().len(), 4, "solution count preserved");
}

#[test]
fn contradictory_parity_scopes_binarize_to_unsat() {
    let (t, i) = parity_instance(3, &[[0, 1, 2], [0, 1, 2]], &[0, 1]);
    let alg = Arc::new(z2_affine());
    let b = binarize(&t, &i, &alg, 2).unwrap();
    assert!(!b.is_satisfiable_brute_force());
}

#[test]
fn binarization_preserves_satisfiability_on_seeded_instances() {
    use crate::solver::{generate_benchmark, BenchmarkKind};
    let alg = Arc::new(z2_affine());
    for seed in 0..25 {
        let bench =
            generate_benchmark(BenchmarkKind::LinearModP { p: 2, vars: 5, eqs: 6 }, seed).unwrap();
        let b = binarize(&bench.template, &bench.instance, &alg, 2).unwrap();
        assert_eq!(
            b.is_satisfiable_brute_force(),
            bench.label.unwrap(),
            "binarization changed satisfiability (seed {seed})"
        );
    }
}

#[test]
fn unary_constraints_restrict_domains_in_binary_form() {
    let t = twosat_template();
    let sing1 = t.singleton_index(1).unwrap();
    let imp = t.relation_index("imp").unwrap();
    let i = CspInstance::new(
        &t,
        vec!["a".into(), "b".into()],
        vec![
            Constraint { relation: sing1, scope: vec![0] },
            Constraint { relation: imp, scope: vec![0, 1] },
        ],
    )
    .unwrap();
    let b = binarize(&t, &i, &maj(), 3).unwrap();
    assert_eq!(b.domain(0), bit(1));
    assert_eq!(to_set(b.domain(1)), [0, 1].into());
    // the only surviving pair forces b to 1
    assert_eq!(b.constraint(0, 1).unwrap().pair_set(), [(1, 1)].into());
}

#[test]
fn grouped_constraints_enforce_overlap_agreement() {
    let (t, i) = parity_instance(4, &[[0, 1, 2], [1, 2, 3]], &[0, 1]);
    let alg = Arc::new(z2_affine());
    let b = binarize(&t, &i, &alg, 2).unwrap();
    assert_eq!(b.num_vars(), 6);
    // groups {0,1} and {1,2} must agree on variable 1
    let g01 = 0usize; // lexicographically first subset
    let g12 = 3usize; // subsets in order: 01,02,03,12,13,23
    let rel = b.constraint(g01, g12).unwrap();
    for (e1, e2) in rel.pairs() {
        let t1 = crate::algebra::decode_power_tuple(e1, 2, 2);
        let t2 = crate::algebra::decode_power_tuple(e2, 2, 2);
        assert_eq!(t1[1], t2[0], "value of the shared variable must agree");
    }
    // satisfiability carries over
    let sols = b.enumerate_solutions(1 << 16).unwrap();
    let original = crate::csp::solution_set(&t, &i, 1 << 16).unwrap();
    assert_eq!(sols.len(), original.len());
}

#[test]
fn r_plus_matches_direct_images() {
    let alg = maj();
    let ident = Rel::from_pairs(2, [(0, 0), (1, 1)]);
    let b = instance(&alg, vec![full(2); 2], &[(0, 1, ident)]);
    assert_eq!(b.r_plus(0, 1, bit(0)).unwrap(), bit(0));
    assert_eq!(to_vec(b.r_plus(0, 1, full(2)).unwrap()), vec![0, 1]);
    assert!(b.r_plus(1, 0, full(2)).is_ok());
    assert!(b.r_plus(0, 1, mask_of([5])).is_err());
}
