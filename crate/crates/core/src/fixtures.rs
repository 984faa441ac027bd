//! Reference algebras and templates used across the test suites and as
//! ready-made examples for the CLI.

use crate::algebra::{generate_subuniverse, FiniteAlgebra, OperationTable};
use crate::consistency::{BinaryInstance, Rel};
use crate::csp::{Relation, RelationalTemplate};
use crate::sets;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Two-element affine algebra: single Maltsev operation x - y + z mod 2.
pub fn z2_affine() -> FiniteAlgebra {
    let m = OperationTable::from_fn("m", 3, 2, |a| (a[0] + a[1] + a[2]) % 2).unwrap();
    FiniteAlgebra::new("z2-affine", 2, vec![m]).unwrap()
}

/// Three-element affine algebra: x - y + z mod 3.
pub fn z3_affine() -> FiniteAlgebra {
    let m = OperationTable::from_fn("m", 3, 3, |a| (a[0] + 3 - a[1] + a[2]) % 3).unwrap();
    FiniteAlgebra::new("z3-affine", 3, vec![m]).unwrap()
}

/// Square of the two-element affine algebra, materialized on {0,1,2,3}.
pub fn z2_affine_squared() -> FiniteAlgebra {
    z2_affine().power(2).unwrap()
}

/// Two-element meet semilattice ({0,1}, ∧).
pub fn semilattice() -> FiniteAlgebra {
    let meet = OperationTable::from_fn("meet", 2, 2, |a| a[0] & a[1]).unwrap();
    FiniteAlgebra::new("semilattice", 2, vec![meet]).unwrap()
}

/// Two-element majority algebra ({0,1}, maj).
pub fn majority_algebra() -> FiniteAlgebra {
    let maj = OperationTable::from_fn("maj", 3, 2, |a| {
        if a[0] + a[1] + a[2] >= 2 {
            1
        } else {
            0
        }
    })
    .unwrap();
    FiniteAlgebra::new("majority", 2, vec![maj]).unwrap()
}

fn rel(name: &str, arity: usize, tuples: impl IntoIterator<Item = Vec<usize>>) -> Relation {
    Relation::new(name, arity, tuples.into_iter().collect::<BTreeSet<_>>()).unwrap()
}

/// Linear template over GF(p): one ternary relation per coefficient vector
/// (all coefficients nonzero) and constant.
pub fn linear_template(p: usize) -> RelationalTemplate {
    let mut relations = Vec::new();
    for alpha in 1..p {
        for beta in 1..p {
            for gamma in 1..p {
                for delta in 0..p {
                    let name = format!("lin_{alpha}{beta}{gamma}_{delta}");
                    let tuples = (0..p)
                        .flat_map(|x| (0..p).flat_map(move |y| (0..p).map(move |z| vec![x, y, z])))
                        .filter(|t| (alpha * t[0] + beta * t[1] + gamma * t[2]) % p == delta);
                    relations.push(rel(&name, 3, tuples));
                }
            }
        }
    }
    RelationalTemplate::new(p, relations, true).unwrap()
}

/// The standard 2-SAT template: clauses x∨y, ¬x∨y, ¬x∨¬y over {0,1}.
pub fn twosat_template() -> RelationalTemplate {
    let relations = vec![
        rel("or", 2, [vec![0, 1], vec![1, 0], vec![1, 1]]),
        rel("imp", 2, [vec![0, 0], vec![0, 1], vec![1, 1]]),
        rel("nand", 2, [vec![0, 0], vec![0, 1], vec![1, 0]]),
    ];
    RelationalTemplate::new(2, relations, true).unwrap()
}

/// Positive 1-in-3-SAT: exactly one of three variables is true.
pub fn one_in_three_template() -> RelationalTemplate {
    let relations = vec![rel(
        "one_in_three",
        3,
        [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]],
    )];
    RelationalTemplate::new(2, relations, true).unwrap()
}

/// A seeded random binary instance over the given algebra: domains are
/// closures of random nonempty subsets, constraints are closures of random
/// pair sets on roughly seven of ten variable pairs. Domains and
/// constraints are closed under the operations by construction.
pub fn random_binary_instance(
    algebra: &Arc<FiniteAlgebra>,
    vars: usize,
    seed: u64,
) -> BinaryInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = algebra.size();
    let mut domains = Vec::with_capacity(vars);
    for _ in 0..vars {
        let mut subset = 0u64;
        for e in 0..n {
            if rng.random_range(0..3) > 0 {
                subset |= sets::bit(e);
            }
        }
        if subset == 0 {
            subset = sets::bit(rng.random_range(0..n));
        }
        domains.push(algebra.close_mask(subset));
    }
    let names = (0..vars).map(|v| format!("v{v}")).collect();
    let mut instance =
        BinaryInstance::new(algebra.clone(), names, domains.clone(), BTreeMap::new())
            .expect("fixture instance");
    for x in 0..vars {
        for y in (x + 1)..vars {
            if rng.random_range(0..10) >= 7 {
                continue;
            }
            let dx: Vec<usize> = sets::to_vec(domains[x]);
            let dy: Vec<usize> = sets::to_vec(domains[y]);
            let k = rng.random_range(1..=dx.len().max(dy.len()));
            let gens: BTreeSet<Vec<usize>> = (0..k)
                .map(|_| {
                    vec![
                        dx[rng.random_range(0..dx.len())],
                        dy[rng.random_range(0..dy.len())],
                    ]
                })
                .collect();
            let closed = generate_subuniverse(algebra, 2, &gens).expect("closure");
            let rel = Rel::from_pairs(n, closed.iter().map(|t| (t[0], t[1])));
            instance.add_constraint(x, y, rel).expect("valid scope");
        }
    }
    instance
}

/// Horn clauses in 3-CNF: at most one positive literal per clause.
pub fn horn3_template() -> RelationalTemplate {
    let all3 = || {
        (0..2usize)
            .flat_map(|x| (0..2usize).flat_map(move |y| (0..2usize).map(move |z| vec![x, y, z])))
    };
    let relations = vec![
        // ¬x ∨ ¬y ∨ ¬z
        rel("horn_neg", 3, all3().filter(|t| t != &vec![1, 1, 1])),
        // (x ∧ y) → z
        rel("horn_imp", 3, all3().filter(|t| t != &vec![1, 1, 0])),
    ];
    RelationalTemplate::new(2, relations, true).unwrap()
}
