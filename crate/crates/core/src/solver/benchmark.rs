//! Seeded benchmark generation: linear equations over GF(p) with a
//! ground-truth label, 2-SAT and Horn-3-SAT instances, and random
//! templates for smoke tests. Identical parameters and seed reproduce the
//! exact same files.

use crate::csp::{Constraint, CspInstance, Relation, RelationalTemplate};
use crate::error::{Error, Result};
use crate::fixtures;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Random ternary equations over GF(p); the label is computed by
    /// exhaustive assignment enumeration, independently of the solver and
    /// of Gaussian elimination.
    LinearModP { p: usize, vars: usize, eqs: usize },
    TwoSat { vars: usize, clauses: usize },
    Horn3 { vars: usize, clauses: usize, facts: usize },
    RandomTemplate { domain: usize, relations: usize, arity: usize, tuples: usize, vars: usize, constraints: usize },
}

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub template: RelationalTemplate,
    pub instance: CspInstance,
    /// Ground-truth satisfiability when the generator can label cheaply.
    pub label: Option<bool>,
}

pub fn generate_benchmark(kind: BenchmarkKind, seed: u64) -> Result<Benchmark> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        BenchmarkKind::LinearModP { p, vars, eqs } => linear_mod_p(p, vars, eqs, &mut rng),
        BenchmarkKind::TwoSat { vars, clauses } => twosat(vars, clauses, &mut rng),
        BenchmarkKind::Horn3 { vars, clauses, facts } => horn3(vars, clauses, facts, &mut rng),
        BenchmarkKind::RandomTemplate { domain, relations, arity, tuples, vars, constraints } => {
            random_template(domain, relations, arity, tuples, vars, constraints, &mut rng)
        }
    }
}

fn var_names(n: usize) -> Vec<String> {
    (0..n).map(|v| format!("v{v}")).collect()
}

fn distinct_vars(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        let idx = rng.random_range(0..pool.len());
        out.push(pool.swap_remove(idx));
    }
    out
}

fn linear_mod_p(p: usize, vars: usize, eqs: usize, rng: &mut ChaCha8Rng) -> Result<Benchmark> {
    if !(2..=5).contains(&p) || p == 4 {
        return Err(Error::Precondition("linear benchmarks support p in {2, 3, 5}".into()));
    }
    if vars < 3 {
        return Err(Error::Precondition("linear benchmarks need at least 3 variables".into()));
    }
    if vars > 16 {
        return Err(Error::ResourceLimit("labeling enumerates p^vars assignments; vars > 16 refused".into()));
    }
    let template = fixtures::linear_template(p);
    let mut equations: Vec<(Vec<usize>, Vec<usize>, usize)> = Vec::with_capacity(eqs);
    let mut constraints = Vec::with_capacity(eqs);
    for _ in 0..eqs {
        let scope = distinct_vars(rng, vars, 3);
        let coeffs: Vec<usize> = (0..3).map(|_| rng.random_range(1..p)).collect();
        let constant = rng.random_range(0..p);
        let name = format!("lin_{}{}{}_{constant}", coeffs[0], coeffs[1], coeffs[2]);
        let relation = template
            .relation_index(&name)
            .ok_or_else(|| Error::InternalInvariant(format!("missing relation {name}")))?;
        constraints.push(Constraint { relation, scope: scope.clone() });
        equations.push((scope, coeffs, constant));
    }
    let instance = CspInstance::new(&template, var_names(vars), constraints)?;

    // ground truth by enumeration over all p^vars assignments
    let mut assignment = vec![0usize; vars];
    let mut satisfiable = false;
    'outer: loop {
        if equations.iter().all(|(scope, coeffs, constant)| {
            let sum: usize = scope
                .iter()
                .zip(coeffs)
                .map(|(&v, &c)| c * assignment[v])
                .sum();
            sum % p == *constant
        }) {
            satisfiable = true;
            break;
        }
        let mut pos = vars;
        loop {
            if pos == 0 {
                break 'outer;
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < p {
                break;
            }
            assignment[pos] = 0;
        }
    }
    Ok(Benchmark { template, instance, label: Some(satisfiable) })
}

fn twosat(vars: usize, clauses: usize, rng: &mut ChaCha8Rng) -> Result<Benchmark> {
    if vars < 2 {
        return Err(Error::Precondition("2-SAT benchmarks need at least 2 variables".into()));
    }
    let template = fixtures::twosat_template();
    let kinds = ["or", "imp", "nand"];
    let mut constraints = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        let scope = distinct_vars(rng, vars, 2);
        let name = kinds[rng.random_range(0..kinds.len())];
        let relation = template.relation_index(name).expect("fixture relation");
        constraints.push(Constraint { relation, scope });
    }
    let instance = CspInstance::new(&template, var_names(vars), constraints)?;
    Ok(Benchmark { template, instance, label: None })
}

fn horn3(vars: usize, clauses: usize, facts: usize, rng: &mut ChaCha8Rng) -> Result<Benchmark> {
    if vars < 3 {
        return Err(Error::Precondition("Horn benchmarks need at least 3 variables".into()));
    }
    let template = fixtures::horn3_template();
    let kinds = ["horn_neg", "horn_imp"];
    let mut constraints = Vec::with_capacity(clauses + facts);
    for _ in 0..clauses {
        let scope = distinct_vars(rng, vars, 3);
        let name = kinds[rng.random_range(0..kinds.len())];
        let relation = template.relation_index(name).expect("fixture relation");
        constraints.push(Constraint { relation, scope });
    }
    let positive = template.singleton_index(1).expect("normalized fixture");
    for _ in 0..facts {
        let v = rng.random_range(0..vars);
        constraints.push(Constraint { relation: positive, scope: vec![v] });
    }
    let instance = CspInstance::new(&template, var_names(vars), constraints)?;
    Ok(Benchmark { template, instance, label: None })
}

#[allow(clippy::too_many_arguments)]
fn random_template(
    domain: usize,
    relations: usize,
    arity: usize,
    tuples: usize,
    vars: usize,
    constraints: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Benchmark> {
    if domain == 0 || arity == 0 || relations == 0 {
        return Err(Error::Precondition("random templates need a domain, relations and an arity".into()));
    }
    let space = domain.checked_pow(arity as u32).filter(|&s| s <= 1 << 20).ok_or_else(|| {
        Error::ResourceLimit("random template tuple space too large".into())
    })?;
    let wanted = tuples.clamp(1, space);
    let mut rels = Vec::with_capacity(relations);
    for r in 0..relations {
        let mut set: BTreeSet<Vec<usize>> = BTreeSet::new();
        while set.len() < wanted {
            let tuple: Vec<usize> = (0..arity).map(|_| rng.random_range(0..domain)).collect();
            set.insert(tuple);
        }
        rels.push(Relation::new(format!("r{r}"), arity, set)?);
    }
    let template = RelationalTemplate::new(domain, rels, true)?;
    let mut cs = Vec::with_capacity(constraints);
    for _ in 0..constraints {
        let relation = rng.random_range(0..relations);
        let scope: Vec<usize> = (0..arity).map(|_| rng.random_range(0..vars)).collect();
        cs.push(Constraint { relation, scope });
    }
    let instance = CspInstance::new(&template, var_names(vars), cs)?;
    Ok(Benchmark { template, instance, label: None })
}
