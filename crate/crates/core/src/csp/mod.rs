//! Relational templates, CSP instances, the polymorphism test, and the
//! exhaustive oracle solver used as ground truth everywhere else.

mod polymorphism;

pub use polymorphism::{find_special_polymorphism, satisfies_identities, PatternVar, PolymorphismKind};

use crate::algebra::OperationTable;
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// A named relation over `{0, .., domain-1}` with a fixed arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    name: String,
    arity: usize,
    tuples: BTreeSet<Vec<usize>>,
}

impl Relation {
    pub fn new(name: impl Into<String>, arity: usize, tuples: BTreeSet<Vec<usize>>) -> Result<Self> {
        let name = name.into();
        if arity == 0 {
            return Err(Error::InvalidTemplate(format!("relation {name} has arity 0")));
        }
        if let Some(bad) = tuples.iter().find(|t| t.len() != arity) {
            return Err(Error::InvalidTemplate(format!(
                "relation {name}: tuple {bad:?} does not match arity {arity}"
            )));
        }
        Ok(Relation { name, arity, tuples })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &BTreeSet<Vec<usize>> {
        &self.tuples
    }
}

/// A constraint language: a finite set of named relations over a common
/// domain. Unless disabled, construction adds every singleton unary
/// relation, which forces all polymorphisms to be idempotent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationalTemplate {
    domain_size: usize,
    relations: Vec<Relation>,
    declared_polymorphisms: Vec<OperationTable>,
}

impl RelationalTemplate {
    pub fn new(domain_size: usize, relations: Vec<Relation>, add_singletons: bool) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::InvalidTemplate("empty domain".into()));
        }
        let mut names = BTreeSet::new();
        for r in &relations {
            if !names.insert(r.name.clone()) {
                return Err(Error::InvalidTemplate(format!("duplicate relation name {}", r.name)));
            }
            if let Some(bad) = r.tuples.iter().flatten().find(|&&e| e >= domain_size) {
                return Err(Error::InvalidTemplate(format!(
                    "relation {}: element {bad} outside domain 0..{domain_size}",
                    r.name
                )));
            }
        }
        let mut template = RelationalTemplate { domain_size, relations, declared_polymorphisms: Vec::new() };
        if add_singletons {
            for a in 0..domain_size {
                let tuple_set: BTreeSet<Vec<usize>> = BTreeSet::from([vec![a]]);
                let already = template
                    .relations
                    .iter()
                    .any(|r| r.arity == 1 && r.tuples == tuple_set);
                if !already {
                    let name = format!("sing_{a}");
                    if template.relations.iter().any(|r| r.name == name) {
                        return Err(Error::InvalidTemplate(format!(
                            "relation name {name} collides with the singleton convention"
                        )));
                    }
                    template.relations.push(Relation { name, arity: 1, tuples: tuple_set });
                }
            }
        }
        Ok(template)
    }

    /// Attaches declared polymorphisms; each is re-verified.
    pub fn with_polymorphisms(mut self, polys: Vec<OperationTable>) -> Result<Self> {
        for f in &polys {
            if !is_polymorphism(&self, f)? {
                return Err(Error::InvalidTemplate(format!(
                    "declared polymorphism {} does not preserve the relations",
                    f.name()
                )));
            }
        }
        self.declared_polymorphisms = polys;
        Ok(self)
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn declared_polymorphisms(&self) -> &[OperationTable] {
        &self.declared_polymorphisms
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    /// Index of the singleton relation `{a}`, if present.
    pub fn singleton_index(&self, a: usize) -> Option<usize> {
        let tuple_set = BTreeSet::from([vec![a]]);
        self.relations.iter().position(|r| r.arity == 1 && r.tuples == tuple_set)
    }
}

/// One constraint: a relation applied to a tuple of variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub relation: usize,
    pub scope: Vec<usize>,
}

/// A CSP instance over a template: variables plus constraints whose scopes
/// reference declared variables and whose arities match their relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CspInstance {
    variables: Vec<String>,
    constraints: Vec<Constraint>,
}

impl CspInstance {
    pub fn new(
        template: &RelationalTemplate,
        variables: Vec<String>,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidInstance("instance has no variables".into()));
        }
        let mut seen = BTreeSet::new();
        for v in &variables {
            if !seen.insert(v.clone()) {
                return Err(Error::InvalidInstance(format!("duplicate variable {v}")));
            }
        }
        for c in &constraints {
            let rel = template
                .relations()
                .get(c.relation)
                .ok_or_else(|| Error::InvalidInstance(format!("relation index {} unknown", c.relation)))?;
            if c.scope.len() != rel.arity() {
                return Err(Error::InvalidInstance(format!(
                    "constraint on {} has scope of length {}, arity is {}",
                    rel.name(),
                    c.scope.len(),
                    rel.arity()
                )));
            }
            if let Some(&bad) = c.scope.iter().find(|&&v| v >= variables.len()) {
                return Err(Error::InvalidInstance(format!("scope variable index {bad} undeclared")));
            }
        }
        Ok(CspInstance { variables, constraints })
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// The instance extended by a unary constraint pinning `var` to `value`
    /// through the template's singleton relation.
    pub fn with_value_fixed(
        &self,
        template: &RelationalTemplate,
        var: usize,
        value: usize,
    ) -> Result<CspInstance> {
        let rel = template.singleton_index(value).ok_or_else(|| {
            Error::Precondition(format!(
                "template has no singleton relation for value {value}; construct it with singletons"
            ))
        })?;
        let mut out = self.clone();
        out.constraints.push(Constraint { relation: rel, scope: vec![var] });
        Ok(out)
    }
}

/// A (possibly partial) assignment of domain elements to variables.
pub type Assignment = BTreeMap<usize, usize>;

/// Does `f` preserve every relation of the template? Checks all choices of
/// `arity(f)` tuples from each relation.
pub fn is_polymorphism(t: &RelationalTemplate, f: &OperationTable) -> Result<bool> {
    if f.universe_size() != t.domain_size() {
        return Err(Error::Precondition(format!(
            "operation over universe {}, template domain is {}",
            f.universe_size(),
            t.domain_size()
        )));
    }
    let n = f.arity();
    for rel in t.relations() {
        let tuples: Vec<&Vec<usize>> = rel.tuples().iter().collect();
        if tuples.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; n];
        'outer: loop {
            let selected: Vec<Vec<usize>> = choice.iter().map(|&i| tuples[i].clone()).collect();
            let image = f.apply_coordinatewise(&selected)?;
            if !rel.tuples().contains(&image) {
                return Ok(false);
            }
            let mut pos = n;
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < tuples.len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }
    Ok(true)
}

/// True iff the total assignment satisfies every constraint. Partial
/// assignments are rejected.
pub fn verify_solution(
    t: &RelationalTemplate,
    i: &CspInstance,
    a: &Assignment,
) -> Result<bool> {
    for v in 0..i.num_vars() {
        match a.get(&v) {
            None => {
                return Err(Error::Precondition(format!(
                    "assignment is partial: variable {} unassigned",
                    i.variables()[v]
                )))
            }
            Some(&val) if val >= t.domain_size() => {
                return Err(Error::Precondition(format!("value {val} outside domain")))
            }
            _ => {}
        }
    }
    Ok(i.constraints().iter().all(|c| {
        let tuple: Vec<usize> = c.scope.iter().map(|v| a[v]).collect();
        t.relations()[c.relation].tuples().contains(&tuple)
    }))
}

/// Caps for the oracle search.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Plain lexicographic enumeration is used up to this many variables.
    pub exhaustive_cap: usize,
    /// Node budget for the backtracking search beyond it.
    pub node_budget: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { exhaustive_cap: 12, node_budget: 50_000_000 }
    }
}

/// Complete baseline solver: lexicographic exhaustive search on small
/// instances, backtracking with forward checking beyond. Returns the
/// lexicographically least solution, or `None` when provably unsatisfiable.
pub fn oracle_solve(
    t: &RelationalTemplate,
    i: &CspInstance,
    cfg: &OracleConfig,
) -> Result<Option<Vec<usize>>> {
    if i.num_vars() <= cfg.exhaustive_cap {
        return exhaustive_first(t, i);
    }
    let mut found = None;
    search(t, i, cfg, &mut |sol| {
        found = Some(sol.to_vec());
        false
    })?;
    Ok(found)
}

/// All solutions, by complete search. Errors out when more than `cap`
/// solutions exist.
pub fn solution_set(
    t: &RelationalTemplate,
    i: &CspInstance,
    cap: usize,
) -> Result<BTreeSet<Vec<usize>>> {
    let mut out = BTreeSet::new();
    let mut over = false;
    search(t, i, &OracleConfig { exhaustive_cap: 0, node_budget: u64::MAX }, &mut |sol| {
        out.insert(sol.to_vec());
        if out.len() > cap {
            over = true;
            false
        } else {
            true
        }
    })?;
    if over {
        return Err(Error::ResourceLimit(format!("more than {cap} solutions")));
    }
    Ok(out)
}

fn exhaustive_first(t: &RelationalTemplate, i: &CspInstance) -> Result<Option<Vec<usize>>> {
    let n = i.num_vars();
    let d = t.domain_size();
    let mut assignment = vec![0usize; n];
    loop {
        let total: Assignment = assignment.iter().copied().enumerate().collect();
        if verify_solution(t, i, &total)? {
            return Ok(Some(assignment));
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            assignment[pos] += 1;
            if assignment[pos] < d {
                break;
            }
            assignment[pos] = 0;
        }
    }
}

/// Backtracking with forward checking. Visits solutions in lexicographic
/// order; `on_solution` returns false to stop the search.
fn search(
    t: &RelationalTemplate,
    i: &CspInstance,
    cfg: &OracleConfig,
    on_solution: &mut dyn FnMut(&[usize]) -> bool,
) -> Result<()> {
    let n = i.num_vars();
    let d = t.domain_size();
    let domains: Vec<BTreeSet<usize>> = vec![(0..d).collect(); n];
    let mut assigned: Vec<Option<usize>> = vec![None; n];
    let mut nodes = 0u64;
    step(t, i, cfg, 0, domains, &mut assigned, &mut nodes, on_solution)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn step(
    t: &RelationalTemplate,
    i: &CspInstance,
    cfg: &OracleConfig,
    var: usize,
    domains: Vec<BTreeSet<usize>>,
    assigned: &mut Vec<Option<usize>>,
    nodes: &mut u64,
    on_solution: &mut dyn FnMut(&[usize]) -> bool,
) -> Result<bool> {
    if var == i.num_vars() {
        let sol: Vec<usize> = assigned.iter().map(|a| a.unwrap()).collect();
        return Ok(on_solution(&sol));
    }
    let values: Vec<usize> = domains[var].iter().copied().collect();
    for value in values {
        *nodes += 1;
        if *nodes > cfg.node_budget {
            return Err(Error::ResourceLimit(format!(
                "oracle node budget {} exhausted",
                cfg.node_budget
            )));
        }
        assigned[var] = Some(value);
        if let Some(pruned) = forward_check(t, i, &domains, assigned, var, value) {
            if !step(t, i, cfg, var + 1, pruned, assigned, nodes, on_solution)? {
                assigned[var] = None;
                return Ok(false);
            }
        }
        assigned[var] = None;
    }
    Ok(true)
}

/// Restricts future domains to values with support in every constraint
/// touching `var`, under the current partial assignment. Returns `None`
/// when some domain empties.
fn forward_check(
    t: &RelationalTemplate,
    i: &CspInstance,
    domains: &[BTreeSet<usize>],
    assigned: &[Option<usize>],
    var: usize,
    value: usize,
) -> Option<Vec<BTreeSet<usize>>> {
    let mut out = domains.to_vec();
    out[var] = BTreeSet::from([value]);
    for c in i.constraints() {
        if !c.scope.contains(&var) {
            continue;
        }
        let rel = &t.relations()[c.relation];
        let mut support: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for tuple in rel.tuples() {
            let feasible = c.scope.iter().zip(tuple).all(|(&v, &tv)| match assigned[v] {
                Some(av) => av == tv,
                None => out[v].contains(&tv),
            });
            if feasible {
                for (&v, &tv) in c.scope.iter().zip(tuple) {
                    if assigned[v].is_none() {
                        support.entry(v).or_default().insert(tv);
                    }
                }
            }
        }
        for (&v, vals) in &support {
            out[v] = out[v].intersection(vals).copied().collect();
            if out[v].is_empty() {
                return None;
            }
        }
        // a constraint with no feasible tuple at all kills the branch
        if c.scope.iter().all(|&v| assigned[v].is_some()) {
            let tuple: Vec<usize> = c.scope.iter().map(|&v| assigned[v].unwrap()).collect();
            if !rel.tuples().contains(&tuple) {
                return None;
            }
        } else if support.is_empty() {
            return None;
        }
    }
    Some(out)
}
