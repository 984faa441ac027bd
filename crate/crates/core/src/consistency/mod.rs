//! Binary instances and the propagation engines over them: binarization,
//! (2,3)-consistency, 1-consistency, path patterns, linear arc consistency
//! (LAC) and singleton linear arc consistency (SLAC).

mod binarize;
mod lac;
mod propagate;

pub use binarize::binarize;
pub use lac::{apply_store, pattern_image, run_lac, run_slac, LacOutcome, PathPattern, UnaryFactStore};
pub use propagate::{enforce_1_consistency, enforce_23_consistency, is_23_consistent};

use crate::algebra::FiniteAlgebra;
use crate::error::{Error, Result};
use crate::sets;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Result of a propagation step: a reduced value, or a proof that the
/// instance has no solution. Unsatisfiability is a result, not an error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Propagation<T> {
    Consistent(T),
    Unsat,
}

impl<T> Propagation<T> {
    pub fn is_unsat(&self) -> bool {
        matches!(self, Propagation::Unsat)
    }

    pub fn consistent(self) -> Option<T> {
        match self {
            Propagation::Consistent(v) => Some(v),
            Propagation::Unsat => None,
        }
    }
}

/// A line-per-event log of pruning decisions, used for debugging and for
/// the determinism of report replays.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    enabled: bool,
    lines: Vec<String>,
}

impl Trace {
    pub fn enabled() -> Self {
        Trace { enabled: true, lines: Vec::new() }
    }

    pub fn off() -> Self {
        Trace::default()
    }

    pub fn log(&mut self, line: impl FnOnce() -> String) {
        if self.enabled {
            self.lines.push(line());
        }
    }

    pub fn lines(&self) -> &[String] {
        &self.lines
    }

    pub fn take_lines(&mut self) -> Vec<String> {
        std::mem::take(&mut self.lines)
    }
}

/// A binary relation stored as per-element neighbour masks: `rows[a]` holds
/// the admissible partners of `a` on the other side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rel {
    rows: Vec<u64>,
}

impl Rel {
    pub fn empty(universe: usize) -> Self {
        Rel { rows: vec![0; universe] }
    }

    pub fn full(universe: usize, from: u64, to: u64) -> Self {
        let mut rows = vec![0; universe];
        for a in sets::iter(from) {
            rows[a] = to;
        }
        Rel { rows }
    }

    pub fn from_pairs(universe: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows = vec![0; universe];
        for (a, b) in pairs {
            rows[a] |= sets::bit(b);
        }
        Rel { rows }
    }

    #[inline]
    pub fn row(&self, a: usize) -> u64 {
        self.rows[a]
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        sets::contains(self.rows[a], b)
    }

    pub fn remove(&mut self, a: usize, b: usize) {
        self.rows[a] &= !sets::bit(b);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|&r| r == 0)
    }

    pub fn converse(&self, universe: usize) -> Rel {
        let mut rows = vec![0; universe];
        for (a, &mask) in self.rows.iter().enumerate() {
            for b in sets::iter(mask) {
                rows[b] |= sets::bit(a);
            }
        }
        Rel { rows }
    }

    /// Image of an element set through the relation.
    pub fn image(&self, from: u64) -> u64 {
        sets::iter(from).fold(0, |acc, a| acc | self.rows[a])
    }

    /// Left-coordinate projection: elements with at least one partner.
    pub fn support(&self) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, &m)| m != 0)
            .fold(0, |acc, (a, _)| acc | sets::bit(a))
    }

    /// Restricts both sides to the given element sets.
    pub fn restrict(&mut self, from: u64, to: u64) {
        for (a, row) in self.rows.iter_mut().enumerate() {
            if !sets::contains(from, a) {
                *row = 0;
            } else {
                *row &= to;
            }
        }
    }

    pub fn intersect(&mut self, other: &Rel) {
        for (row, o) in self.rows.iter_mut().zip(&other.rows) {
            *row &= o;
        }
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, &mask) in self.rows.iter().enumerate() {
            for b in sets::iter(mask) {
                out.push((a, b));
            }
        }
        out
    }

    pub fn pair_set(&self) -> BTreeSet<(usize, usize)> {
        self.pairs().into_iter().collect()
    }

    pub fn count(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// One-step closure check: applying any basic operation coordinatewise
    /// to admissible pairs stays admissible. Equivalent to the pair set
    /// being a subuniverse of the square.
    pub fn is_closed(&self, alg: &FiniteAlgebra) -> bool {
        let pairs = self.pairs();
        if pairs.is_empty() {
            return true;
        }
        alg.ops().iter().all(|op| self.closed_under(op, &pairs))
    }

    fn closed_under(&self, op: &crate::algebra::OperationTable, pairs: &[(usize, usize)]) -> bool {
        let arity = op.arity();
        let mut choice = vec![0usize; arity];
        let mut lefts = vec![0usize; arity];
        let mut rights = vec![0usize; arity];
        loop {
            for (slot, &c) in choice.iter().enumerate() {
                lefts[slot] = pairs[c].0;
                rights[slot] = pairs[c].1;
            }
            if !self.contains(op.eval(&lefts), op.eval(&rights)) {
                return false;
            }
            let mut pos = arity;
            loop {
                if pos == 0 {
                    return true;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < pairs.len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }
}

/// A syntactically simple binary instance over a parametrizing algebra:
/// per-variable domains and at most one constraint per ordered variable
/// pair, with the converse stored under the opposite order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryInstance {
    algebra: Arc<FiniteAlgebra>,
    var_names: Vec<String>,
    domains: Vec<u64>,
    constraints: BTreeMap<(usize, usize), Rel>,
}

impl BinaryInstance {
    pub fn new(
        algebra: Arc<FiniteAlgebra>,
        var_names: Vec<String>,
        domains: Vec<u64>,
        forward_constraints: BTreeMap<(usize, usize), Rel>,
    ) -> Result<Self> {
        if algebra.size() > sets::MAX_UNIVERSE {
            return Err(Error::ResourceLimit(format!(
                "binary instances support at most {} elements, algebra has {}",
                sets::MAX_UNIVERSE,
                algebra.size()
            )));
        }
        if var_names.len() != domains.len() {
            return Err(Error::InvalidInstance("one domain per variable required".into()));
        }
        let universe = sets::full(algebra.size());
        if domains.iter().any(|&d| !sets::is_subset(d, universe)) {
            return Err(Error::InvalidInstance("domain outside the algebra universe".into()));
        }
        let mut instance = BinaryInstance {
            algebra,
            var_names,
            domains,
            constraints: BTreeMap::new(),
        };
        for ((x, y), rel) in forward_constraints {
            if instance.constraints.contains_key(&(x, y)) {
                return Err(Error::InvalidInstance(format!(
                    "more than one constraint with scope ({x},{y})"
                )));
            }
            instance.add_constraint(x, y, rel)?;
        }
        Ok(instance)
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.algebra
    }

    pub fn universe_size(&self) -> usize {
        self.algebra.size()
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn domain(&self, x: usize) -> u64 {
        self.domains[x]
    }

    pub fn domains(&self) -> &[u64] {
        &self.domains
    }

    pub fn domain_set(&self, x: usize) -> BTreeSet<usize> {
        sets::to_set(self.domains[x])
    }

    pub fn constraint(&self, x: usize, y: usize) -> Option<&Rel> {
        self.constraints.get(&(x, y))
    }

    pub fn constraint_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.constraints.keys().copied()
    }

    /// Installs a constraint together with its converse, intersecting with
    /// any existing constraint on the same scope.
    pub fn add_constraint(&mut self, x: usize, y: usize, rel: Rel) -> Result<()> {
        if x == y || x >= self.num_vars() || y >= self.num_vars() {
            return Err(Error::InvalidInstance(format!(
                "constraint scope ({x},{y}) must be two distinct declared variables"
            )));
        }
        let mut fwd = rel;
        fwd.restrict(self.domains[x], self.domains[y]);
        if let Some(existing) = self.constraints.get(&(x, y)) {
            fwd.intersect(existing);
        }
        self.constraints.insert((y, x), fwd.converse(self.universe_size()));
        self.constraints.insert((x, y), fwd);
        Ok(())
    }

    pub(crate) fn set_domain(&mut self, x: usize, mask: u64) {
        self.domains[x] = mask;
    }

    /// Re-restricts every constraint to the current domains.
    pub(crate) fn clamp_constraints(&mut self) {
        let domains = self.domains.clone();
        for ((x, y), rel) in self.constraints.iter_mut() {
            rel.restrict(domains[*x], domains[*y]);
        }
    }

    /// Removes the given elements from a domain and restricts constraints.
    pub fn remove_values(&mut self, x: usize, removed: u64) {
        self.domains[x] &= !removed;
        self.clamp_constraints();
    }

    /// Intersects all domains with the given masks and restricts
    /// constraints accordingly.
    pub fn restrict_domains(&mut self, masks: &[u64]) {
        for (d, &m) in self.domains.iter_mut().zip(masks) {
            *d &= m;
        }
        self.clamp_constraints();
    }

    pub fn has_empty_domain(&self) -> bool {
        self.domains.iter().any(|&d| d == 0)
    }

    /// Multiset of domain sizes, ascending.
    pub fn domain_size_profile(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.domains.iter().map(|d| d.count_ones() as usize).collect();
        sizes.sort_unstable();
        sizes
    }

    /// True when every constraint is subdirect on the current domains.
    pub fn is_one_consistent(&self) -> bool {
        self.constraints.iter().all(|(&(x, _), rel)| rel.support() == self.domains[x])
    }

    /// Structural validation: converse symmetry and domain containment.
    pub fn validate(&self) -> Result<()> {
        for (&(x, y), rel) in &self.constraints {
            let back = self
                .constraints
                .get(&(y, x))
                .ok_or_else(|| Error::InternalInvariant(format!("missing converse of ({x},{y})")))?;
            if back.converse(self.universe_size()) != *rel {
                return Err(Error::InternalInvariant(format!(
                    "constraint ({x},{y}) is not the converse of ({y},{x})"
                )));
            }
            for (a, &mask) in rel.rows.iter().enumerate() {
                if mask != 0 && !sets::contains(self.domains[x], a) {
                    return Err(Error::InternalInvariant(format!(
                        "constraint ({x},{y}) mentions {a} outside the domain"
                    )));
                }
                if !sets::is_subset(mask, self.domains[y]) {
                    return Err(Error::InternalInvariant(format!(
                        "constraint ({x},{y}) maps {a} outside the domain of {y}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// True when every domain and every constraint is closed under the
    /// coordinatewise basic operations of the parametrizing algebra.
    pub fn is_closed_under_operations(&self) -> bool {
        let alg = self.algebra.as_ref();
        if self.domains.iter().any(|&d| d != 0 && alg.close_mask(d) != d) {
            return false;
        }
        self.constraints.iter().all(|(_, rel)| rel.is_closed(alg))
    }

    /// Exact relational image of an element set through the constraint
    /// `(x, y)`. The image of a subuniverse is again a subuniverse.
    pub fn r_plus(&self, x: usize, y: usize, from: u64) -> Result<u64> {
        let rel = self
            .constraint(x, y)
            .ok_or_else(|| Error::Precondition(format!("no constraint with scope ({x},{y})")))?;
        if !sets::is_subset(from, self.domains[x]) {
            return Err(Error::Precondition("image source outside the domain".into()));
        }
        let image = rel.image(from);
        debug_assert!(
            image == 0 || !self.algebra.is_subuniverse(from) || self.algebra.is_subuniverse(image),
            "nonempty image of a subuniverse must be a subuniverse"
        );
        Ok(image)
    }

    /// Complete brute-force enumeration of all solutions, independent of
    /// every propagation path; the baseline for soundness checks.
    pub fn enumerate_solutions(&self, cap: usize) -> Result<BTreeSet<Vec<usize>>> {
        let n = self.num_vars();
        let mut out = BTreeSet::new();
        let mut partial = Vec::with_capacity(n);
        self.enumerate_rec(0, &mut partial, &mut out, cap)?;
        Ok(out)
    }

    fn enumerate_rec(
        &self,
        var: usize,
        partial: &mut Vec<usize>,
        out: &mut BTreeSet<Vec<usize>>,
        cap: usize,
    ) -> Result<()> {
        if var == self.num_vars() {
            out.insert(partial.clone());
            if out.len() > cap {
                return Err(Error::ResourceLimit(format!("more than {cap} solutions")));
            }
            return Ok(());
        }
        for value in sets::iter(self.domains[var]) {
            let ok = partial.iter().enumerate().all(|(prev, &pv)| {
                match self.constraint(prev, var) {
                    Some(rel) => rel.contains(pv, value),
                    None => true,
                }
            });
            if ok {
                partial.push(value);
                self.enumerate_rec(var + 1, partial, out, cap)?;
                partial.pop();
            }
        }
        Ok(())
    }

    /// Brute-force satisfiability with early exit.
    pub fn is_satisfiable_brute_force(&self) -> bool {
        fn rec(b: &BinaryInstance, var: usize, partial: &mut Vec<usize>) -> bool {
            if var == b.num_vars() {
                return true;
            }
            for value in sets::iter(b.domains[var]) {
                let ok = partial.iter().enumerate().all(|(prev, &pv)| {
                    match b.constraint(prev, var) {
                        Some(rel) => rel.contains(pv, value),
                        None => true,
                    }
                });
                if ok {
                    partial.push(value);
                    if rec(b, var + 1, partial) {
                        return true;
                    }
                    partial.pop();
                }
            }
            false
        }
        rec(self, 0, &mut Vec::new())
    }
}

#[cfg(test)]
mod tests;
