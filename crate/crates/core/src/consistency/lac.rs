//! Path patterns, linear arc consistency (LAC) and singleton linear arc
//! consistency (SLAC).

use super::{BinaryInstance, Propagation, Trace};
use crate::error::{Error, Result};
use crate::sets;
use rayon::prelude::*;
use std::collections::{HashSet, VecDeque};

/// A chained sequence of constraint scopes: each step's end variable is the
/// next step's start variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathPattern {
    steps: Vec<(usize, usize)>,
}

impl PathPattern {
    /// Validates chaining and that every step is the scope of a constraint.
    pub fn new(b: &BinaryInstance, steps: Vec<(usize, usize)>) -> Result<Self> {
        for w in steps.windows(2) {
            if w[0].1 != w[1].0 {
                return Err(Error::Precondition(format!(
                    "steps {:?} and {:?} do not chain",
                    w[0], w[1]
                )));
            }
        }
        for &(x, y) in &steps {
            if b.constraint(x, y).is_none() {
                return Err(Error::Precondition(format!("no constraint with scope ({x},{y})")));
            }
        }
        Ok(PathPattern { steps })
    }

    pub fn steps(&self) -> &[(usize, usize)] {
        &self.steps
    }

    pub fn start(&self) -> Option<usize> {
        self.steps.first().map(|s| s.0)
    }

    pub fn end(&self) -> Option<usize> {
        self.steps.last().map(|s| s.1)
    }

    /// The reversed traversal; valid because constraints are symmetric.
    pub fn inverse(&self) -> PathPattern {
        PathPattern {
            steps: self.steps.iter().rev().map(|&(x, y)| (y, x)).collect(),
        }
    }
}

/// Exact image of an element set under step-by-step relational composition
/// along the pattern. No store restriction is applied; the empty set maps
/// to the empty set.
pub fn pattern_image(b: &BinaryInstance, start: u64, pattern: &PathPattern) -> Result<u64> {
    if let Some(first) = pattern.start() {
        if !sets::is_subset(start, b.domain(first)) {
            return Err(Error::Precondition("start set outside the start domain".into()));
        }
    }
    let mut current = start;
    for &(x, y) in pattern.steps() {
        let rel = b
            .constraint(x, y)
            .ok_or_else(|| Error::Precondition(format!("no constraint with scope ({x},{y})")))?;
        current = rel.image(current);
    }
    Ok(current)
}

/// Per-variable admissible element sets; the unary constraints of the
/// instance. An empty set signals a contradiction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnaryFactStore {
    sets: Vec<u64>,
}

impl UnaryFactStore {
    /// The full domains of the instance.
    pub fn full(b: &BinaryInstance) -> Self {
        UnaryFactStore { sets: b.domains().to_vec() }
    }

    pub fn new(b: &BinaryInstance, sets_: Vec<u64>) -> Result<Self> {
        if sets_.len() != b.num_vars() {
            return Err(Error::Precondition("one fact set per variable required".into()));
        }
        for (x, &s) in sets_.iter().enumerate() {
            if !sets::is_subset(s, b.domain(x)) {
                return Err(Error::Precondition(format!(
                    "facts at variable {x} exceed its domain"
                )));
            }
        }
        Ok(UnaryFactStore { sets: sets_ })
    }

    pub fn get(&self, x: usize) -> u64 {
        self.sets[x]
    }

    pub fn set(&mut self, x: usize, mask: u64) {
        self.sets[x] = mask;
    }

    pub fn masks(&self) -> &[u64] {
        &self.sets
    }

    pub fn with(&self, x: usize, mask: u64) -> Self {
        let mut out = self.clone();
        out.sets[x] = mask;
        out
    }

    pub fn has_empty(&self) -> bool {
        self.sets.iter().any(|&s| s == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LacOutcome {
    Consistent,
    Contradiction,
}

/// Linear arc consistency: reachability over states (variable, subset).
/// From a state (x, B) and a constraint (x, y), the derived fact at y is
/// the relational image of B restricted by the store at y — the store acts
/// as the instance's unary constraints. A contradiction is a reachable
/// state with the empty set.
pub fn run_lac(b: &BinaryInstance, start: &UnaryFactStore) -> LacOutcome {
    let adjacency = adjacency_of(b);
    let mut scratch = LacScratch::default();
    run_lac_on(b, &adjacency, start, &mut scratch)
}

/// Outgoing constraint scopes per variable, hoisted out of the probe loop.
fn adjacency_of(b: &BinaryInstance) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); b.num_vars()];
    for (x, y) in b.constraint_pairs() {
        adjacency[x].push(y);
    }
    adjacency
}

#[derive(Default)]
struct LacScratch {
    visited: HashSet<(usize, u64)>,
    queue: VecDeque<(usize, u64)>,
}

fn run_lac_on(
    b: &BinaryInstance,
    adjacency: &[Vec<usize>],
    start: &UnaryFactStore,
    scratch: &mut LacScratch,
) -> LacOutcome {
    scratch.visited.clear();
    scratch.queue.clear();
    for x in 0..b.num_vars() {
        let fact = start.get(x) & b.domain(x);
        if fact == 0 {
            return LacOutcome::Contradiction;
        }
        if scratch.visited.insert((x, fact)) {
            scratch.queue.push_back((x, fact));
        }
    }
    while let Some((x, fact)) = scratch.queue.pop_front() {
        for &y in &adjacency[x] {
            let rel = b.constraint(x, y).expect("listed neighbour");
            let derived = rel.image(fact) & start.get(y);
            if derived == 0 {
                return LacOutcome::Contradiction;
            }
            if scratch.visited.insert((y, derived)) {
                scratch.queue.push_back((y, derived));
            }
        }
    }
    LacOutcome::Consistent
}

/// Singleton linear arc consistency: repeatedly probe each remaining value
/// by running LAC with that variable's store restricted to the singleton,
/// removing values whose probe derives a contradiction, until the store is
/// stable. Returns the surviving store, or unsatisfiability when some
/// variable loses all of its values.
///
/// Variables are scanned in index order and values in ascending order; the
/// fixed point itself is order-independent. Probes of one sweep share the
/// same base store, so they run in parallel.
pub fn run_slac(b: &BinaryInstance, trace: &mut Trace) -> Propagation<UnaryFactStore> {
    let adjacency = adjacency_of(b);
    let mut store = UnaryFactStore::full(b);
    let mut scratch = LacScratch::default();
    loop {
        let mut changed = false;
        for x in 0..b.num_vars() {
            let values: Vec<usize> = sets::to_vec(store.get(x));
            // probes of one sweep share the same base store; spreading them
            // across threads only pays off for larger domains
            let doomed: Vec<usize> = if values.len() >= 16 {
                values
                    .par_iter()
                    .copied()
                    .filter(|&a| {
                        let probe = store.with(x, sets::bit(a));
                        let mut local = LacScratch::default();
                        run_lac_on(b, &adjacency, &probe, &mut local) == LacOutcome::Contradiction
                    })
                    .collect()
            } else {
                values
                    .iter()
                    .copied()
                    .filter(|&a| {
                        let probe = store.with(x, sets::bit(a));
                        run_lac_on(b, &adjacency, &probe, &mut scratch) == LacOutcome::Contradiction
                    })
                    .collect()
            };
            if !doomed.is_empty() {
                let mut kept = store.get(x);
                for a in doomed {
                    trace.log(|| format!("slac: prune {a} from var {x} (singleton probe fails)"));
                    kept &= !sets::bit(a);
                }
                store.set(x, kept);
                changed = true;
                if kept == 0 {
                    return Propagation::Unsat;
                }
            }
        }
        if !changed {
            return Propagation::Consistent(store);
        }
    }
}

/// Applies a fact store to the instance: domains become the stored sets and
/// constraints are restricted.
pub fn apply_store(b: &BinaryInstance, store: &UnaryFactStore) -> BinaryInstance {
    let mut out = b.clone();
    out.restrict_domains(store.masks());
    out
}
