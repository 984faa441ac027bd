//! Absorbing subuniverses with explicit term witnesses, minimal absorbing
//! subuniverses, and the absorption reduction on binary instances.
//!
//! Absorption is witness-based throughout: a subuniverse counts as
//! absorbing only when a term within the composition-depth bound maps
//! every tuple with at most one free coordinate back into it. Negative
//! answers are therefore bounded-search results, except on two-element
//! algebras whose clones were generated to a fixed point.

use crate::affine_consistency::{update_passive, PassiveSubinstance};
use crate::algebra::{
    evaluate_term, generate_clone, subalgebra, FiniteAlgebra, Term, TermTable,
};
use crate::consistency::{
    apply_store, enforce_1_consistency, run_lac, run_slac, BinaryInstance, LacOutcome,
    Propagation, Trace, UnaryFactStore,
};
use crate::error::{Error, Result};
use crate::sets;
use std::collections::BTreeSet;

const CLONE_TABLE_CAP: usize = 2048;
const CLONE_APP_CAP: usize = 2_000_000;

/// A subuniverse together with the term certifying that it absorbs.
#[derive(Debug, Clone)]
pub struct AbsorptionWitness {
    /// The absorbing subuniverse, as elements of the ambient algebra.
    pub elements: BTreeSet<usize>,
    pub term: Term,
}

impl AbsorptionWitness {
    pub fn arity(&self) -> usize {
        self.term.arity()
    }
}

/// Exhaustive check of the absorption containment: for every argument
/// position, the term maps tuples from the set with one ambient element in
/// that position back into the set.
pub fn check_witness(alg: &FiniteAlgebra, b_set: &BTreeSet<usize>, t: &Term) -> Result<bool> {
    if let Some(&bad) = b_set.iter().find(|&&e| e >= alg.size()) {
        return Err(Error::Precondition(format!(
            "element {bad} outside the universe of {}",
            alg.name()
        )));
    }
    let mask = sets::mask_of(b_set.iter().copied());
    if !alg.is_subuniverse(mask) {
        return Err(Error::Precondition(format!(
            "{b_set:?} is not a subuniverse of {}",
            alg.name()
        )));
    }
    let n = t.arity();
    let inside: Vec<usize> = b_set.iter().copied().collect();
    let mut args = vec![0usize; n];
    for slot in 0..n {
        let combos = inside.len().pow((n - 1) as u32);
        for free in alg.elements() {
            for combo in 0..combos {
                let mut rest = combo;
                for (pos, arg) in args.iter_mut().enumerate() {
                    if pos == slot {
                        *arg = free;
                    } else {
                        *arg = inside[rest % inside.len()];
                        rest /= inside.len();
                    }
                }
                if !b_set.contains(&evaluate_term(alg, t, &args)?) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone)]
pub enum AbsorptionSearch {
    Found { elements: BTreeSet<usize>, witness: AbsorptionWitness },
    /// No witnessed proper absorber; the clone search reached a fixed point
    /// on a two-element algebra, so the absence is proven.
    AbsentProven,
    /// No witnessed proper absorber within the bound.
    AbsentAtBound,
}

impl AbsorptionSearch {
    pub fn found(&self) -> Option<(&BTreeSet<usize>, &AbsorptionWitness)> {
        match self {
            AbsorptionSearch::Found { elements, witness } => Some((elements, witness)),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, AbsorptionSearch::Found { .. })
    }
}

/// Arities searched for witness terms: the binary and ternary clones plus
/// every basic-operation arity.
fn witness_arities(alg: &FiniteAlgebra) -> Vec<usize> {
    let mut arities: BTreeSet<usize> = [2, 3].into();
    arities.extend(alg.ops().iter().map(|op| op.arity()));
    arities.into_iter().collect()
}

fn proper_subuniverses(alg: &FiniteAlgebra) -> Result<Vec<u64>> {
    if alg.size() > 16 {
        return Err(Error::ResourceLimit(format!(
            "absorber enumeration supports at most 16 elements, algebra has {}",
            alg.size()
        )));
    }
    let full = sets::full(alg.size());
    let mut found: BTreeSet<u64> = BTreeSet::new();
    for subset in 1..=full {
        let closure = alg.close_mask(subset);
        if closure != full {
            found.insert(closure);
        }
    }
    let mut out: Vec<u64> = found.into_iter().collect();
    out.sort_by_key(|&m| (m.count_ones(), sets::to_vec(m)));
    Ok(out)
}

fn witness_check_table(
    table: &TermTable,
    arity: usize,
    size: usize,
    b_mask: u64,
) -> bool {
    let inside: Vec<usize> = sets::to_vec(b_mask);
    let mut args = vec![0usize; arity];
    let combos = inside.len().pow((arity - 1) as u32);
    for slot in 0..arity {
        for free in 0..size {
            for combo in 0..combos {
                let mut rest = combo;
                for (pos, arg) in args.iter_mut().enumerate() {
                    if pos == slot {
                        *arg = free;
                    } else {
                        *arg = inside[rest % inside.len()];
                        rest /= inside.len();
                    }
                }
                if !sets::contains(b_mask, table.eval(&args, size)) {
                    return false;
                }
            }
        }
    }
    true
}

/// Searches for a proper witnessed absorbing subuniverse: candidate sets in
/// (cardinality, element) order, witness terms in breadth-first clone order
/// at each searched arity.
pub fn find_absorbing(alg: &FiniteAlgebra, depth_bound: usize) -> Result<AbsorptionSearch> {
    let candidates = proper_subuniverses(alg)?;
    let mut clones = Vec::new();
    let mut all_closed = true;
    for arity in witness_arities(alg) {
        let clone = generate_clone(alg, arity, depth_bound, CLONE_TABLE_CAP, CLONE_APP_CAP);
        all_closed &= clone.closed;
        clones.push((arity, clone));
    }
    for &mask in &candidates {
        for (arity, clone) in &clones {
            for table in &clone.tables {
                if witness_check_table(table, *arity, alg.size(), mask) {
                    let elements = sets::to_set(mask);
                    let witness =
                        AbsorptionWitness { elements: elements.clone(), term: table.term.clone() };
                    debug_assert!(check_witness(alg, &elements, &witness.term)?);
                    return Ok(AbsorptionSearch::Found { elements, witness });
                }
            }
        }
    }
    if alg.size() <= 2 && all_closed {
        Ok(AbsorptionSearch::AbsentProven)
    } else {
        Ok(AbsorptionSearch::AbsentAtBound)
    }
}

/// All witnessed proper absorbers at the bound, in (cardinality, elements)
/// order, each with its first witness.
fn all_witnessed_absorbers(
    alg: &FiniteAlgebra,
    depth_bound: usize,
) -> Result<Vec<(u64, AbsorptionWitness)>> {
    let candidates = proper_subuniverses(alg)?;
    let mut clones = Vec::new();
    for arity in witness_arities(alg) {
        clones.push(generate_clone(alg, arity, depth_bound, CLONE_TABLE_CAP, CLONE_APP_CAP));
    }
    let mut out = Vec::new();
    for &mask in &candidates {
        'masks: for clone in &clones {
            for table in &clone.tables {
                if witness_check_table(table, table.term.arity(), alg.size(), mask) {
                    out.push((
                        mask,
                        AbsorptionWitness { elements: sets::to_set(mask), term: table.term.clone() },
                    ));
                    break 'masks;
                }
            }
        }
    }
    Ok(out)
}

/// A minimal (under inclusion) witnessed absorbing subuniverse. The set of
/// witnessed absorbers is first closed under nonempty pairwise
/// intersections: if two subuniverses absorb, their intersection absorbs
/// with the composed witness (re-checked before it is admitted). Ties are
/// broken by smallest cardinality, then lexicographically least elements.
pub fn minimal_absorbing(alg: &FiniteAlgebra, depth_bound: usize) -> Result<AbsorptionSearch> {
    let mut witnessed = all_witnessed_absorbers(alg, depth_bound)?;
    if witnessed.is_empty() {
        return find_absorbing(alg, depth_bound);
    }
    // descend by intersecting witnessed absorbers
    loop {
        let mut added = false;
        for i in 0..witnessed.len() {
            for j in (i + 1)..witnessed.len() {
                let inter = witnessed[i].0 & witnessed[j].0;
                if inter == 0 || witnessed.iter().any(|(m, _)| *m == inter) {
                    continue;
                }
                let composed = witnessed[i].1.term.compose_blocks(&witnessed[j].1.term)?;
                let elements = sets::to_set(inter);
                if check_witness(alg, &elements, &composed)? {
                    witnessed.push((inter, AbsorptionWitness { elements, term: composed }));
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    let minimal: Vec<&(u64, AbsorptionWitness)> = witnessed
        .iter()
        .filter(|(m, _)| !witnessed.iter().any(|(o, _)| *o != *m && sets::is_subset(*o, *m)))
        .collect();
    let best = minimal
        .into_iter()
        .min_by_key(|(m, _)| (m.count_ones(), sets::to_vec(*m)))
        .expect("nonempty witnessed set");
    Ok(AbsorptionSearch::Found { elements: sets::to_set(best.0), witness: best.1.clone() })
}

/// The absorption reduction at a variable: the domain shrinks to the
/// absorbing subuniverse, every other domain shrinks to its relational
/// image, constraints are restricted, 1-consistency and SLAC are
/// re-enforced, and the passive list is intersected. Passive subinstances
/// that survive the intersection must still be SLAC-consistent; a failed
/// re-check is an internal error. When the passive list was nonempty and
/// the reduction used a minimal absorber, it cannot empty.
pub struct AbsorptionReduction {
    pub result: Propagation<BinaryInstance>,
    pub passive: Vec<PassiveSubinstance>,
}

pub fn absorption_reduce(
    b: &BinaryInstance,
    var: usize,
    b_set: &BTreeSet<usize>,
    witness: &AbsorptionWitness,
    passive: Vec<PassiveSubinstance>,
    minimal: bool,
    trace: &mut Trace,
) -> Result<AbsorptionReduction> {
    let b_mask = sets::mask_of(b_set.iter().copied());
    if b_mask == 0 || !sets::is_subset(b_mask, b.domain(var)) {
        return Err(Error::Precondition(format!(
            "absorber {b_set:?} is empty or not inside the domain of variable {var}"
        )));
    }
    let domain_sub = subalgebra(b.algebra().as_ref(), b.domain(var))?;
    let local_set: BTreeSet<usize> = b_set
        .iter()
        .map(|&e| {
            domain_sub
                .to_local(e)
                .ok_or_else(|| Error::Precondition(format!("element {e} outside the domain")))
        })
        .collect::<Result<_>>()?;
    // the witness tree carries operation indices, which the materialized
    // subalgebra shares, so it can be checked there directly
    if !check_witness(&domain_sub.algebra, &local_set, &witness.term)? {
        return Err(Error::Precondition(format!(
            "witness term does not absorb {b_set:?} within the domain of variable {var}"
        )));
    }

    if b_mask == b.domain(var) {
        // improper absorption: nothing to reduce
        return Ok(AbsorptionReduction { result: Propagation::Consistent(b.clone()), passive });
    }

    trace.log(|| format!("absorb: reduce var {var} to {:?}", sets::to_vec(b_mask)));
    let had_live = passive.iter().any(|p| p.live);
    let mut masks: Vec<u64> = Vec::with_capacity(b.num_vars());
    for y in 0..b.num_vars() {
        if y == var {
            masks.push(b_mask);
        } else if b.constraint(var, y).is_some() {
            masks.push(b.r_plus(var, y, b_mask)?);
        } else {
            masks.push(b.domain(y));
        }
    }
    let mut work = b.clone();
    work.restrict_domains(&masks);

    work = match enforce_1_consistency(&work, trace) {
        Propagation::Unsat => return Ok(AbsorptionReduction { result: Propagation::Unsat, passive }),
        Propagation::Consistent(r) => r,
    };
    let store = match run_slac(&work, trace) {
        Propagation::Unsat => return Ok(AbsorptionReduction { result: Propagation::Unsat, passive }),
        Propagation::Consistent(s) => s,
    };
    work = apply_store(&work, &store);

    let passive = update_passive(passive, &work);
    for entry in passive.iter().filter(|p| p.live) {
        let probe = entry.materialize(&work);
        let full = UnaryFactStore::full(&probe);
        if run_lac(&probe, &full) == LacOutcome::Contradiction
            || run_slac(&probe, &mut Trace::off()).is_unsat()
        {
            return Err(Error::InternalInvariant(format!(
                "passive subinstance at var {} block {:?} lost SLAC under an absorption reduction",
                entry.var,
                sets::to_vec(entry.block_mask)
            )));
        }
    }
    if minimal && had_live && !passive.iter().any(|p| p.live) {
        return Err(Error::InternalInvariant(
            "passive list emptied under a minimal absorption reduction".into(),
        ));
    }
    Ok(AbsorptionReduction { result: Propagation::Consistent(work), passive })
}
