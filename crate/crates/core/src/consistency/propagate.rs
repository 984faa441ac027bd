//! Domain and pair pruning: 1-consistency (subdirectness) and
//! (2,3)-consistency as greatest fixed points.

use super::{BinaryInstance, Propagation, Rel, Trace};
use crate::sets;

/// Prunes domains until every constraint is subdirect on them, restricting
/// constraints along the way. Unsatisfiable iff a domain empties or a
/// nonempty scope carries an empty constraint.
pub fn enforce_1_consistency(b: &BinaryInstance, trace: &mut Trace) -> Propagation<BinaryInstance> {
    let mut work = b.clone();
    loop {
        let mut changed = false;
        let scopes: Vec<(usize, usize)> = work.constraint_pairs().collect();
        for (x, y) in scopes {
            let support = work.constraint(x, y).expect("scope listed").support();
            let pruned = work.domain(x) & !support;
            if pruned != 0 {
                for a in sets::iter(pruned) {
                    trace.log(|| format!("1c: prune {a} from var {x} (no partner towards {y})"));
                }
                work.set_domain(x, work.domain(x) & support);
                changed = true;
            }
        }
        if changed {
            work.clamp_constraints();
            if work.has_empty_domain() {
                return Propagation::Unsat;
            }
        } else {
            return Propagation::Consistent(work);
        }
    }
}

/// (2,3)-consistency as a greatest fixed point: missing constraints are
/// first completed to full products, then every pair (a, b) admissible on
/// (x, y) must extend to each third variable z through some common witness.
/// Domains are pruned to keep constraints subdirect. Unsatisfiable iff a
/// constraint or domain empties; the result is unchanged under a second
/// application.
pub fn enforce_23_consistency(b: &BinaryInstance, trace: &mut Trace) -> Propagation<BinaryInstance> {
    let mut work = b.clone();
    let n = work.num_vars();

    // complete the constraint graph
    for x in 0..n {
        for y in (x + 1)..n {
            if work.constraint(x, y).is_none() {
                let full = Rel::full(work.universe_size(), work.domain(x), work.domain(y));
                work.add_constraint(x, y, full).expect("distinct scope");
            }
        }
    }

    loop {
        let mut changed = false;
        for x in 0..n {
            for y in (x + 1)..n {
                let mut removals: Vec<(usize, usize)> = Vec::new();
                {
                    let rel_xy = work.constraint(x, y).expect("completed");
                    for a in sets::iter(work.domain(x)) {
                        for bb in sets::iter(rel_xy.row(a)) {
                            'third: for z in 0..n {
                                if z == x || z == y {
                                    continue;
                                }
                                let row_xz = work.constraint(x, z).expect("completed").row(a);
                                let row_yz = work.constraint(y, z).expect("completed").row(bb);
                                if row_xz & row_yz & work.domain(z) == 0 {
                                    removals.push((a, bb));
                                    break 'third;
                                }
                            }
                        }
                    }
                }
                if removals.is_empty() {
                    continue;
                }
                changed = true;
                for &(a, bb) in &removals {
                    trace.log(|| {
                        format!("23: drop pair ({a},{bb}) from ({x},{y}): no extension witness")
                    });
                }
                let mut rel = work.constraint(x, y).expect("completed").clone();
                for (a, bb) in removals {
                    rel.remove(a, bb);
                }
                let conv = rel.converse(work.universe_size());
                work.constraints.insert((x, y), rel);
                work.constraints.insert((y, x), conv);
            }
        }

        // keep domains subdirect after pair removals
        match enforce_1_consistency(&work, trace) {
            Propagation::Unsat => return Propagation::Unsat,
            Propagation::Consistent(reduced) => {
                changed |= reduced != work;
                work = reduced;
            }
        }
        if n >= 2 {
            let empty_scope = work
                .constraint_pairs()
                .any(|(x, y)| work.constraint(x, y).expect("listed").is_empty());
            if empty_scope || work.has_empty_domain() {
                return Propagation::Unsat;
            }
        }
        if !changed {
            return Propagation::Consistent(work);
        }
    }
}

/// Re-checks the fixed-point property directly; used by tests and the
/// verification flags rather than trusting the builder.
pub fn is_23_consistent(b: &BinaryInstance) -> bool {
    let n = b.num_vars();
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let Some(rel) = b.constraint(x, y) else {
                return false;
            };
            if rel.support() != b.domain(x) {
                return false;
            }
            for a in sets::iter(b.domain(x)) {
                for bb in sets::iter(rel.row(a)) {
                    for z in 0..n {
                        if z == x || z == y {
                            continue;
                        }
                        let Some(rel_xz) = b.constraint(x, z) else {
                            return false;
                        };
                        let Some(rel_yz) = b.constraint(y, z) else {
                            return false;
                        };
                        if rel_xz.row(a) & rel_yz.row(bb) & b.domain(z) == 0 {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}
