//! The affine-consistency pass: walk the test-pair list in order, solve
//! each compiled test instance, prune blocks that appear in no solution or
//! whose block subinstance cannot be made consistent, re-enforce global
//! (2,3)-consistency between pairs, and keep the surviving block
//! subinstances as stabilized passive subinstances.

use super::test_instance::build_test_instance;
use super::{enumerate_test_pairs, AffineCaps, PassiveSubinstance, TestPair};
use crate::consistency::{
    apply_store, enforce_1_consistency, enforce_23_consistency, run_slac, BinaryInstance,
    Propagation, Trace,
};
use crate::error::Result;
use crate::sets;

/// Per-pair summary, the text report consumed by the CLI and the tests.
#[derive(Debug, Clone)]
pub struct PairReport {
    pub var: usize,
    pub sub_elements: Vec<usize>,
    pub theta_blocks: usize,
    pub relevant_vars: Vec<usize>,
    pub system_unknowns: usize,
    pub system_rows: usize,
    pub system_sat: bool,
    pub blocks_pruned: usize,
    pub skipped_stale: bool,
}

impl PairReport {
    pub fn render(&self) -> String {
        if self.skipped_stale {
            return format!(
                "pair var={} sub={:?}: skipped (subuniverse no longer inside the domain)",
                self.var, self.sub_elements
            );
        }
        format!(
            "pair var={} sub={:?} blocks={} relevant={:?} system={}x{} {} pruned={}",
            self.var,
            self.sub_elements,
            self.theta_blocks,
            self.relevant_vars,
            self.system_rows,
            self.system_unknowns,
            if self.system_sat { "SAT" } else { "UNSAT" },
            self.blocks_pruned
        )
    }
}

#[derive(Debug, Clone)]
pub struct AffinePassOutcome {
    pub result: Propagation<BinaryInstance>,
    pub passive: Vec<PassiveSubinstance>,
    pub reports: Vec<PairReport>,
}

impl AffinePassOutcome {
    pub fn blocks_pruned(&self) -> usize {
        self.reports.iter().map(|r| r.blocks_pruned).sum()
    }

    pub fn live_passive(&self) -> usize {
        self.passive.iter().filter(|p| p.live).count()
    }
}

/// Runs the pass on a (2,3)-consistent, 1-consistent instance. The
/// solution set of the output equals the solution set of the input; blocks
/// are only removed when provably solution-free.
pub fn affine_consistency_pass(
    b: &BinaryInstance,
    caps: &AffineCaps,
    trace: &mut Trace,
) -> Result<AffinePassOutcome> {
    let mut work = b.clone();
    let pairs = enumerate_test_pairs(&work, caps)?;
    let mut passive: Vec<PassiveSubinstance> = Vec::new();
    let mut reports: Vec<PairReport> = Vec::new();
    // a block subinstance depends only on (variable, block elements), so
    // stabilizations are shared across pairs until the instance changes
    let mut stabilized: std::collections::HashMap<(usize, u64), Option<Vec<u64>>> =
        std::collections::HashMap::new();

    for pair in &pairs {
        if !sets::is_subset(pair.sub_mask, work.domain(pair.var)) {
            trace.log(|| {
                format!(
                    "affine: skip stale pair var={} sub={:?}",
                    pair.var,
                    sets::to_vec(pair.sub_mask)
                )
            });
            reports.push(PairReport {
                var: pair.var,
                sub_elements: sets::to_vec(pair.sub_mask),
                theta_blocks: pair.block_count(),
                relevant_vars: Vec::new(),
                system_unknowns: 0,
                system_rows: 0,
                system_sat: false,
                blocks_pruned: 0,
                skipped_stale: true,
            });
            continue;
        }

        let ti = build_test_instance(&work, pair, caps)?;
        let system_sat = ti.solve().is_sat();
        let mut pruned_here = 0usize;

        let mut surviving: Vec<usize> = Vec::new();
        for block in 0..pair.block_count() {
            if ti.block_appears(pair, block)? {
                surviving.push(block);
            } else {
                let mask = pair.block_mask(block);
                trace.log(|| {
                    format!(
                        "affine: block {:?} of var {} appears in no system solution; removed",
                        sets::to_vec(mask),
                        pair.var
                    )
                });
                work.remove_values(pair.var, mask);
                stabilized.clear();
                pruned_here += 1;
            }
        }

        for block in surviving {
            let block_mask = pair.block_mask(block) & work.domain(pair.var);
            let cached = match stabilized.get(&(pair.var, block_mask)) {
                Some(hit) => hit.clone(),
                None => {
                    let fresh = stabilize_block(&work, pair.var, block_mask, trace)?;
                    stabilized.insert((pair.var, block_mask), fresh.clone());
                    fresh
                }
            };
            match cached {
                Some(domains) => passive.push(PassiveSubinstance {
                    var: pair.var,
                    sub_mask: pair.sub_mask,
                    theta: pair.theta.clone(),
                    block,
                    block_mask,
                    domains,
                    live: true,
                }),
                None => {
                    trace.log(|| {
                        format!(
                            "affine: block {:?} of var {} has an inconsistent subinstance; removed",
                            sets::to_vec(block_mask),
                            pair.var
                        )
                    });
                    work.remove_values(pair.var, block_mask);
                    stabilized.clear();
                    pruned_here += 1;
                }
            }
        }

        reports.push(PairReport {
            var: pair.var,
            sub_elements: sets::to_vec(pair.sub_mask),
            theta_blocks: pair.block_count(),
            relevant_vars: ti.relevant.iter().map(|r| r.var).collect(),
            system_unknowns: ti.system.num_vars,
            system_rows: ti.system.rows.len(),
            system_sat,
            blocks_pruned: pruned_here,
            skipped_stale: false,
        });

        if pruned_here > 0 {
            match enforce_23_consistency(&work, trace) {
                Propagation::Unsat => {
                    return Ok(AffinePassOutcome { result: Propagation::Unsat, passive, reports })
                }
                Propagation::Consistent(reduced) => {
                    if reduced != work {
                        stabilized.clear();
                    }
                    work = reduced;
                }
            }
        }
    }

    // reconcile the recorded passive subinstances with the final domains;
    // a passive subinstance that empties or destabilizes witnesses that its
    // block is solution-free, so the block is removed in turn
    loop {
        let mut changed = false;
        for idx in 0..passive.len() {
            if !passive[idx].live {
                continue;
            }
            let intersected: Vec<u64> = passive[idx]
                .domains
                .iter()
                .zip(work.domains())
                .map(|(&p, &w)| p & w)
                .collect();
            if intersected == passive[idx].domains {
                continue;
            }
            changed = true;
            if intersected.iter().any(|&m| m == 0) {
                passive[idx].live = false;
                let still = passive[idx].block_mask & work.domain(passive[idx].var);
                if still != 0 {
                    work.remove_values(passive[idx].var, still);
                    match enforce_23_consistency(&work, trace) {
                        Propagation::Unsat => {
                            return Ok(AffinePassOutcome {
                                result: Propagation::Unsat,
                                passive,
                                reports,
                            })
                        }
                        Propagation::Consistent(reduced) => work = reduced,
                    }
                }
                continue;
            }
            let mut probe = work.clone();
            probe.restrict_domains(&intersected);
            match stabilize_instance(&probe, trace)? {
                Some(stable) => {
                    passive[idx].domains = stable.domains().to_vec();
                }
                None => {
                    passive[idx].live = false;
                    let mask = passive[idx].block_mask & work.domain(passive[idx].var);
                    if mask != 0 {
                        work.remove_values(passive[idx].var, mask);
                        match enforce_23_consistency(&work, trace) {
                            Propagation::Unsat => {
                                return Ok(AffinePassOutcome {
                                    result: Propagation::Unsat,
                                    passive,
                                    reports,
                                })
                            }
                            Propagation::Consistent(reduced) => work = reduced,
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    if work.has_empty_domain() {
        return Ok(AffinePassOutcome { result: Propagation::Unsat, passive, reports });
    }
    Ok(AffinePassOutcome { result: Propagation::Consistent(work), passive, reports })
}

/// Builds the block subinstance (the block at the pair variable, its
/// relational images elsewhere), enforces (2,3)-consistency, 1-consistency
/// and SLAC on it, and returns the stabilized domains; `None` when the
/// subinstance is unsatisfiable.
fn stabilize_block(
    work: &BinaryInstance,
    var: usize,
    block_mask: u64,
    trace: &mut Trace,
) -> Result<Option<Vec<u64>>> {
    if block_mask == 0 {
        return Ok(None);
    }
    let mut domains: Vec<u64> = Vec::with_capacity(work.num_vars());
    for y in 0..work.num_vars() {
        if y == var {
            domains.push(block_mask);
        } else {
            domains.push(work.r_plus(var, y, block_mask)?);
        }
    }
    let mut sub = work.clone();
    sub.restrict_domains(&domains);
    let Some(stable) = stabilize_instance(&sub, trace)? else {
        return Ok(None);
    };
    Ok(Some(stable.domains().to_vec()))
}

/// (2,3)-consistency, 1-consistency and SLAC to a joint fixed point.
fn stabilize_instance(b: &BinaryInstance, trace: &mut Trace) -> Result<Option<BinaryInstance>> {
    let mut work = b.clone();
    loop {
        work = match enforce_23_consistency(&work, trace) {
            Propagation::Unsat => return Ok(None),
            Propagation::Consistent(r) => r,
        };
        work = match enforce_1_consistency(&work, trace) {
            Propagation::Unsat => return Ok(None),
            Propagation::Consistent(r) => r,
        };
        let store = match run_slac(&work, trace) {
            Propagation::Unsat => return Ok(None),
            Propagation::Consistent(s) => s,
        };
        let applied = apply_store(&work, &store);
        if applied == work {
            return Ok(Some(work));
        }
        work = applied;
    }
}

/// Intersects each live passive subinstance with the reduced instance,
/// marking entries whose intersection empties anywhere as removed. This is
/// the literal reduction bookkeeping; no restabilization happens here.
pub fn update_passive(
    mut passive: Vec<PassiveSubinstance>,
    reduced: &BinaryInstance,
) -> Vec<PassiveSubinstance> {
    for entry in passive.iter_mut() {
        if !entry.live {
            continue;
        }
        let mut emptied = false;
        for (p, &w) in entry.domains.iter_mut().zip(reduced.domains()) {
            *p &= w;
            emptied |= *p == 0;
        }
        if emptied {
            entry.live = false;
        }
    }
    passive
}
