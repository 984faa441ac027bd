//! The full decision procedure: detect an edge polymorphism, binarize,
//! establish (2,3)-consistency, SLAC and affine consistency, then reduce
//! via minimal absorbing subuniverses and affine-module passive
//! replacements until the instance is decided.

mod benchmark;

pub use benchmark::{generate_benchmark, Benchmark, BenchmarkKind};

use crate::absorption::{absorption_reduce, minimal_absorbing, AbsorptionWitness};
use crate::affine_consistency::{
    affine_consistency_pass, update_passive, AffineCaps, PassiveSubinstance,
};
use crate::algebra::{
    is_simple, maximal_congruences, quotient, subalgebra, subuniverses_generated, Congruence,
    FiniteAlgebra,
};
use crate::consistency::{
    apply_store, binarize, enforce_1_consistency, enforce_23_consistency, run_slac,
    BinaryInstance, Propagation, Trace,
};
use crate::csp::{
    find_special_polymorphism, oracle_solve, verify_solution, Assignment, CspInstance,
    OracleConfig, PolymorphismKind, RelationalTemplate,
};
use crate::error::{Error, Result};
use crate::linear::recognize_affine_module;
use crate::sets;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Knobs of the decision procedure. Everything is deterministic; the seed
/// only feeds the benchmark generator and is echoed into reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Edge parameter to verify; when absent, k = 2, 3, .. up to
    /// `max_edge_search` is tried.
    pub k_edge_arity: Option<usize>,
    pub max_edge_search: usize,
    /// Composition depth for term searches (affine recognition and
    /// absorption witnesses).
    pub term_depth_bound: usize,
    /// Generating-set size for subuniverse enumeration.
    pub generator_cap: usize,
    pub subuniverse_cap: usize,
    pub congruence_cap: usize,
    /// Re-derive relevant congruences along path patterns and compare.
    pub verify_paths: bool,
    /// Cross-check structural invariants during the run.
    pub recheck_invariants: bool,
    pub trace: bool,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k_edge_arity: None,
            max_edge_search: 3,
            term_depth_bound: 3,
            generator_cap: 2,
            subuniverse_cap: 512,
            congruence_cap: 12,
            verify_paths: false,
            recheck_invariants: true,
            trace: false,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn affine_caps(&self) -> AffineCaps {
        AffineCaps {
            generator_cap: self.generator_cap,
            subuniverse_cap: self.subuniverse_cap,
            congruence_cap: self.congruence_cap,
            term_depth: self.term_depth_bound,
            verify_paths: self.verify_paths,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Sat,
    Unsat,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub edge_parameter: usize,
    pub binarized_vars: usize,
    pub power_exponent: usize,
    pub universe_size: usize,
    pub establish_rounds: usize,
    pub affine_passes: usize,
    pub test_instances_built: usize,
    pub blocks_pruned: usize,
    pub absorption_steps: usize,
    pub passive_replacements: usize,
    pub reduction_iterations: usize,
}

/// The machine-readable outcome: decision, optional verified witness, the
/// configuration echo, statistics and the pruning trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub decision: Decision,
    pub witness: Option<BTreeMap<String, usize>>,
    pub config: SolverConfig,
    pub stats: SolveStats,
    pub trace: Vec<String>,
}

impl SolverReport {
    pub fn is_sat(&self) -> bool {
        self.decision == Decision::Sat
    }
}

/// Finds the edge polymorphism the pipeline is parametrized by, either the
/// configured one or the first of k = 2, 3, ..
fn detect_edge_polymorphism(
    t: &RelationalTemplate,
    cfg: &SolverConfig,
) -> Result<(usize, crate::algebra::OperationTable)> {
    let oracle_cfg = OracleConfig::default();
    let ks: Vec<usize> = match cfg.k_edge_arity {
        Some(k) => vec![k],
        None => (2..=cfg.max_edge_search).collect(),
    };
    for &k in &ks {
        if let Some(op) = find_special_polymorphism(t, PolymorphismKind::KEdge(k), &oracle_cfg)? {
            return Ok((k, op));
        }
    }
    Err(Error::NotApplicable(format!(
        "no edge term of parameter {:?} preserves the template",
        ks
    )))
}

struct Driver<'a> {
    cfg: &'a SolverConfig,
    trace: Trace,
    stats: SolveStats,
    /// Domain mask -> minimal witnessed absorber (parent elements, witness).
    absorber_cache: HashMap<u64, Option<(Vec<usize>, AbsorptionWitness)>>,
}

impl Driver<'_> {
    fn log(&mut self, line: impl FnOnce() -> String) {
        self.trace.log(line);
    }

    /// (2,3)-consistency, 1-consistency, SLAC and the affine pass to a
    /// joint fixed point. Also refreshes the passive list from the last
    /// affine pass.
    fn establish(
        &mut self,
        start: BinaryInstance,
    ) -> Result<Propagation<(BinaryInstance, Vec<PassiveSubinstance>)>> {
        let mut work = start;
        loop {
            self.stats.establish_rounds += 1;
            work = match enforce_23_consistency(&work, &mut self.trace) {
                Propagation::Unsat => return Ok(Propagation::Unsat),
                Propagation::Consistent(r) => r,
            };
            work = match enforce_1_consistency(&work, &mut self.trace) {
                Propagation::Unsat => return Ok(Propagation::Unsat),
                Propagation::Consistent(r) => r,
            };
            let store = match run_slac(&work, &mut self.trace) {
                Propagation::Unsat => return Ok(Propagation::Unsat),
                Propagation::Consistent(s) => s,
            };
            let applied = apply_store(&work, &store);
            if applied != work {
                work = applied;
                continue;
            }
            if self.cfg.recheck_invariants && !work.is_closed_under_operations() {
                return Err(Error::InternalInvariant(
                    "domains or constraints lost closure under the operations".into(),
                ));
            }
            self.stats.affine_passes += 1;
            let outcome = affine_consistency_pass(&work, &self.cfg.affine_caps(), &mut self.trace)?;
            self.stats.test_instances_built +=
                outcome.reports.iter().filter(|r| !r.skipped_stale).count();
            self.stats.blocks_pruned += outcome.blocks_pruned();
            match outcome.result {
                Propagation::Unsat => return Ok(Propagation::Unsat),
                Propagation::Consistent(reduced) => {
                    if reduced != work {
                        work = reduced;
                        continue;
                    }
                    return Ok(Propagation::Consistent((work, outcome.passive)));
                }
            }
        }
    }

    /// First variable (in index order) whose domain has a proper witnessed
    /// absorbing subuniverse, with a minimal one.
    fn find_absorber(
        &mut self,
        work: &BinaryInstance,
    ) -> Result<Option<(usize, Vec<usize>, AbsorptionWitness)>> {
        for x in 0..work.num_vars() {
            let mask = work.domain(x);
            if mask.count_ones() < 2 {
                continue;
            }
            if let Some(entry) = self.absorber_cache.get(&mask) {
                if let Some((elems, witness)) = entry {
                    return Ok(Some((x, elems.clone(), witness.clone())));
                }
                continue;
            }
            let sub = subalgebra(work.algebra().as_ref(), mask)?;
            let search = minimal_absorbing(&sub.algebra, self.cfg.term_depth_bound)?;
            let found = search.found().map(|(elements, witness)| {
                let parents: Vec<usize> =
                    elements.iter().map(|&local| sub.elements[local]).collect();
                (parents, witness.clone())
            });
            self.absorber_cache.insert(mask, found.clone());
            if let Some((elems, witness)) = found {
                return Ok(Some((x, elems, witness)));
            }
        }
        Ok(None)
    }

    /// First affine-module reduction in (variable, congruence, subuniverse,
    /// block) order: a maximal congruence of a domain whose quotient
    /// contains a simple affine module, together with the live passive
    /// entry of one of its blocks.
    fn find_affine_replacement(
        &mut self,
        work: &BinaryInstance,
        passive: &[PassiveSubinstance],
    ) -> Result<Option<usize>> {
        let caps = self.cfg.affine_caps();
        for x in 0..work.num_vars() {
            let domain = work.domain(x);
            if domain.count_ones() < 2 {
                continue;
            }
            let sub = subalgebra(work.algebra().as_ref(), domain)?;
            for theta in maximal_congruences(&sub.algebra, caps.congruence_cap)? {
                let q = quotient(&sub.algebra, &theta)?;
                let q_full = sets::full(q.algebra.size());
                for module in
                    subuniverses_generated(&q.algebra, q_full, caps.generator_cap, caps.subuniverse_cap)?
                {
                    if module.count_ones() < 2 {
                        continue;
                    }
                    let module_sub = subalgebra(&q.algebra, module)?;
                    if !is_simple(&module_sub.algebra, caps.congruence_cap)? {
                        continue;
                    }
                    if recognize_affine_module(&module_sub.algebra, caps.term_depth)
                        .into_option()
                        .is_none()
                    {
                        continue;
                    }
                    // preimage of the module in the domain, with the
                    // restricted congruence
                    let mut preimage = 0u64;
                    for (local, &parent) in sub.elements.iter().enumerate() {
                        if sets::contains(module, theta.block_of(local)) {
                            preimage |= sets::bit(parent);
                        }
                    }
                    let restricted = restrict_partition(&sub.elements, &theta, preimage);
                    let mut expected_pairs = 0usize;
                    for qelem in sets::iter(module) {
                        let mut block_mask = 0u64;
                        for (local, &parent) in sub.elements.iter().enumerate() {
                            if theta.block_of(local) == qelem {
                                block_mask |= sets::bit(parent);
                            }
                        }
                        expected_pairs += 1;
                        let entry = passive.iter().position(|p| {
                            p.live
                                && p.var == x
                                && p.sub_mask == preimage
                                && p.theta == restricted
                                && p.block_mask == block_mask
                        });
                        if let Some(idx) = entry {
                            return Ok(Some(idx));
                        }
                    }
                    if expected_pairs > 0 {
                        return Err(Error::InternalInvariant(format!(
                            "affine-module reduction at variable {x} has no live passive entry; \
                             the subuniverse may exceed the generator cap ({})",
                            caps.generator_cap
                        )));
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Restriction of a partition on a materialized subalgebra to a subset of
/// its parent elements, re-canonicalized over the subset.
fn restrict_partition(elements: &[usize], theta: &Congruence, subset: u64) -> Congruence {
    let blocks: Vec<usize> = elements
        .iter()
        .enumerate()
        .filter(|(_, &parent)| sets::contains(subset, parent))
        .map(|(local, _)| theta.block_of(local))
        .collect();
    Congruence::from_blocks(blocks)
}

/// Decides the instance. The pipeline: verify the edge polymorphism,
/// binarize, establish consistency, then loop absorption reductions and
/// affine-module passive replacements, re-establishing consistency after
/// each; when neither applies the established instance is satisfiable iff
/// no domain emptied.
pub fn solve(t: &RelationalTemplate, i: &CspInstance, cfg: &SolverConfig) -> Result<SolverReport> {
    let trace = if cfg.trace { Trace::enabled() } else { Trace::off() };
    let mut driver = Driver {
        cfg,
        trace,
        stats: SolveStats::default(),
        absorber_cache: HashMap::new(),
    };

    let (k, edge_op) = detect_edge_polymorphism(t, cfg)?;
    driver.stats.edge_parameter = k;
    driver.log(|| format!("edge polymorphism found: parameter {k}, arity {}", k + 1));
    if !edge_op.is_idempotent() {
        return Err(Error::NotApplicable(
            "edge operation is not idempotent; use a template with singleton relations".into(),
        ));
    }
    let algebra = Arc::new(FiniteAlgebra::new(
        "edge-poly",
        t.domain_size(),
        vec![edge_op],
    )?);

    let binary = binarize(t, i, &algebra, k)?;
    driver.stats.binarized_vars = binary.num_vars();
    driver.stats.universe_size = binary.universe_size();
    driver.stats.power_exponent = {
        let base = t.domain_size();
        let mut e = 1usize;
        let mut s = base;
        while s < binary.universe_size() {
            s *= base;
            e += 1;
        }
        e
    };
    driver.log(|| {
        format!(
            "binarized: {} variables over a universe of {}",
            binary.num_vars(),
            binary.universe_size()
        )
    });

    let unsat = |driver: Driver| -> Result<SolverReport> {
        let mut d = driver;
        Ok(SolverReport {
            decision: Decision::Unsat,
            witness: None,
            config: cfg.clone(),
            stats: d.stats.clone(),
            trace: d.trace.take_lines(),
        })
    };

    let (mut work, mut passive) = match driver.establish(binary)? {
        Propagation::Unsat => return unsat(driver),
        Propagation::Consistent(pair) => pair,
    };

    loop {
        driver.stats.reduction_iterations += 1;
        let before: usize = work.domains().iter().map(|d| d.count_ones() as usize).sum();

        if let Some((x, elems, witness)) = driver.find_absorber(&work)? {
            driver.stats.absorption_steps += 1;
            let b_set = elems.iter().copied().collect();
            let reduction = absorption_reduce(
                &work,
                x,
                &b_set,
                &witness,
                passive,
                true,
                &mut driver.trace,
            )?;
            // the reduction intersected and re-checked the passive list;
            // re-establishment rebuilds it from a fresh affine pass on the
            // reduced instance, re-verifying relevance from scratch
            work = match reduction.result {
                Propagation::Unsat => return unsat(driver),
                Propagation::Consistent(w) => w,
            };
            (work, passive) = match driver.establish(work)? {
                Propagation::Unsat => return unsat(driver),
                Propagation::Consistent(pair) => pair,
            };
            let after: usize = work.domains().iter().map(|d| d.count_ones() as usize).sum();
            if after >= before {
                return Err(Error::InternalInvariant(
                    "absorption reduction made no progress".into(),
                ));
            }
            continue;
        }

        if let Some(entry_idx) = driver.find_affine_replacement(&work, &passive)? {
            driver.stats.passive_replacements += 1;
            let entry = passive[entry_idx].clone();
            driver.log(|| {
                format!(
                    "reduce: replace instance by the passive subinstance at var {} block {:?}",
                    entry.var,
                    sets::to_vec(entry.block_mask)
                )
            });
            let replaced = entry.materialize(&work);
            // the passive list is intersected with the replacement and then
            // rebuilt by the fresh affine pass during re-establishment,
            // re-verifying relevance from scratch
            passive = update_passive(passive, &replaced);
            debug_assert!(passive.iter().any(|p| p.live));
            (work, passive) = match driver.establish(replaced)? {
                Propagation::Unsat => return unsat(driver),
                Propagation::Consistent(pair) => pair,
            };
            let after: usize = work.domains().iter().map(|d| d.count_ones() as usize).sum();
            if after >= before {
                return Err(Error::InternalInvariant(
                    "affine-module reduction made no progress".into(),
                ));
            }
            continue;
        }

        // absorption-free and affine-free: the established instance is
        // satisfiable precisely when every domain is nonempty
        driver.log(|| "endgame: absorption-free and affine-free, deciding by consistency".into());
        debug_assert!(!work.has_empty_domain());
        return Ok(SolverReport {
            decision: Decision::Sat,
            witness: None,
            config: cfg.clone(),
            stats: driver.stats.clone(),
            trace: driver.trace.take_lines(),
        });
    }
}

/// Extracts a satisfying assignment by self-reduction: variables are fixed
/// one at a time (values in ascending order) to whichever value keeps the
/// solver's answer satisfiable. The result is verified before returning.
pub fn extract_witness(
    t: &RelationalTemplate,
    i: &CspInstance,
    cfg: &SolverConfig,
) -> Result<BTreeMap<String, usize>> {
    let base = solve(t, i, cfg)?;
    if base.decision != Decision::Sat {
        return Err(Error::Precondition(
            "witness extraction on an unsatisfiable instance".into(),
        ));
    }
    let mut fixed = i.clone();
    let mut assignment: Assignment = BTreeMap::new();
    for var in 0..i.num_vars() {
        let mut chosen = None;
        for value in 0..t.domain_size() {
            let candidate = fixed.with_value_fixed(t, var, value)?;
            if solve(t, &candidate, cfg)?.decision == Decision::Sat {
                chosen = Some((value, candidate));
                break;
            }
        }
        let Some((value, candidate)) = chosen else {
            return Err(Error::InternalInvariant(format!(
                "no value of variable {} keeps the instance satisfiable",
                i.variables()[var]
            )));
        };
        assignment.insert(var, value);
        fixed = candidate;
    }
    if !verify_solution(t, i, &assignment)? {
        return Err(Error::InternalInvariant(
            "extracted assignment fails verification".into(),
        ));
    }
    Ok(assignment
        .into_iter()
        .map(|(v, val)| (i.variables()[v].clone(), val))
        .collect())
}

/// `solve` plus witness extraction on satisfiable instances.
pub fn solve_with_witness(
    t: &RelationalTemplate,
    i: &CspInstance,
    cfg: &SolverConfig,
) -> Result<SolverReport> {
    let mut report = solve(t, i, cfg)?;
    if report.decision == Decision::Sat {
        report.witness = Some(extract_witness(t, i, cfg)?);
    }
    Ok(report)
}

/// Decision of the oracle on the same instance, for agreement checks.
pub fn oracle_decision(t: &RelationalTemplate, i: &CspInstance) -> Result<Decision> {
    Ok(match oracle_solve(t, i, &OracleConfig::default())? {
        Some(_) => Decision::Sat,
        None => Decision::Unsat,
    })
}
