//! Affine consistency: enumerate (subuniverse, maximal congruence) pairs
//! whose quotient is a simple affine module, compile the induced quotient
//! instance into a linear system over GF(p), prune congruence blocks that
//! appear in no solution, and record the surviving block subinstances as
//! passive subinstances for the reduction loop.

mod pass;
mod test_instance;

pub use pass::{affine_consistency_pass, update_passive, AffinePassOutcome, PairReport};
pub use test_instance::{build_test_instance, relevant_congruence, RelevantVar, Strand, TestInstance};

use crate::algebra::{
    maximal_congruences, quotient, subalgebra, subuniverses_generated, Congruence, Quotient,
    Subalgebra,
};
use crate::consistency::BinaryInstance;
use crate::error::{Error, Result};
use crate::linear::{recognize_affine_module, AffineCoordinatization};
use crate::sets;
use std::collections::HashMap;

/// Caps and flags for the affine-consistency machinery.
#[derive(Debug, Clone, Copy)]
pub struct AffineCaps {
    /// Subuniverses are enumerated from generating sets of at most this
    /// many elements; whole domains are always included.
    pub generator_cap: usize,
    /// Upper bound on the number of subuniverses per domain.
    pub subuniverse_cap: usize,
    /// Largest algebra size admitted to congruence enumeration.
    pub congruence_cap: usize,
    /// Composition depth for the Maltsev-term search behind affine
    /// recognition.
    pub term_depth: usize,
    /// Re-derive the relevant congruences along two-step path patterns and
    /// require agreement with the direct derivation.
    pub verify_paths: bool,
}

impl Default for AffineCaps {
    fn default() -> Self {
        AffineCaps {
            generator_cap: 2,
            subuniverse_cap: 512,
            congruence_cap: 12,
            term_depth: 3,
            verify_paths: false,
        }
    }
}

/// One entry of the test-pair list: a subuniverse of some domain together
/// with a maximal congruence whose quotient is a recognized simple affine
/// module.
#[derive(Debug, Clone)]
pub struct TestPair {
    pub var: usize,
    /// The subuniverse, as parent elements of the instance universe.
    pub sub_mask: u64,
    /// The subuniverse materialized as an algebra of its own.
    pub sub: Subalgebra,
    /// Maximal congruence on the materialized subalgebra.
    pub theta: Congruence,
    /// The simple affine quotient and its coordinatization.
    pub quotient: Quotient,
    pub coord: AffineCoordinatization,
}

impl TestPair {
    /// Parent elements of a congruence block.
    pub fn block_mask(&self, block: usize) -> u64 {
        let mut mask = 0u64;
        for (local, &parent) in self.sub.elements.iter().enumerate() {
            if self.theta.block_of(local) == block {
                mask |= sets::bit(parent);
            }
        }
        mask
    }

    pub fn block_count(&self) -> usize {
        self.theta.block_count()
    }
}

/// Exact relational image of `from` through the constraint `(x, y)`.
pub fn r_plus(b: &BinaryInstance, x: usize, y: usize, from: u64) -> Result<u64> {
    b.r_plus(x, y, from)
}

/// Enumerates the test-pair list for a 1-consistent instance: for every
/// variable, every subuniverse of its domain within the generator cap
/// (plus the whole domain) and every maximal congruence whose quotient is
/// recognized as a simple affine module. The list is ordered by decreasing
/// subuniverse size, so a pair contained in a congruence block of an
/// earlier pair always comes later.
pub fn enumerate_test_pairs(b: &BinaryInstance, caps: &AffineCaps) -> Result<Vec<TestPair>> {
    let alg = b.algebra().as_ref();
    let mut pairs = Vec::new();
    // pair structure depends only on the domain, so repeated domains are
    // analysed once
    let mut by_domain: HashMap<u64, Vec<TestPair>> = HashMap::new();
    for var in 0..b.num_vars() {
        let domain = b.domain(var);
        if domain == 0 {
            return Err(Error::Precondition(format!(
                "test-pair enumeration on an empty domain (variable {var})"
            )));
        }
        if let Some(cached) = by_domain.get(&domain) {
            pairs.extend(cached.iter().map(|p| TestPair { var, ..p.clone() }));
            continue;
        }
        let mut fresh: Vec<TestPair> = Vec::new();
        let subs = subuniverses_generated(alg, domain, caps.generator_cap, caps.subuniverse_cap)
            .map_err(|e| match e {
                Error::ResourceLimit(msg) => {
                    Error::ResourceLimit(format!("{msg} (variable {var})"))
                }
                other => other,
            })?;
        for sub_mask in subs {
            if sub_mask.count_ones() < 2 {
                continue; // no maximal congruence on a one-element algebra
            }
            let sub = subalgebra(alg, sub_mask)?;
            for theta in maximal_congruences(&sub.algebra, caps.congruence_cap)? {
                let q = quotient(&sub.algebra, &theta)?;
                if let Some(coord) =
                    recognize_affine_module(&q.algebra, caps.term_depth).into_option()
                {
                    fresh.push(TestPair {
                        var,
                        sub_mask,
                        sub: sub.clone(),
                        theta,
                        quotient: q,
                        coord,
                    });
                }
            }
        }
        pairs.extend(fresh.iter().cloned());
        by_domain.insert(domain, fresh);
    }
    pairs.sort_by(|a, b_| {
        (std::cmp::Reverse(a.sub_mask.count_ones()), a.var, sets::to_vec(a.sub_mask), &a.theta)
            .cmp(&(std::cmp::Reverse(b_.sub_mask.count_ones()), b_.var, sets::to_vec(b_.sub_mask), &b_.theta))
    });
    Ok(pairs)
}

/// A block-based subinstance recorded by the affine-consistency pass:
/// solutions whose value at `var` lies in the originating block must stay
/// inside these domains.
#[derive(Debug, Clone)]
pub struct PassiveSubinstance {
    pub var: usize,
    pub sub_mask: u64,
    pub theta: Congruence,
    pub block: usize,
    pub block_mask: u64,
    /// Stabilized domains: 1-consistent and SLAC at creation.
    pub domains: Vec<u64>,
    pub live: bool,
}

impl PassiveSubinstance {
    /// Materializes the subinstance against the given constraints.
    pub fn materialize(&self, b: &BinaryInstance) -> BinaryInstance {
        let mut out = b.clone();
        out.restrict_domains(&self.domains);
        out
    }
}

#[cfg(test)]
mod tests;
