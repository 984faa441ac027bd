//! Relevant variables, quotient constraint compilation, and assembly of the
//! test instance as one linear system over GF(p).

use super::{AffineCaps, TestPair};
use crate::algebra::{congruence_generated, find_isomorphism, quotient, subalgebra, Congruence};
use crate::consistency::BinaryInstance;
use crate::error::{Error, Result};
use crate::linear::{compile_binary_constraint, solve_system, LinearSystem, SolutionSpace};
use crate::sets;
use std::collections::{BTreeMap, BTreeSet};

/// A relevant variable of a test instance: its domain image carries a
/// congruence that mirrors the pair's blocks, with an isomorphism onto the
/// pair's quotient fixing the coordinates.
#[derive(Debug, Clone)]
pub struct RelevantVar {
    pub var: usize,
    /// Image of the pair's subuniverse through the direct constraint.
    pub image_mask: u64,
    /// Congruence on the materialized image algebra.
    pub alpha: Congruence,
    /// Image-local element -> block id (same ids as quotient elements).
    pub class_of_local: Vec<usize>,
    /// Image elements, local index -> parent element.
    pub elements: Vec<usize>,
    /// Quotient element of this variable -> quotient element of the pair.
    pub iso: Vec<usize>,
    /// Pair block id -> this variable's linked block id.
    pub block_link: Vec<usize>,
}

impl RelevantVar {
    /// Pair-quotient element for a parent domain element of this variable.
    pub fn pair_class_of_parent(&self, parent: usize) -> Option<usize> {
        let local = self.elements.binary_search(&parent).ok()?;
        Some(self.iso[self.class_of_local[local]])
    }
}

/// The compiled test instance: one block of GF(p) unknowns per relevant
/// variable, rows from every induced quotient constraint.
#[derive(Debug, Clone)]
pub struct TestInstance {
    pub var: usize,
    pub relevant: Vec<RelevantVar>,
    pub dim: usize,
    pub system: LinearSystem,
}

impl TestInstance {
    pub fn offset_of(&self, var: usize) -> Option<usize> {
        self.relevant.iter().position(|r| r.var == var).map(|i| i * self.dim)
    }

    pub fn solve(&self) -> SolutionSpace {
        solve_system(&self.system)
    }

    /// Tests whether fixing the pair variable to the given quotient element
    /// keeps the system satisfiable.
    pub fn block_appears(&self, pair: &TestPair, block: usize) -> Result<bool> {
        let offset = self
            .offset_of(self.var)
            .ok_or_else(|| Error::InternalInvariant("pair variable not in its own test instance".into()))?;
        let coords = pair.coord.encode_elem(block).to_vec();
        let fixings: Vec<(usize, u64)> =
            coords.iter().enumerate().map(|(j, &c)| (offset + j, c)).collect();
        let augmented = self.system.with_fixed(&fixings)?;
        Ok(solve_system(&augmented).is_sat())
    }

    /// Strands: for each pair block, the linked block in every relevant
    /// domain. Materialized on demand.
    pub fn strands(&self) -> Vec<Strand> {
        (0..self.relevant[0].block_link.len())
            .map(|t| Strand {
                theta_block: t,
                blocks: self.relevant.iter().map(|r| (r.var, r.block_link[t])).collect(),
            })
            .collect()
    }
}

/// A coherent choice of linked congruence blocks across the relevant
/// variables, one per block of the pair's congruence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strand {
    pub theta_block: usize,
    pub blocks: BTreeMap<usize, usize>,
}

/// Derives the relevant congruence of `y` for the given pair, or `None`
/// when `y` is not relevant. The congruence is generated by linking the
/// images of the pair's blocks through the direct constraint and closing
/// under the operations; `y` is relevant when distinct blocks land in
/// distinct classes and the quotient is isomorphic to the pair's quotient.
///
/// With `verify_paths`, the congruence is re-derived along every two-step
/// path pattern that separates the blocks over the same image, and any
/// disagreement is an internal error: on (2,3)-consistent instances the
/// derivation is path-independent.
pub fn relevant_congruence(
    b: &BinaryInstance,
    pair: &TestPair,
    y: usize,
    verify_paths: bool,
) -> Result<Option<RelevantVar>> {
    if y == pair.var {
        return Err(Error::Precondition("a pair variable is trivially relevant to itself".into()));
    }
    let rel = b.constraint(pair.var, y).ok_or_else(|| {
        Error::Precondition(format!(
            "no constraint ({}, {y}); relevant congruences need a (2,3)-consistent instance",
            pair.var
        ))
    })?;
    let block_images: Vec<u64> =
        (0..pair.block_count()).map(|t| rel.image(pair.block_mask(t))).collect();
    let derived = derive_alpha(b, &block_images)?;
    let Some((alpha, elements, class_of_local, block_link)) = derived else {
        return Ok(None);
    };

    // the quotient must mirror the pair's simple affine module
    let image_mask = sets::mask_of(elements.iter().copied());
    let sub = subalgebra(b.algebra().as_ref(), image_mask)?;
    let q = quotient(&sub.algebra, &alpha)?;
    let Some(iso) = find_isomorphism(&q.algebra, &pair.quotient.algebra)? else {
        return Ok(None);
    };

    if verify_paths {
        verify_path_independence(b, pair, y, image_mask, &alpha, &elements)?;
    }

    Ok(Some(RelevantVar {
        var: y,
        image_mask,
        alpha,
        class_of_local,
        elements,
        iso,
        block_link,
    }))
}

type AlphaParts = (Congruence, Vec<usize>, Vec<usize>, Vec<usize>);

/// Builds the candidate congruence on the union of the block images:
/// linked elements merged, then closed under the operations. Returns `None`
/// when two distinct blocks collapse into one class.
fn derive_alpha(b: &BinaryInstance, block_images: &[u64]) -> Result<Option<AlphaParts>> {
    let image_mask = block_images.iter().fold(0u64, |acc, &m| acc | m);
    if block_images.iter().any(|&m| m == 0) {
        // an empty block image cannot separate anything
        return Ok(None);
    }
    let sub = subalgebra(b.algebra().as_ref(), image_mask)?;
    let elements = sub.elements.clone();
    let local = |parent: usize| elements.binary_search(&parent).expect("image element");

    let mut links: Vec<(usize, usize)> = Vec::new();
    for mask in block_images {
        let locals: Vec<usize> = sets::iter(*mask).map(local).collect();
        for w in locals.windows(2) {
            links.push((w[0], w[1]));
        }
    }
    let alpha = congruence_generated(&sub.algebra, &links);

    let mut block_link = Vec::with_capacity(block_images.len());
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for mask in block_images {
        let first = sets::iter(*mask).next().expect("nonempty image");
        let class = alpha.block_of(local(first));
        if !seen.insert(class) {
            return Ok(None); // two pair blocks collapsed: not separated
        }
        block_link.push(class);
    }
    let class_of_local: Vec<usize> = (0..elements.len()).map(|l| alpha.block_of(l)).collect();
    Ok(Some((alpha, elements, class_of_local, block_link)))
}

/// Re-derives the congruence along two-step patterns through every third
/// variable; patterns that reach the same image and still separate the
/// blocks must agree with the direct derivation.
fn verify_path_independence(
    b: &BinaryInstance,
    pair: &TestPair,
    y: usize,
    image_mask: u64,
    alpha: &Congruence,
    elements: &[usize],
) -> Result<()> {
    for z in 0..b.num_vars() {
        if z == y || z == pair.var {
            continue;
        }
        let (Some(rel_xz), Some(rel_zy)) = (b.constraint(pair.var, z), b.constraint(z, y)) else {
            continue;
        };
        let path_images: Vec<u64> = (0..pair.block_count())
            .map(|t| rel_zy.image(rel_xz.image(pair.block_mask(t))))
            .collect();
        let path_total = path_images.iter().fold(0u64, |acc, &m| acc | m);
        if path_total != image_mask {
            continue; // different carrier: nothing to compare
        }
        if let Some((alpha_path, elements_path, _, _)) = derive_alpha(b, &path_images)? {
            if elements_path.as_slice() == elements && &alpha_path != alpha {
                return Err(Error::InternalInvariant(format!(
                    "relevant congruence at variable {y} differs along the path through {z}"
                )));
            }
        }
    }
    Ok(())
}

/// Builds the test instance of a pair over a (2,3)-consistent instance:
/// the pair variable with its own congruence, every relevant variable with
/// its mirrored congruence, and one linear system collecting the compiled
/// quotient constraints. Every induced quotient constraint must be
/// subdirect (the test instance is 1-consistent).
pub fn build_test_instance(
    b: &BinaryInstance,
    pair: &TestPair,
    caps: &AffineCaps,
) -> Result<TestInstance> {
    let mut relevant: Vec<RelevantVar> = Vec::new();

    // the pair variable mirrors itself
    let self_classes: Vec<usize> =
        (0..pair.sub.elements.len()).map(|l| pair.theta.block_of(l)).collect();
    relevant.push(RelevantVar {
        var: pair.var,
        image_mask: pair.sub_mask,
        alpha: pair.theta.clone(),
        class_of_local: self_classes,
        elements: pair.sub.elements.clone(),
        iso: (0..pair.quotient.algebra.size()).collect(),
        block_link: (0..pair.block_count()).collect(),
    });
    for y in 0..b.num_vars() {
        if y == pair.var {
            continue;
        }
        if let Some(rv) = relevant_congruence(b, pair, y, caps.verify_paths)? {
            relevant.push(rv);
        }
    }

    let dim = pair.coord.dim;
    let total = relevant.len() * dim;
    let mut system = LinearSystem::empty(pair.coord.field, total);
    let quotient_size = pair.quotient.algebra.size();

    for i in 0..relevant.len() {
        for j in (i + 1)..relevant.len() {
            let (u, v) = (&relevant[i], &relevant[j]);
            let rel = b.constraint(u.var, v.var).ok_or_else(|| {
                Error::Precondition(format!(
                    "no constraint ({}, {}); test instances need a (2,3)-consistent instance",
                    u.var, v.var
                ))
            })?;
            let mut quotient_rel: BTreeSet<(usize, usize)> = BTreeSet::new();
            for a in sets::iter(u.image_mask) {
                for bb in sets::iter(rel.row(a) & v.image_mask) {
                    let qa = u.pair_class_of_parent(a).expect("image element");
                    let qb = v.pair_class_of_parent(bb).expect("image element");
                    quotient_rel.insert((qa, qb));
                }
            }
            // 1-consistency of the test instance
            let left: BTreeSet<usize> = quotient_rel.iter().map(|&(a, _)| a).collect();
            let right: BTreeSet<usize> = quotient_rel.iter().map(|&(_, bb)| bb).collect();
            if left.len() != quotient_size || right.len() != quotient_size {
                return Err(Error::InternalInvariant(format!(
                    "induced quotient constraint ({}, {}) is not subdirect",
                    u.var, v.var
                )));
            }
            let fragment = compile_binary_constraint(&quotient_rel, &pair.coord, &pair.coord)?;
            for (coeffs, c) in fragment.rows {
                let mut row = vec![0u64; total];
                for (k, &a) in coeffs.iter().enumerate() {
                    let col = if k < dim { i * dim + k } else { j * dim + (k - dim) };
                    row[col] = a;
                }
                system.push_row(row, c);
            }
        }
    }

    Ok(TestInstance { var: pair.var, relevant, dim, system })
}
