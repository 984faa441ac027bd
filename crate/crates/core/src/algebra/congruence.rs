//! Congruences: compatible partitions, principal-congruence generation,
//! the congruence lattice, quotients, and linkedness congruences of a
//! binary subdirect relation.

use super::{FiniteAlgebra, OperationTable};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

pub const DEFAULT_CONGRUENCE_CAP: usize = 12;

/// A partition of an algebra universe, stored as element -> block id.
/// Block ids are canonical: numbered by first occurrence, so equal
/// partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Congruence {
    blocks: Vec<usize>,
    block_count: usize,
}

impl Congruence {
    pub fn from_blocks(blocks: Vec<usize>) -> Self {
        let mut canon = vec![usize::MAX; blocks.len()];
        let mut next = 0usize;
        let mut map: Vec<Option<usize>> = vec![None; blocks.len()];
        for (e, &b) in blocks.iter().enumerate() {
            let id = *map[b].get_or_insert_with(|| {
                let id = next;
                next += 1;
                id
            });
            canon[e] = id;
        }
        Congruence { blocks: canon, block_count: next }
    }

    /// The diagonal relation: every element in its own block.
    pub fn zero(n: usize) -> Self {
        Congruence { blocks: (0..n).collect(), block_count: n }
    }

    /// The full relation: a single block.
    pub fn one(n: usize) -> Self {
        Congruence { blocks: vec![0; n], block_count: n.min(1) }
    }

    pub fn universe_size(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_count(&self) -> usize {
        self.block_count
    }

    pub fn block_of(&self, e: usize) -> usize {
        self.blocks[e]
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.blocks[a] == self.blocks[b]
    }

    pub fn is_zero(&self) -> bool {
        self.block_count == self.blocks.len()
    }

    pub fn is_one(&self) -> bool {
        self.block_count <= 1
    }

    /// Blocks as sorted element sets, ordered by block id.
    pub fn block_sets(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.block_count];
        for (e, &b) in self.blocks.iter().enumerate() {
            out[b].push(e);
        }
        out
    }

    /// Refinement order: `self <= other` iff every block of `self` is
    /// contained in a block of `other`.
    pub fn leq(&self, other: &Congruence) -> bool {
        debug_assert_eq!(self.blocks.len(), other.blocks.len());
        let mut image = vec![usize::MAX; self.block_count];
        for e in 0..self.blocks.len() {
            let mine = self.blocks[e];
            let theirs = other.blocks[e];
            if image[mine] == usize::MAX {
                image[mine] = theirs;
            } else if image[mine] != theirs {
                return false;
            }
        }
        true
    }

    /// Join in the congruence lattice: the transitive closure of the union.
    pub fn join(&self, other: &Congruence) -> Congruence {
        let n = self.blocks.len();
        let mut uf = UnionFind::new(n);
        for e in 1..n {
            for prev in 0..e {
                if self.same_block(e, prev) || other.same_block(e, prev) {
                    uf.union(e, prev);
                }
            }
        }
        uf.into_congruence()
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        // anchor the smaller root so canonical ids follow element order
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    pub fn into_congruence(mut self) -> Congruence {
        let n = self.parent.len();
        let blocks: Vec<usize> = (0..n).map(|e| self.find(e)).collect();
        Congruence::from_blocks(blocks)
    }
}

/// Full compatibility check: substituting related elements one position at
/// a time never moves an operation value across blocks.
pub fn is_congruence(alg: &FiniteAlgebra, part: &Congruence) -> bool {
    if part.universe_size() != alg.size() {
        return false;
    }
    for op in alg.ops() {
        if !compatible_single_coordinate(op, part) {
            return false;
        }
    }
    true
}

fn compatible_single_coordinate(op: &OperationTable, part: &Congruence) -> bool {
    let n = op.universe_size();
    let arity = op.arity();
    let mut args = vec![0usize; arity];
    let count = n.pow(arity as u32);
    for idx in 0..count {
        super::decode_args(idx, n, &mut args);
        let base = op.eval(&args);
        for pos in 0..arity {
            let orig = args[pos];
            for alt in 0..n {
                if alt != orig && part.same_block(orig, alt) {
                    args[pos] = alt;
                    if !part.same_block(base, op.eval(&args)) {
                        args[pos] = orig;
                        return false;
                    }
                }
            }
            args[pos] = orig;
        }
    }
    true
}

/// Least congruence of `alg` containing all the given pairs: a fixed point
/// of merging followed by closing under single-coordinate substitutions.
pub fn congruence_generated(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Congruence {
    let n = alg.size();
    let mut uf = UnionFind::new(n);
    let mut queue: Vec<(usize, usize)> = pairs.to_vec();
    while let Some((a, b)) = queue.pop() {
        if !uf.union(a, b) {
            continue;
        }
        for op in alg.ops() {
            let arity = op.arity();
            let mut args = vec![0usize; arity];
            let others = n.pow(arity as u32 - 1);
            for pos in 0..arity {
                for rest in 0..others {
                    let mut r = rest;
                    for (slot, arg) in args.iter_mut().enumerate() {
                        if slot == pos {
                            continue;
                        }
                        *arg = r % n;
                        r /= n;
                    }
                    args[pos] = a;
                    let ra = op.eval(&args);
                    args[pos] = b;
                    let rb = op.eval(&args);
                    if uf.find(ra) != uf.find(rb) {
                        queue.push((ra, rb));
                    }
                }
            }
        }
    }
    uf.into_congruence()
}

/// Least congruence merging the single pair `(a, b)`.
pub fn principal_congruence(alg: &FiniteAlgebra, a: usize, b: usize) -> Congruence {
    congruence_generated(alg, &[(a, b)])
}

/// Every congruence of `alg`: the principal congruences closed under joins,
/// together with the diagonal. Errors out when `alg.size() > cap`.
pub fn all_congruences(alg: &FiniteAlgebra, cap: usize) -> Result<Vec<Congruence>> {
    let n = alg.size();
    if n > cap {
        return Err(Error::ResourceLimit(format!(
            "congruence enumeration needs size <= {cap}, algebra has {n}"
        )));
    }
    let mut found: BTreeSet<Congruence> = BTreeSet::new();
    found.insert(Congruence::zero(n));
    for a in 0..n {
        for b in (a + 1)..n {
            found.insert(principal_congruence(alg, a, b));
        }
    }
    // close under joins
    loop {
        let snapshot: Vec<Congruence> = found.iter().cloned().collect();
        let mut grew = false;
        for i in 0..snapshot.len() {
            for j in (i + 1)..snapshot.len() {
                let joined = snapshot[i].join(&snapshot[j]);
                if found.insert(joined) {
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(found.into_iter().collect())
}

/// Congruences with nothing strictly between them and the full relation;
/// equivalently those whose quotient is simple. Empty for the one-element
/// algebra, where the diagonal and the full relation coincide.
pub fn maximal_congruences(alg: &FiniteAlgebra, cap: usize) -> Result<Vec<Congruence>> {
    let n = alg.size();
    let all = all_congruences(alg, cap)?;
    let one = Congruence::one(n);
    let candidates: Vec<&Congruence> = all.iter().filter(|c| **c != one).collect();
    Ok(candidates
        .iter()
        .filter(|c| {
            !candidates
                .iter()
                .any(|other| *other != **c && c.leq(other))
        })
        .map(|c| (*c).clone())
        .collect())
}

/// True iff the only congruences are the diagonal and the full relation.
/// One-element algebras are rejected as degenerate rather than classified.
pub fn is_simple(alg: &FiniteAlgebra, cap: usize) -> Result<bool> {
    if alg.size() == 1 {
        return Err(Error::DegenerateAlgebra(
            "simplicity is undefined for a one-element algebra".into(),
        ));
    }
    Ok(all_congruences(alg, cap)?.len() == 2)
}

/// The quotient algebra together with the block map.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub algebra: FiniteAlgebra,
    /// Parent element -> quotient element (block id).
    pub class_of: Vec<usize>,
    /// Quotient element -> least parent representative.
    pub representatives: Vec<usize>,
}

/// Forms `alg / theta`. Fails when the partition is not compatible.
pub fn quotient(alg: &FiniteAlgebra, theta: &Congruence) -> Result<Quotient> {
    if theta.universe_size() != alg.size() {
        return Err(Error::IncompatiblePartition(format!(
            "partition over {} elements, algebra has {}",
            theta.universe_size(),
            alg.size()
        )));
    }
    if !is_congruence(alg, theta) {
        return Err(Error::IncompatiblePartition(format!(
            "partition {:?} is not preserved by the operations of {}",
            theta.block_sets(),
            alg.name()
        )));
    }
    let m = theta.block_count();
    let mut representatives = vec![usize::MAX; m];
    for e in 0..alg.size() {
        let b = theta.block_of(e);
        if representatives[b] == usize::MAX {
            representatives[b] = e;
        }
    }
    let ops = alg
        .ops()
        .iter()
        .map(|op| {
            OperationTable::from_fn(op.name(), op.arity(), m, |args| {
                let parent_args: Vec<usize> = args.iter().map(|&a| representatives[a]).collect();
                theta.block_of(op.eval(&parent_args))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let algebra = FiniteAlgebra::new(format!("{}/θ", alg.name()), m, ops)?;
    Ok(Quotient { algebra, class_of: theta.blocks.clone(), representatives })
}

/// Linkedness congruences of a binary relation subdirect in `a x b`:
/// the transitive closure on A of "a ~ a' iff they share a neighbour in R",
/// and dually on B. The relation must be nonempty and subdirect; when it is
/// closed under the coordinatewise operations, the outputs are congruences
/// (asserted).
pub fn linkedness_congruences(
    rel: &BTreeSet<(usize, usize)>,
    a: &FiniteAlgebra,
    b: &FiniteAlgebra,
) -> Result<(Congruence, Congruence)> {
    if rel.is_empty() {
        return Err(Error::Precondition("linkedness of an empty relation".into()));
    }
    let proj_a: BTreeSet<usize> = rel.iter().map(|&(x, _)| x).collect();
    let proj_b: BTreeSet<usize> = rel.iter().map(|&(_, y)| y).collect();
    if proj_a.len() != a.size() || proj_b.len() != b.size() {
        return Err(Error::Precondition(format!(
            "relation is not subdirect: projections {}x{} in a {}x{} product",
            proj_a.len(),
            proj_b.len(),
            a.size(),
            b.size()
        )));
    }
    if rel.iter().any(|&(x, y)| x >= a.size() || y >= b.size()) {
        return Err(Error::Precondition("relation entry outside universes".into()));
    }
    let mut uf_a = UnionFind::new(a.size());
    let mut uf_b = UnionFind::new(b.size());
    let mut by_b: Vec<Vec<usize>> = vec![Vec::new(); b.size()];
    let mut by_a: Vec<Vec<usize>> = vec![Vec::new(); a.size()];
    for &(x, y) in rel {
        by_b[y].push(x);
        by_a[x].push(y);
    }
    for xs in &by_b {
        for w in xs.windows(2) {
            uf_a.union(w[0], w[1]);
        }
    }
    for ys in &by_a {
        for w in ys.windows(2) {
            uf_b.union(w[0], w[1]);
        }
    }
    let alpha = uf_a.into_congruence();
    let beta = uf_b.into_congruence();
    if !is_congruence(a, &alpha) || !is_congruence(b, &beta) {
        return Err(Error::InternalInvariant(
            "linkedness classes are not congruences; input relation was not closed".into(),
        ));
    }
    Ok((alpha, beta))
}
