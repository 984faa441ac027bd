//! Recognition of simple affine modules and compilation of binary
//! constraints between them into linear equations over GF(p).
//!
//! An algebra is handled as an affine module when some term operation `m`
//! within the depth bound satisfies the Maltsev identities, commutes with
//! every basic operation, and turns `x ⊞ y := m(x, zero, y)` into an
//! elementary abelian p-group. The group is then coordinatized as
//! GF(p)^dim and `m` acts as x - y + z on coordinates.

use super::{solve_system, LinearSystem, PrimeField};
use crate::algebra::{generate_clone, FiniteAlgebra, Term, TermTable};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Caps for the clone search behind recognition.
const CLONE_TABLE_CAP: usize = 4096;
const CLONE_APP_CAP: usize = 4_000_000;
/// Centrality is a full check over `size^(3·arity)` tuples; refuse beyond.
const CENTRALITY_TUPLE_CAP: usize = 50_000_000;

/// Coordinates for a simple affine module: a bijection between the universe
/// and GF(p)^dim under which the witnessing Maltsev term is x - y + z.
#[derive(Debug, Clone)]
pub struct AffineCoordinatization {
    pub field: PrimeField,
    pub dim: usize,
    /// Base element mapped to the zero vector (least universe element).
    pub zero: usize,
    /// Witnessing Maltsev term over the algebra's basic operations.
    pub maltsev: Term,
    /// Full ternary table of the Maltsev term operation.
    pub maltsev_table: Vec<usize>,
    /// Element -> coordinate vector.
    pub encode: Vec<Vec<u64>>,
    /// Row-major coordinate index -> element.
    pub decode: Vec<usize>,
}

impl AffineCoordinatization {
    pub fn encode_elem(&self, e: usize) -> &[u64] {
        &self.encode[e]
    }

    pub fn decode_coords(&self, coords: &[u64]) -> usize {
        let p = self.field.modulus() as usize;
        let idx = coords.iter().fold(0usize, |acc, &c| acc * p + c as usize);
        self.decode[idx]
    }

    pub fn maltsev_eval(&self, x: usize, y: usize, z: usize) -> usize {
        let n = self.encode.len();
        self.maltsev_table[(x * n + y) * n + z]
    }
}

/// Outcome of affine-module recognition.
#[derive(Debug, Clone)]
pub enum Recognition {
    Affine(AffineCoordinatization),
    /// No witness exists: the ternary clone was generated to a fixed point,
    /// so the negative is proven.
    AbsentProven,
    /// No witness found within the depth bound; the clone search was cut
    /// short, so this is a bounded-search negative, not a proof.
    AbsentAtBound,
}

impl Recognition {
    pub fn into_option(self) -> Option<AffineCoordinatization> {
        match self {
            Recognition::Affine(c) => Some(c),
            _ => None,
        }
    }
}

/// Searches the ternary clone of `alg` (breadth-first, up to
/// `term_depth_bound`) for a central Maltsev term and coordinatizes the
/// induced group when one is found.
pub fn recognize_affine_module(alg: &FiniteAlgebra, term_depth_bound: usize) -> Recognition {
    let n = alg.size();
    if n == 0 {
        return Recognition::AbsentAtBound;
    }
    let clone = generate_clone(alg, 3, term_depth_bound, CLONE_TABLE_CAP, CLONE_APP_CAP);
    for candidate in &clone.tables {
        if !is_maltsev_table(&candidate.table, n) {
            continue;
        }
        if !is_central(alg, candidate) {
            continue;
        }
        if let Some(coord) = coordinatize(alg, candidate) {
            return Recognition::Affine(coord);
        }
    }
    if clone.closed {
        Recognition::AbsentProven
    } else {
        Recognition::AbsentAtBound
    }
}

fn is_maltsev_table(table: &[usize], n: usize) -> bool {
    let at = |x: usize, y: usize, z: usize| table[(x * n + y) * n + z];
    (0..n).all(|x| (0..n).all(|y| at(x, y, y) == x && at(y, y, x) == x))
}

/// Does `m` commute with every basic operation (m is a homomorphism
/// A^3 -> A)? Full check over all argument tuples.
fn is_central(alg: &FiniteAlgebra, m: &TermTable) -> bool {
    let n = alg.size();
    for op in alg.ops() {
        let k = op.arity();
        let Some(total) = n.checked_pow(3 * k as u32).filter(|&t| t <= CENTRALITY_TUPLE_CAP) else {
            return false;
        };
        let mut xs = vec![0usize; k];
        let mut ys = vec![0usize; k];
        let mut zs = vec![0usize; k];
        let mut mixed = vec![0usize; k];
        for idx in 0..total {
            let mut rest = idx;
            for i in 0..k {
                xs[i] = rest % n;
                rest /= n;
                ys[i] = rest % n;
                rest /= n;
                zs[i] = rest % n;
                rest /= n;
            }
            for i in 0..k {
                mixed[i] = m.eval(&[xs[i], ys[i], zs[i]], n);
            }
            let lhs = op.eval(&mixed);
            let rhs = m.eval(&[op.eval(&xs), op.eval(&ys), op.eval(&zs)], n);
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

/// Checks that x ⊞ y = m(x, zero, y) is an elementary abelian p-group and
/// that m really is x - y + z for the resulting coordinates; builds the
/// coordinate maps with a greedy basis in element order.
fn coordinatize(alg: &FiniteAlgebra, m: &TermTable) -> Option<AffineCoordinatization> {
    let n = alg.size();
    let zero = 0usize;
    let plus = |x: usize, y: usize| m.eval(&[x, zero, y], n);

    // m(x,0,0)=x and m(0,0,y)=y already hold by the Maltsev identities
    for x in 0..n {
        for y in 0..n {
            if plus(x, y) != plus(y, x) {
                return None;
            }
            for z in 0..n {
                if plus(plus(x, y), z) != plus(x, plus(y, z)) {
                    return None;
                }
            }
        }
    }
    // inverses
    for x in 0..n {
        if !(0..n).any(|y| plus(x, y) == zero) {
            return None;
        }
    }
    // the universe size must be a prime power p^dim with every element of
    // order dividing p
    let (p, dim) = prime_power(n)?;
    for x in 0..n {
        let mut acc = zero;
        for _ in 0..p {
            acc = plus(acc, x);
        }
        if acc != zero {
            return None;
        }
    }

    // greedy basis in element order
    let mut span: BTreeSet<usize> = BTreeSet::from([zero]);
    let mut basis: Vec<usize> = Vec::new();
    for e in 0..n {
        if span.contains(&e) {
            continue;
        }
        basis.push(e);
        let snapshot: Vec<usize> = span.iter().copied().collect();
        for s in snapshot {
            let mut acc = s;
            for _ in 1..p {
                acc = plus(acc, e);
                span.insert(acc);
            }
        }
    }
    if basis.len() != dim || span.len() != n {
        return None;
    }

    // enumerate coordinates row-major over the basis
    let field = PrimeField::new(p as u64).ok()?;
    let mut encode = vec![Vec::new(); n];
    let mut decode = vec![usize::MAX; n];
    let mut coords = vec![0u64; dim];
    for idx in 0..n {
        let mut rest = idx;
        for c in (0..dim).rev() {
            coords[c] = (rest % p) as u64;
            rest /= p;
        }
        let mut elem = zero;
        for (c, &b) in basis.iter().enumerate() {
            for _ in 0..coords[c] {
                elem = plus(elem, b);
            }
        }
        if decode[idx] != usize::MAX {
            return None;
        }
        decode[idx] = elem;
        encode[elem] = coords.clone();
    }
    if encode.iter().any(Vec::is_empty) && dim > 0 {
        return None;
    }

    // m must act as x - y + z on coordinates
    let coord = AffineCoordinatization {
        field,
        dim,
        zero,
        maltsev: m.term.clone(),
        maltsev_table: m.table.clone(),
        encode,
        decode,
    };
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let expect: Vec<u64> = (0..dim)
                    .map(|c| {
                        field.add(field.sub(coord.encode[x][c], coord.encode[y][c]), coord.encode[z][c])
                    })
                    .collect();
                if coord.decode_coords(&expect) != m.eval(&[x, y, z], n) {
                    return None;
                }
            }
        }
    }
    Some(coord)
}

fn prime_power(n: usize) -> Option<(usize, usize)> {
    if n < 2 {
        return None;
    }
    let p = (2..=n).find(|d| n % d == 0)?;
    let mut rest = n;
    let mut dim = 0;
    while rest % p == 0 {
        rest /= p;
        dim += 1;
    }
    (rest == 1).then_some((p, dim))
}

/// Compiles a binary relation between two coordinatized affine modules into
/// equations over `dim(cx) + dim(cy)` unknowns whose solutions decode back
/// to exactly the relation. The relation must be closed under the Maltsev
/// terms of both sides (it is then a coset, hence an affine subspace).
pub fn compile_binary_constraint(
    rel: &BTreeSet<(usize, usize)>,
    cx: &AffineCoordinatization,
    cy: &AffineCoordinatization,
) -> Result<LinearSystem> {
    if rel.is_empty() {
        return Err(Error::Precondition("cannot compile an empty relation".into()));
    }
    if cx.field != cy.field {
        return Err(Error::Precondition(
            "constraint endpoints live over different prime fields".into(),
        ));
    }
    let field = cx.field;
    let width = cx.dim + cy.dim;

    let encode_pair = |&(a, b): &(usize, usize)| -> Vec<u64> {
        cx.encode_elem(a).iter().chain(cy.encode_elem(b)).copied().collect()
    };
    let mut points = rel.iter().map(encode_pair);
    let origin = points.next().expect("nonempty");
    let directions: Vec<Vec<u64>> = points
        .map(|pt| {
            pt.iter()
                .zip(&origin)
                .map(|(&v, &o)| field.sub(v, o))
                .collect()
        })
        .collect();

    // row space of the direction vectors
    let dir_sys = LinearSystem::new(
        field,
        width,
        directions.iter().map(|d| (d.clone(), 0)).collect(),
    )?;
    let reduced = solve_system(&dir_sys);
    let rank = reduced.rank;

    let expected = (0..rank).try_fold(1usize, |acc, _| {
        acc.checked_mul(field.modulus() as usize).filter(|&v| v <= 1 << 32)
    });
    if expected != Some(rel.len()) {
        return Err(Error::InternalInvariant(format!(
            "relation of size {} is not an affine subspace (direction rank {rank}); \
             the relation is not closed under the Maltsev terms",
            rel.len()
        )));
    }

    // annihilator of the direction space: kernel of the direction matrix
    let kernel = reduced.basis;
    let rows: Vec<(Vec<u64>, u64)> = kernel
        .into_iter()
        .map(|u| {
            let c = u
                .iter()
                .zip(&origin)
                .fold(0u64, |acc, (&a, &b)| field.add(acc, field.mul(a, b)));
            (u, c)
        })
        .collect();
    LinearSystem::new(field, width, rows)
}
