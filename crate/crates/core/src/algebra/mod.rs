//! Finite universal algebra kernel: operation tables, term evaluation,
//! subuniverse closure, powers, subalgebras and isomorphism search.
//!
//! Universe elements are always 0-based integers; any external labels are
//! mapped at the file-format boundary. All basic operations are required
//! to be idempotent.

mod congruence;
mod iso;

pub use congruence::{
    all_congruences, congruence_generated, is_congruence, is_simple, linkedness_congruences,
    maximal_congruences, principal_congruence, quotient, Congruence, Quotient,
    DEFAULT_CONGRUENCE_CAP,
};
pub use iso::find_isomorphism;

use crate::error::{Error, Result};
use crate::sets;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// A finitary operation on `{0, .., size-1}` stored as a dense table in
/// row-major canonical order: the first argument varies slowest.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OperationTable {
    name: String,
    arity: usize,
    size: usize,
    table: Vec<usize>,
}

impl OperationTable {
    pub fn new(name: impl Into<String>, arity: usize, size: usize, table: Vec<usize>) -> Result<Self> {
        let name = name.into();
        if arity == 0 {
            return Err(Error::InvalidAlgebra(format!("operation {name} has arity 0")));
        }
        if size == 0 {
            return Err(Error::InvalidAlgebra(format!("operation {name} over empty universe")));
        }
        let expected = size
            .checked_pow(arity as u32)
            .ok_or_else(|| Error::ResourceLimit(format!("table for {name} too large")))?;
        if table.len() != expected {
            return Err(Error::InvalidAlgebra(format!(
                "operation {name}: table has {} entries, expected {expected}",
                table.len()
            )));
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= size) {
            return Err(Error::InvalidAlgebra(format!(
                "operation {name}: entry {bad} outside universe 0..{size}"
            )));
        }
        Ok(OperationTable { name, arity, size, table })
    }

    /// Builds a table by evaluating `f` on every argument tuple.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        size: usize,
        mut f: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self> {
        let mut args = vec![0usize; arity];
        let len = size
            .checked_pow(arity as u32)
            .ok_or_else(|| Error::ResourceLimit("operation table too large".into()))?;
        let mut table = Vec::with_capacity(len);
        for idx in 0..len {
            decode_args(idx, size, &mut args);
            table.push(f(&args));
        }
        OperationTable::new(name, arity, size, table)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn universe_size(&self) -> usize {
        self.size
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    #[inline]
    pub fn eval(&self, args: &[usize]) -> usize {
        debug_assert_eq!(args.len(), self.arity);
        let mut idx = 0usize;
        for &a in args {
            debug_assert!(a < self.size);
            idx = idx * self.size + a;
        }
        self.table[idx]
    }

    pub fn is_idempotent(&self) -> bool {
        (0..self.size).all(|a| self.eval(&vec![a; self.arity]) == a)
    }

    /// Applies the operation coordinatewise to `arity` many `k`-tuples.
    pub fn apply_coordinatewise(&self, tuples: &[Vec<usize>]) -> Result<Vec<usize>> {
        if tuples.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: tuples.len() });
        }
        let k = tuples.first().map_or(0, Vec::len);
        if tuples.iter().any(|t| t.len() != k) {
            return Err(Error::Precondition("coordinatewise apply: tuple lengths differ".into()));
        }
        let mut out = Vec::with_capacity(k);
        let mut args = vec![0usize; self.arity];
        for coord in 0..k {
            for (slot, tuple) in args.iter_mut().zip(tuples) {
                *slot = tuple[coord];
            }
            out.push(self.eval(&args));
        }
        Ok(out)
    }
}

fn decode_args(mut idx: usize, size: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % size;
        idx /= size;
    }
}

/// A finite idempotent algebra: a universe `{0, .., size-1}` together with
/// a list of basic operations given as full tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    ops: Vec<OperationTable>,
}

impl FiniteAlgebra {
    pub fn new(name: impl Into<String>, size: usize, ops: Vec<OperationTable>) -> Result<Self> {
        let name = name.into();
        if size == 0 {
            return Err(Error::InvalidAlgebra(format!("algebra {name} has empty universe")));
        }
        for op in &ops {
            if op.universe_size() != size {
                return Err(Error::InvalidAlgebra(format!(
                    "algebra {name}: operation {} is over universe {}, expected {size}",
                    op.name(),
                    op.universe_size()
                )));
            }
            if !op.is_idempotent() {
                return Err(Error::InvalidAlgebra(format!(
                    "algebra {name}: operation {} is not idempotent",
                    op.name()
                )));
            }
        }
        Ok(FiniteAlgebra { name, size, ops })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn ops(&self) -> &[OperationTable] {
        &self.ops
    }

    pub fn op(&self, idx: usize) -> &OperationTable {
        &self.ops[idx]
    }

    /// Arities of the basic operations, in declaration order.
    pub fn signature(&self) -> Vec<usize> {
        self.ops.iter().map(OperationTable::arity).collect()
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.size
    }

    /// The `exponent`-th direct power, materialized as a concrete algebra.
    /// Element `e` encodes the tuple obtained by writing `e` in base `size`
    /// with the first coordinate most significant.
    pub fn power(&self, exponent: usize) -> Result<FiniteAlgebra> {
        if exponent == 0 {
            return Err(Error::Precondition("power exponent must be positive".into()));
        }
        let psize = self
            .size
            .checked_pow(exponent as u32)
            .filter(|&s| s <= 1 << 20)
            .ok_or_else(|| Error::ResourceLimit("power universe too large".into()))?;
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            psize
                .checked_pow(op.arity() as u32)
                .filter(|&s| s <= 1 << 24)
                .ok_or_else(|| Error::ResourceLimit("power operation table too large".into()))?;
            let mut base_args = vec![0usize; op.arity()];
            let table = OperationTable::from_fn(op.name(), op.arity(), psize, |args| {
                let mut result = 0usize;
                for coord in 0..exponent {
                    for (slot, &arg) in base_args.iter_mut().zip(args) {
                        *slot = power_coord(arg, self.size, exponent, coord);
                    }
                    result = result * self.size + op.eval(&base_args);
                }
                result
            })?;
            ops.push(table);
        }
        FiniteAlgebra::new(format!("{}^{}", self.name, exponent), psize, ops)
    }

    /// Closure of a scalar element set under all basic operations.
    /// Requires a universe of at most 64 elements.
    pub fn close_mask(&self, mask: u64) -> u64 {
        assert!(self.size <= sets::MAX_UNIVERSE, "close_mask needs universe <= 64");
        let mut current = mask;
        loop {
            let mut next = current;
            for op in &self.ops {
                let elems = sets::to_vec(current);
                for_each_tuple(elems.len(), op.arity(), |choice| {
                    let args: Vec<usize> = choice.iter().map(|&i| elems[i]).collect();
                    next |= sets::bit(op.eval(&args));
                });
            }
            if next == current {
                return current;
            }
            current = next;
        }
    }

    /// True when the element set is nonempty and closed under every basic
    /// operation.
    pub fn is_subuniverse(&self, mask: u64) -> bool {
        mask != 0 && self.close_mask(mask) == mask
    }
}

impl fmt::Display for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (size {}, ops", self.name, self.size)?;
        for op in &self.ops {
            write!(f, " {}/{}", op.name(), op.arity())?;
        }
        write!(f, ")")
    }
}

#[inline]
pub fn power_coord(encoded: usize, base: usize, exponent: usize, coord: usize) -> usize {
    let shift = exponent - 1 - coord;
    (encoded / base.pow(shift as u32)) % base
}

pub fn encode_power_tuple(tuple: &[usize], base: usize) -> usize {
    tuple.iter().fold(0, |acc, &t| acc * base + t)
}

pub fn decode_power_tuple(encoded: usize, base: usize, exponent: usize) -> Vec<usize> {
    (0..exponent).map(|c| power_coord(encoded, base, exponent, c)).collect()
}

/// Enumerates all `arity`-tuples (with repetition) of indices `< n`,
/// in lexicographic order.
fn for_each_tuple(n: usize, arity: usize, mut f: impl FnMut(&[usize])) {
    if n == 0 {
        return;
    }
    let mut choice = vec![0usize; arity];
    loop {
        f(&choice);
        let mut pos = arity;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < n {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// A term: a finite tree whose leaves are variable indices and whose
/// internal nodes name basic operations of a fixed algebra.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Term {
    arity: usize,
    root: TermNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermNode {
    Var(usize),
    App { op: usize, args: Vec<TermNode> },
}

impl Term {
    pub fn new(arity: usize, root: TermNode) -> Result<Self> {
        fn check(node: &TermNode, arity: usize) -> Result<()> {
            match node {
                TermNode::Var(v) if *v >= arity => Err(Error::MalformedTerm(format!(
                    "variable x{v} outside declared arity {arity}"
                ))),
                TermNode::Var(_) => Ok(()),
                TermNode::App { args, .. } => args.iter().try_for_each(|a| check(a, arity)),
            }
        }
        check(&root, arity)?;
        Ok(Term { arity, root })
    }

    pub fn var(arity: usize, index: usize) -> Result<Self> {
        Term::new(arity, TermNode::Var(index))
    }

    /// Depth of the formation tree; a bare variable has depth 0.
    pub fn depth(&self) -> usize {
        fn depth(node: &TermNode) -> usize {
            match node {
                TermNode::Var(_) => 0,
                TermNode::App { args, .. } => 1 + args.iter().map(depth).max().unwrap_or(0),
            }
        }
        depth(&self.root)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn root(&self) -> &TermNode {
        &self.root
    }

    /// `self` applied to `inner.arity`-wide blocks of fresh variables,
    /// each block evaluated through `inner`. The result has arity
    /// `self.arity * inner.arity`.
    pub fn compose_blocks(&self, inner: &Term) -> Result<Term> {
        fn shift(node: &TermNode, offset: usize) -> TermNode {
            match node {
                TermNode::Var(v) => TermNode::Var(v + offset),
                TermNode::App { op, args } => TermNode::App {
                    op: *op,
                    args: args.iter().map(|a| shift(a, offset)).collect(),
                },
            }
        }
        fn substitute(node: &TermNode, blocks: &[TermNode]) -> TermNode {
            match node {
                TermNode::Var(v) => blocks[*v].clone(),
                TermNode::App { op, args } => TermNode::App {
                    op: *op,
                    args: args.iter().map(|a| substitute(a, blocks)).collect(),
                },
            }
        }
        let blocks: Vec<TermNode> = (0..self.arity)
            .map(|i| shift(&inner.root, i * inner.arity))
            .collect();
        Term::new(self.arity * inner.arity, substitute(&self.root, &blocks))
    }

    /// Renders the term with operation names from `alg`, e.g. `m(x0,m(x1,x1,x2),x2)`.
    pub fn render(&self, alg: &FiniteAlgebra) -> String {
        fn render(node: &TermNode, alg: &FiniteAlgebra, out: &mut String) {
            match node {
                TermNode::Var(v) => out.push_str(&format!("x{v}")),
                TermNode::App { op, args } => {
                    out.push_str(alg.op(*op).name());
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        render(a, alg, out);
                    }
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        render(&self.root, alg, &mut out);
        out
    }
}

/// Evaluates the term operation induced by `t` on the given arguments.
pub fn evaluate_term(alg: &FiniteAlgebra, t: &Term, args: &[usize]) -> Result<usize> {
    if args.len() != t.arity() {
        return Err(Error::ArityMismatch { expected: t.arity(), got: args.len() });
    }
    if let Some(&bad) = args.iter().find(|&&a| a >= alg.size()) {
        return Err(Error::Precondition(format!("argument {bad} outside universe")));
    }
    fn eval(node: &TermNode, alg: &FiniteAlgebra, args: &[usize]) -> Result<usize> {
        match node {
            TermNode::Var(v) => Ok(args[*v]),
            TermNode::App { op, args: children } => {
                let table = alg.ops().get(*op).ok_or_else(|| {
                    Error::MalformedTerm(format!("operation index {op} out of range"))
                })?;
                if children.len() != table.arity() {
                    return Err(Error::MalformedTerm(format!(
                        "operation {} applied to {} arguments",
                        table.name(),
                        children.len()
                    )));
                }
                let vals = children
                    .iter()
                    .map(|c| eval(c, alg, args))
                    .collect::<Result<Vec<_>>>()?;
                Ok(table.eval(&vals))
            }
        }
    }
    eval(&t.root, alg, args)
}

/// Term applied coordinatewise to `t.arity` many `k`-tuples.
pub fn apply_term_coordinatewise(
    alg: &FiniteAlgebra,
    t: &Term,
    tuples: &[Vec<usize>],
) -> Result<Vec<usize>> {
    if tuples.len() != t.arity() {
        return Err(Error::ArityMismatch { expected: t.arity(), got: tuples.len() });
    }
    let k = tuples.first().map_or(0, Vec::len);
    if tuples.iter().any(|tu| tu.len() != k) {
        return Err(Error::Precondition("coordinatewise apply: tuple lengths differ".into()));
    }
    let mut out = Vec::with_capacity(k);
    let mut args = vec![0usize; t.arity()];
    for coord in 0..k {
        for (slot, tuple) in args.iter_mut().zip(tuples) {
            *slot = tuple[coord];
        }
        out.push(evaluate_term(alg, t, &args)?);
    }
    Ok(out)
}

/// Least superset of `generators` closed under all basic operations applied
/// coordinatewise to `width`-tuples over `alg`.
pub fn generate_subuniverse(
    alg: &FiniteAlgebra,
    width: usize,
    generators: &BTreeSet<Vec<usize>>,
) -> Result<BTreeSet<Vec<usize>>> {
    if generators.is_empty() {
        return Err(Error::Precondition("empty generator set".into()));
    }
    for g in generators {
        if g.len() != width {
            return Err(Error::Precondition(format!(
                "generator width {} does not match {width}",
                g.len()
            )));
        }
        if g.iter().any(|&e| e >= alg.size()) {
            return Err(Error::Precondition("generator outside universe".into()));
        }
    }
    let mut closed: BTreeSet<Vec<usize>> = generators.clone();
    loop {
        let elems: Vec<Vec<usize>> = closed.iter().cloned().collect();
        let mut fresh: Vec<Vec<usize>> = Vec::new();
        for op in alg.ops() {
            for_each_tuple(elems.len(), op.arity(), |choice| {
                let tuples: Vec<Vec<usize>> = choice.iter().map(|&i| elems[i].clone()).collect();
                let image = op.apply_coordinatewise(&tuples).expect("validated widths");
                if !closed.contains(&image) {
                    fresh.push(image);
                }
            });
        }
        if fresh.is_empty() {
            return Ok(closed);
        }
        closed.extend(fresh);
    }
}

/// All subuniverses of the subuniverse `domain` that are generated by at
/// most `max_generators` elements, plus `domain` itself. Sorted by
/// cardinality, then by element set. Errors out if more than `cap`
/// subuniverses appear.
pub fn subuniverses_generated(
    alg: &FiniteAlgebra,
    domain: u64,
    max_generators: usize,
    cap: usize,
) -> Result<Vec<u64>> {
    let elems = sets::to_vec(domain);
    let mut found: BTreeSet<u64> = BTreeSet::new();
    found.insert(domain);
    let mut stack: Vec<(usize, Vec<usize>)> = vec![(0, Vec::new())];
    while let Some((start, chosen)) = stack.pop() {
        if !chosen.is_empty() {
            let closure = alg.close_mask(sets::mask_of(chosen.iter().copied()));
            debug_assert!(sets::is_subset(closure, domain));
            found.insert(closure);
            if found.len() > cap {
                return Err(Error::ResourceLimit(format!(
                    "more than {cap} subuniverses in a domain of size {}",
                    elems.len()
                )));
            }
        }
        if chosen.len() < max_generators {
            for (offset, &e) in elems[start..].iter().enumerate() {
                let mut next = chosen.clone();
                next.push(e);
                stack.push((start + offset + 1, next));
            }
        }
    }
    let mut out: Vec<u64> = found.into_iter().collect();
    out.sort_by_key(|&m| (m.count_ones(), sets::to_vec(m)));
    Ok(out)
}

/// A subuniverse materialized as an algebra of its own, together with the
/// index maps into the parent universe.
#[derive(Debug, Clone)]
pub struct Subalgebra {
    pub algebra: FiniteAlgebra,
    /// Local index -> parent element, ascending.
    pub elements: Vec<usize>,
}

impl Subalgebra {
    pub fn to_parent(&self, local: usize) -> usize {
        self.elements[local]
    }

    pub fn to_local(&self, parent: usize) -> Option<usize> {
        self.elements.binary_search(&parent).ok()
    }

    pub fn parent_mask(&self) -> u64 {
        sets::mask_of(self.elements.iter().copied())
    }
}

/// Restricts `alg` to the subuniverse `mask`, re-indexing elements to
/// `0..mask.count_ones()`.
pub fn subalgebra(alg: &FiniteAlgebra, mask: u64) -> Result<Subalgebra> {
    if mask == 0 {
        return Err(Error::Precondition("empty subuniverse".into()));
    }
    if !alg.is_subuniverse(mask) {
        return Err(Error::Precondition(format!(
            "{:?} is not closed under the operations of {}",
            sets::to_vec(mask),
            alg.name()
        )));
    }
    let elements = sets::to_vec(mask);
    let local: HashMap<usize, usize> =
        elements.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let ops = alg
        .ops()
        .iter()
        .map(|op| {
            OperationTable::from_fn(op.name(), op.arity(), elements.len(), |args| {
                let parent_args: Vec<usize> = args.iter().map(|&a| elements[a]).collect();
                local[&op.eval(&parent_args)]
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let algebra = FiniteAlgebra::new(format!("{}|{:?}", alg.name(), elements), elements.len(), ops)?;
    Ok(Subalgebra { algebra, elements })
}

/// One entry of a generated clone: a term together with its full table.
#[derive(Debug, Clone)]
pub struct TermTable {
    pub term: Term,
    pub table: Vec<usize>,
    pub depth: usize,
}

impl TermTable {
    #[inline]
    pub fn eval(&self, args: &[usize], size: usize) -> usize {
        let mut idx = 0usize;
        for &a in args {
            idx = idx * size + a;
        }
        self.table[idx]
    }
}

/// Result of a breadth-first clone generation at a fixed arity.
#[derive(Debug, Clone)]
pub struct CloneSearch {
    pub tables: Vec<TermTable>,
    /// True when the search reached a fixed point: `tables` is then the
    /// complete set of term operations of this arity.
    pub closed: bool,
}

/// Generates term operations of the given arity breadth-first from the
/// projections, memoizing tables to deduplicate. Stops at `max_depth`
/// composition depth, or earlier if `max_tables` distinct tables or an
/// evaluation budget of `max_evals` table entries are exceeded.
pub fn generate_clone(
    alg: &FiniteAlgebra,
    arity: usize,
    max_depth: usize,
    max_tables: usize,
    max_evals: usize,
) -> CloneSearch {
    let size = alg.size();
    let tlen = size.pow(arity as u32);
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut tables: Vec<TermTable> = Vec::new();

    for v in 0..arity {
        let mut table = Vec::with_capacity(tlen);
        let mut args = vec![0usize; arity];
        for idx in 0..tlen {
            decode_args(idx, size, &mut args);
            table.push(args[v]);
        }
        seen.insert(table.clone(), tables.len());
        tables.push(TermTable { term: Term::var(arity, v).expect("projection"), table, depth: 0 });
    }

    let mut evals = 0usize;
    let mut closed = false;
    for depth in 1..=max_depth {
        let level_start = tables.len();
        let existing = tables.len();
        let mut budget_hit = false;
        for (op_idx, op) in alg.ops().iter().enumerate() {
            for_each_tuple(existing, op.arity(), |choice| {
                if budget_hit || evals + tlen > max_evals {
                    budget_hit = true;
                    return;
                }
                evals += tlen;
                // at least one argument from the previous level keeps this BFS
                if depth > 1 && !choice.iter().any(|&i| tables[i].depth == depth - 1) {
                    return;
                }
                let mut table = Vec::with_capacity(tlen);
                for idx in 0..tlen {
                    let args: Vec<usize> = choice.iter().map(|&c| tables[c].table[idx]).collect();
                    table.push(op.eval(&args));
                }
                if seen.contains_key(&table) {
                    return;
                }
                if tables.len() >= max_tables {
                    budget_hit = true;
                    return;
                }
                let term = Term::new(
                    arity,
                    TermNode::App {
                        op: op_idx,
                        args: choice.iter().map(|&c| tables[c].term.root().clone()).collect(),
                    },
                )
                .expect("arity preserved");
                seen.insert(table.clone(), tables.len());
                tables.push(TermTable { term, table, depth });
            });
        }
        if budget_hit {
            closed = false;
            break;
        }
        if tables.len() == level_start {
            closed = true;
            break;
        }
        if depth == max_depth {
            // bound reached while the last level still produced new tables
            closed = false;
        }
    }
    CloneSearch { tables, closed }
}

#[cfg(test)]
mod tests;
