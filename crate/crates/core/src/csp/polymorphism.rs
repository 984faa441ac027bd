//! Search for special polymorphisms: Maltsev, majority, near-unanimity and
//! k-edge operations, via raw table enumeration on tiny domains and via the
//! indicator instance otherwise.

use super::{is_polymorphism, oracle_solve, Constraint, CspInstance, OracleConfig, RelationalTemplate};
use crate::algebra::{encode_power_tuple, OperationTable};
use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// The identity families are all two-variable conditions: a pattern over
/// {X, Y} on the left, a single variable on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternVar {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolymorphismKind {
    Maltsev,
    Majority,
    NearUnanimity(usize),
    KEdge(usize),
}

impl PolymorphismKind {
    pub fn arity(&self) -> Result<usize> {
        match *self {
            PolymorphismKind::Maltsev | PolymorphismKind::Majority => Ok(3),
            PolymorphismKind::NearUnanimity(l) => {
                if l < 3 {
                    return Err(Error::Precondition("near-unanimity needs arity >= 3".into()));
                }
                Ok(l)
            }
            PolymorphismKind::KEdge(k) => {
                if k < 2 {
                    return Err(Error::Precondition("k-edge needs k >= 2".into()));
                }
                Ok(k + 1)
            }
        }
    }

    /// The defining identities as (argument pattern, result variable).
    pub fn identities(&self) -> Result<Vec<(Vec<PatternVar>, PatternVar)>> {
        use PatternVar::{X, Y};
        let arity = self.arity()?;
        Ok(match *self {
            PolymorphismKind::Maltsev => {
                vec![(vec![X, Y, Y], X), (vec![Y, Y, X], X)]
            }
            PolymorphismKind::Majority | PolymorphismKind::NearUnanimity(_) => (0..arity)
                .map(|i| {
                    let mut pattern = vec![X; arity];
                    pattern[i] = Y;
                    (pattern, X)
                })
                .collect(),
            PolymorphismKind::KEdge(k) => {
                let mut ids = Vec::new();
                let mut first = vec![Y; arity];
                first[0] = X;
                first[1] = X;
                ids.push((first, Y));
                let mut second = vec![Y; arity];
                second[0] = X;
                second[2] = X;
                ids.push((second, Y));
                for i in 3..=k {
                    let mut pattern = vec![Y; arity];
                    pattern[i] = X;
                    ids.push((pattern, Y));
                }
                ids
            }
        })
    }

    pub fn describe(&self) -> String {
        match *self {
            PolymorphismKind::Maltsev => "maltsev".into(),
            PolymorphismKind::Majority => "majority".into(),
            PolymorphismKind::NearUnanimity(l) => format!("nu{l}"),
            PolymorphismKind::KEdge(k) => format!("edge{k}"),
        }
    }
}

/// Checks the identity family directly against a full table.
pub fn satisfies_identities(table: &OperationTable, kind: PolymorphismKind) -> Result<bool> {
    let arity = kind.arity()?;
    if table.arity() != arity {
        return Err(Error::ArityMismatch { expected: arity, got: table.arity() });
    }
    let d = table.universe_size();
    let identities = kind.identities()?;
    let mut args = vec![0usize; arity];
    for x in 0..d {
        for y in 0..d {
            for (pattern, result) in &identities {
                for (slot, pv) in args.iter_mut().zip(pattern) {
                    *slot = match pv {
                        PatternVar::X => x,
                        PatternVar::Y => y,
                    };
                }
                let expect = match result {
                    PatternVar::X => x,
                    PatternVar::Y => y,
                };
                if table.eval(&args) != expect {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

const RAW_ENUMERATION_CAP: f64 = 1_000_000.0;
const INDICATOR_VAR_CAP: usize = 4096;

/// Finds an operation table of the requested kind preserving every relation
/// of the template, or `None` when provably absent. Small candidate spaces
/// are enumerated exhaustively; otherwise the indicator instance (one
/// variable per argument tuple) is built and solved with the oracle. Both
/// routes are complete, so `None` is a proof of absence; exceeding a cap is
/// an error instead.
pub fn find_special_polymorphism(
    t: &RelationalTemplate,
    kind: PolymorphismKind,
    oracle_cfg: &OracleConfig,
) -> Result<Option<OperationTable>> {
    let arity = kind.arity()?;
    let d = t.domain_size();
    let table_len = d
        .checked_pow(arity as u32)
        .ok_or_else(|| Error::ResourceLimit("argument-tuple space too large".into()))?;

    let candidates = (d as f64).powf(table_len as f64);
    let result = if candidates <= RAW_ENUMERATION_CAP {
        enumerate_tables(t, kind, arity, table_len)?
    } else {
        indicator_search(t, kind, arity, table_len, oracle_cfg)?
    };

    if let Some(found) = &result {
        // independent re-check of both the identities and preservation
        if !satisfies_identities(found, kind)? || !is_polymorphism(t, found)? {
            return Err(Error::InternalInvariant(format!(
                "search produced a bogus {} table",
                kind.describe()
            )));
        }
    }
    Ok(result)
}

fn enumerate_tables(
    t: &RelationalTemplate,
    kind: PolymorphismKind,
    arity: usize,
    table_len: usize,
) -> Result<Option<OperationTable>> {
    let d = t.domain_size();
    let mut table = vec![0usize; table_len];
    loop {
        let op = OperationTable::new(kind.describe(), arity, d, table.clone())?;
        if satisfies_identities(&op, kind)? && is_polymorphism(t, &op)? {
            return Ok(Some(op));
        }
        let mut pos = table_len;
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            table[pos] += 1;
            if table[pos] < d {
                break;
            }
            table[pos] = 0;
        }
    }
}

/// The indicator instance: one variable per `arity`-tuple of domain
/// elements; every relation constrains the columns of every choice of
/// tuples, and the identities pin pattern tuples to singleton values.
fn indicator_search(
    t: &RelationalTemplate,
    kind: PolymorphismKind,
    arity: usize,
    table_len: usize,
    oracle_cfg: &OracleConfig,
) -> Result<Option<OperationTable>> {
    if table_len > INDICATOR_VAR_CAP {
        return Err(Error::ResourceLimit(format!(
            "indicator instance would have {table_len} variables (cap {INDICATOR_VAR_CAP}); \
             the search is bounded"
        )));
    }
    let d = t.domain_size();
    // singleton relations are required to express the identities
    let augmented;
    let template = if (0..d).all(|a| t.singleton_index(a).is_some()) {
        t
    } else {
        augmented = RelationalTemplate::new(d, t.relations().to_vec(), true)?;
        &augmented
    };

    let variables: Vec<String> = (0..table_len).map(|e| format!("t{e}")).collect();
    let mut constraints: BTreeSet<Constraint> = BTreeSet::new();

    for (rel_idx, rel) in template.relations().iter().enumerate() {
        let tuples: Vec<&Vec<usize>> = rel.tuples().iter().collect();
        if tuples.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; arity];
        'outer: loop {
            let scope: Vec<usize> = (0..rel.arity())
                .map(|coord| {
                    let column: Vec<usize> = choice.iter().map(|&i| tuples[i][coord]).collect();
                    encode_power_tuple(&column, d)
                })
                .collect();
            constraints.insert(Constraint { relation: rel_idx, scope });
            let mut pos = arity;
            loop {
                if pos == 0 {
                    break 'outer;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < tuples.len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }

    for (pattern, result) in kind.identities()? {
        for x in 0..d {
            for y in 0..d {
                let tuple: Vec<usize> = pattern
                    .iter()
                    .map(|pv| match pv {
                        PatternVar::X => x,
                        PatternVar::Y => y,
                    })
                    .collect();
                let expect = match result {
                    PatternVar::X => x,
                    PatternVar::Y => y,
                };
                let rel = template
                    .singleton_index(expect)
                    .ok_or_else(|| Error::InternalInvariant("singleton relation missing".into()))?;
                constraints.insert(Constraint {
                    relation: rel,
                    scope: vec![encode_power_tuple(&tuple, d)],
                });
            }
        }
    }

    let instance = CspInstance::new(template, variables, constraints.into_iter().collect())?;
    let solution = oracle_solve(template, &instance, oracle_cfg)?;
    Ok(match solution {
        Some(table) => Some(OperationTable::new(kind.describe(), arity, d, table)?),
        None => None,
    })
}
