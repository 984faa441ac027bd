//! Reduction of an arbitrary instance to a syntactically simple binary one
//! over a power of the parametrizing algebra.
//!
//! New variables are introduced for unordered variable groups of size
//! `ceil(K/2)` where `K = max(p, k-1)`, `p` the maximal constraint arity
//! and `k` the edge parameter; a group's domain consists of the locally
//! consistent value tuples and a pair of groups is constrained to the
//! jointly consistent combinations. When the group size is 1 the output is
//! the instance's own binary form.

use super::{BinaryInstance, Rel};
use crate::algebra::{decode_power_tuple, FiniteAlgebra};
use crate::csp::{CspInstance, RelationalTemplate};
use crate::error::{Error, Result};
use crate::sets;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

/// Binarizes `instance` over powers of `algebra` (the algebra of the
/// template's edge polymorphism). `edge_k` is the edge parameter, so the
/// grouping width is `ceil(max(p, edge_k - 1) / 2)`.
pub fn binarize(
    template: &RelationalTemplate,
    instance: &CspInstance,
    algebra: &Arc<FiniteAlgebra>,
    edge_k: usize,
) -> Result<BinaryInstance> {
    if algebra.size() != template.domain_size() {
        return Err(Error::Precondition(format!(
            "algebra universe {} does not match template domain {}",
            algebra.size(),
            template.domain_size()
        )));
    }
    if edge_k < 2 {
        return Err(Error::Precondition("edge parameter must be at least 2".into()));
    }
    let max_arity = instance
        .constraints()
        .iter()
        .map(|c| c.scope.len())
        .max()
        .unwrap_or(1);
    let level = max_arity.max(edge_k - 1);
    let group_width = level.div_ceil(2);

    if group_width == 1 {
        binary_form(template, instance, algebra)
    } else {
        grouped_form(template, instance, algebra, group_width)
    }
}

/// Direct binary form: unary constraints restrict domains, binary ones
/// intersect into the (symmetric) constraint map.
fn binary_form(
    template: &RelationalTemplate,
    instance: &CspInstance,
    algebra: &Arc<FiniteAlgebra>,
) -> Result<BinaryInstance> {
    let d = template.domain_size();
    let mut domains = vec![sets::full(d); instance.num_vars()];
    let mut binary: Vec<(usize, usize, Rel)> = Vec::new();
    for c in instance.constraints() {
        let rel = &template.relations()[c.relation];
        match c.scope.as_slice() {
            [x] => {
                let allowed = sets::mask_of(rel.tuples().iter().map(|t| t[0]));
                domains[*x] &= allowed;
            }
            [x, y] if x == y => {
                let allowed =
                    sets::mask_of(rel.tuples().iter().filter(|t| t[0] == t[1]).map(|t| t[0]));
                domains[*x] &= allowed;
            }
            [x, y] => {
                binary.push((*x, *y, Rel::from_pairs(d, rel.tuples().iter().map(|t| (t[0], t[1])))));
            }
            _ => {
                return Err(Error::InternalInvariant(
                    "binary form requested for an instance with wider constraints".into(),
                ))
            }
        }
    }
    let mut out = BinaryInstance::new(
        algebra.clone(),
        instance.variables().to_vec(),
        domains,
        BTreeMap::new(),
    )?;
    for (x, y, rel) in binary {
        out.add_constraint(x, y, rel)?;
    }
    Ok(out)
}

fn grouped_form(
    template: &RelationalTemplate,
    instance: &CspInstance,
    algebra: &Arc<FiniteAlgebra>,
    width: usize,
) -> Result<BinaryInstance> {
    let n = instance.num_vars();
    let d = template.domain_size();
    let power = Arc::new(algebra.power(width)?);
    let psize = power.size();
    if psize > sets::MAX_UNIVERSE {
        return Err(Error::ResourceLimit(format!(
            "grouped universe has {psize} elements; at most {} are supported",
            sets::MAX_UNIVERSE
        )));
    }

    // unordered groups; a short instance gets one padded group
    let groups: Vec<Vec<usize>> = if n < width {
        let mut g: Vec<usize> = (0..n).collect();
        g.resize(width, n - 1);
        vec![g]
    } else {
        subsets_of_size(n, width)
    };

    let group_names: Vec<String> = groups
        .iter()
        .map(|g| {
            let names: Vec<&str> = g.iter().map(|&v| instance.variables()[v].as_str()).collect();
            names.join("|")
        })
        .collect();

    // constraints indexed by their variable set for the containment tests
    let scopes: Vec<(BTreeSet<usize>, usize)> = instance
        .constraints()
        .iter()
        .enumerate()
        .map(|(i, c)| (c.scope.iter().copied().collect(), i))
        .collect();

    let satisfied = |assignment: &BTreeMap<usize, usize>, constraint_idx: usize| -> bool {
        let c = &instance.constraints()[constraint_idx];
        let tuple: Vec<usize> = c.scope.iter().map(|v| assignment[v]).collect();
        template.relations()[c.relation].tuples().contains(&tuple)
    };

    // a group's own domain: internally consistent tuples
    let mut domains = Vec::with_capacity(groups.len());
    for g in &groups {
        let gset: BTreeSet<usize> = g.iter().copied().collect();
        let local: Vec<usize> = scopes
            .iter()
            .filter(|(s, _)| s.is_subset(&gset))
            .map(|&(_, i)| i)
            .collect();
        let mut mask = 0u64;
        'next_value: for e in 0..psize {
            let tuple = decode_power_tuple(e, d, width);
            let mut assignment: BTreeMap<usize, usize> = BTreeMap::new();
            for (pos, &v) in g.iter().enumerate() {
                if let Some(&prev) = assignment.get(&v) {
                    if prev != tuple[pos] {
                        continue 'next_value;
                    }
                }
                assignment.insert(v, tuple[pos]);
            }
            if local.iter().all(|&i| satisfied(&assignment, i)) {
                mask |= sets::bit(e);
            }
        }
        domains.push(mask);
    }

    let mut out = BinaryInstance::new(power, group_names, domains.clone(), BTreeMap::new())?;

    // pairwise joint consistency
    for i in 0..groups.len() {
        for j in (i + 1)..groups.len() {
            let union: BTreeSet<usize> =
                groups[i].iter().chain(groups[j].iter()).copied().collect();
            let covered: Vec<usize> = scopes
                .iter()
                .filter(|(s, _)| s.is_subset(&union))
                .map(|&(_, idx)| idx)
                .collect();
            let mut rel = Rel::empty(psize);
            for e1 in sets::iter(domains[i]) {
                let t1 = decode_power_tuple(e1, d, width);
                'next_pair: for e2 in sets::iter(domains[j]) {
                    let t2 = decode_power_tuple(e2, d, width);
                    let mut assignment: BTreeMap<usize, usize> = BTreeMap::new();
                    for (pos, &v) in groups[i].iter().enumerate() {
                        assignment.insert(v, t1[pos]);
                    }
                    for (pos, &v) in groups[j].iter().enumerate() {
                        if let Some(&prev) = assignment.get(&v) {
                            if prev != t2[pos] {
                                continue 'next_pair;
                            }
                        }
                        assignment.insert(v, t2[pos]);
                    }
                    if covered.iter().all(|&idx| satisfied(&assignment, idx)) {
                        rel.rows[e1] |= sets::bit(e2);
                    }
                }
            }
            out.add_constraint(i, j, rel)?;
        }
    }
    Ok(out)
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(n: usize, k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for v in start..n {
            current.push(v);
            rec(n, k, v + 1, current, out);
            current.pop();
        }
    }
    rec(n, k, 0, &mut current, &mut out);
    out
}
