//! Isomorphism search between finite algebras of the same signature.

use super::FiniteAlgebra;
use crate::error::{Error, Result};

/// Finds a bijection commuting with every pair of basic operations, or
/// `None` when the algebras are not isomorphic. Algebras must have matching
/// operation arities in declaration order. The search assigns images in
/// element order and returns the lexicographically least isomorphism.
pub fn find_isomorphism(a: &FiniteAlgebra, b: &FiniteAlgebra) -> Result<Option<Vec<usize>>> {
    if a.signature() != b.signature() {
        return Err(Error::SignatureMismatch { left: a.signature(), right: b.signature() });
    }
    if a.size() != b.size() {
        return Ok(None);
    }
    let n = a.size();
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    if assign(a, b, 0, &mut image, &mut used) {
        Ok(Some(image))
    } else {
        Ok(None)
    }
}

fn assign(a: &FiniteAlgebra, b: &FiniteAlgebra, next: usize, image: &mut [usize], used: &mut [bool]) -> bool {
    let n = a.size();
    if next == n {
        return true;
    }
    for candidate in 0..n {
        if used[candidate] {
            continue;
        }
        image[next] = candidate;
        used[candidate] = true;
        if commutes_on_assigned(a, b, next, image) && assign(a, b, next + 1, image, used) {
            return true;
        }
        used[candidate] = false;
        image[next] = usize::MAX;
    }
    false
}

/// Checks every operation tuple whose arguments are all assigned and whose
/// value is assigned; `next` is the most recently mapped element.
fn commutes_on_assigned(a: &FiniteAlgebra, b: &FiniteAlgebra, next: usize, image: &[usize]) -> bool {
    let assigned = next + 1;
    for (op_a, op_b) in a.ops().iter().zip(b.ops()) {
        let arity = op_a.arity();
        let mut args = vec![0usize; arity];
        let count = assigned.pow(arity as u32);
        for idx in 0..count {
            let mut rest = idx;
            let mut involves_next = false;
            for slot in args.iter_mut() {
                *slot = rest % assigned;
                rest /= assigned;
                involves_next |= *slot == next;
            }
            let value = op_a.eval(&args);
            if !involves_next && value != next {
                continue; // already checked at an earlier depth
            }
            if image[value] == usize::MAX {
                continue; // value not mapped yet; re-checked once it is
            }
            let mapped: Vec<usize> = args.iter().map(|&x| image[x]).collect();
            if op_b.eval(&mapped) != image[value] {
                return false;
            }
        }
    }
    true
}
