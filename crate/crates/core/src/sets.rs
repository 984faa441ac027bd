//! Small element sets as 64-bit masks.
//!
//! Binary instances never carry more than 64 domain elements (the
//! binarization step enforces this), so domains, relation rows and fact
//! stores are plain `u64` masks throughout the propagation engines.

use std::collections::BTreeSet;

pub const MAX_UNIVERSE: usize = 64;

#[inline]
pub fn bit(e: usize) -> u64 {
    debug_assert!(e < MAX_UNIVERSE);
    1u64 << e
}

#[inline]
pub fn contains(mask: u64, e: usize) -> bool {
    mask & bit(e) != 0
}

#[inline]
pub fn is_subset(a: u64, b: u64) -> bool {
    a & !b == 0
}

/// Mask with the `n` lowest bits set.
#[inline]
pub fn full(n: usize) -> u64 {
    debug_assert!(n <= MAX_UNIVERSE);
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn mask_of<I: IntoIterator<Item = usize>>(elems: I) -> u64 {
    elems.into_iter().fold(0, |m, e| m | bit(e))
}

/// Ascending iterator over the elements of a mask.
pub fn iter(mask: u64) -> impl Iterator<Item = usize> {
    std::iter::successors(Some(mask), |&m| (m != 0).then(|| m & (m - 1)))
        .take_while(|&m| m != 0)
        .map(|m| m.trailing_zeros() as usize)
}

pub fn to_set(mask: u64) -> BTreeSet<usize> {
    iter(mask).collect()
}

pub fn to_vec(mask: u64) -> Vec<usize> {
    iter(mask).collect()
}
