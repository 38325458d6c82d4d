//! Saturating cost arithmetic with a distinguished infinity.

/// Unreachable / dead-end marker for integer costs.
pub const INFINITY: u64 = u64::MAX;

/// Largest finite cost; sums that would exceed it stop here.
pub const MAX_FINITE: u64 = u64::MAX - 1;

#[inline]
pub fn add(a: u64, b: u64) -> u64 {
    if a == INFINITY || b == INFINITY {
        INFINITY
    } else {
        a.checked_add(b).map_or(MAX_FINITE, |s| s.min(MAX_FINITE))
    }
}

#[inline]
pub fn is_finite(c: u64) -> bool {
    c != INFINITY
}
