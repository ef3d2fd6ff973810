//! Thread-local operation counters.
//!
//! Every estimator's apply path reports its work here: the exact baseline
//! records multiply-adds, the hash encoder records comparisons, the table
//! aggregator records lookups. Counts are tied to the loop trip counts of
//! the code that does the work, so `snapshot() - reset()` around a call
//! yields the operation totals for that call.
//!
//! The affine output step (scale/offset application after aggregation) is
//! deliberately not counted: the accounting covers the encode and aggregate
//! path, where the zero-multiply claim lives.

use std::cell::Cell;

thread_local! {
    static MULTIPLIES: Cell<u64> = const { Cell::new(0) };
    static COMPARISONS: Cell<u64> = const { Cell::new(0) };
    static LOOKUPS: Cell<u64> = const { Cell::new(0) };
}

/// Totals accumulated on the current thread since the last [`reset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounts {
    pub multiplies: u64,
    pub comparisons: u64,
    pub lookups: u64,
}

/// Zero all counters on the current thread.
pub fn reset() {
    MULTIPLIES.with(|c| c.set(0));
    COMPARISONS.with(|c| c.set(0));
    LOOKUPS.with(|c| c.set(0));
}

/// Read the current totals without resetting them.
pub fn snapshot() -> OpCounts {
    OpCounts {
        multiplies: MULTIPLIES.with(Cell::get),
        comparisons: COMPARISONS.with(Cell::get),
        lookups: LOOKUPS.with(Cell::get),
    }
}

pub(crate) fn add_multiplies(n: u64) {
    MULTIPLIES.with(|c| c.set(c.get() + n));
}

pub(crate) fn add_comparisons(n: u64) {
    COMPARISONS.with(|c| c.set(c.get() + n));
}

pub(crate) fn add_lookups(n: u64) {
    LOOKUPS.with(|c| c.set(c.get() + n));
}
