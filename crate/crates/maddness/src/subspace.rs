//! Column partition shared by the hash-based and PQ codebooks: contiguous
//! blocks, with the first `d % c` blocks one column wider.

use std::ops::Range;

pub fn partition_columns(d: usize, c: usize) -> Vec<Range<usize>> {
    debug_assert!(c >= 1 && c <= d);
    let base = d / c;
    let extra = d % c;
    let mut out = Vec::with_capacity(c);
    let mut start = 0;
    for i in 0..c {
        let width = base + usize::from(i < extra);
        out.push(start..start + width);
        start += width;
    }
    debug_assert_eq!(start, d);
    out
}
