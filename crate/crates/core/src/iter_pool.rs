//! Shared iteration pool.
//!
//! All scheduling works over normalized indices `[0, NI)`; [`IterationSpace`]
//! maps them back to user indices at the call boundary.

use std::ops::Range;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported iteration count. Leaves headroom in the `u64` cursor so
/// that overshoot from concurrent takes can never wrap.
pub const MAX_ITERATIONS: u64 = 1 << 62;

/// A loop's iteration range `start, start + increment, ...` up to (excluding)
/// `end_exclusive`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSpace {
    start: i64,
    end_exclusive: i64,
    increment: i64,
    count: u64,
}

impl IterationSpace {
    pub fn new(start: i64, end_exclusive: i64, increment: i64) -> Result<Self> {
        if increment == 0 {
            return Err(Error::InvalidSpace("zero increment".into()));
        }
        let (span, step) = if increment > 0 {
            (end_exclusive as i128 - start as i128, increment as i128)
        } else {
            (start as i128 - end_exclusive as i128, -(increment as i128))
        };
        let count = if span <= 0 {
            0
        } else {
            ((span + step - 1) / step) as u128
        };
        if count > MAX_ITERATIONS as u128 {
            return Err(Error::InvalidSpace(format!(
                "{count} iterations exceeds the supported maximum of 2^62"
            )));
        }
        Ok(Self {
            start,
            end_exclusive,
            increment,
            count: count as u64,
        })
    }

    /// `0..n` with unit stride.
    pub fn with_len(n: u64) -> Result<Self> {
        let end = i64::try_from(n)
            .map_err(|_| Error::InvalidSpace(format!("{n} iterations do not fit in i64")))?;
        Self::new(0, end, 1)
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end_exclusive(&self) -> i64 {
        self.end_exclusive
    }

    pub fn increment(&self) -> i64 {
        self.increment
    }

    /// Total iteration count (NI).
    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// User index for normalized index `i` (`i < len()`).
    #[inline]
    pub fn index(&self, i: u64) -> i64 {
        debug_assert!(i < self.count);
        (self.start as i128 + i as i128 * self.increment as i128) as i64
    }

    /// All user indices in order.
    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.count).map(move |i| self.index(i))
    }
}

/// Lock-free pool of normalized iterations, consumed with a single
/// fetch-and-add per removal.
#[derive(Debug)]
pub struct SharedPool {
    next: AtomicU64,
    end: u64,
}

impl SharedPool {
    pub fn new(space: &IterationSpace) -> Self {
        Self::with_len(space.len())
    }

    pub fn with_len(len: u64) -> Self {
        assert!(len <= MAX_ITERATIONS, "pool length exceeds 2^62");
        Self {
            next: AtomicU64::new(0),
            end: len,
        }
    }

    /// Removes up to `amount` iterations. Returns `None` once the pool is
    /// exhausted; the last non-empty range may be shorter than `amount`.
    #[inline]
    pub fn try_take(&self, amount: u64) -> Option<Range<u64>> {
        debug_assert!(amount >= 1);
        // Callers never request more than the pool length, and the pool
        // length is at most 2^62, so overshoot stays far from wrapping.
        let amount = amount.min(MAX_ITERATIONS);
        let old = self.next.fetch_add(amount, Ordering::Relaxed);
        if old >= self.end {
            return None;
        }
        Some(old..(old + amount).min(self.end))
    }

    /// Snapshot of the number of unassigned iterations.
    #[inline]
    pub fn remaining(&self) -> u64 {
        self.end.saturating_sub(self.next.load(Ordering::Relaxed))
    }

    /// Raw cursor value; may exceed `len()` after concurrent takes.
    pub fn cursor(&self) -> u64 {
        self.next.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> u64 {
        self.end
    }

    pub fn is_empty(&self) -> bool {
        self.end == 0
    }

    #[cfg(test)]
    pub(crate) fn with_cursor(len: u64, next: u64) -> Self {
        Self {
            next: AtomicU64::new(next),
            end: len,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    #[test]
    fn space_counts() {
        assert_eq!(IterationSpace::new(0, 100, 1).unwrap().len(), 100);
        assert_eq!(IterationSpace::new(0, 0, 1).unwrap().len(), 0);
        let s = IterationSpace::new(0, 10, 3).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.indices().collect::<Vec<_>>(), vec![0, 3, 6, 9]);
        let s = IterationSpace::new(10, 0, -4).unwrap();
        assert_eq!(s.indices().collect::<Vec<_>>(), vec![10, 6, 2]);
        assert_eq!(IterationSpace::new(5, 0, 1).unwrap().len(), 0);
        assert!(matches!(
            IterationSpace::new(0, 10, 0),
            Err(Error::InvalidSpace(_))
        ));
    }

    #[test]
    fn pool_init() {
        let pool = SharedPool::new(&IterationSpace::new(0, 100, 1).unwrap());
        assert_eq!((pool.cursor(), pool.len()), (0, 100));
        let pool = SharedPool::new(&IterationSpace::new(0, 10, 3).unwrap());
        assert_eq!(pool.len(), 4);
        assert!(SharedPool::new(&IterationSpace::new(0, 0, 1).unwrap()).is_empty());
    }

    #[test]
    fn take_and_remaining() {
        let pool = SharedPool::with_len(10);
        assert_eq!(pool.try_take(4), Some(0..4));
        let pool = SharedPool::with_cursor(10, 8);
        assert_eq!(pool.try_take(4), Some(8..10));
        assert_eq!(pool.try_take(1), None);
        assert_eq!(SharedPool::with_cursor(10, 3).remaining(), 7);
        assert_eq!(SharedPool::with_cursor(10, 10).remaining(), 0);
        assert_eq!(SharedPool::with_cursor(10, 12).remaining(), 0);
    }

    #[test]
    fn exactly_once_under_contention() {
        for threads in [1usize, 2, 7, 16, 64] {
            let len = 20_000u64;
            let pool = Arc::new(SharedPool::with_len(len));
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let pool = Arc::clone(&pool);
                    std::thread::spawn(move || {
                        let mut got = Vec::new();
                        let mut amount = 1 + t as u64 % 13;
                        let mut last = None;
                        while let Some(r) = pool.try_take(amount) {
                            if let Some(prev) = last {
                                assert!(r.start > prev, "per-caller monotonicity");
                            }
                            last = Some(r.start);
                            got.push(r);
                            amount = amount * 7 % 31 + 1;
                        }
                        got
                    })
                })
                .collect();
            let mut seen = vec![0u8; len as usize];
            for h in handles {
                for r in h.join().unwrap() {
                    for i in r {
                        seen[i as usize] += 1;
                    }
                }
            }
            assert!(seen.iter().all(|&c| c == 1), "threads={threads}");
        }
    }

    proptest! {
        #[test]
        fn indices_stay_in_bounds(start in -1000i64..1000, len in 0i64..500, step in 1i64..17, neg in any::<bool>()) {
            let (s, e, inc) = if neg { (start + len, start, -step) } else { (start, start + len, step) };
            let space = IterationSpace::new(s, e, inc).unwrap();
            let expected = (len + step - 1) / step;
            prop_assert_eq!(space.len() as i64, expected);
            for idx in space.indices() {
                if neg {
                    prop_assert!(idx <= s && idx > e);
                } else {
                    prop_assert!(idx >= s && idx < e);
                }
            }
        }

        #[test]
        fn sequential_takes_partition(len in 0u64..2000, amounts in proptest::collection::vec(1u64..50, 1..40)) {
            let pool = SharedPool::with_len(len);
            let mut covered = 0u64;
            let mut k = 0;
            while let Some(r) = pool.try_take(amounts[k % amounts.len()]) {
                prop_assert_eq!(r.start, covered);
                covered = r.end;
                k += 1;
            }
            prop_assert_eq!(covered, len);
            prop_assert_eq!(pool.remaining(), 0);
        }
    }
}
