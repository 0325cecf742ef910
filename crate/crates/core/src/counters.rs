//! Per-thread operation counters.
//!
//! Every distribution log-density evaluated through [`crate::Scalar`] bumps
//! `density_evals`; every term fed to a scalar `log_sum_exp` bumps
//! `lse_terms`. The counts are the hardware-independent cost measure that the
//! benchmark reports next to wall time.

use std::cell::Cell;
use std::ops::{Add, Sub};

thread_local! {
    static DENSITY_EVALS: Cell<u64> = const { Cell::new(0) };
    static LSE_TERMS: Cell<u64> = const { Cell::new(0) };
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub density_evals: u64,
    pub lse_terms: u64,
}

impl OpCounts {
    pub fn snapshot() -> Self {
        OpCounts {
            density_evals: DENSITY_EVALS.with(Cell::get),
            lse_terms: LSE_TERMS.with(Cell::get),
        }
    }
}

impl Add for OpCounts {
    type Output = OpCounts;
    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            density_evals: self.density_evals + o.density_evals,
            lse_terms: self.lse_terms + o.lse_terms,
        }
    }
}

impl Sub for OpCounts {
    type Output = OpCounts;
    fn sub(self, o: OpCounts) -> OpCounts {
        OpCounts {
            density_evals: self.density_evals - o.density_evals,
            lse_terms: self.lse_terms - o.lse_terms,
        }
    }
}

/// Runs `f` and returns the operations it performed on this thread.
pub fn measure<R>(f: impl FnOnce() -> R) -> (R, OpCounts) {
    let before = OpCounts::snapshot();
    let out = f();
    (out, OpCounts::snapshot() - before)
}

#[inline]
pub(crate) fn record_density() {
    DENSITY_EVALS.with(|c| c.set(c.get() + 1));
}

#[inline]
pub(crate) fn record_lse(n: usize) {
    LSE_TERMS.with(|c| c.set(c.get() + n as u64));
}
