//! Process-wide thread count for the matmul kernels.
//!
//! Defaults to the `PIFA_THREADS` environment variable, or 1 when unset.
//! Results are deterministic for any fixed thread count: threads split the
//! output rows, never the reduction dimension.

use std::sync::atomic::{AtomicUsize, Ordering};

pub const THREADS_ENV: &str = "PIFA_THREADS";

static THREADS: AtomicUsize = AtomicUsize::new(0);

pub fn num_threads() -> usize {
    match THREADS.load(Ordering::Relaxed) {
        0 => {
            let n = std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&n| n > 0)
                .unwrap_or(1);
            THREADS.store(n, Ordering::Relaxed);
            n
        }
        n => n,
    }
}

pub fn set_num_threads(n: usize) {
    THREADS.store(n.max(1), Ordering::Relaxed);
}
