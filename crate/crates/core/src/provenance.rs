//! Process-wide logical clock used to order cover construction before data access.

use std::sync::atomic::{AtomicU64, Ordering};

static CLOCK: AtomicU64 = AtomicU64::new(1);

/// Next tick; strictly increasing across threads.
pub fn tick() -> u64 {
    CLOCK.fetch_add(1, Ordering::SeqCst)
}
