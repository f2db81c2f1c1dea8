//! Process-wide count of outbound network requests.
//!
//! Every HTTP client in the crate calls [`record_outbound`] before sending,
//! which lets offline runs assert that nothing left the machine.

use std::sync::atomic::{AtomicU64, Ordering};

static OUTBOUND: AtomicU64 = AtomicU64::new(0);

pub fn record_outbound() {
    OUTBOUND.fetch_add(1, Ordering::SeqCst);
}

pub fn outbound_requests() -> u64 {
    OUTBOUND.load(Ordering::SeqCst)
}
