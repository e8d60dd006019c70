//! Fault injection used by mutation tests of the verification command.

use std::sync::atomic::{AtomicBool, Ordering};

static FLIP_BETA_SIGN: AtomicBool = AtomicBool::new(false);

/// When set, every β coefficient handed to the Δ kernel has its sign flipped.
pub fn set_flip_beta_sign(on: bool) {
    FLIP_BETA_SIGN.store(on, Ordering::SeqCst);
}

pub(crate) fn flip_beta_sign() -> bool {
    FLIP_BETA_SIGN.load(Ordering::Relaxed)
}
