//! Shared helpers for the integration tests.
#![allow(dead_code)]

pub mod oracle;

use std::time::{Duration, Instant};

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

/// |a − b| relative to max(|b|, 1).
pub fn exponent_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
