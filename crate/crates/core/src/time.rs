//! Virtual time.
//!
//! All simulation time is integer milliseconds. Durations in configuration
//! and scenario files are written in seconds and converted once.

/// Virtual time or duration in milliseconds.
pub type Millis = u64;

/// Converts a non-negative duration in seconds to whole milliseconds,
/// flooring sub-millisecond remainders.
///
/// Values within 1e-6 ms of an integer snap to it so that decimal literals
/// such as `2.3` (which is `2299.9999…` after multiplication) land on the
/// intended millisecond.
pub fn secs_to_ms(secs: f64) -> Millis {
    let ms = secs * 1000.0;
    let nearest = ms.round();
    if (ms - nearest).abs() < 1e-6 {
        nearest as Millis
    } else {
        ms.floor() as Millis
    }
}

/// Milliseconds to seconds.
pub fn ms_to_secs(ms: Millis) -> f64 {
    ms as f64 / 1000.0
}
