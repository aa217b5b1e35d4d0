//! Pulsed single-emitter photon source: closed-form photophysics, seeded
//! Monte Carlo detection streams, photon-counting statistics and nonlinear
//! saturation fitting.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, scenario
//! parsing, plotting and the command line live in the `photongun` crate.
//!
//! Units are fixed throughout: pulse energies in pJ, times in seconds, rates
//! in s⁻¹ (or counts/s), and photon timestamps as integer picoseconds from
//! the start of a run.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is the NaN-rejecting domain check used throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod linalg;

pub mod emitter;
pub mod fitting;
pub mod stats;
pub mod stream;

pub use error::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Picoseconds per second.
pub const PS_PER_S: f64 = 1e12;

/// Converts a positive duration in seconds to whole picoseconds.
pub fn seconds_to_ps(seconds: f64) -> Result<u64> {
    if !(seconds.is_finite() && seconds > 0.0) {
        return Err(Error::domain("duration must be positive and finite", seconds));
    }
    let ps = libm::round(seconds * PS_PER_S);
    if ps < 1.0 {
        return Err(Error::domain("duration is below the 1 ps timestamp resolution", seconds));
    }
    if ps >= u64::MAX as f64 {
        return Err(Error::domain("duration overflows the picosecond clock", seconds));
    }
    Ok(ps as u64)
}
