//! Frequency-domain multi-user detection for single-carrier massive MIMO
//! with a cyclic prefix.
//!
//! The cyclic prefix turns every antenna/user channel into a circulant
//! matrix, so after a DFT the uplink splits into `N` independent narrowband
//! problems `y_n = A_n s_n + w_n`. This crate provides
//!
//! * [`channel`]: exponential-profile multipath channels and the per-bin
//!   matrices `A_n`,
//! * [`frame`]: symbol generation and a literal prefix/convolution/noise
//!   transmit path,
//! * [`detect`]: per-bin MMSE, MRC-MMSE, matched filter, and the low/high
//!   SNR limit detectors,
//! * [`precode`]: the downlink MMSE precoder that reuses the uplink `K x K`
//!   inverses,
//! * [`harness`]: multiply counts, SINR measurement, and the Monte-Carlo
//!   sweep.

pub mod channel;
pub mod detect;
pub mod error;
pub mod frame;
pub mod harness;
pub mod numerics;
pub mod precode;
pub mod rng;

pub use error::{Error, Result};
