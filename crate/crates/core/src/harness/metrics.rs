//! SINR measurement, theoretical array gains, and Shannon rate.

use crate::detect::DetectionResult;
use crate::error::{Error, Result};
use crate::frame::SymbolFrame;

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-user output SINR (linear) of an unbiased detector, measured against
/// the known transmitted symbols: `1 / mean |s_hat - s|^2`.
///
/// A user whose estimates are exact gets `f64::INFINITY`.
pub fn measure_sinr(result: &DetectionResult, truth: &SymbolFrame) -> Result<Vec<f64>> {
    if result.k() != truth.k() || result.n() != truth.n() {
        return Err(Error::invalid(format!(
            "estimates are {}x{}, truth is {}x{}",
            result.k(),
            result.n(),
            truth.k(),
            truth.n()
        )));
    }
    Ok((0..truth.k())
        .map(|k| sinr_from_error(result.row(k), truth.row(k)))
        .collect())
}

pub(crate) fn sinr_from_error(est: &[num_complex::Complex64], truth: &[num_complex::Complex64]) -> f64 {
    let err: f64 = est.iter().zip(truth).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() / truth.len() as f64;
    if err == 0.0 {
        f64::INFINITY
    } else {
        1.0 / err
    }
}

/// Array gains `(M, M - K)` approached at low and high input SNR.
pub fn theoretical_gains(m: usize, k: usize) -> Result<(f64, f64)> {
    if k >= m {
        return Err(Error::invalid(format!("need M > K, got M={m} K={k}")));
    }
    Ok((m as f64, (m - k) as f64))
}

/// Shannon rate `rho * W * log2(1 + gamma)` in bits per second.
pub fn capacity(rho: f64, bandwidth_hz: f64, gamma: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::invalid(format!("duty cycle must lie in (0, 1], got {rho}")));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::invalid(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("SNR must be non-negative, got {gamma}")));
    }
    Ok(rho * bandwidth_hz * (1.0 + gamma).log2())
}
