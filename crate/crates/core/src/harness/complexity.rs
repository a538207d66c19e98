//! Complex-multiply counts per frequency bin for the two detectors.
//!
//! Costing rules: a `P x P` inverse costs `P^3`; a matrix product costs
//! outer times inner dimensions; the diagonal of a product costs inner
//! times outer dimension. Transforms to and from the frequency domain are
//! common to both detectors and not counted.

use std::io::Write;

use crate::error::{Error, Result};

/// One costed step of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CostItem {
    pub step: &'static str,
    pub mults: u64,
}

/// The six steps of the per-bin MMSE detector.
pub fn mmse_itemized(m: u64, k: u64) -> [CostItem; 6] {
    [
        CostItem { step: "A A^H: (M x K)(K x M)", mults: m * k * m },
        CostItem { step: "invert M x M", mults: m * m * m },
        CostItem { step: "A^H R^-1: (K x M)(M x M)", mults: k * m * m },
        CostItem { step: "filter times y: (K x M)(M x 1)", mults: k * m },
        CostItem { step: "diag of (K x M)(M x K)", mults: k * m },
        CostItem { step: "unbias K estimates", mults: k },
    ]
}

/// The six steps of the per-bin MRC-MMSE detector.
pub fn mrcmmse_itemized(m: u64, k: u64) -> [CostItem; 6] {
    [
        CostItem { step: "A^H A: (K x M)(M x K)", mults: k * m * k },
        CostItem { step: "invert K x K", mults: k * k * k },
        CostItem { step: "G^-1 A^H: (K x K)(K x M)", mults: k * k * m },
        CostItem { step: "filter times y: (K x M)(M x 1)", mults: k * m },
        CostItem { step: "diag of (K x M)(M x K)", mults: k * m },
        CostItem { step: "unbias K estimates", mults: k },
    ]
}

/// `K + 2KM + 2KM^2 + M^3`.
pub fn count_mults_mmse(m: u64, k: u64) -> u64 {
    k + 2 * k * m + 2 * k * m * m + m * m * m
}

/// `K + 2KM + K^3 + 2K^2 M`.
pub fn count_mults_mrcmmse(m: u64, k: u64) -> u64 {
    k + 2 * k * m + k * k * k + 2 * k * k * m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexityRow {
    pub m: u64,
    pub k: u64,
    pub mults_mmse: u64,
    pub mults_mrcmmse: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ComplexityReport {
    pub rows: Vec<ComplexityRow>,
}

impl ComplexityReport {
    pub const HEADER: &'static str = "M,K,mults_mmse,mults_mrcmmse";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", Self::HEADER)?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{}", r.m, r.k, r.mults_mmse, r.mults_mrcmmse)?;
        }
        Ok(())
    }
}

/// One row per `(M, K)` with `1 <= K <= min(k_max, M - 1)`.
pub fn complexity_sweep(m_list: &[u64], k_max: u64) -> Result<ComplexityReport> {
    if m_list.is_empty() {
        return Err(Error::invalid("antenna list is empty"));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let mut rows = Vec::new();
    for &m in m_list {
        if m < 2 {
            return Err(Error::invalid(format!("need M >= 2 for K < M, got M={m}")));
        }
        for k in 1..=k_max.min(m - 1) {
            rows.push(ComplexityRow {
                m,
                k,
                mults_mmse: count_mults_mmse(m, k),
                mults_mrcmmse: count_mults_mrcmmse(m, k),
            });
        }
    }
    Ok(ComplexityReport { rows })
}
