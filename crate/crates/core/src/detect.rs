//! Per-bin uplink detectors and frame-level orchestration.
//!
//! With `A` the `M x K` channel matrix of one bin and `y` the `M x 1`
//! received bin vector:
//!
//! | detector   | estimate                                              |
//! |------------|-------------------------------------------------------|
//! | MMSE       | `a ∘ A^H (A A^H + σ² I_M)^-1 y`                       |
//! | MRC-MMSE   | `α ∘ M (A^H A + σ² I_K)^-1 r`, with `r = A^H y / M`   |
//! | low SNR    | `diag(A^H A)^-1 A^H y`                                |
//! | high SNR   | `(A^H A)^-1 A^H y`                                    |
//!
//! `a` and `α` are the reciprocals of the diagonal of the end-to-end map
//! (detector times channel), so every estimate carries each user's own
//! symbol with unit gain. MMSE and MRC-MMSE produce the same estimate; the
//! latter needs only a `K x K` inverse, which is kept in an
//! [`InverseCache`] for the downlink precoder.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::BinChannel;
use crate::error::{Error, Result};
use crate::frame::{Domain, ReceivedFrame};
use crate::numerics::{
    diag_of_product, elem_inverse, hadamard, hermitian, idft_unitary_in_place, invert_hpd, solve_hpd, CMat, CVec,
    HpdMat, C64,
};

/// FD symbol estimates of all `K` users at one bin.
#[derive(Debug, Clone, PartialEq)]
pub struct BinEstimate {
    pub s_hat: CVec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Mmse,
    MrcMmse,
    TrMrc,
    LowSnr,
    HighSnrZf,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::Mmse,
        DetectorKind::MrcMmse,
        DetectorKind::TrMrc,
        DetectorKind::LowSnr,
        DetectorKind::HighSnrZf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DetectorKind::Mmse => "mmse",
            DetectorKind::MrcMmse => "mrc-mmse",
            DetectorKind::TrMrc => "tr-mrc",
            DetectorKind::LowSnr => "low-snr",
            DetectorKind::HighSnrZf => "high-snr-zf",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown detector `{s}`")))
    }
}

/// Per-bin `(A_n^H A_n + σ² I_K)^-1`, computed once on the uplink and read by
/// the downlink precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseCache {
    inv: Vec<CMat>,
    sigma_w2: f64,
}

impl InverseCache {
    pub fn new(inv: Vec<CMat>, sigma_w2: f64) -> Self {
        InverseCache { inv, sigma_w2 }
    }

    pub fn get(&self, n: usize) -> Option<&CMat> {
        self.inv.get(n)
    }

    pub fn len(&self) -> usize {
        self.inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv.is_empty()
    }

    pub fn sigma_w2(&self) -> f64 {
        self.sigma_w2
    }
}

/// Time-domain estimates for all users of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    k: usize,
    n: usize,
    s_hat_time: Vec<C64>,
    pub kind: DetectorKind,
    pub cache: Option<InverseCache>,
}

impl DetectionResult {
    /// Wraps externally produced time-domain estimates, one row per user.
    pub fn from_rows(rows: Vec<Vec<C64>>, kind: DetectorKind) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("estimates need K >= 1 equal, non-empty rows"));
        }
        Ok(DetectionResult {
            k,
            n,
            s_hat_time: rows.concat(),
            kind,
            cache: None,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Estimates for user `k`.
    pub fn row(&self, k: usize) -> &[C64] {
        &self.s_hat_time[k * self.n..(k + 1) * self.n]
    }
}

fn check_shapes(a: &CMat, y_len: usize) -> Result<()> {
    if a.rows() < a.cols() {
        return Err(Error::invalid(format!(
            "need M >= K, got {}x{} channel",
            a.rows(),
            a.cols()
        )));
    }
    if y_len != a.rows() {
        return Err(Error::invalid(format!(
            "received vector has {y_len} entries, channel has {} antennas",
            a.rows()
        )));
    }
    Ok(())
}

fn check_sigma(sigma_w2: f64) -> Result<()> {
    if !(sigma_w2 > 0.0) || !sigma_w2.is_finite() {
        return Err(Error::invalid(format!(
            "noise variance must be positive and finite, got {sigma_w2}; use the high-SNR detector for zero noise"
        )));
    }
    Ok(())
}

/// `A^H (A A^H + σ² I_M)^-1`, the `K x M` MMSE filter before unbiasing.
fn mmse_filter(a: &CMat, sigma_w2: f64) -> Result<CMat> {
    let r = HpdMat::regularized_outer(a, sigma_w2)?;
    Ok(hermitian(&solve_hpd(&r, a)?))
}

/// The MMSE unbiasing vector `a = 1 / diag(A^H (A A^H + σ² I)^-1 A)`.
pub fn mmse_unbiasing(a: &CMat, sigma_w2: f64) -> Result<CVec> {
    check_sigma(sigma_w2)?;
    check_shapes(a, a.rows())?;
    elem_inverse(&diag_of_product(&mmse_filter(a, sigma_w2)?, a)?)
}

/// The MRC-MMSE unbiasing vector `α = 1 / diag((A^H A + σ² I)^-1 A^H A)`.
pub fn mrcmmse_unbiasing(a: &CMat, sigma_w2: f64) -> Result<CVec> {
    check_sigma(sigma_w2)?;
    check_shapes(a, a.rows())?;
    let gram = a.gram();
    let inv = invert_hpd(&HpdMat::new(gram.add_diagonal(sigma_w2)?)?)?;
    elem_inverse(&diag_of_product(&inv, &gram)?)
}

/// Unbiased per-bin MMSE estimate; factors an `M x M` matrix.
pub fn mmse_bin(a: &CMat, y: &[C64], sigma_w2: f64) -> Result<BinEstimate> {
    check_shapes(a, y.len())?;
    check_sigma(sigma_w2)?;
    let w = mmse_filter(a, sigma_w2)?;
    let unbias = elem_inverse(&diag_of_product(&w, a)?)?;
    let raw = w.mul_vec(y)?;
    Ok(BinEstimate {
        s_hat: hadamard(&unbias, &raw)?,
    })
}

/// Matched filter combined over antennas: `(1/M) A^H y`.
pub fn mrc_bin(a: &CMat, y: &[C64]) -> Result<CVec> {
    if y.len() != a.rows() {
        return Err(Error::invalid(format!(
            "received vector has {} entries, channel has {} antennas",
            y.len(),
            a.rows()
        )));
    }
    let scale = 1.0 / a.rows() as f64;
    CVec::new(a.hermitian_mul_vec(y)?.iter().map(|z| z * scale).collect())
}

/// Unbiased MMSE estimate from the `K` MRC outputs `r`; inverts only a
/// `K x K` matrix, which is returned alongside the estimate.
pub fn mrcmmse_bin(a: &CMat, r: &[C64], sigma_w2: f64) -> Result<(BinEstimate, CMat)> {
    check_shapes(a, a.rows())?;
    check_sigma(sigma_w2)?;
    if r.len() != a.cols() {
        return Err(Error::invalid(format!(
            "MRC vector has {} entries, channel has {} users",
            r.len(),
            a.cols()
        )));
    }
    let gram = a.gram();
    let inv = invert_hpd(&HpdMat::new(gram.add_diagonal(sigma_w2)?)?)?;
    let alpha = elem_inverse(&diag_of_product(&inv, &gram)?)?;
    let m = a.rows() as f64;
    let filtered = inv.mul_vec(r)?;
    let s_hat = CVec::new(
        alpha
            .iter()
            .zip(filtered.iter())
            .map(|(&al, &f)| al * f * m)
            .collect(),
    )?;
    Ok((BinEstimate { s_hat }, inv))
}

/// Large-noise limit of MRC-MMSE: each matched-filter output divided by its
/// own channel energy.
pub fn lowsnr_bin(a: &CMat, y: &[C64]) -> Result<BinEstimate> {
    check_shapes(a, y.len())?;
    let energy: Vec<C64> = (0..a.cols())
        .map(|k| C64::new((0..a.rows()).map(|m| a[(m, k)].norm_sqr()).sum(), 0.0))
        .collect();
    let scale = elem_inverse(&energy).map_err(|e| match e {
        Error::DegenerateScale(msg) => Error::DegenerateScale(format!("user with zero channel energy ({msg})")),
        other => other,
    })?;
    Ok(BinEstimate {
        s_hat: hadamard(&scale, &a.hermitian_mul_vec(y)?)?,
    })
}

/// Zero-forcing: `(A^H A)^-1 A^H y`.
pub fn highsnr_bin(a: &CMat, y: &[C64]) -> Result<BinEstimate> {
    check_shapes(a, y.len())?;
    let inv = invert_hpd(&HpdMat::new(a.gram())?)?;
    Ok(BinEstimate {
        s_hat: inv.mul_vec(&a.hermitian_mul_vec(y)?)?,
    })
}

/// Matched filter with each user scaled by `M / (A^H A)_kk`.
fn trmrc_bin(a: &CMat, y: &[C64]) -> Result<BinEstimate> {
    check_shapes(a, y.len())?;
    let r = mrc_bin(a, y)?;
    let m = a.rows() as f64;
    let scale: Vec<C64> = (0..a.cols())
        .map(|k| C64::new(m / (0..a.rows()).map(|i| a[(i, k)].norm_sqr()).sum::<f64>(), 0.0))
        .collect();
    if let Some(k) = scale.iter().position(|z| !z.is_finite()) {
        return Err(Error::DegenerateScale(format!("user {k} has zero channel energy")));
    }
    Ok(BinEstimate {
        s_hat: hadamard(&scale, &r)?,
    })
}

fn detect_bin(
    kind: DetectorKind,
    a: &CMat,
    y: &[C64],
    sigma_w2: f64,
) -> Result<(BinEstimate, Option<CMat>)> {
    match kind {
        DetectorKind::Mmse => mmse_bin(a, y, sigma_w2).map(|e| (e, None)),
        DetectorKind::MrcMmse => {
            let r = mrc_bin(a, y)?;
            mrcmmse_bin(a, &r, sigma_w2).map(|(e, inv)| (e, Some(inv)))
        }
        DetectorKind::TrMrc => trmrc_bin(a, y).map(|e| (e, None)),
        DetectorKind::LowSnr => lowsnr_bin(a, y).map(|e| (e, None)),
        DetectorKind::HighSnrZf => highsnr_bin(a, y).map(|e| (e, None)),
    }
}

/// Runs `kind` on every bin of a frequency-domain frame and returns the
/// per-user time-domain estimates.
///
/// `sigma_w2` is ignored by the detectors that do not use it. For
/// [`DetectorKind::MrcMmse`] the per-bin inverses are returned in
/// [`DetectionResult::cache`].
pub fn detect_frame(
    rf: &ReceivedFrame,
    bc: &BinChannel,
    sigma_w2: f64,
    kind: DetectorKind,
) -> Result<DetectionResult> {
    if rf.domain() != Domain::Frequency {
        return Err(Error::State("detection needs a frequency-domain frame".into()));
    }
    if rf.m() != bc.m() || rf.n() != bc.n() {
        return Err(Error::invalid(format!(
            "frame is {}x{}, channel is {} antennas over {} bins",
            rf.m(),
            rf.n(),
            bc.m(),
            bc.n()
        )));
    }
    let (m_count, k_count, n) = (bc.m(), bc.k(), bc.n());

    let per_bin: Vec<(BinEstimate, Option<CMat>)> = (0..n)
        .into_par_iter()
        .map(|bin| {
            let y: Vec<C64> = (0..m_count).map(|m| rf.row(m)[bin]).collect();
            detect_bin(kind, bc.bin(bin), &y, sigma_w2).map_err(|e| e.at_bin(bin))
        })
        .collect::<Result<_>>()?;

    let mut s_hat_time = vec![C64::new(0.0, 0.0); k_count * n];
    for (bin, (est, _)) in per_bin.iter().enumerate() {
        for k in 0..k_count {
            s_hat_time[k * n + bin] = est.s_hat[k];
        }
    }
    s_hat_time
        .par_chunks_mut(n)
        .try_for_each(idft_unitary_in_place)?;

    let cache = (kind == DetectorKind::MrcMmse).then(|| {
        InverseCache::new(
            per_bin.into_iter().map(|(_, inv)| inv.expect("MRC-MMSE returns its inverse")).collect(),
            sigma_w2,
        )
    });

    Ok(DetectionResult {
        k: k_count,
        n,
        s_hat_time,
        kind,
        cache,
    })
}
