//! Downlink MMSE precoding that reuses the uplink `K x K` inverses.
//!
//! On a reciprocal (TDD) channel the downlink matrix seen by the users at
//! bin `n` is `A_n^T`. The precoder
//!
//! ```text
//! x = A^* (A^T A^* + σ² I_K)^-1 diag(β) P^{1/2} s
//! ```
//!
//! needs `(A^T A^* + σ² I_K)^-1`, which is the element-wise conjugate of the
//! uplink MRC-MMSE inverse `(A^H A + σ² I_K)^-1`. `β` makes the noiseless
//! gain from each user's symbol to that user's received sample exactly one
//! before the amplitude scaling `P^{1/2}`.

use rayon::prelude::*;

use crate::channel::BinChannel;
use crate::detect::InverseCache;
use crate::error::{Error, Result};
use crate::frame::SymbolFrame;
use crate::numerics::{conj, diag_of_product, elem_inverse, hermitian, invert_hpd, matmul, CMat, CVec, HpdMat, C64};

/// Per-user amplitude scalars, the diagonal of `P^{1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p_sqrt: Vec<f64>,
}

impl PowerAllocation {
    pub fn new(p_sqrt: Vec<f64>) -> Result<Self> {
        if p_sqrt.is_empty() {
            return Err(Error::invalid("power allocation needs at least one user"));
        }
        if let Some(k) = p_sqrt.iter().position(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::invalid(format!(
                "power amplitude for user {k} must be positive, got {}",
                p_sqrt[k]
            )));
        }
        Ok(PowerAllocation { p_sqrt })
    }

    /// Equal amplitude for every user.
    pub fn uniform(k: usize) -> Result<Self> {
        PowerAllocation::new(vec![1.0; k])
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.p_sqrt
    }
}

/// Frequency-domain transmit samples for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodeResult {
    m: usize,
    k: usize,
    n: usize,
    /// `M x N`, row-major by antenna.
    x: Vec<C64>,
    /// `K x N`, row-major by user.
    beta: Vec<f64>,
}

impl PrecodeResult {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// FD transmit samples of antenna `m`.
    pub fn antenna(&self, m: usize) -> &[C64] {
        &self.x[m * self.n..(m + 1) * self.n]
    }

    /// The `M x 1` transmit vector at bin `n`.
    pub fn bin(&self, n: usize) -> Vec<C64> {
        (0..self.m).map(|m| self.x[m * self.n + n]).collect()
    }

    /// Unbiasing factors used for user `k`, one per bin.
    pub fn beta(&self, k: usize) -> &[f64] {
        &self.beta[k * self.n..(k + 1) * self.n]
    }

    /// Total radiated energy `sum |x|^2` over antennas and bins.
    pub fn radiated_energy(&self) -> f64 {
        self.x.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// `conj(inv[n])`, i.e. `(A_n^T A_n^* + σ² I_K)^-1`.
pub fn dl_inverse_from_cache(cache: &InverseCache, n: usize) -> Result<CMat> {
    cache
        .get(n)
        .map(conj)
        .ok_or_else(|| Error::invalid(format!("inverse cache has no bin {n} (holds {})", cache.len())))
}

/// `(A^T A^* + σ² I_K)^-1` computed from scratch.
pub fn dl_inverse_direct(a: &CMat, sigma_w2: f64) -> Result<CMat> {
    if !(sigma_w2 >= 0.0) || !sigma_w2.is_finite() {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {sigma_w2}")));
    }
    invert_hpd(&HpdMat::regularized_gram(&conj(a), sigma_w2)?)
}

/// `A^* (A^T A^* + σ² I_K)^-1`, the `M x K` precoder before unbiasing, from a
/// supplied inverse.
pub fn precoder_inner_form(a: &CMat, dl_inv: &CMat) -> Result<CMat> {
    matmul(&conj(a), dl_inv)
}

/// `(A^* A^T + σ² I_M)^-1 A^*`, the same precoder through an `M x M` inverse.
pub fn precoder_outer_form(a: &CMat, sigma_w2: f64) -> Result<CMat> {
    let a_conj = conj(a);
    let outer = HpdMat::new(matmul(&a_conj, &hermitian(&a_conj))?.add_diagonal(sigma_w2)?)?;
    matmul(&invert_hpd(&outer)?, &a_conj)
}

/// Precodes one bin. Returns the `M x 1` transmit vector and the `K`
/// unbiasing factors `β`.
pub fn mmse_precode_bin(
    a: &CMat,
    s: &[C64],
    sigma_w2: f64,
    p: &PowerAllocation,
    dl_inv: &CMat,
) -> Result<(CVec, Vec<f64>)> {
    let k = a.cols();
    if a.rows() < k {
        return Err(Error::invalid(format!("need M >= K, got {}x{k}", a.rows())));
    }
    if s.len() != k || p.p_sqrt.len() != k {
        return Err(Error::invalid(format!(
            "{k} users but {} symbols and {} power amplitudes",
            s.len(),
            p.p_sqrt.len()
        )));
    }
    if dl_inv.rows() != k || dl_inv.cols() != k {
        return Err(Error::invalid(format!(
            "downlink inverse is {}x{}, expected {k}x{k}",
            dl_inv.rows(),
            dl_inv.cols()
        )));
    }
    if !(sigma_w2 >= 0.0) {
        return Err(Error::invalid(format!("noise variance must be >= 0, got {sigma_w2}")));
    }

    let dl_gram = conj(a).gram();
    let gain = diag_of_product(&dl_gram, dl_inv)?;
    let beta: Vec<f64> = elem_inverse(&gain)?.iter().map(|z| z.re).collect();
    if let Some(i) = beta.iter().position(|&b| !(b > 0.0) || !b.is_finite()) {
        return Err(Error::DegenerateScale(format!(
            "unbiasing factor for user {i} is {}",
            beta[i]
        )));
    }

    let scaled: Vec<C64> = s
        .iter()
        .zip(&beta)
        .zip(&p.p_sqrt)
        .map(|((&sk, &b), &pk)| sk * b * pk)
        .collect();
    let x = precoder_inner_form(a, dl_inv)?.mul_vec(&scaled)?;
    Ok((x, beta))
}

/// Precodes a whole frame. With `cache` the uplink inverses are conjugated
/// and reused; without it every bin inverts its own `K x K` matrix.
pub fn precode_frame(
    sf: &SymbolFrame,
    bc: &BinChannel,
    sigma_w2: f64,
    p: &PowerAllocation,
    cache: Option<&InverseCache>,
) -> Result<PrecodeResult> {
    let (m_count, k_count, n) = (bc.m(), bc.k(), bc.n());
    if sf.k() != k_count || sf.n() != n {
        return Err(Error::invalid(format!(
            "symbol frame is {}x{}, channel is {k_count} users over {n} bins",
            sf.k(),
            sf.n()
        )));
    }
    if let Some(c) = cache {
        if c.len() != n {
            return Err(Error::invalid(format!("inverse cache holds {} bins, frame has {n}", c.len())));
        }
        if c.sigma_w2() != sigma_w2 {
            return Err(Error::invalid(format!(
                "inverse cache was built for noise variance {}, not {sigma_w2}",
                c.sigma_w2()
            )));
        }
    }
    let s_fd = sf.to_frequency_rows();

    let per_bin: Vec<(CVec, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|bin| {
            let a = bc.bin(bin);
            let dl_inv = match cache {
                Some(c) => dl_inverse_from_cache(c, bin)?,
                None => dl_inverse_direct(a, sigma_w2)?,
            };
            let s: Vec<C64> = s_fd.iter().map(|row| row[bin]).collect();
            mmse_precode_bin(a, &s, sigma_w2, p, &dl_inv)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .enumerate()
        .map(|(bin, r)| r.map_err(|e| e.at_bin(bin)))
        .collect::<Result<_>>()?;

    let mut x = vec![C64::new(0.0, 0.0); m_count * n];
    let mut beta = vec![0.0; k_count * n];
    for (bin, (xb, bb)) in per_bin.iter().enumerate() {
        for m in 0..m_count {
            x[m * n + bin] = xb[m];
        }
        for k in 0..k_count {
            beta[k * n + bin] = bb[k];
        }
    }
    Ok(PrecodeResult {
        m: m_count,
        k: k_count,
        n,
        x,
        beta,
    })
}
