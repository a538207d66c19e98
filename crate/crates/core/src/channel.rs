//! Random multipath channels and their per-bin eigenvalue matrices.
//!
//! Each antenna/user pair gets an independent impulse response with an
//! exponential power delay profile. The total power of each response is set
//! to a value drawn uniformly from `power_spread`, after which every user's
//! responses are rescaled together so that the average power across the `M`
//! antennas is exactly one.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dft_unnormalized, zero_pad, CMat, CVec, C64, ZERO};
use crate::rng::{keyed_rng, TAG_CHANNEL};

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    /// Base-station antennas.
    pub m: usize,
    /// Single-antenna users.
    pub k: usize,
    /// Frame length in samples.
    pub n: usize,
    /// Impulse response length in samples.
    pub l_h: usize,
    /// Exponential profile constant: tap `l` has mean power `exp(-l / decay_samples)`.
    pub decay_samples: f64,
    /// Bounds of the uniform per-pair power draw (linear).
    pub power_spread: (f64, f64),
    pub seed: u64,
}

impl ChannelConfig {
    /// The single-cell uplink scenario: 64 antennas, 14 users, 2048-sample
    /// frames, 130-tap responses decaying over 25 samples.
    pub fn reference(seed: u64) -> Self {
        ChannelConfig {
            m: 64,
            k: 14,
            n: 2048,
            l_h: 130,
            decay_samples: 25.0,
            power_spread: (0.1, 1.9),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.k >= self.m {
            return Err(Error::invalid(format!(
                "need 1 <= K < M, got K={} M={}",
                self.k, self.m
            )));
        }
        if self.l_h < 1 || self.l_h > self.n {
            return Err(Error::invalid(format!(
                "need 1 <= L_h <= N, got L_h={} N={}",
                self.l_h, self.n
            )));
        }
        if !(self.decay_samples > 0.0) || !self.decay_samples.is_finite() {
            return Err(Error::invalid("decay_samples must be positive"));
        }
        let (lo, hi) = self.power_spread;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "power spread needs 0 < low < high, got ({lo}, {hi})"
            )));
        }
        Ok(())
    }
}

/// All `M x K` impulse responses of one channel draw.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    m: usize,
    k: usize,
    n: usize,
    l_h: usize,
    /// Indexed `m * K + k`.
    taps: Vec<CVec>,
    /// Present when the realization came from [`draw_channel`].
    config: Option<ChannelConfig>,
}

impl ChannelRealization {
    /// Wraps explicit impulse responses, indexed `m * K + k`.
    ///
    /// No power normalization is applied. All responses must share one
    /// length no greater than `n`.
    pub fn from_taps(m: usize, k: usize, n: usize, taps: Vec<CVec>) -> Result<Self> {
        if m == 0 || k == 0 {
            return Err(Error::invalid("need at least one antenna and one user"));
        }
        if taps.len() != m * k {
            return Err(Error::invalid(format!(
                "expected {} impulse responses, got {}",
                m * k,
                taps.len()
            )));
        }
        let l_h = taps[0].len();
        if taps.iter().any(|h| h.len() != l_h) {
            return Err(Error::invalid("impulse responses differ in length"));
        }
        if l_h > n {
            return Err(Error::invalid(format!("L_h={l_h} exceeds N={n}")));
        }
        Ok(ChannelRealization {
            m,
            k,
            n,
            l_h,
            taps,
            config: None,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn l_h(&self) -> usize {
        self.l_h
    }

    pub fn config(&self) -> Option<&ChannelConfig> {
        self.config.as_ref()
    }

    /// Impulse response from user `k` to antenna `m`.
    pub fn taps(&self, m: usize, k: usize) -> &CVec {
        &self.taps[m * self.k + k]
    }

    /// `(1/M) sum_m ||h_{m,k}||^2` for user `k`.
    pub fn average_power(&self, k: usize) -> f64 {
        (0..self.m).map(|m| self.taps(m, k).norm_sqr()).sum::<f64>() / self.m as f64
    }
}

/// Per-bin channel matrices `A_n` (each `M x K`).
#[derive(Debug, Clone, PartialEq)]
pub struct BinChannel {
    m: usize,
    k: usize,
    bins: Vec<CMat>,
}

impl BinChannel {
    pub fn from_bins(bins: Vec<CMat>) -> Result<Self> {
        let first = bins
            .first()
            .ok_or_else(|| Error::invalid("need at least one bin"))?;
        let (m, k) = (first.rows(), first.cols());
        if bins.iter().any(|a| a.rows() != m || a.cols() != k) {
            return Err(Error::invalid("bin matrices differ in shape"));
        }
        Ok(BinChannel { m, k, bins })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.bins.len()
    }

    pub fn bin(&self, n: usize) -> &CMat {
        &self.bins[n]
    }

    pub fn bins(&self) -> &[CMat] {
        &self.bins
    }
}

fn draw_pair(config: &ChannelConfig, m: usize, k: usize) -> (Vec<C64>, f64) {
    let mut rng = keyed_rng(config.seed, &[TAG_CHANNEL, m as u64, k as u64]);
    let mut taps: Vec<C64> = (0..config.l_h)
        .map(|l| {
            let sd = (-(l as f64) / config.decay_samples).exp().sqrt() * std::f64::consts::FRAC_1_SQRT_2;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * sd, im * sd)
        })
        .collect();
    let (lo, hi) = config.power_spread;
    let target = rng.random_range(lo..hi);
    let energy: f64 = taps.iter().map(|z| z.norm_sqr()).sum();
    let g = (target / energy).sqrt();
    taps.iter_mut().for_each(|z| *z *= g);
    (taps, target)
}

/// Draws one channel realization; deterministic in `config.seed`.
pub fn draw_channel(config: &ChannelConfig) -> Result<ChannelRealization> {
    config.validate()?;
    let (m_count, k_count) = (config.m, config.k);
    let mut pairs: Vec<(Vec<C64>, f64)> = (0..m_count * k_count)
        .into_par_iter()
        .map(|idx| draw_pair(config, idx / k_count, idx % k_count))
        .collect();

    for k in 0..k_count {
        let mean: f64 = (0..m_count).map(|m| pairs[m * k_count + k].1).sum::<f64>() / m_count as f64;
        let g = mean.sqrt().recip();
        for m in 0..m_count {
            pairs[m * k_count + k].0.iter_mut().for_each(|z| *z *= g);
        }
    }

    let taps = pairs
        .into_iter()
        .map(|(h, _)| CVec::new(h))
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization {
        m: m_count,
        k: k_count,
        n: config.n,
        l_h: config.l_h,
        taps,
        config: Some(config.clone()),
    })
}

/// Circulant eigenvalues of every response, regrouped by frequency bin.
pub fn to_bin_channels(r: &ChannelRealization) -> BinChannel {
    let (m_count, k_count, n) = (r.m, r.k, r.n);
    let spectra: Vec<CVec> = r
        .taps
        .par_iter()
        .map(|h| {
            let padded = zero_pad(h, n).expect("L_h <= N by construction");
            dft_unnormalized(&padded).expect("N >= 1 by construction")
        })
        .collect();
    let bins = (0..n)
        .into_par_iter()
        .map(|bin| CMat::from_fn(m_count, k_count, |m, k| spectra[m * k_count + k][bin]))
        .collect();
    BinChannel {
        m: m_count,
        k: k_count,
        bins,
    }
}

/// `N x N` circulant matrix whose column `j` is the zero-padded `h` shifted
/// down by `j` samples.
pub fn build_circulant(h: &[C64], n: usize) -> Result<CMat> {
    if h.is_empty() || n == 0 {
        return Err(Error::invalid("circulant needs a non-empty response and N >= 1"));
    }
    if h.len() > n {
        return Err(Error::invalid(format!(
            "response length {} exceeds N={n}",
            h.len()
        )));
    }
    let col0 = zero_pad(h, n)?;
    Ok(CMat::from_fn(n, n, |i, j| col0[(i + n - j) % n]))
}

/// Writes a realization as text: a `m,k,l,re,im` header then one row per tap.
///
/// Floats use Rust's shortest round-trip formatting, so
/// [`read_channel_dump`] restores the exact bits.
pub fn write_channel_dump<W: Write>(r: &ChannelRealization, mut w: W) -> Result<()> {
    writeln!(w, "m,k,l,re,im")?;
    for m in 0..r.m {
        for k in 0..r.k {
            for (l, z) in r.taps(m, k).iter().enumerate() {
                writeln!(w, "{m},{k},{l},{:?},{:?}", z.re, z.im)?;
            }
        }
    }
    Ok(())
}

/// Reads a table written by [`write_channel_dump`] for frame length `n`.
pub fn read_channel_dump<R: BufRead>(reader: R, n: usize) -> Result<ChannelRealization> {
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "m,k,l,re,im" {
                return Err(Error::Config(format!("unexpected dump header `{line}`")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || Error::Config(format!("malformed dump line {}: `{line}`", lineno + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        let idx = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        let val = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
        rows.push((idx(f[0])?, idx(f[1])?, idx(f[2])?, C64::new(val(f[3])?, val(f[4])?)));
    }
    let m = rows.iter().map(|r| r.0).max().map_or(0, |x| x + 1);
    let k = rows.iter().map(|r| r.1).max().map_or(0, |x| x + 1);
    let l_h = rows.iter().map(|r| r.2).max().map_or(0, |x| x + 1);
    if rows.len() != m * k * l_h || m == 0 {
        return Err(Error::Config("channel dump is incomplete".into()));
    }
    let mut taps = vec![vec![ZERO; l_h]; m * k];
    for (mi, ki, l, z) in rows {
        taps[mi * k + ki][l] = z;
    }
    let taps = taps.into_iter().map(CVec::new).collect::<Result<Vec<_>>>()?;
    ChannelRealization::from_taps(m, k, n, taps)
}
