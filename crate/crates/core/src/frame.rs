//! Uplink frames: symbols, cyclic prefix, multipath, noise, and the move to
//! the frequency domain.
//!
//! [`transmit`] emulates the transmitter and channel literally: each user
//! prepends the last `L_cp` symbols of its frame, the result is linearly
//! convolved with every impulse response, and the receiver drops the prefix
//! and the convolution tail. Nothing on this path assumes circularity; the
//! tests check that it comes out of the prefix.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::numerics::{dft_unitary_in_place, dft_unnormalized, idft_unnormalized, zero_pad, CVec, C64, ZERO};
use crate::rng::{keyed_rng, TAG_NOISE};

/// Unit-average-energy symbol alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constellation {
    #[default]
    Qpsk,
    Qam16,
}

impl Constellation {
    pub fn points(self) -> Vec<C64> {
        match self {
            Constellation::Qpsk => [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)]
                .iter()
                .map(|&(re, im)| C64::new(re, im) * FRAC_1_SQRT_2)
                .collect(),
            Constellation::Qam16 => {
                let s = 1.0 / 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&re| levels.iter().map(move |&im| C64::new(re * s, im * s)))
                    .collect()
            }
        }
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qpsk" | "4qam" => Ok(Constellation::Qpsk),
            "16qam" | "qam16" => Ok(Constellation::Qam16),
            _ => Err(Error::UnknownConstellation(s.to_string())),
        }
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Qam16 => "16qam",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameConfig {
    /// Symbols per frame.
    pub n: usize,
    /// Cyclic prefix length in samples.
    pub l_cp: usize,
    pub constellation: Constellation,
    /// Input SNR `1 / sigma_w^2` in dB.
    pub snr_in_db: f64,
}

impl FrameConfig {
    /// 2048-symbol QPSK frames with a 144-sample prefix.
    pub fn reference(snr_in_db: f64) -> Self {
        FrameConfig {
            n: 2048,
            l_cp: 144,
            constellation: Constellation::Qpsk,
            snr_in_db,
        }
    }

    /// Per-sample noise variance.
    pub fn sigma_w2(&self) -> f64 {
        snr_db_to_sigma2(self.snr_in_db)
    }
}

pub fn snr_db_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `K x N` transmitted symbols, row-major by user.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    k: usize,
    n: usize,
    s: Vec<C64>,
}

impl SymbolFrame {
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if k == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("symbol frame needs K >= 1 equal, non-empty rows"));
        }
        Ok(SymbolFrame {
            k,
            n,
            s: rows.concat(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Symbols of user `k`.
    pub fn row(&self, k: usize) -> &[C64] {
        &self.s[k * self.n..(k + 1) * self.n]
    }

    /// Unitary DFT of every user's row.
    pub fn to_frequency_rows(&self) -> Vec<Vec<C64>> {
        (0..self.k)
            .map(|k| {
                let mut r = self.row(k).to_vec();
                dft_unitary_in_place(&mut r).expect("N >= 1");
                r
            })
            .collect()
    }
}

pub fn generate_symbols<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    constellation: Constellation,
    rng: &mut R,
) -> Result<SymbolFrame> {
    if k == 0 || n == 0 {
        return Err(Error::invalid(format!("need K, N > 0, got K={k} N={n}")));
    }
    let points = constellation.points();
    let s = (0..k * n)
        .map(|_| points[rng.random_range(0..points.len())])
        .collect();
    Ok(SymbolFrame { k, n, s })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

/// `M x N` received samples after prefix removal, row-major by antenna.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    m: usize,
    n: usize,
    y: Vec<C64>,
    domain: Domain,
}

impl ReceivedFrame {
    pub fn from_rows(rows: Vec<Vec<C64>>, domain: Domain) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("received frame needs M >= 1 equal, non-empty rows"));
        }
        Ok(ReceivedFrame {
            m,
            n,
            y: rows.concat(),
            domain,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    /// Samples of antenna `m`.
    pub fn row(&self, m: usize) -> &[C64] {
        &self.y[m * self.n..(m + 1) * self.n]
    }
}

/// Unnormalized spectrum of `v` zero-padded to `len`.
fn spectrum(v: &[C64], len: usize) -> Vec<C64> {
    dft_unnormalized(&zero_pad(v, len).expect("fft length covers input")).expect("len >= 1").into_inner()
}

/// Sends one frame through the channel and adds white Gaussian noise of
/// variance `fc.sigma_w2()` per complex sample.
///
/// The noise streams are keyed by a seed taken from `rng`, so antennas can be
/// processed in parallel without changing the result.
pub fn transmit<R: Rng + ?Sized>(
    sf: &SymbolFrame,
    ch: &ChannelRealization,
    fc: &FrameConfig,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    let (k_count, n, l_cp) = (sf.k, sf.n, fc.l_cp);
    if fc.n != n || ch.n() != n {
        return Err(Error::invalid(format!(
            "frame length mismatch: symbols {n}, frame config {}, channel {}",
            fc.n,
            ch.n()
        )));
    }
    if ch.k() != k_count {
        return Err(Error::invalid(format!(
            "channel has {} users, frame has {k_count}",
            ch.k()
        )));
    }
    if ch.l_h() + 1 > l_cp {
        return Err(Error::invalid(format!(
            "cyclic prefix too short: need L_h <= L_cp - 1, got L_h={} L_cp={l_cp}",
            ch.l_h()
        )));
    }
    if l_cp > n {
        return Err(Error::invalid(format!("L_cp={l_cp} exceeds N={n}")));
    }
    let sigma = (fc.sigma_w2() / 2.0).sqrt();
    let noise_seed: u64 = rng.random();

    let fft_len = (n + l_cp + ch.l_h() - 1).next_power_of_two();
    let tx_spectra: Vec<Vec<C64>> = (0..k_count)
        .into_par_iter()
        .map(|k| {
            let s = sf.row(k);
            let with_cp: Vec<C64> = s[n - l_cp..].iter().chain(s).copied().collect();
            spectrum(&with_cp, fft_len)
        })
        .collect();

    let rows: Vec<Vec<C64>> = (0..ch.m())
        .into_par_iter()
        .map(|m| {
            let mut acc = vec![ZERO; fft_len];
            for (k, xs) in tx_spectra.iter().enumerate() {
                let hs = spectrum(ch.taps(m, k), fft_len);
                for ((a, &x), &h) in acc.iter_mut().zip(xs).zip(&hs) {
                    *a += x * h;
                }
            }
            let full = idft_unnormalized(&acc).expect("fft_len >= 1").into_inner();
            let mut noise = keyed_rng(noise_seed, &[TAG_NOISE, m as u64]);
            full[l_cp..l_cp + n]
                .iter()
                .map(|&z| {
                    let re: f64 = noise.sample(StandardNormal);
                    let im: f64 = noise.sample(StandardNormal);
                    z + C64::new(re * sigma, im * sigma)
                })
                .collect()
        })
        .collect();

    ReceivedFrame::from_rows(rows, Domain::Time)
}

/// Replaces every antenna row by its unitary DFT.
pub fn to_frequency_domain(rf: &ReceivedFrame) -> Result<ReceivedFrame> {
    if rf.domain != Domain::Time {
        return Err(Error::State("frame is already in the frequency domain".into()));
    }
    let mut y = rf.y.clone();
    y.par_chunks_mut(rf.n)
        .try_for_each(dft_unitary_in_place)?;
    Ok(ReceivedFrame {
        m: rf.m,
        n: rf.n,
        y,
        domain: Domain::Frequency,
    })
}

/// The `M x 1` vector of all antennas at frequency bin `n`.
pub fn bin_vector(rf: &ReceivedFrame, n: usize) -> Result<CVec> {
    if rf.domain != Domain::Frequency {
        return Err(Error::State("bin vectors need a frequency-domain frame".into()));
    }
    if n >= rf.n {
        return Err(Error::invalid(format!("bin {n} out of range 0..{}", rf.n)));
    }
    CVec::new((0..rf.m).map(|m| rf.y[m * rf.n + n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{idft_unitary, ONE};
    use crate::rng::keyed_rng;

    #[test]
    fn qpsk_points_have_unit_energy() {
        let mut rng = keyed_rng(1, &[]);
        let sf = generate_symbols(1, 4, Constellation::Qpsk, &mut rng).unwrap();
        let pts = Constellation::Qpsk.points();
        for s in sf.row(0) {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
            assert!(pts.contains(s));
        }
    }

    #[test]
    fn constellations_average_unit_energy() {
        for c in [Constellation::Qpsk, Constellation::Qam16] {
            let pts = c.points();
            let e: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn empirical_power_is_one() {
        for c in [Constellation::Qpsk, Constellation::Qam16] {
            let mut rng = keyed_rng(2, &[]);
            let sf = generate_symbols(10, 10_000, c, &mut rng).unwrap();
            let p: f64 = (0..10).flat_map(|k| sf.row(k)).map(|z| z.norm_sqr()).sum::<f64>() / 1e5;
            assert!((p - 1.0).abs() < 0.01, "{c}: {p}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_symbols(3, 16, Constellation::Qam16, &mut keyed_rng(5, &[])).unwrap();
        let b = generate_symbols(3, 16, Constellation::Qam16, &mut keyed_rng(5, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constellation_parsing() {
        assert_eq!("QPSK".parse::<Constellation>().unwrap(), Constellation::Qpsk);
        assert_eq!("16qam".parse::<Constellation>().unwrap(), Constellation::Qam16);
        assert!(matches!(
            "8psk".parse::<Constellation>(),
            Err(Error::UnknownConstellation(_))
        ));
        assert!(generate_symbols(0, 4, Constellation::Qpsk, &mut keyed_rng(0, &[])).is_err());
    }

    fn identity_channel(m: usize, n: usize, l_h: usize) -> ChannelRealization {
        let mut h = vec![ZERO; l_h];
        h[0] = ONE;
        ChannelRealization::from_taps(m, 1, n, vec![CVec::new(h).unwrap(); m]).unwrap()
    }

    fn noiseless(n: usize, l_cp: usize) -> FrameConfig {
        FrameConfig {
            n,
            l_cp,
            constellation: Constellation::Qpsk,
            snr_in_db: f64::INFINITY,
        }
    }

    #[test]
    fn identity_channel_passes_symbols() {
        let mut rng = keyed_rng(3, &[]);
        let sf = generate_symbols(1, 32, Constellation::Qpsk, &mut rng).unwrap();
        let rf = transmit(&sf, &identity_channel(2, 32, 3), &noiseless(32, 4), &mut rng).unwrap();
        assert_eq!(rf.domain(), Domain::Time);
        for m in 0..2 {
            for (y, s) in rf.row(m).iter().zip(sf.row(0)) {
                assert!((y - s).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn short_prefix_rejected() {
        let mut rng = keyed_rng(3, &[]);
        let sf = generate_symbols(1, 32, Constellation::Qpsk, &mut rng).unwrap();
        let err = transmit(&sf, &identity_channel(1, 32, 4), &noiseless(32, 4), &mut rng);
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn pure_noise_has_configured_variance() {
        let n = 50_000;
        let sf = SymbolFrame::from_rows(vec![vec![ZERO; n]]).unwrap();
        let fc = FrameConfig {
            snr_in_db: 3.0,
            ..noiseless(n, 4)
        };
        let rf = transmit(&sf, &identity_channel(2, n, 2), &fc, &mut keyed_rng(4, &[])).unwrap();
        let var: f64 = (0..2).flat_map(|m| rf.row(m)).map(|z| z.norm_sqr()).sum::<f64>() / (2 * n) as f64;
        assert!((var / fc.sigma_w2() - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn frequency_transform_and_bins() {
        let n = 8;
        let mut row = vec![ZERO; n];
        row[0] = ONE;
        let rf = ReceivedFrame::from_rows(vec![row.clone(), row], Domain::Time).unwrap();
        let fd = to_frequency_domain(&rf).unwrap();
        let flat = 1.0 / (n as f64).sqrt();
        assert!(fd.row(0).iter().all(|z| (z - flat).norm() < 1e-15));
        assert!(matches!(to_frequency_domain(&fd), Err(Error::State(_))));
        assert!(matches!(bin_vector(&rf, 0), Err(Error::State(_))));
        assert!(matches!(bin_vector(&fd, n), Err(Error::InvalidArgument(_))));
        let back = idft_unitary(fd.row(1)).unwrap();
        assert!(back.iter().zip(rf.row(1)).all(|(a, b)| (a - b).norm() < 1e-15));
    }

    #[test]
    fn single_antenna_bin_is_scalar() {
        let rf = ReceivedFrame::from_rows(vec![vec![C64::new(1.0, 2.0), C64::new(3.0, 4.0)]], Domain::Frequency)
            .unwrap();
        assert_eq!(bin_vector(&rf, 1).unwrap().as_slice(), &[C64::new(3.0, 4.0)]);
    }

    #[test]
    fn bins_partition_the_frame() {
        let mut rng = keyed_rng(8, &[]);
        let rows: Vec<Vec<C64>> = (0..3)
            .map(|_| (0..5).map(|_| C64::new(rng.random(), rng.random())).collect())
            .collect();
        let fd = ReceivedFrame::from_rows(rows.clone(), Domain::Frequency).unwrap();
        for n in 0..5 {
            let v = bin_vector(&fd, n).unwrap();
            for m in 0..3 {
                assert_eq!(v[m], rows[m][n]);
            }
        }
    }
}
