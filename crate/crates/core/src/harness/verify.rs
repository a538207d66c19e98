//! Numerical property suites behind the `verify` and `precode-check`
//! subcommands. Each check reports its worst observed error against a fixed
//! tolerance.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{draw_channel, to_bin_channels, ChannelConfig, ChannelRealization};
use crate::detect::{
    detect_frame, mmse_bin, mmse_unbiasing, mrc_bin, mrcmmse_bin, mrcmmse_unbiasing, DetectorKind,
};
use crate::error::Result;
use crate::frame::{bin_vector, generate_symbols, to_frequency_domain, transmit, Constellation, FrameConfig};
use crate::harness::complexity::{count_mults_mmse, count_mults_mrcmmse, mmse_itemized, mrcmmse_itemized};
use crate::numerics::{hermitian, invert_hpd, matmul, CMat, HpdMat, C64};
use crate::precode::{
    dl_inverse_direct, dl_inverse_from_cache, mmse_precode_bin, precode_frame, precoder_inner_form,
    precoder_outer_form, PowerAllocation,
};
use crate::rng::keyed_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        CheckOutcome {
            name,
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}: worst {:.3e} (tolerance {:.1e})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

/// `rows x cols` matrix of i.i.d. zero-mean, unit-variance complex Gaussians.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn max_rel(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / x.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}

fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Random per-bin instance: `M` from {4, 16, 64}, `K` in `1..M`, `σ²`
/// log-uniform over `[1e-4, 1e2]`, `y = A s + w`.
fn random_instance(rng: &mut ChaCha8Rng) -> (CMat, Vec<C64>, f64) {
    let m = [4usize, 16, 64][rng.random_range(0..3)];
    let k = rng.random_range(1..m);
    let sigma2 = 10f64.powf(rng.random_range(-4.0..=2.0));
    let a = gaussian_matrix(rng, m, k);
    let s: Vec<C64> = (0..k).map(|_| gaussian(rng)).collect();
    let clean = a.mul_vec(&s).expect("shapes agree");
    let y = clean.iter().map(|&z| z + gaussian(rng) * sigma2.sqrt()).collect();
    (a, y, sigma2)
}

/// MMSE and MRC-MMSE estimates agree element-wise (relative).
pub fn check_equivalence(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = keyed_rng(seed, &[0xe0]);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (a, y, sigma2) = random_instance(&mut rng);
        let direct = mmse_bin(&a, &y, sigma2)?;
        let (reduced, _) = mrcmmse_bin(&a, &mrc_bin(&a, &y)?, sigma2)?;
        worst = worst.max(max_rel(&direct.s_hat, &reduced.s_hat));
    }
    Ok(CheckOutcome::new("MMSE == MRC-MMSE", worst, 1e-9))
}

/// `A^H (A A^H + σ² I)^-1 A == (A^H A + σ² I)^-1 A^H A`.
pub fn check_push_through_identity(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = keyed_rng(seed, &[0xe1]);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let m = rng.random_range(2..=16);
        let k = rng.random_range(1..m);
        let sigma2 = 10f64.powf(rng.random_range(-2.0..=1.0));
        let a = gaussian_matrix(&mut rng, m, k);
        let outer = invert_hpd(&HpdMat::regularized_outer(&a, sigma2)?)?;
        let lhs = matmul(&matmul(&hermitian(&a), &outer)?, &a)?;
        let gram = a.gram();
        let inner = invert_hpd(&HpdMat::new(gram.add_diagonal(sigma2)?)?)?;
        let rhs = matmul(&inner, &gram)?;
        worst = worst.max(max_abs_diff(&lhs, &rhs));
    }
    Ok(CheckOutcome::new("A^H(AA^H+s2 I)^-1 A == (A^HA+s2 I)^-1 A^HA", worst, 1e-10))
}

/// The two unbiasing vectors coincide.
pub fn check_unbiasing_vectors(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = keyed_rng(seed, &[0xe2]);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (a, _, sigma2) = random_instance(&mut rng);
        worst = worst.max(max_rel(&mmse_unbiasing(&a, sigma2)?, &mrcmmse_unbiasing(&a, sigma2)?));
    }
    Ok(CheckOutcome::new("a == alpha", worst, 1e-10))
}

/// Feeding column `k` of `A` through either detector returns 1 in slot `k`.
pub fn check_unit_gain(seed: u64, instances: usize) -> Result<CheckOutcome> {
    let mut rng = keyed_rng(seed, &[0xe3]);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let (a, _, sigma2) = random_instance(&mut rng);
        for k in 0..a.cols() {
            let col = a.col(k);
            let direct = mmse_bin(&a, &col, sigma2)?;
            let (reduced, _) = mrcmmse_bin(&a, &mrc_bin(&a, &col)?, sigma2)?;
            worst = worst
                .max((direct.s_hat[k] - 1.0).norm())
                .max((reduced.s_hat[k] - 1.0).norm());
        }
    }
    Ok(CheckOutcome::new("unit end-to-end gain", worst, 1e-10))
}

/// Sample mean of `tr((A^H A)^-1) / K` for i.i.d. Gaussian `A`, against
/// `1 / (M - K)`. Reports the relative error.
pub fn check_trace_identity(seed: u64, m: usize, k: usize, draws: usize) -> Result<CheckOutcome> {
    let mut rng = keyed_rng(seed, &[0xe4]);
    let mut sum = 0.0;
    for _ in 0..draws {
        let a = gaussian_matrix(&mut rng, m, k);
        let inv = invert_hpd(&HpdMat::new(a.gram())?)?;
        sum += inv.diagonal().iter().map(|z| z.re).sum::<f64>() / k as f64;
    }
    let mean = sum / draws as f64;
    let want = 1.0 / (m - k) as f64;
    Ok(CheckOutcome::new(
        "E[tr((A^H A)^-1)]/K == 1/(M-K)",
        (mean - want).abs() / want,
        0.02,
    ))
}

/// Closed-form multiply counts equal their itemized sums on the whole grid.
pub fn check_complexity_identities() -> CheckOutcome {
    let mut mismatches = 0u64;
    for m in 1..=128u64 {
        for k in 1..=m {
            let a: u64 = mmse_itemized(m, k).iter().map(|i| i.mults).sum();
            let b: u64 = mrcmmse_itemized(m, k).iter().map(|i| i.mults).sum();
            mismatches += u64::from(a != count_mults_mmse(m, k)) + u64::from(b != count_mults_mrcmmse(m, k));
        }
    }
    CheckOutcome::new("complexity totals == itemized sums", mismatches as f64, 0.0)
}

/// Noise-free transmit path against per-bin `A_n s_n`, largest error over
/// the given frame lengths.
pub fn check_cp_property(seed: u64, lengths: &[usize]) -> Result<CheckOutcome> {
    let mut worst: f64 = 0.0;
    for (i, &n) in lengths.iter().enumerate() {
        let l_h = (n / 4).max(1);
        let ch = draw_channel(&ChannelConfig {
            m: 3,
            k: 2,
            n,
            l_h,
            decay_samples: 2.0,
            power_spread: (0.1, 1.9),
            seed: seed ^ i as u64,
        })?;
        worst = worst.max(cp_error(&ch, l_h + 1, seed)?);
    }
    Ok(CheckOutcome::new("CP transmit == per-bin A_n s_n", worst, 1e-10))
}

/// Largest gap between the noise-free received FD frame and `A_n s_n`.
pub fn cp_error(ch: &ChannelRealization, l_cp: usize, seed: u64) -> Result<f64> {
    let fc = FrameConfig {
        n: ch.n(),
        l_cp,
        constellation: Constellation::Qpsk,
        snr_in_db: f64::INFINITY,
    };
    let mut rng = keyed_rng(seed, &[0xc9]);
    let sf = generate_symbols(ch.k(), ch.n(), fc.constellation, &mut rng)?;
    let fd = to_frequency_domain(&transmit(&sf, ch, &fc, &mut rng)?)?;
    let bins = to_bin_channels(ch);
    let s_fd = sf.to_frequency_rows();
    let mut worst: f64 = 0.0;
    for n in 0..ch.n() {
        let s: Vec<C64> = s_fd.iter().map(|r| r[n]).collect();
        let want = bins.bin(n).mul_vec(&s)?;
        let got = bin_vector(&fd, n)?;
        for (g, w) in got.iter().zip(want.iter()) {
            worst = worst.max((g - w).norm());
        }
    }
    Ok(worst)
}

/// Everything behind the `verify` subcommand.
pub fn verify_suite(seed: u64, instances: usize) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_equivalence(seed, instances)?,
        check_push_through_identity(seed, instances.clamp(1, 100))?,
        check_unbiasing_vectors(seed, instances.clamp(1, 100))?,
        check_unit_gain(seed, instances.clamp(1, 100))?,
        check_trace_identity(seed, 64, 14, 10_000)?,
        check_complexity_identities(),
        check_cp_property(seed, &[8, 16, 64])?,
    ])
}

/// Everything behind the `precode-check` subcommand, on one frame of the
/// given channel configuration at noise variance `sigma_w2`.
pub fn precode_suite(channel: &ChannelConfig, l_cp: usize, sigma_w2: f64) -> Result<Vec<CheckOutcome>> {
    let seed = channel.seed;
    let ch = draw_channel(channel)?;
    let bins = to_bin_channels(&ch);
    let fc = FrameConfig {
        n: channel.n,
        l_cp,
        constellation: Constellation::Qpsk,
        snr_in_db: -10.0 * sigma_w2.log10(),
    };
    let mut rng = keyed_rng(seed, &[0xd1]);
    let sf = generate_symbols(ch.k(), ch.n(), fc.constellation, &mut rng)?;
    let fd = to_frequency_domain(&transmit(&sf, &ch, &fc, &mut rng)?)?;
    let ul = detect_frame(&fd, &bins, sigma_w2, DetectorKind::MrcMmse)?;
    let cache = ul.cache.as_ref().expect("MRC-MMSE fills the cache");

    let mut reuse: f64 = 0.0;
    let mut forms: f64 = 0.0;
    let mut gain: f64 = 0.0;
    let p = PowerAllocation::uniform(ch.k())?;
    for n in 0..ch.n() {
        let a = bins.bin(n);
        let direct = dl_inverse_direct(a, sigma_w2)?;
        let reused = dl_inverse_from_cache(cache, n)?;
        reuse = reuse.max(max_abs_diff(&direct, &reused));
        if n % 64 == 0 {
            forms = forms.max(max_abs_diff(
                &precoder_outer_form(a, sigma_w2)?,
                &precoder_inner_form(a, &direct)?,
            ));
        }
        let (_, beta) = mmse_precode_bin(a, &vec![C64::new(0.0, 0.0); ch.k()], sigma_w2, &p, &direct)?;
        let end_to_end = matmul(&a.transpose(), &precoder_inner_form(a, &direct)?)?;
        for (k, b) in beta.iter().enumerate() {
            gain = gain.max((end_to_end[(k, k)] * b - 1.0).norm());
        }
    }

    let with_cache = precode_frame(&sf, &bins, sigma_w2, &p, Some(cache))?;
    let without = precode_frame(&sf, &bins, sigma_w2, &p, None)?;
    let mut paths: f64 = 0.0;
    for m in 0..ch.m() {
        for (x, y) in with_cache.antenna(m).iter().zip(without.antenna(m)) {
            paths = paths.max((x - y).norm());
        }
    }

    let mut zf: f64 = 0.0;
    let mut zrng = keyed_rng(seed, &[0xd2]);
    for _ in 0..100 {
        let a = gaussian_matrix(&mut zrng, 4, 2);
        let s = [gaussian(&mut zrng), gaussian(&mut zrng)];
        let tiny = 1e-10;
        let (x, _) = mmse_precode_bin(&a, &s, tiny, &PowerAllocation::uniform(2)?, &dl_inverse_direct(&a, tiny)?)?;
        let rx = a.transpose().mul_vec(&x)?;
        zf = zf.max(rx.iter().zip(&s).map(|(r, s)| (r - s).norm()).fold(0.0, f64::max));
    }

    Ok(vec![
        CheckOutcome::new("conj(UL inverse) == DL inverse", reuse, 1e-10),
        CheckOutcome::new("M x M form == K x K form", forms, 1e-10),
        CheckOutcome::new("unit DL gain per user", gain, 1e-10),
        CheckOutcome::new("cache path == direct path", paths, 1e-10),
        CheckOutcome::new("ZF limit A^T x == s", zf, 1e-5),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for c in [
            check_equivalence(1, 50).unwrap(),
            check_push_through_identity(1, 20).unwrap(),
            check_unbiasing_vectors(1, 20).unwrap(),
            check_unit_gain(1, 10).unwrap(),
            check_complexity_identities(),
            check_cp_property(1, &[8, 16]).unwrap(),
        ] {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn small_precode_suite_passes() {
        let cfg = ChannelConfig {
            m: 8,
            k: 3,
            n: 32,
            l_h: 4,
            decay_samples: 2.0,
            power_spread: (0.1, 1.9),
            seed: 4,
        };
        for c in precode_suite(&cfg, 5, 0.1).unwrap() {
            assert!(c.passed, "{c}");
        }
    }

    #[test]
    fn outcome_display() {
        let c = CheckOutcome::new("x", 2.0, 1.0);
        assert!(!c.passed);
        assert!(c.to_string().starts_with("[FAIL] x"));
    }
}
