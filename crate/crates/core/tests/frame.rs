mod common;

use common::*;
use fdmud::channel::{draw_channel, to_bin_channels, ChannelConfig};
use fdmud::frame::{
    bin_vector, generate_symbols, snr_db_to_sigma2, to_frequency_domain, transmit, Constellation, Domain,
    FrameConfig, SymbolFrame,
};
use fdmud::numerics::C64;
use fdmud::rng::keyed_rng;
use fdmud::Error;

fn channel(m: usize, k: usize, n: usize, l_h: usize, seed: u64) -> fdmud::channel::ChannelRealization {
    draw_channel(&ChannelConfig {
        m,
        k,
        n,
        l_h,
        decay_samples: 2.0,
        power_spread: (0.1, 1.9),
        seed,
    })
    .unwrap()
}

fn quiet(n: usize, l_cp: usize) -> FrameConfig {
    FrameConfig {
        n,
        l_cp,
        constellation: Constellation::Qpsk,
        snr_in_db: f64::INFINITY,
    }
}

#[test]
fn noise_free_transmit_matches_dense_circulants() {
    let (m, k, n, l_h) = (3, 2, 16, 4);
    let ch = channel(m, k, n, l_h, 21);
    let mut rng = keyed_rng(21, &[]);
    let sf = generate_symbols(k, n, Constellation::Qam16, &mut rng).unwrap();
    let rx = transmit(&sf, &ch, &quiet(n, 5), &mut rng).unwrap();
    assert_eq!(rx.domain(), Domain::Time);
    for mi in 0..m {
        let mut want = vec![c(0.0, 0.0); n];
        for ki in 0..k {
            let part = mul_vec(&circulant(ch.taps(mi, ki), n), sf.row(ki));
            want.iter_mut().zip(part).for_each(|(w, p)| *w += p);
        }
        assert!(max_diff(rx.row(mi), &want) < 1e-12, "antenna {mi}");
    }
}

#[test]
fn bin_vectors_are_channel_times_symbol_spectra() {
    let (m, k, n) = (5, 3, 32);
    let ch = channel(m, k, n, 6, 22);
    let bins = to_bin_channels(&ch);
    let mut rng = keyed_rng(22, &[]);
    let sf = generate_symbols(k, n, Constellation::Qpsk, &mut rng).unwrap();
    let fd = to_frequency_domain(&transmit(&sf, &ch, &quiet(n, 8), &mut rng).unwrap()).unwrap();
    let s_fd: Vec<Vec<C64>> = (0..k).map(|ki| dft(sf.row(ki))).collect();
    for b in 0..n {
        let s: Vec<C64> = s_fd.iter().map(|r| r[b]).collect();
        let want = mul_vec(&from_cmat(bins.bin(b)), &s);
        assert!(max_diff(&bin_vector(&fd, b).unwrap(), &want) < 1e-10, "bin {b}");
    }
}

#[test]
fn frequency_domain_noise_is_white() {
    let (m, n, sigma2) = (64, 64, 0.5);
    let ch = channel(m, 1, n, 2, 23);
    let fc = FrameConfig {
        snr_in_db: -10.0 * f64::log10(sigma2),
        ..quiet(n, 3)
    };
    let silent = SymbolFrame::from_rows(vec![vec![c(0.0, 0.0); n]]).unwrap();
    let mut rng = keyed_rng(23, &[]);
    let fd = to_frequency_domain(&transmit(&silent, &ch, &fc, &mut rng).unwrap()).unwrap();

    let samples = (m * n) as f64;
    let power: f64 = (0..m).flat_map(|mi| fd.row(mi).iter()).map(|z| z.norm_sqr()).sum::<f64>() / samples;
    assert!((power / sigma2 - 1.0).abs() < 0.05, "power {power}");

    // Correlation between neighbouring bins, averaged over antennas.
    let cross: C64 = (0..m)
        .flat_map(|mi| (0..n - 1).map(move |b| (mi, b)))
        .map(|(mi, b)| fd.row(mi)[b] * fd.row(mi)[b + 1].conj())
        .sum::<C64>()
        / (m * (n - 1)) as f64;
    assert!(cross.norm() / sigma2 < 0.05, "correlation {cross}");
}

#[test]
fn noise_is_reproducible_and_keyed() {
    let ch = channel(2, 1, 16, 2, 24);
    let fc = FrameConfig {
        snr_in_db: 0.0,
        ..quiet(16, 3)
    };
    let sf = generate_symbols(1, 16, Constellation::Qpsk, &mut keyed_rng(1, &[])).unwrap();
    let a = transmit(&sf, &ch, &fc, &mut keyed_rng(9, &[])).unwrap();
    let b = transmit(&sf, &ch, &fc, &mut keyed_rng(9, &[])).unwrap();
    let other = transmit(&sf, &ch, &fc, &mut keyed_rng(10, &[])).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, other);
}

#[test]
fn guards() {
    let ch = channel(2, 1, 16, 4, 25);
    let sf = generate_symbols(1, 16, Constellation::Qpsk, &mut keyed_rng(1, &[])).unwrap();
    let mut rng = keyed_rng(2, &[]);
    assert!(matches!(transmit(&sf, &ch, &quiet(16, 4), &mut rng), Err(Error::InvalidArgument(_))));
    let fd = to_frequency_domain(&transmit(&sf, &ch, &quiet(16, 5), &mut rng).unwrap()).unwrap();
    assert!(matches!(to_frequency_domain(&fd), Err(Error::State(_))));
    assert!(bin_vector(&fd, 16).is_err());
    assert!((snr_db_to_sigma2(-7.0) - 10f64.powf(0.7)).abs() < 1e-12);
}
