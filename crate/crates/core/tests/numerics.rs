mod common;

use common::*;
use fdmud::channel::build_circulant;
use fdmud::numerics::{
    dft_unitary, dft_unnormalized, idft_unitary, invert_hpd, matmul, solve_hpd, HpdMat, C64,
};
use fdmud::rng::keyed_rng;
use proptest::prelude::*;

#[test]
fn fft_matches_direct_sum() {
    let mut rng = keyed_rng(1, &[]);
    for n in [1usize, 2, 5, 8, 12, 64, 100] {
        let v: Vec<C64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        assert!(max_diff(&dft_unitary(&v).unwrap(), &dft(&v)) < 1e-12, "n={n}");
        assert!(max_diff(&idft_unitary(&v).unwrap(), &idft(&v)) < 1e-12, "n={n}");
        assert!(max_diff(&dft_unnormalized(&v).unwrap(), &dft_plain(&v)) < 1e-11, "n={n}");
    }
}

#[test]
fn circulant_eigenvalues_are_unnormalized_dft() {
    let h = [c(1.0, 0.5), c(-0.3, 0.2), c(0.1, -0.7)];
    let n = 8;
    let circ = from_cmat(&build_circulant(&h, n).unwrap());
    assert_eq!(circ, circulant(&h, n));

    let f = dft_matrix(n);
    let diagonalized = mul(&mul(&f, &circ), &adjoint(&f));
    let mut padded = h.to_vec();
    padded.resize(n, c(0.0, 0.0));
    let eig = dft_unnormalized(&padded).unwrap();
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { eig[i] } else { c(0.0, 0.0) };
            assert!((diagonalized[i][j] - want).norm() < 1e-12, "({i},{j})");
        }
    }
}

#[test]
fn hpd_inverse_and_solve_match_gauss_jordan() {
    let mut rng = keyed_rng(2, &[]);
    for (m, k, s2) in [(3usize, 2usize, 0.1), (16, 8, 1.0), (40, 10, 1e-3)] {
        let a = gaussian_dense(&mut rng, m, k);
        let gram = add_diag(&mul(&adjoint(&a), &a), s2);
        let want = inverse(&gram);
        let got = invert_hpd(&HpdMat::new(to_cmat(&gram)).unwrap()).unwrap();
        assert!(max_diff_dense(&from_cmat(&got), &want) < 1e-10);

        let outer = add_diag(&mul(&a, &adjoint(&a)), s2);
        let x = solve_hpd(&HpdMat::new(to_cmat(&outer)).unwrap(), &to_cmat(&a)).unwrap();
        let want = mul(&inverse(&outer), &a);
        let scale = want.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_diff_dense(&from_cmat(&x), &want) < 1e-9 * scale);
    }
}

#[test]
fn matmul_matches_oracle() {
    let mut rng = keyed_rng(3, &[]);
    let a = gaussian_dense(&mut rng, 5, 3);
    let b = gaussian_dense(&mut rng, 3, 4);
    let got = matmul(&to_cmat(&a), &to_cmat(&b)).unwrap();
    assert!(max_diff_dense(&from_cmat(&got), &mul(&a, &b)) < 1e-14);
    assert!(matmul(&to_cmat(&a), &to_cmat(&a)).is_err());
}

proptest! {
    #[test]
    fn parseval_holds(values in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..80)) {
        let v: Vec<C64> = values.iter().map(|&(re, im)| c(re, im)).collect();
        let f = dft_unitary(&v).unwrap();
        let before: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let after: f64 = f.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((before - after).abs() <= 1e-10 * before.max(1.0));
    }
}
