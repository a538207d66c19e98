//! Slow, direct reference computations shared by the integration tests.
//!
//! Nothing here calls into the library's numerics: matrices are plain nested
//! vectors, the DFT is the O(N^2) sum and inverses use Gauss-Jordan
//! elimination with partial pivoting.

#![allow(dead_code)]

use std::f64::consts::PI;

use fdmud::numerics::{CMat, C64};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Dense = Vec<Vec<C64>>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_dense<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Dense {
    (0..rows).map(|_| (0..cols).map(|_| gaussian(rng)).collect()).collect()
}

/// `sum_t v[t] exp(-2 pi i f t / N)`, scaled by `scale`.
fn dft_sum(v: &[C64], sign: f64, scale: f64) -> Vec<C64> {
    let n = v.len();
    (0..n)
        .map(|f| {
            v.iter()
                .enumerate()
                .map(|(t, &x)| x * C64::from_polar(1.0, sign * 2.0 * PI * ((f * t) % n) as f64 / n as f64))
                .sum::<C64>()
                * scale
        })
        .collect()
}

pub fn dft(v: &[C64]) -> Vec<C64> {
    dft_sum(v, -1.0, 1.0 / (v.len() as f64).sqrt())
}

pub fn idft(v: &[C64]) -> Vec<C64> {
    dft_sum(v, 1.0, 1.0 / (v.len() as f64).sqrt())
}

pub fn dft_plain(v: &[C64]) -> Vec<C64> {
    dft_sum(v, -1.0, 1.0)
}

/// Unitary DFT matrix, entry `(f, t) = exp(-2 pi i f t / N) / sqrt(N)`.
pub fn dft_matrix(n: usize) -> Dense {
    let s = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|f| {
            (0..n)
                .map(|t| C64::from_polar(s, -2.0 * PI * ((f * t) % n) as f64 / n as f64))
                .collect()
        })
        .collect()
}

pub fn zeros(rows: usize, cols: usize) -> Dense {
    vec![vec![c(0.0, 0.0); cols]; rows]
}

pub fn identity(n: usize) -> Dense {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = c(1.0, 0.0);
    }
    m
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let inner = b.len();
    assert!(a.iter().all(|r| r.len() == inner));
    let cols = b[0].len();
    a.iter()
        .map(|r| {
            (0..cols)
                .map(|j| (0..inner).map(|t| r[t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mul_vec(a: &Dense, v: &[C64]) -> Vec<C64> {
    a.iter()
        .map(|r| r.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn adjoint(a: &Dense) -> Dense {
    let (r, cols) = (a.len(), a[0].len());
    (0..cols).map(|j| (0..r).map(|i| a[i][j].conj()).collect()).collect()
}

pub fn transpose(a: &Dense) -> Dense {
    let (r, cols) = (a.len(), a[0].len());
    (0..cols).map(|j| (0..r).map(|i| a[i][j]).collect()).collect()
}

pub fn conj(a: &Dense) -> Dense {
    a.iter().map(|r| r.iter().map(|z| z.conj()).collect()).collect()
}

pub fn add_diag(a: &Dense, s: f64) -> Dense {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] += s;
    }
    out
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a
        .iter()
        .zip(identity(n))
        .map(|(r, e)| r.iter().copied().chain(e).collect())
        .collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .unwrap();
        assert!(m[p][col].norm() > 1e-300, "singular matrix");
        m.swap(col, p);
        let pivot = m[col][col];
        m[col].iter_mut().for_each(|z| *z /= pivot);
        let prow = m[col].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != col {
                let f = row[col];
                row.iter_mut().zip(&prow).for_each(|(z, &q)| *z -= f * q);
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Column `j` is `h` zero-padded to `n` and cyclically delayed by `j`.
pub fn circulant(h: &[C64], n: usize) -> Dense {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let lag = (i + n - j) % n;
                    if lag < h.len() {
                        h[lag]
                    } else {
                        c(0.0, 0.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// `(h ⊛ s)[t] = sum_l h[l] s[(t - l) mod N]`.
pub fn circular_convolution(h: &[C64], s: &[C64]) -> Vec<C64> {
    let n = s.len();
    (0..n)
        .map(|t| h.iter().enumerate().map(|(l, &x)| x * s[(t + n - l % n) % n]).sum())
        .collect()
}

/// Assembles an `(R*n) x (C*n)` matrix from an `R x C` grid of `n x n` blocks.
pub fn blocks(grid: &[Vec<Dense>]) -> Dense {
    grid.iter()
        .flat_map(|brow| {
            let n = brow[0].len();
            (0..n).map(move |i| brow.iter().flat_map(|b| b[i].iter().copied()).collect())
        })
        .collect()
}

pub fn to_cmat(a: &Dense) -> CMat {
    CMat::from_rows(a).unwrap()
}

pub fn from_cmat(a: &CMat) -> Dense {
    (0..a.rows()).map(|i| a.row(i).to_vec()).collect()
}

pub fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn max_diff_dense(a: &Dense, b: &Dense) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| max_diff(x, y)).fold(0.0, f64::max)
}

pub fn max_rel_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max)
}
