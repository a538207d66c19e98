//! Dense complex linear algebra and DFTs.
//!
//! Two transform conventions live side by side:
//!
//! * [`dft_unitary`] / [`idft_unitary`] scale by `1/sqrt(N)` so that the DFT
//!   matrix `F` satisfies `F^-1 = F^H`. Signals and noise go through these,
//!   which keeps white noise of variance `sigma^2` white with the same
//!   variance after the transform.
//! * [`dft_unnormalized`] carries no scale. The eigenvalues of a circulant
//!   matrix are the unnormalized DFT of its first column, so channel impulse
//!   responses go through this one.
//!
//! Nothing here picks a convention automatically.
//!
//! Matrices are small (at most a few hundred on a side) and row-major. The
//! only factorization is a Cholesky decomposition for Hermitian positive
//! definite inputs, see [`invert_hpd`].

use std::cell::RefCell;
use std::ops::{Deref, Index, IndexMut};

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative element-wise tolerance for the Hermitian check in [`HpdMat::new`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest magnitude [`elem_inverse`] accepts.
pub const MIN_SCALE: f64 = 1e-300;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// A non-empty vector of finite complex scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct CVec(Vec<C64>);

impl CVec {
    pub fn new(elements: Vec<C64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::invalid("vector must have at least one element"));
        }
        if let Some(i) = elements.iter().position(|z| !z.is_finite()) {
            return Err(Error::invalid(format!("non-finite vector element at {i}")));
        }
        Ok(CVec(elements))
    }

    /// Builds a vector from real parts only.
    pub fn from_real(values: &[f64]) -> Result<Self> {
        CVec::new(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(len: usize) -> Result<Self> {
        CVec::new(vec![ZERO; len])
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

impl Deref for CVec {
    type Target = [C64];

    fn deref(&self) -> &[C64] {
        &self.0
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("matrix shape {rows}x{cols} is empty")));
        }
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite matrix entry at ({}, {})",
                i / cols,
                i % cols
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("ragged rows"));
        }
        CMat::new(r, c, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape {rows}x{cols} is empty");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat::from_fn(rows, cols, |_, _| ZERO)
    }

    pub fn identity(n: usize) -> Self {
        CMat::from_fn(n, n, |i, j| if i == j { ONE } else { ZERO })
    }

    /// Square matrix with `d` on the diagonal.
    pub fn diag(d: &[C64]) -> Self {
        CMat::from_fn(d.len(), d.len(), |i, j| if i == j { d[i] } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> Result<CMat> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CMat) -> Result<CMat> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &CMat, f: impl Fn(C64, C64) -> C64) -> Result<CMat> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::invalid(format!(
                "shape mismatch {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// `self + s * I`.
    pub fn add_diagonal(&self, s: f64) -> Result<CMat> {
        if !self.is_square() {
            return Err(Error::invalid("add_diagonal needs a square matrix"));
        }
        let mut out = self.clone();
        for i in 0..self.rows {
            out[(i, i)] += s;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[C64]) -> Result<CVec> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "cannot multiply {}x{} matrix by length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok(CVec(
            (0..self.rows)
                .map(|i| dot(self.row(i), v))
                .collect(),
        ))
    }

    /// `self^H * v` without forming the conjugate transpose.
    pub fn hermitian_mul_vec(&self, v: &[C64]) -> Result<CVec> {
        if v.len() != self.rows {
            return Err(Error::invalid(format!(
                "cannot multiply ({}x{})^H by length-{} vector",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        Ok(CVec(out))
    }

    /// `self^H * self`, exactly Hermitian.
    pub fn gram(&self) -> CMat {
        let k = self.cols;
        let mut g = CMat::zeros(k, k);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..k {
                let ai = row[i].conj();
                for j in i..k {
                    g.data[i * k + j] += ai * row[j];
                }
            }
        }
        for i in 0..k {
            g.data[i * k + i].im = 0.0;
            for j in 0..i {
                g.data[i * k + j] = g.data[j * k + i].conj();
            }
        }
        g
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// A square matrix that passed the Hermitian check.
///
/// Positive definiteness is not checked up front; [`invert_hpd`] reports it
/// when the factorization hits a non-positive pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct HpdMat(CMat);

impl HpdMat {
    pub fn new(m: CMat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "HPD matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let n = m.rows;
        for i in 0..n {
            for j in i..n {
                let a = m[(i, j)];
                let b = m[(j, i)].conj();
                let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
                if (a - b).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::invalid(format!("matrix is not Hermitian at ({i}, {j})")));
                }
            }
        }
        Ok(HpdMat(m))
    }

    /// `A^H A + sigma2 * I`.
    pub fn regularized_gram(a: &CMat, sigma2: f64) -> Result<Self> {
        HpdMat::new(a.gram().add_diagonal(sigma2)?)
    }

    /// `A A^H + sigma2 * I`.
    pub fn regularized_outer(a: &CMat, sigma2: f64) -> Result<Self> {
        HpdMat::new(hermitian(a).gram().add_diagonal(sigma2)?)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_mat(&self) -> &CMat {
        &self.0
    }

    pub fn into_mat(self) -> CMat {
        self.0
    }
}

/// Inverts a Hermitian positive definite matrix through its Cholesky factor.
///
/// With `m = L L^H`, the inverse is `L^-H L^-1`. Only the lower triangle of
/// `m` is read. The result is Hermitian to the last bit.
pub fn invert_hpd(m: &HpdMat) -> Result<CMat> {
    let n = m.dim();
    let a = m.as_mat();
    let l = cholesky_lower(a)?;

    // L^-1 by forward substitution, column by column.
    let mut linv = vec![ZERO; n * n];
    for j in 0..n {
        linv[j * n + j] = ONE / l[j * n + j];
        for i in j + 1..n {
            let mut acc = ZERO;
            for p in j..i {
                acc += l[i * n + p] * linv[p * n + j];
            }
            linv[i * n + j] = -acc / l[i * n + i];
        }
    }

    // X = L^-H L^-1; X_ij = sum_p conj(Linv_pi) Linv_pj over p >= max(i, j).
    let mut x = vec![ZERO; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut acc = ZERO;
            for p in i..n {
                acc += linv[p * n + i].conj() * linv[p * n + j];
            }
            x[i * n + j] = acc;
        }
        x[i * n + i].im = 0.0;
        for j in 0..i {
            x[j * n + i] = x[i * n + j].conj();
        }
    }
    CMat::new(n, n, x).map_err(|_| Error::SingularMatrix("inverse is not finite".into()))
}

/// Solves `m X = b` through the Cholesky factor of `m`, followed by one step
/// of iterative refinement. More accurate than multiplying by
/// [`invert_hpd`] when `m` is badly conditioned.
pub fn solve_hpd(m: &HpdMat, b: &CMat) -> Result<CMat> {
    let n = m.dim();
    if b.rows != n {
        return Err(Error::invalid(format!(
            "right-hand side has {} rows, matrix is {n}x{n}",
            b.rows
        )));
    }
    let l = cholesky_lower(m.as_mat())?;
    let mut x = cholesky_solve(&l, n, b);
    let residual = b.sub(&matmul(m.as_mat(), &x)?)?;
    let dx = cholesky_solve(&l, n, &residual);
    for (xi, di) in x.data.iter_mut().zip(&dx.data) {
        *xi += di;
    }
    if x.data.iter().any(|z| !z.is_finite()) {
        return Err(Error::SingularMatrix("solution is not finite".into()));
    }
    Ok(x)
}

/// `(L L^H)^-1 b` by forward then backward substitution.
fn cholesky_solve(l: &[C64], n: usize, b: &CMat) -> CMat {
    let cols = b.cols;
    let mut x = b.data.clone();
    for c in 0..cols {
        for i in 0..n {
            let mut acc = x[i * cols + c];
            for p in 0..i {
                acc -= l[i * n + p] * x[p * cols + c];
            }
            x[i * cols + c] = acc / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = x[i * cols + c];
            for p in i + 1..n {
                acc -= l[p * n + i].conj() * x[p * cols + c];
            }
            x[i * cols + c] = acc / l[i * n + i];
        }
    }
    CMat { rows: n, cols, data: x }
}

/// Lower Cholesky factor, row-major. Pivots at or below `n * eps` times the
/// largest diagonal entry count as singular.
fn cholesky_lower(a: &CMat) -> Result<Vec<C64>> {
    let n = a.rows;
    let max_diag = (0..n).map(|i| a[(i, i)].re.abs()).fold(0.0, f64::max);
    let floor = n as f64 * f64::EPSILON * max_diag;
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for p in 0..j {
            d -= l[j * n + p].norm_sqr();
        }
        if !(d > floor) || !d.is_finite() {
            return Err(Error::SingularMatrix(format!(
                "non-positive pivot {d:e} at column {j}"
            )));
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut acc = a[(i, j)];
            for p in 0..j {
                acc -= l[i * n + p] * l[j * n + p].conj();
            }
            l[i * n + j] = acc / djj;
        }
    }
    Ok(l)
}

pub fn matmul(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.cols != b.rows {
        return Err(Error::invalid(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = CMat::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (p, &aip) in a.row(i).iter().enumerate() {
            for (o, &bpj) in orow.iter_mut().zip(b.row(p)) {
                *o += aip * bpj;
            }
        }
    }
    Ok(out)
}

/// Conjugate transpose.
pub fn hermitian(a: &CMat) -> CMat {
    CMat::from_fn(a.cols, a.rows, |i, j| a[(j, i)].conj())
}

/// Element-wise conjugate.
pub fn conj(a: &CMat) -> CMat {
    CMat {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().map(|z| z.conj()).collect(),
    }
}

/// Diagonal of `a * b`, costing one inner product per diagonal entry.
pub fn diag_of_product(a: &CMat, b: &CMat) -> Result<CVec> {
    if a.cols != b.rows || a.rows != b.cols {
        return Err(Error::invalid(format!(
            "diagonal of {}x{} times {}x{} is undefined",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(CVec(
        (0..a.rows)
            .map(|i| {
                a.row(i)
                    .iter()
                    .enumerate()
                    .map(|(p, &x)| x * b[(p, i)])
                    .sum()
            })
            .collect(),
    ))
}

pub fn elem_inverse(v: &[C64]) -> Result<CVec> {
    if let Some(i) = v.iter().position(|z| !(z.norm() > MIN_SCALE)) {
        return Err(Error::DegenerateScale(format!(
            "element {i} has magnitude {:e}",
            v[i].norm()
        )));
    }
    CVec::new(v.iter().map(|z| z.inv()).collect())
}

pub fn hadamard(v: &[C64], w: &[C64]) -> Result<CVec> {
    if v.len() != w.len() {
        return Err(Error::invalid(format!(
            "hadamard length mismatch {} vs {}",
            v.len(),
            w.len()
        )));
    }
    CVec::new(v.iter().zip(w).map(|(&a, &b)| a * b).collect())
}

/// Unconjugated inner product.
pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub(crate) fn max_abs(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_raw(buf: &mut [C64], inverse: bool) {
    let n = buf.len();
    let fft = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    });
    fft.process(buf);
}

fn check_len(v: &[C64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::invalid("transform of an empty vector"));
    }
    Ok(())
}

/// In-place forward DFT with `1/sqrt(N)` scaling.
pub fn dft_unitary_in_place(buf: &mut [C64]) -> Result<()> {
    check_len(buf)?;
    fft_raw(buf, false);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    Ok(())
}

/// In-place inverse DFT with `1/sqrt(N)` scaling.
pub fn idft_unitary_in_place(buf: &mut [C64]) -> Result<()> {
    check_len(buf)?;
    fft_raw(buf, true);
    let s = 1.0 / (buf.len() as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    Ok(())
}

pub fn dft_unitary(v: &[C64]) -> Result<CVec> {
    let mut buf = v.to_vec();
    dft_unitary_in_place(&mut buf)?;
    CVec::new(buf)
}

pub fn idft_unitary(v: &[C64]) -> Result<CVec> {
    let mut buf = v.to_vec();
    idft_unitary_in_place(&mut buf)?;
    CVec::new(buf)
}

/// `sqrt(N) * dft_unitary(v)`: the plain sum `X_n = sum_t v_t e^{-2 pi j n t / N}`.
pub fn dft_unnormalized(v: &[C64]) -> Result<CVec> {
    check_len(v)?;
    let mut buf = v.to_vec();
    fft_raw(&mut buf, false);
    CVec::new(buf)
}

/// Inverse of [`dft_unnormalized`] (carries the full `1/N`).
pub fn idft_unnormalized(v: &[C64]) -> Result<CVec> {
    check_len(v)?;
    let mut buf = v.to_vec();
    fft_raw(&mut buf, true);
    let s = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    CVec::new(buf)
}

/// `v` followed by zeros up to length `n`.
pub fn zero_pad(v: &[C64], n: usize) -> Result<Vec<C64>> {
    if v.len() > n {
        return Err(Error::invalid(format!(
            "cannot zero-pad length {} down to {n}",
            v.len()
        )));
    }
    let mut out = v.to_vec();
    out.resize(n, ZERO);
    Ok(out)
}
