//! Dense complex containers and the multilinear algebra used throughout the
//! crate.
//!
//! A [`ComplexTensor4`] of shape `N × M × L × T` stores its entries row-major
//! with `t` varying fastest. The four unfoldings follow the cyclic mode
//! permutation scheme, which is *not* the usual column-major matricization:
//!
//! | mode | shape      | column of entry `(n, m, ℓ, t)` |
//! |------|------------|--------------------------------|
//! | 1    | `N × MLT`  | `(t·L + ℓ)·M + m`              |
//! | 2    | `M × NLT`  | `(n·T + t)·L + ℓ`              |
//! | 3    | `L × NMT`  | `(m·N + n)·T + t`              |
//! | 4    | `T × NML`  | `(ℓ·M + m)·N + n`              |
//!
//! With this ordering and Kronecker products taken with the right operand
//! varying fastest, the unfoldings of a synthesized measurement factor as
//! `A_tx (H ⊙ B ⊙ A_rx)ᵀ`, `A_rx (A_tx ⊙ H ⊙ B)ᵀ`, `B (A_rx ⊙ A_tx ⊙ H)ᵀ`
//! and `H (B ⊙ A_rx ⊙ A_tx)ᵀ`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{check_len, Error, Result};
use crate::math;

/// Unfolding mode of a four-way array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
    Four,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::One, Mode::Two, Mode::Three, Mode::Four];

    pub fn number(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
            Mode::Three => 3,
            Mode::Four => 4,
        }
    }
}

impl TryFrom<u8> for Mode {
    type Error = Error;

    fn try_from(value: u8) -> Result<Self> {
        match value {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            4 => Ok(Mode::Four),
            other => Err(Error::InvalidMode(other)),
        }
    }
}

/// Shape of a four-way array, `(N, M, L, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub t: usize,
}

impl Dims {
    pub const fn new(n: usize, m: usize, l: usize, t: usize) -> Self {
        Self { n, m, l, t }
    }

    pub const fn len(&self) -> usize {
        self.n * self.m * self.l * self.t
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub const fn flat(&self, n: usize, m: usize, l: usize, t: usize) -> usize {
        ((n * self.m + m) * self.l + l) * self.t + t
    }

    /// Inverse of [`Dims::flat`].
    #[inline]
    pub const fn unflat(&self, idx: usize) -> (usize, usize, usize, usize) {
        let t = idx % self.t;
        let rest = idx / self.t;
        let l = rest % self.l;
        let rest = rest / self.l;
        let m = rest % self.m;
        let n = rest / self.m;
        (n, m, l, t)
    }

    /// Shape `(rows, cols)` of the unfolding along `mode`.
    pub const fn unfolded_shape(&self, mode: Mode) -> (usize, usize) {
        match mode {
            Mode::One => (self.n, self.m * self.l * self.t),
            Mode::Two => (self.m, self.n * self.l * self.t),
            Mode::Three => (self.l, self.n * self.m * self.t),
            Mode::Four => (self.t, self.n * self.m * self.l),
        }
    }

    /// Position `(row, col)` of entry `(n, m, ℓ, t)` in the unfolding along `mode`.
    #[inline]
    pub const fn unfolded_index(
        &self,
        mode: Mode,
        n: usize,
        m: usize,
        l: usize,
        t: usize,
    ) -> (usize, usize) {
        match mode {
            Mode::One => (n, (t * self.l + l) * self.m + m),
            Mode::Two => (m, (n * self.t + t) * self.l + l),
            Mode::Three => (l, (m * self.n + n) * self.t + t),
            Mode::Four => (t, (l * self.m + m) * self.n + n),
        }
    }
}

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_len("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut out = Self::zeros(size, size);
        for i in 0..size {
            out[(i, i)] = Complex64::new(1.0, 0.0);
        }
        out
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Single-column matrix.
    pub fn column_vector(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Single-row matrix.
    pub fn row_vector(v: &[Complex64]) -> Self {
        Self {
            rows: 1,
            cols: v.len(),
            data: v.to_vec(),
        }
    }

    /// Diagonal matrix with `v` on its diagonal.
    pub fn diag(v: &[Complex64]) -> Self {
        let mut out = Self::zeros(v.len(), v.len());
        for (i, &x) in v.iter().enumerate() {
            out[(i, i)] = x;
        }
        out
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Option<Complex64> {
        if row < self.rows && col < self.cols {
            Some(self.data[row * self.cols + col])
        } else {
            None
        }
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self[(r, col)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        check_len("matmul inner dimension", self.cols, rhs.rows)?;
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            let lhs_row = self.row(r);
            let out_row = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
            for (k, &a) in lhs_row.iter().enumerate() {
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        assert!(r < self.rows && c < self.cols, "matrix index out of bounds");
        &mut self.data[r * self.cols + c]
    }
}

/// Dense complex four-way array `N × M × L × T`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor4 {
    dims: Dims,
    data: Vec<Complex64>,
}

impl ComplexTensor4 {
    pub fn new(dims: Dims, data: Vec<Complex64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Empty("tensor dimensions"));
        }
        check_len("tensor data", dims.len(), data.len())?;
        Ok(Self { dims, data })
    }

    pub fn zeros(dims: Dims) -> Self {
        Self {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims.len()],
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for n in 0..dims.n {
            for m in 0..dims.m {
                for l in 0..dims.l {
                    for t in 0..dims.t {
                        data.push(f(n, m, l, t));
                    }
                }
            }
        }
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    /// Bounds-checked element access.
    pub fn get(&self, n: usize, m: usize, l: usize, t: usize) -> Option<Complex64> {
        let d = self.dims;
        if n < d.n && m < d.m && l < d.l && t < d.t {
            Some(self.data[d.flat(n, m, l, t)])
        } else {
            None
        }
    }

    /// The length-`T` fiber `[X]_{n,m,ℓ,:}`.
    #[inline]
    pub fn fiber(&self, n: usize, m: usize, l: usize) -> &[Complex64] {
        let start = self.dims.flat(n, m, l, 0);
        &self.data[start..start + self.dims.t]
    }

    /// The `L × T` slice `[X]_{n,m,:,:}` as a flat row-major slice.
    #[inline]
    pub fn slice_nm(&self, n: usize, m: usize) -> &[Complex64] {
        let start = self.dims.flat(n, m, 0, 0);
        &self.data[start..start + self.dims.l * self.dims.t]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.data)
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.data)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scale(&mut self, factor: Complex64) {
        for z in &mut self.data {
            *z *= factor;
        }
    }

    pub fn add_assign(&mut self, other: &ComplexTensor4) -> Result<()> {
        check_len("tensor addition", self.data.len(), other.data.len())?;
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch {
                what: "tensor addition dims",
                expected: self.dims.len(),
                found: other.dims.len(),
            });
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    /// Matricization along `mode`; see the module docs for the column order.
    pub fn unfold(&self, mode: Mode) -> ComplexMatrix {
        let d = self.dims;
        let (rows, cols) = d.unfolded_shape(mode);
        let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
        for (idx, &z) in self.data.iter().enumerate() {
            let (n, m, l, t) = d.unflat(idx);
            let (r, c) = d.unfolded_index(mode, n, m, l, t);
            out[r * cols + c] = z;
        }
        ComplexMatrix {
            rows,
            cols,
            data: out,
        }
    }

    /// Inverse of [`ComplexTensor4::unfold`]; only shapes produced by `unfold` are accepted.
    pub fn fold(matrix: &ComplexMatrix, mode: Mode, dims: Dims) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Empty("tensor dimensions"));
        }
        let (rows, cols) = dims.unfolded_shape(mode);
        check_len("fold rows", rows, matrix.rows)?;
        check_len("fold columns", cols, matrix.cols)?;
        let mut data = vec![Complex64::new(0.0, 0.0); dims.len()];
        for (idx, slot) in data.iter_mut().enumerate() {
            let (n, m, l, t) = dims.unflat(idx);
            let (r, c) = dims.unfolded_index(mode, n, m, l, t);
            *slot = matrix.data[r * cols + c];
        }
        Ok(Self { dims, data })
    }
}

impl Index<(usize, usize, usize, usize)> for ComplexTensor4 {
    type Output = Complex64;

    fn index(&self, (n, m, l, t): (usize, usize, usize, usize)) -> &Complex64 {
        let d = self.dims;
        assert!(
            n < d.n && m < d.m && l < d.l && t < d.t,
            "tensor index out of bounds"
        );
        &self.data[d.flat(n, m, l, t)]
    }
}

impl IndexMut<(usize, usize, usize, usize)> for ComplexTensor4 {
    fn index_mut(&mut self, (n, m, l, t): (usize, usize, usize, usize)) -> &mut Complex64 {
        let d = self.dims;
        assert!(
            n < d.n && m < d.m && l < d.l && t < d.t,
            "tensor index out of bounds"
        );
        &mut self.data[d.flat(n, m, l, t)]
    }
}

/// Column-wise Kronecker product; column `j` is `kron(a[:, j], b[:, j])`.
pub fn khatri_rao(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_len("khatri-rao column count", a.cols, b.cols)?;
    let cols = a.cols;
    Ok(ComplexMatrix::from_fn(a.rows * b.rows, cols, |r, c| {
        a[(r / b.rows, c)] * b[(r % b.rows, c)]
    }))
}

/// Kronecker product of two matrices.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

/// Kronecker product of two vectors, `b` varying fastest.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Elementwise product of two equally shaped tensors.
pub fn hadamard(x: &ComplexTensor4, y: &ComplexTensor4) -> Result<ComplexTensor4> {
    if x.dims != y.dims {
        return Err(Error::ShapeMismatch {
            what: "hadamard operands",
            expected: x.dims.len(),
            found: y.dims.len(),
        });
    }
    Ok(ComplexTensor4 {
        dims: x.dims,
        data: x.data.iter().zip(&y.data).map(|(a, b)| a * b).collect(),
    })
}

/// Elementwise product of two equal-length vectors.
pub fn hadamard_vec(x: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    check_len("hadamard operands", x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).collect())
}

/// Four-way outer product `a ∘ b ∘ c ∘ d`.
pub fn outer(
    a: &[Complex64],
    b: &[Complex64],
    c: &[Complex64],
    d: &[Complex64],
) -> Result<ComplexTensor4> {
    let dims = Dims::new(a.len(), b.len(), c.len(), d.len());
    if dims.is_empty() {
        return Err(Error::Empty("outer product factor"));
    }
    Ok(ComplexTensor4::from_fn(dims, |n, m, l, t| {
        a[n] * b[m] * c[l] * d[t]
    }))
}

/// `xᴴ y`.
pub fn inner_product(x: &[Complex64], y: &[Complex64]) -> Result<Complex64> {
    check_len("inner product operands", x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a.conj() * b).sum())
}

pub fn norm_sqr(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius_norm(x: &[Complex64]) -> f64 {
    math::sqrt(norm_sqr(x))
}
