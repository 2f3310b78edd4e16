//! Dense square complex matrices.
//!
//! Storage is row-major with interleaved real/imaginary parts (`Complex64`
//! is `repr(C)`), which keeps the inner loops of products contiguous.

use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense `n × n` complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major entries, rejecting non-square or non-finite input.
    pub fn from_entries(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("matrix dimension must be positive".into()));
        }
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input(format!(
                "non-finite entry at ({}, {})",
                k / n,
                k % n
            )));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("rows must all have length n".into()));
        }
        Self::from_entries(n, rows.concat())
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row-major entries.
    #[inline]
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    /// `diag(d) · self`
    pub fn scale_rows(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for (i, row) in out.data.chunks_exact_mut(self.n).enumerate() {
            row.iter_mut().for_each(|z| *z *= d[i]);
        }
        out
    }

    /// `self · diag(d)`
    pub fn scale_cols(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.n);
        let mut out = self.clone();
        for row in out.data.chunks_exact_mut(self.n) {
            row.iter_mut().zip(d).for_each(|(z, &dj)| *z *= dj);
        }
        out
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ · x`, i.e. column sums weighted by `x`.
    pub fn transpose_matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n];
        for (row, &xi) in self.data.chunks_exact(self.n).zip(x) {
            out.iter_mut().zip(row).for_each(|(o, &a)| *o += a * xi);
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self − other`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "dimension mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `𝟙_k ⊕ self`
    pub fn embed_lower_right(&self, k: usize) -> Self {
        let n = self.n + k;
        Self::from_fn(n, |i, j| match (i < k, j < k) {
            (true, true) if i == j => Complex64::new(1.0, 0.0),
            (false, false) => self[(i - k, j - k)],
            _ => Complex64::new(0.0, 0.0),
        })
    }

    /// The trailing `(n − k) × (n − k)` block.
    pub fn lower_right_block(&self, k: usize) -> Self {
        assert!(k < self.n);
        Self::from_fn(self.n - k, |i, j| self[(i + k, j + k)])
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                out_row
                    .iter_mut()
                    .zip(rhs.row(k))
                    .for_each(|(o, &b)| *o += a * b);
            }
        }
        out
    }
}

impl Mul for ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        &self * &rhs
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.n, self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = self
                .row(i)
                .iter()
                .map(|z| format!("{:+.6}{:+.6}i", z.re, z.im))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Row and column sums of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSums {
    pub rows: Vec<Complex64>,
    pub cols: Vec<Complex64>,
}

impl LineSums {
    /// Largest distance of any row or column sum from one.
    pub fn deviation_from_one(&self) -> f64 {
        self.rows
            .iter()
            .chain(&self.cols)
            .map(|s| (s - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

pub fn line_sums(m: &ComplexMatrix) -> LineSums {
    let rows = m.row_sums();
    let cols = m.col_sums();
    LineSums { rows, cols }
}

impl ComplexMatrix {
    pub fn row_sums(&self) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn col_sums(&self) -> Vec<Complex64> {
        let mut cols = vec![Complex64::new(0.0, 0.0); self.n];
        for row in self.data.chunks_exact(self.n) {
            cols.iter_mut().zip(row).for_each(|(c, &a)| *c += a);
        }
        cols
    }
}

/// Max over all lines of `|sum − 1|`.
pub fn line_sum_deviation(m: &ComplexMatrix) -> f64 {
    line_sums(m).deviation_from_one()
}

/// Frobenius norm of `M†M − 𝟙`.
pub fn unitarity_defect(m: &ComplexMatrix) -> Result<f64> {
    if !m.is_finite() {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let gram = &m.adjoint() * m;
    Ok(gram.distance(&ComplexMatrix::identity(m.n())))
}

/// The unitary discrete Fourier transform, `(F_n)_{kl} = exp(2πi·kl/n)/√n`.
///
/// The exponent is reduced modulo `n` before evaluation so large `kl`
/// products do not lose phase accuracy.
pub fn build_dft(n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::Dimension("DFT dimension must be positive".into()));
    }
    let norm = 1.0 / (n as f64).sqrt();
    Ok(ComplexMatrix::from_fn(n, |k, l| {
        let m = (k * l) % n;
        Complex64::from_polar(norm, TAU * m as f64 / n as f64)
    }))
}
