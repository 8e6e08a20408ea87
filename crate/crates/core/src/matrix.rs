//! Dense square complex matrices, row-major.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data; `data.len()` must be a perfect square.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::NotSquare { expected: dim * dim, found: data.len() });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::NotSquare { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// |u><v|
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len());
        let dim = u.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = u[i] * v[j].conj();
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim.max(1))
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> C64 {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                acc += self.data[i * d + j] * other.data[j * d + i];
            }
        }
        acc
    }

    pub fn scale(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_complex(&self, c: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Max-abs deviation from conjugate symmetry.
    pub fn hermitian_deviation(&self) -> f64 {
        let d = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in i..d {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn kron(&self, other: &Matrix) -> Self {
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(da * db);
        for i in 0..da {
            for j in 0..da {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..db {
                    for l in 0..db {
                        out[(i * db + k, j * db + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        self.rows().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// <v|self|v>
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let mv = self.mul_vec(v);
        v.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub(crate) fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
            .map(|p| (p / self.dim, p % self.dim))
    }

    /// Replaces each entry pair by its Hermitian average, making the matrix exactly Hermitian.
    pub(crate) fn hermitize(&mut self) {
        let d = self.dim;
        for i in 0..d {
            self.data[i * d + i].im = 0.0;
            for j in i + 1..d {
                let avg = (self.data[i * d + j] + self.data[j * d + i].conj()) * 0.5;
                self.data[i * d + j] = avg;
                self.data[j * d + i] = avg.conj();
            }
        }
    }

    /// U * self * U†
    pub fn conjugate_by(&self, u: &Matrix) -> Self {
        &(u * self) * &u.adjoint()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Matrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Serializes as nested row-major arrays of `[re, im]` pairs.
impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.dim))?;
        for row in self.rows() {
            let pairs: Vec<[f64; 2]> = row.iter().map(|z| [z.re, z.im]).collect();
            seq.serialize_element(&pairs)?;
        }
        seq.end()
    }
}

/// Entrywise sum of `terms`, correctly rounded, so the result does not
/// depend on the order of the terms.
pub fn exact_sum<'a>(dim: usize, terms: impl IntoIterator<Item = &'a Matrix>) -> Matrix {
    let mut partials: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); dim * dim];
    for m in terms {
        assert_eq!(m.dim, dim, "exact_sum dimension mismatch");
        for (p, z) in partials.iter_mut().zip(&m.data) {
            push_partial(&mut p.0, z.re);
            push_partial(&mut p.1, z.im);
        }
    }
    let data = partials.iter().map(|(re, im)| C64::new(round_partials(re), round_partials(im))).collect();
    Matrix { dim, data }
}

// Shewchuk's non-overlapping partials, as in Python's math.fsum.
fn push_partial(partials: &mut Vec<f64>, mut x: f64) {
    let mut i = 0;
    for j in 0..partials.len() {
        let mut y = partials[j];
        if x.abs() < y.abs() {
            std::mem::swap(&mut x, &mut y);
        }
        let hi = x + y;
        let lo = y - (hi - x);
        if lo != 0.0 {
            partials[i] = lo;
            i += 1;
        }
        x = hi;
    }
    partials.truncate(i);
    partials.push(x);
}

fn round_partials(partials: &[f64]) -> f64 {
    let Some(mut n) = partials.len().checked_sub(1) else { return 0.0 };
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // half-way case: the remaining partials decide the rounding direction
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}
