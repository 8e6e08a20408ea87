//! Hermitian, positive and density operators on a finite-dimensional space.
//!
//! The refinement chain is `HermitianOperator` ⊃ `PositiveOperator` ⊃
//! `DensityOperator`; each wrapper derefs to the one above it. All values are
//! immutable once validated.

use std::ops::Deref;

use serde::Serialize;

use crate::eigen::jacobi_eigh;
use crate::error::{Error, Result};
use crate::matrix::{Matrix, C64, ZERO};
use crate::tolerance::{Tolerances, NORM_TOL, TRACE_IMAG_TOL, UNITARY_TOL};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianOperator {
    matrix: Matrix,
}

impl HermitianOperator {
    /// Validates finiteness and conjugate symmetry, then stores the exactly
    /// symmetrized matrix.
    pub fn new(mut matrix: Matrix) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some((row, col)) = matrix.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > Tolerances::current().hermitian {
            return Err(Error::NotHermitian { deviation });
        }
        matrix.hermitize();
        Ok(Self { matrix })
    }

    pub(crate) fn from_matrix_unchecked(mut matrix: Matrix) -> Self {
        matrix.hermitize();
        Self { matrix }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(Matrix::from_real_rows(rows)?)
    }

    pub fn zeros(dim: usize) -> Self {
        Self { matrix: Matrix::zeros(dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: Matrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix + &other.matrix })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self { matrix: &self.matrix - &other.matrix })
    }

    pub fn scale(&self, c: f64) -> HermitianOperator {
        Self { matrix: self.matrix.scale(c) }
    }

    /// U A U†
    pub fn conjugate_by(&self, u: &UnitaryOperator) -> Result<HermitianOperator> {
        check_dims(self.dim(), u.dim())?;
        Ok(Self::from_matrix_unchecked(self.matrix.conjugate_by(u.matrix())))
    }

    pub fn eigh(&self) -> Result<EigenDecomposition> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.eigenvalues[0])
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(*self.eigh()?.eigenvalues.last().expect("dim >= 1"))
    }

    /// <v|A|v>, real for Hermitian A.
    pub fn expectation(&self, v: &StateVector) -> Result<f64> {
        check_dims(self.dim(), v.dim())?;
        Ok(self.matrix.expectation(v.amplitudes()).re)
    }
}

impl AsRef<HermitianOperator> for HermitianOperator {
    fn as_ref(&self) -> &HermitianOperator {
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PositiveOperator {
    base: HermitianOperator,
}

impl PositiveOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        check_positive(&HermitianOperator::new(matrix)?)
    }

    /// Wraps an operator that is positive by construction (sums, products
    /// with their adjoint, tensor products of positives).
    pub(crate) fn from_hermitian_unchecked(base: HermitianOperator) -> Self {
        Self { base }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { base: HermitianOperator::zeros(dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { base: HermitianOperator::identity(dim) }
    }

    pub fn as_hermitian(&self) -> &HermitianOperator {
        &self.base
    }

    pub fn into_hermitian(self) -> HermitianOperator {
        self.base
    }

    /// Positive operators are closed under addition.
    pub fn add(&self, other: &PositiveOperator) -> Result<PositiveOperator> {
        Ok(Self { base: self.base.add(&other.base)? })
    }

    /// Scales by a non-negative factor.
    pub fn scale(&self, c: f64) -> Result<PositiveOperator> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor {c} must be finite and >= 0")));
        }
        Ok(Self { base: self.base.scale(c) })
    }

    pub fn conjugate_by(&self, u: &UnitaryOperator) -> Result<PositiveOperator> {
        Ok(Self { base: self.base.conjugate_by(u)? })
    }

    pub fn tensor(&self, other: &PositiveOperator) -> PositiveOperator {
        Self { base: tensor_product(&self.base, &other.base) }
    }

    /// Eigenvalues with values in `[-tau_psd, 0)` clamped to zero.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(self.base.eigh()?.eigenvalues.into_iter().map(|x| x.max(0.0)).collect())
    }
}

impl Deref for PositiveOperator {
    type Target = HermitianOperator;
    fn deref(&self) -> &HermitianOperator {
        &self.base
    }
}

impl AsRef<HermitianOperator> for PositiveOperator {
    fn as_ref(&self) -> &HermitianOperator {
        &self.base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator {
    base: PositiveOperator,
}

impl DensityOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        Self::from_positive(PositiveOperator::new(matrix)?)
    }

    pub fn from_positive(base: PositiveOperator) -> Result<Self> {
        let trace = base.trace();
        if (trace - 1.0).abs() > Tolerances::current().trace {
            return Err(Error::NotUnitTrace { trace });
        }
        Ok(Self { base })
    }

    /// Divides a positive operator by its trace.
    pub fn normalized(op: &PositiveOperator) -> Result<Self> {
        let trace = op.trace();
        if trace <= Tolerances::current().trace {
            return Err(Error::ZeroOperator);
        }
        Ok(Self { base: op.scale(1.0 / trace)? })
    }

    pub fn pure(v: &StateVector) -> Self {
        Self { base: projector(v) }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { base: PositiveOperator { base: HermitianOperator::identity(dim).scale(1.0 / dim as f64) } }
    }

    pub(crate) fn from_positive_unchecked(base: PositiveOperator) -> Self {
        Self { base }
    }

    pub fn as_positive(&self) -> &PositiveOperator {
        &self.base
    }

    pub fn into_positive(self) -> PositiveOperator {
        self.base
    }

    pub fn conjugate_by(&self, u: &UnitaryOperator) -> Result<DensityOperator> {
        Ok(Self { base: self.base.conjugate_by(u)? })
    }

    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        Self { base: self.base.tensor(&other.base) }
    }
}

impl Deref for DensityOperator {
    type Target = PositiveOperator;
    fn deref(&self) -> &PositiveOperator {
        &self.base
    }
}

impl AsRef<HermitianOperator> for DensityOperator {
    fn as_ref(&self) -> &HermitianOperator {
        &self.base.base
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct UnitaryOperator {
    matrix: Matrix,
}

impl UnitaryOperator {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.dim() == 0 {
            return Err(Error::ZeroDimension);
        }
        if let Some((row, col)) = matrix.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { matrix })
    }

    /// Builds a unitary whose columns are the given orthonormal vectors.
    pub fn from_columns(columns: &[StateVector]) -> Result<Self> {
        let d = columns.len();
        let mut m = Matrix::zeros(d);
        for (j, col) in columns.iter().enumerate() {
            check_dims(d, col.dim())?;
            for (i, &a) in col.amplitudes().iter().enumerate() {
                m[(i, j)] = a;
            }
        }
        Self::new(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self { matrix: Matrix::identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn adjoint(&self) -> UnitaryOperator {
        Self { matrix: self.matrix.adjoint() }
    }

    /// Column `j`, i.e. `U|e_j>`.
    pub fn column(&self, j: usize) -> StateVector {
        StateVector { amplitudes: self.matrix.column(j) }
    }

    pub fn columns(&self) -> impl Iterator<Item = StateVector> + '_ {
        (0..self.dim()).map(|j| self.column(j))
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        check_dims(self.dim(), v.dim())?;
        Ok(StateVector { amplitudes: self.matrix.mul_vec(v.amplitudes()) })
    }
}

/// ‖U U† − I‖_max
pub fn unitarity_deviation(m: &Matrix) -> f64 {
    (m * &m.adjoint()).max_abs_diff(&Matrix::identity(m.dim()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::ZeroDimension);
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let n = norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotNormalized { norm: n });
        }
        Self::new(amplitudes.into_iter().map(|z| z / n).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dim {dim}");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// `(e_i + phase * e_j) / sqrt(2)`
    pub fn pair_superposition(dim: usize, i: usize, j: usize, phase: C64) -> Self {
        assert!(i != j && i < dim && j < dim);
        let mut amplitudes = vec![ZERO; dim];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        amplitudes[i] = C64::new(h, 0.0);
        amplitudes[j] = phase * h;
        Self { amplitudes }
    }

    pub(crate) fn from_amplitudes_unchecked(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal, `eigenvectors[l]` belongs to `eigenvalues[l]`.
    pub eigenvectors: Vec<StateVector>,
}

impl EigenDecomposition {
    /// Σ_l λ_l |λ_l><λ_l|
    pub fn reconstruct(&self) -> Matrix {
        let d = self.eigenvalues.len();
        let mut out = Matrix::zeros(d);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let a = v.amplitudes();
            out = &out + &Matrix::outer(a, a).scale(*lambda);
        }
        out
    }

    /// Eigenvectors as the columns of a unitary.
    pub fn basis(&self) -> Matrix {
        let d = self.eigenvalues.len();
        let mut m = Matrix::zeros(d);
        for (j, v) in self.eigenvectors.iter().enumerate() {
            for (i, &a) in v.amplitudes().iter().enumerate() {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// Applies `f` to every eigenvalue: Σ_l f(λ_l) |λ_l><λ_l|.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let shifted = EigenDecomposition {
            eigenvalues: self.eigenvalues.iter().map(|&x| f(x)).collect(),
            eigenvectors: self.eigenvectors.clone(),
        };
        shifted.reconstruct()
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Re Tr(A B). The imaginary part is asserted to be round-off.
pub fn trace_product(a: impl AsRef<HermitianOperator>, b: impl AsRef<HermitianOperator>) -> Result<f64> {
    let (a, b) = (a.as_ref(), b.as_ref());
    check_dims(a.dim(), b.dim())?;
    let t = a.matrix.trace_product(&b.matrix);
    if t.im.abs() > TRACE_IMAG_TOL {
        return Err(Error::InternalConsistency(format!(
            "Tr(AB) of Hermitian operators has imaginary part {:e}",
            t.im
        )));
    }
    Ok(t.re)
}

pub fn eigh(a: &HermitianOperator) -> Result<EigenDecomposition> {
    let spectrum = jacobi_eigh(&a.matrix)?;
    let eigenvectors = (0..a.dim())
        .map(|j| StateVector::from_amplitudes_unchecked(spectrum.vectors.column(j)))
        .collect();
    Ok(EigenDecomposition { eigenvalues: spectrum.values, eigenvectors })
}

pub fn check_positive(a: &HermitianOperator) -> Result<PositiveOperator> {
    let min = a.min_eigenvalue()?;
    if min < -Tolerances::current().positive {
        return Err(Error::NotPositive { eigenvalue: min });
    }
    Ok(PositiveOperator { base: a.clone() })
}

pub fn tensor_product(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    HermitianOperator::from_matrix_unchecked(a.matrix.kron(&b.matrix))
}

/// |v><v|
pub fn projector(v: &StateVector) -> PositiveOperator {
    let a = v.amplitudes();
    PositiveOperator::from_hermitian_unchecked(HermitianOperator::from_matrix_unchecked(Matrix::outer(a, a)))
}
