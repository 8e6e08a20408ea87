//! Additive frame functions on positive operators and the reconstruction of
//! the operator `R` with `w(M) = Tr(M R)`.
//!
//! Reconstruction is constructive: the diagonal of `R` comes from the basis
//! projectors, and each off-diagonal entry from two superposition probes,
//!
//! ```text
//!   w(|+_ij><+_ij|) = (R_ii + R_jj)/2 + Re R_ij,   |+_ij> = (e_i + e_j)/√2
//!   w(|i_ij><i_ij|) = (R_ii + R_jj)/2 − Im R_ij,   |i_ij> = (e_i + i e_j)/√2
//! ```
//!
//! for a total of exactly `d²` queries.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{Matrix, C64};
use crate::operator::{check_dims, projector, HermitianOperator, PositiveOperator, StateVector, UnitaryOperator};
use crate::parallel::{try_map_indices, ExecutionMode};
use crate::random::{random_low_rank_positive_with, random_positive_with, rng_from_seed};

/// Number of random positive probes used to validate a reconstruction.
pub const VALIDATION_PROBES: usize = 25;
const VALIDATION_SEED: u64 = 0x5eed_f4a3;

/// A non-negative function on positive operators of a fixed dimension.
///
/// Implementations must be pure; `Sync` allows concurrent probing.
pub trait FrameFunction: Sync {
    fn dim(&self) -> usize;
    fn evaluate(&self, op: &PositiveOperator) -> f64;
}

impl<W: FrameFunction + ?Sized> FrameFunction for &W {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, op: &PositiveOperator) -> f64 {
        (**self).evaluate(op)
    }
}

impl<W: FrameFunction + ?Sized + Send> FrameFunction for Box<W> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, op: &PositiveOperator) -> f64 {
        (**self).evaluate(op)
    }
}

/// Frame function backed by a closure.
pub struct FnFrame<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&PositiveOperator) -> f64 + Sync> FnFrame<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&PositiveOperator) -> f64 + Sync> FrameFunction for FnFrame<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, op: &PositiveOperator) -> f64 {
        (self.f)(op)
    }
}

/// `w(A) = Tr(A R)` for a hidden positive `R`; test harnesses only see `w`.
#[derive(Debug, Clone)]
pub struct HiddenFrame {
    r_hidden: PositiveOperator,
}

impl HiddenFrame {
    pub fn new(r_hidden: PositiveOperator) -> Self {
        Self { r_hidden }
    }

    pub fn hidden(&self) -> &PositiveOperator {
        &self.r_hidden
    }
}

impl FrameFunction for HiddenFrame {
    fn dim(&self) -> usize {
        self.r_hidden.dim()
    }
    fn evaluate(&self, op: &PositiveOperator) -> f64 {
        op.matrix().trace_product(self.r_hidden.matrix()).re
    }
}

/// Counts evaluations of the wrapped frame function.
pub struct CountingFrame<W> {
    inner: W,
    count: AtomicUsize,
}

impl<W: FrameFunction> CountingFrame<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, count: AtomicUsize::new(0) }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::SeqCst);
    }
}

impl<W: FrameFunction> FrameFunction for CountingFrame<W> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn evaluate(&self, op: &PositiveOperator) -> f64 {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.inner.evaluate(op)
    }
}

/// Evaluates `w` and rejects negative or non-finite values.
pub fn query<W: FrameFunction + ?Sized>(w: &W, op: &PositiveOperator) -> Result<f64> {
    check_dims(w.dim(), op.dim())?;
    let value = w.evaluate(op);
    if !(value.is_finite() && value >= 0.0) {
        return Err(Error::FrameViolation { value });
    }
    Ok(value)
}

/// |w(A+B) − w(A) − w(B)|
pub fn additivity_violation<W: FrameFunction + ?Sized>(w: &W, a: &PositiveOperator, b: &PositiveOperator) -> Result<f64> {
    let sum = query(w, &a.add(b)?)?;
    Ok((sum - query(w, a)? - query(w, b)?).abs())
}

/// Max additivity violation over `trials` seeded random pairs. Pairs mix
/// full-rank and rank-deficient operators.
pub fn verify_additivity<W: FrameFunction + ?Sized>(w: &W, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let d = w.dim();
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (a, b) = if t % 2 == 0 {
            (random_positive_with(d, &mut rng), random_positive_with(d, &mut rng))
        } else {
            let ra = rng.random_range(0..=d);
            let rb = rng.random_range(1..=d);
            (random_low_rank_positive_with(d, ra, &mut rng), random_low_rank_positive_with(d, rb, &mut rng))
        };
        worst = worst.max(additivity_violation(w, &a, &b)?);
    }
    Ok(worst)
}

/// `((r/n) w(A), w((r/n) A))`
pub fn verify_scaling<W: FrameFunction + ?Sized>(w: &W, a: &PositiveOperator, r: u64, n: u64) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    verify_real_scaling(w, a, r as f64 / n as f64)
}

/// `(c w(A), w(c A))` for any real `c >= 0`.
pub fn verify_real_scaling<W: FrameFunction + ?Sized>(w: &W, a: &PositiveOperator, c: f64) -> Result<(f64, f64)> {
    let lhs = c * query(w, a)?;
    let rhs = query(w, &a.scale(c)?)?;
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisDescriptor {
    /// Diagonal probes in the computational basis.
    Computational,
    /// Diagonal probes in the columns of a caller-supplied unitary.
    Rotated,
    /// `(b_i + b_j)/√2`
    RealPolarization { i: usize, j: usize },
    /// `(b_i + i b_j)/√2`
    ImagPolarization { i: usize, j: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub r_hat: HermitianOperator,
    /// Max over validation probes of |w(M) − Tr(M R_hat)|.
    pub residual: f64,
    pub bases_used: Vec<BasisDescriptor>,
    /// Frame queries spent on the reconstruction itself (d²).
    pub queries: usize,
    pub validation_queries: usize,
}

#[derive(Debug, Clone)]
pub struct ReconstructOptions {
    pub validation_probes: usize,
    pub validation_seed: u64,
    pub mode: ExecutionMode,
    /// Probe frame; `None` is the computational basis.
    pub basis: Option<UnitaryOperator>,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self {
            validation_probes: VALIDATION_PROBES,
            validation_seed: VALIDATION_SEED,
            mode: ExecutionMode::Sequential,
            basis: None,
        }
    }
}

pub fn reconstruct<W: FrameFunction + ?Sized>(w: &W) -> Result<ReconstructionResult> {
    reconstruct_with(w, &ReconstructOptions::default())
}

pub fn reconstruct_with<W: FrameFunction + ?Sized>(w: &W, opts: &ReconstructOptions) -> Result<ReconstructionResult> {
    let d = w.dim();
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    let basis = match &opts.basis {
        Some(u) => {
            check_dims(d, u.dim())?;
            u.clone()
        }
        None => UnitaryOperator::identity(d),
    };
    let vectors: Vec<StateVector> = basis.columns().collect();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let superpose = |i: usize, j: usize, phase: C64| -> StateVector {
        let amps = vectors[i]
            .amplitudes()
            .iter()
            .zip(vectors[j].amplitudes())
            .map(|(a, b)| (a + phase * b) * h)
            .collect();
        StateVector::from_amplitudes_unchecked(amps)
    };

    let diag = try_map_indices(opts.mode, d, |i| query(w, &projector(&vectors[i])))?;
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (i + 1..d).map(move |j| (i, j))).collect();
    let pair_values = try_map_indices(opts.mode, pairs.len(), |p| {
        let (i, j) = pairs[p];
        let re_probe = query(w, &projector(&superpose(i, j, C64::new(1.0, 0.0))))?;
        let im_probe = query(w, &projector(&superpose(i, j, C64::new(0.0, 1.0))))?;
        Ok::<_, Error>((re_probe, im_probe))
    })?;

    // R in the probe frame
    let mut local = Matrix::zeros(d);
    for (i, &v) in diag.iter().enumerate() {
        local[(i, i)] = C64::new(v, 0.0);
    }
    for (&(i, j), &(re_probe, im_probe)) in pairs.iter().zip(&pair_values) {
        let mean = 0.5 * (diag[i] + diag[j]);
        let entry = C64::new(re_probe - mean, mean - im_probe);
        local[(i, j)] = entry;
        local[(j, i)] = entry.conj();
    }
    let r_hat = match &opts.basis {
        Some(u) => HermitianOperator::from_matrix_unchecked(local.conjugate_by(u.matrix())),
        None => HermitianOperator::from_matrix_unchecked(local),
    };

    let mut bases_used = vec![if opts.basis.is_some() { BasisDescriptor::Rotated } else { BasisDescriptor::Computational }];
    for &(i, j) in &pairs {
        bases_used.push(BasisDescriptor::RealPolarization { i, j });
        bases_used.push(BasisDescriptor::ImagPolarization { i, j });
    }

    let mut rng = rng_from_seed(opts.validation_seed);
    let mut residual: f64 = 0.0;
    for _ in 0..opts.validation_probes {
        let probe = random_positive_with(d, &mut rng);
        let predicted = probe.matrix().trace_product(r_hat.matrix()).re;
        residual = residual.max((query(w, &probe)? - predicted).abs());
    }

    Ok(ReconstructionResult {
        r_hat,
        residual,
        bases_used,
        queries: d + 2 * pairs.len(),
        validation_queries: opts.validation_probes,
    })
}

/// Max over bases `U` and indices `i` of |<b_i|R1|b_i> − <b_i|R2|b_i>|, `b_i = U e_i`.
pub fn uniqueness_check(r1: &HermitianOperator, r2: &HermitianOperator, bases: &[UnitaryOperator]) -> Result<f64> {
    check_dims(r1.dim(), r2.dim())?;
    if bases.is_empty() {
        return Err(Error::InvalidArgument("at least one basis is required".into()));
    }
    let diff = r1.sub(r2)?;
    let mut gap: f64 = 0.0;
    for u in bases {
        check_dims(r1.dim(), u.dim())?;
        for b in u.columns() {
            gap = gap.max(diff.expectation(&b)?.abs());
        }
    }
    Ok(gap)
}

/// The computational basis plus, for each pair `i < j`, the bases containing
/// `(e_i ± e_j)/√2` and `(e_i ± i e_j)/√2`.
///
/// A diagonal gap of at most `ε` over these bases bounds every entry of
/// `R1 − R2` by [`polarization_entry_bound`]`(ε)`.
pub fn polarization_bases(dim: usize) -> Vec<UnitaryOperator> {
    let mut out = vec![UnitaryOperator::identity(dim)];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i + 1..dim {
            for phase in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut m = Matrix::identity(dim);
                m[(i, i)] = C64::new(h, 0.0);
                m[(j, i)] = phase * h;
                m[(i, j)] = C64::new(h, 0.0);
                m[(j, j)] = -phase * h;
                out.push(UnitaryOperator::new(m).expect("pair rotation is unitary"));
            }
        }
    }
    out
}

/// Max-entry bound on `R1 − R2` implied by a polarization-basis diagonal gap.
pub fn polarization_entry_bound(gap: f64) -> f64 {
    4.0 * gap
}

/// Smallest eigenvalue of the reconstructed operator.
pub fn positivity_of_reconstruction(res: &ReconstructionResult) -> Result<f64> {
    res.r_hat.min_eigenvalue()
}
