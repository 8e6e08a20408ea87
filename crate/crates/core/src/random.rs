//! Seeded random operators.
//!
//! Every generator has a `u64`-seeded entry point and an `*_with` variant
//! that draws from a caller-owned RNG. The seeded entry points use
//! [`ChaCha8Rng`]; substreams for batch work come from [`substream`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{Matrix, C64};
use crate::measurement::{MeasurementProcedure, OutcomeLabel, StandardPOVM};
use crate::operator::{DensityOperator, HermitianOperator, PositiveOperator, StateVector, UnitaryOperator};
use crate::probability::PreparationEnsemble;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `index` of generator `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian: E|z|^2 = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * h, im * h)
}

pub fn ginibre_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let data = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    Matrix::from_row_major(data).expect("square by construction")
}

pub fn random_density(dim: usize, seed: u64) -> DensityOperator {
    random_density_with(dim, &mut rng_from_seed(seed))
}

/// ρ = G G† / Tr(G G†) with G Ginibre.
pub fn random_density_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityOperator {
    assert!(dim >= 1);
    let g = ginibre_with(dim, rng);
    let gg = &g * &g.adjoint();
    let trace = gg.trace().re;
    let pos = PositiveOperator::from_hermitian_unchecked(HermitianOperator::from_matrix_unchecked(
        gg.scale(1.0 / trace),
    ));
    DensityOperator::from_positive_unchecked(pos)
}

/// G G† scaled by a uniform factor in (0, 2]; generic full-rank positive operator.
pub fn random_positive_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PositiveOperator {
    let rho = random_density_with(dim, rng);
    let scale = 2.0 * (1.0 - rng.random::<f64>());
    rho.as_positive().scale(scale).expect("finite positive scale")
}

/// Positive operator of rank `rank` (rank 0 gives the zero operator).
pub fn random_low_rank_positive_with<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> PositiveOperator {
    let mut m = Matrix::zeros(dim);
    for _ in 0..rank {
        let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        m = &m + &Matrix::outer(&v, &v);
    }
    PositiveOperator::from_hermitian_unchecked(HermitianOperator::from_matrix_unchecked(m))
}

pub fn random_hermitian_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> HermitianOperator {
    let g = ginibre_with(dim, rng);
    HermitianOperator::from_matrix_unchecked((&g + &g.adjoint()).scale(0.5))
}

pub fn random_state_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        if let Ok(s) = StateVector::normalized(v) {
            return s;
        }
    }
}

pub fn random_unitary(dim: usize, seed: u64) -> UnitaryOperator {
    random_unitary_with(dim, &mut rng_from_seed(seed))
}

/// Gram–Schmidt on Gaussian columns, each column phase-fixed so that its
/// first non-zero entry is real positive. Rank-deficient draws are redrawn.
pub fn random_unitary_with<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryOperator {
    assert!(dim >= 1);
    'draw: loop {
        let g = ginibre_with(dim, rng);
        let mut columns: Vec<Vec<C64>> = Vec::with_capacity(dim);
        for j in 0..dim {
            let mut v = g.column(j);
            // two passes of modified Gram-Schmidt keep U U† = I at round-off level
            for _ in 0..2 {
                for q in &columns {
                    let overlap: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= overlap * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-10 {
                continue 'draw;
            }
            let lead_idx = v.iter().position(|z| z.norm() > 1e-300).unwrap_or(0);
            let lead = v[lead_idx];
            let phase = lead.conj() / lead.norm();
            for vi in v.iter_mut() {
                *vi = *vi * phase / norm;
            }
            v[lead_idx] = C64::new(v[lead_idx].norm(), 0.0);
            columns.push(v);
        }
        let mut m = Matrix::zeros(dim);
        for (j, col) in columns.iter().enumerate() {
            for (i, &a) in col.iter().enumerate() {
                m[(i, j)] = a;
            }
        }
        match UnitaryOperator::new(m) {
            Ok(u) => return u,
            Err(_) => continue 'draw,
        }
    }
}

/// Random complete POVM with `outcomes` effects: E_i = S^{-1/2} A_i S^{-1/2},
/// S = Σ A_i, for Ginibre-positive A_i. Labels are `m0, m1, ...`.
pub fn random_povm_with<R: Rng + ?Sized>(dim: usize, outcomes: usize, rng: &mut R) -> StandardPOVM {
    assert!(dim >= 1 && outcomes >= 1);
    loop {
        let raw: Vec<PositiveOperator> = (0..outcomes).map(|_| random_positive_with(dim, rng)).collect();
        let mut sum = PositiveOperator::zeros(dim);
        for a in &raw {
            sum = sum.add(a).expect("same dim");
        }
        let Ok(eig) = sum.eigh() else { continue };
        if eig.eigenvalues[0] < 1e-8 {
            continue;
        }
        let inv_sqrt = eig.map_spectrum(|x| 1.0 / x.sqrt());
        let effects: Vec<(OutcomeLabel, PositiveOperator)> = raw
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let e = &(&inv_sqrt * a.matrix()) * &inv_sqrt;
                let e = PositiveOperator::from_hermitian_unchecked(HermitianOperator::from_matrix_unchecked(e));
                (OutcomeLabel::indexed("m", i), e)
            })
            .collect();
        if let Ok(povm) = StandardPOVM::new(effects) {
            return povm;
        }
    }
}

/// Random priors on the probability simplex (flat Dirichlet).
pub fn random_priors_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Ensemble `s0, s1, ...` with Dirichlet priors and Ginibre states.
pub fn random_ensemble_with<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> PreparationEnsemble {
    let priors = random_priors_with(n, rng);
    PreparationEnsemble::new(
        priors
            .into_iter()
            .enumerate()
            .map(|(k, p)| (OutcomeLabel::indexed("s", k), p, random_density_with(dim, rng)))
            .collect(),
    )
    .expect("valid random ensemble")
}

/// Non-standard procedure `m0, m1, ...` of full-rank positive operators.
pub fn random_procedure_with<R: Rng + ?Sized>(dim: usize, n: usize, rng: &mut R) -> MeasurementProcedure {
    MeasurementProcedure::new((0..n).map(|i| (OutcomeLabel::indexed("m", i), random_positive_with(dim, rng))).collect())
        .expect("positive operators with positive trace")
}
