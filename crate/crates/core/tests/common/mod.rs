//! Oracles written against raw matrix entries only.
#![allow(dead_code)]

use genprob::prelude::*;
use genprob::random::random_positive_with;
use rand::Rng;

/// Re Σ_ij a_ij b_ji
pub fn tr_ab(a: &Matrix, b: &Matrix) -> f64 {
    let d = a.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn sum_of(ops: &[&Matrix]) -> Matrix {
    let d = ops[0].dim();
    let mut out = Matrix::zeros(d);
    for m in ops {
        out = &out + *m;
    }
    out
}

/// p(m | ρ) = Tr(M ρ) / Tr(X ρ) from raw entries.
pub fn general_law(ops: &[&Matrix], m: usize, rho: &Matrix) -> f64 {
    tr_ab(ops[m], rho) / tr_ab(&sum_of(ops), rho)
}

/// P(s_k | x) = p_k Tr(X ρ_k) / Σ_l p_l Tr(X ρ_l)
pub fn posterior_oracle(priors: &[f64], states: &[&Matrix], x: &Matrix) -> Vec<f64> {
    let w: Vec<f64> = priors.iter().zip(states).map(|(p, r)| p * tr_ab(x, r)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn ket(d: usize, i: usize) -> StateVector {
    StateVector::basis(d, i)
}

pub fn plus() -> StateVector {
    StateVector::pair_superposition(2, 0, 1, c(1.0, 0.0))
}

/// |Φ⁺⟩⟨Φ⁺| on two qubits.
pub fn bell_phi_plus() -> DensityOperator {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = StateVector::new(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
    DensityOperator::pure(&v)
}

/// Positive operator with spectrum inside (0, 1).
pub fn random_effect<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> PositiveOperator {
    let a = random_positive_with(dim, rng);
    let top = a.max_eigenvalue().unwrap();
    a.scale(rng.random_range(0.2..0.95) / top).unwrap()
}

/// A^{1/2} via the spectral decomposition.
pub fn sqrt_positive(a: &PositiveOperator) -> Matrix {
    a.eigh().unwrap().map_spectrum(|x| x.max(0.0).sqrt())
}

/// Splits `c` into `c^{1/2} F c^{1/2}` and `c^{1/2} (I − F) c^{1/2}`.
pub fn split(c_op: &PositiveOperator, f: &PositiveOperator) -> (PositiveOperator, PositiveOperator) {
    let d = c_op.dim();
    let s = sqrt_positive(c_op);
    let left = &(&s * f.matrix()) * &s;
    let rest = &Matrix::identity(d) - f.matrix();
    let right = &(&s * &rest) * &s;
    (hermitized_positive(left), hermitized_positive(right))
}

pub fn hermitized_positive(m: Matrix) -> PositiveOperator {
    let sym = (&m + &m.adjoint()).scale(0.5);
    PositiveOperator::new(sym).unwrap()
}

/// I − A for an effect A.
pub fn complement(a: &PositiveOperator) -> PositiveOperator {
    hermitized_positive(&Matrix::identity(a.dim()) - a.matrix())
}
