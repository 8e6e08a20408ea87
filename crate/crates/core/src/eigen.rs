//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation annihilates one off-diagonal pair `(p, q)` with a unitary
//! of the form
//!
//! ```text
//!   U_pp = c          U_pq = s e^{i phi}
//!   U_qp = -s e^{-i phi}   U_qq = c
//! ```
//!
//! where `a_pq = r e^{i phi}` and `tan(2 theta) = 2 r / (a_qq - a_pp)`.
//! The update `A <- U† A U` only touches rows and columns `p` and `q`.

use crate::error::{Error, Result};
use crate::matrix::{Matrix, C64};

pub const MAX_SWEEPS: usize = 100;
/// Convergence once the off-diagonal Frobenius norm drops below this fraction of `||A||_F`.
pub const RELATIVE_THRESHOLD: f64 = 1e-14;

/// Raw output: ascending eigenvalues and the matching eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let d = a.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalizes a Hermitian matrix. Only the Hermitian part of `input` is used.
pub fn jacobi_eigh(input: &Matrix) -> Result<Spectrum> {
    let d = input.dim();
    let mut a = input.clone();
    a.hermitize();
    let mut v = Matrix::identity(d);

    let scale = a.frobenius_norm();
    let threshold = RELATIVE_THRESHOLD * scale;
    let mut sweeps = 0;

    while scale > 0.0 && off_diagonal_norm(&a) > threshold {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off_norm: off_diagonal_norm(&a) });
        }
        sweeps += 1;
        for p in 0..d {
            for q in p + 1..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = Matrix::zeros(d);
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..d {
            vectors[(row, new_col)] = v[(row, old_col)];
        }
    }
    Ok(Spectrum { values, vectors })
}

fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let d = a.dim();
    let phase = apq / r;
    let theta = 0.5 * (2.0 * r).atan2(a[(q, q)].re - a[(p, p)].re);
    let (s, c) = theta.sin_cos();

    // A <- A U
    for k in 0..d {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * phase.conj() * s;
        a[(k, q)] = akp * phase * s + akq * c;
    }
    // A <- U† A
    for k in 0..d {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * phase * s;
        a[(q, k)] = apk * phase.conj() * s + aqk * c;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..d {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase.conj() * s;
        v[(k, q)] = vkp * phase * s + vkq * c;
    }
}
