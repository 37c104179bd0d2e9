//! Dense complex linear-algebra helpers shared by the propagators, the
//! history-state solver and the Carleman lift.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Maximum elementwise deviation `max |M - M†|`.
pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &CMatrix, tol: f64, context: &str) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let deviation = hermitian_deviation(m);
    if deviation > tol {
        return Err(Error::NotHermitian {
            deviation,
            context: if context.is_empty() {
                String::new()
            } else {
                format!(" in {context}")
            },
        });
    }
    Ok(())
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Spectral norm of a Hermitian matrix through its eigenvalues.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Eigen-decomposition `(values, vectors)` of a Hermitian matrix.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `ψ ⊗ ψ*`, indexed `(j, l) ↦ j·n + l`.
pub fn vec_outer(psi: &CVector) -> CVector {
    let n = psi.len();
    CVector::from_fn(n * n, |idx, _| psi[idx / n] * psi[idx % n].conj())
}

/// `|ψ⟩⟨φ|`.
pub fn outer(psi: &CVector, phi: &CVector) -> CMatrix {
    psi * phi.adjoint()
}

/// `⟨ψ|M|ψ⟩` without normalisation.
pub fn sandwich(psi: &CVector, m: &CMatrix) -> C64 {
    psi.dotc(&(m * psi))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    assert!(a.is_square(), "expm of a non-square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * C64::from(0.5_f64.powi(squarings));
    let b = PADE13.map(C64::from);
    let id = CMatrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &scaled * (inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1]);
    let inner_v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `e^{-iHt}` for a Hermitian `H`.
pub fn unitary_step(h: &CMatrix, dt: f64) -> CMatrix {
    expm(&(h * (-I * dt)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor_expm(a: &CMatrix) -> CMatrix {
        // Plain Taylor series with many squarings; independent of the Padé path.
        let n = a.nrows();
        let s = 12;
        let scaled = a * C64::from(0.5_f64.powi(s));
        let mut term = CMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled / C64::from(k as f64);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn expm_matches_taylor_and_nalgebra() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            c((i * 3 + j) as f64 * 0.37 - 2.0, (i as f64 - j as f64) * 0.9)
        });
        let ours = expm(&a);
        let taylor = taylor_expm(&a);
        let reference = a.clone().exp();
        let scale = reference.norm();
        assert!((&ours - &taylor).norm() / scale < 1e-11);
        assert!((&ours - &reference).norm() / scale < 1e-11);
    }

    #[test]
    fn pauli_x_rotation_closed_form() {
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let t = 0.8_f64;
        let u = unitary_step(&x, t);
        let expected = CMatrix::identity(2, 2) * C64::from(t.cos()) - &x * (I * t.sin());
        assert!((u - expected).norm() < 1e-14);
    }

    #[test]
    fn vec_outer_ordering() {
        let psi = CVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let v = vec_outer(&psi);
        assert!((v[1] - psi[0] * psi[1].conj()).norm() < 1e-15);
        assert!((v[2] - psi[1] * psi[0].conj()).norm() < 1e-15);
    }
}
