//! Dense complex matrix helpers and superoperator conventions.
//!
//! Density matrices are vectorized column-major, so that
//! `vec(A X B) = (B^T ⊗ A) vec(X)`. Left and right multiplication
//! superoperators follow from that identity.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn dagger(a: &CMat) -> CMat {
    a.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// X ↦ A X
pub fn left(a: &CMat) -> CMat {
    kron(&identity(a.nrows()), a)
}

/// X ↦ X B
pub fn right(b: &CMat) -> CMat {
    kron(&b.transpose(), &identity(b.nrows()))
}

/// X ↦ A X B
pub fn sandwich(a: &CMat, b: &CMat) -> CMat {
    kron(&b.transpose(), a)
}

/// X ↦ [H, X]
pub fn commutator(h: &CMat) -> CMat {
    left(h) - right(h)
}

pub fn vectorize(x: &CMat) -> CVec {
    CVec::from_iterator(x.len(), x.iter().copied())
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_iterator(d, d, v.iter().copied())
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn hermiticity_defect(a: &CMat) -> f64 {
    max_abs(&(a - a.adjoint()))
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let herm = (a + a.adjoint()) * c(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    a.clone().singular_values().iter().sum()
}

pub fn expm(a: &CMat) -> CMat {
    a.clone().exp()
}

/// Unit vector e_k in C^n.
pub fn basis_vector(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[k] = ONE;
    v
}

/// |u><v|
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(d: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(d, d, |_, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / (1u64 << 53) as f64 - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn vectorization_identity() {
        let a = random_matrix(3, 1);
        let x = random_matrix(3, 2);
        let b = random_matrix(3, 3);
        let lhs = vectorize(&(&a * &x * &b));
        let rhs = sandwich(&a, &b) * vectorize(&x);
        assert!((lhs - rhs).norm() < 1e-12);
        let l = left(&a) * vectorize(&x);
        assert!((l - vectorize(&(&a * &x))).norm() < 1e-12);
        let r = right(&b) * vectorize(&x);
        assert!((r - vectorize(&(&x * &b))).norm() < 1e-12);
        assert!((unvectorize(&vectorize(&x), 3) - x).norm() < 1e-15);
    }
}
