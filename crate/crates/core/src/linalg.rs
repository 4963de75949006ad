//! Small dense helpers shared by the backends.

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;

use crate::model::Mat2;

pub type Mat4 = Matrix4<C64>;

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::from(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn trace(m: &DMatrix<C64>) -> C64 {
    m.diagonal().iter().sum()
}

/// Trace norm of a Hermitian matrix.
pub fn trace_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().map(|v| v.abs()).sum()
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// Reduces a two-site matrix (index `2a + b`) to site `a`.
pub fn trace_out_second(m: &Mat4) -> Mat2 {
    Mat2::from_fn(|r, c| m[(2 * r, 2 * c)] + m[(2 * r + 1, 2 * c + 1)])
}

/// Reduces a two-site matrix (index `2a + b`) to site `b`.
pub fn trace_out_first(m: &Mat4) -> Mat2 {
    Mat2::from_fn(|r, c| m[(r, c)] + m[(2 + r, 2 + c)])
}

pub fn to_dmatrix<const R: usize>(m: &nalgebra::SMatrix<C64, R, R>) -> DMatrix<C64> {
    DMatrix::from_fn(R, R, |r, c| m[(r, c)])
}

/// `Tr(A B)` for square matrices of equal size.
pub fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}
