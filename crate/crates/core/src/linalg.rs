//! Small dense vector helpers shared across modules.

use nalgebra::{DMatrix, DVector};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalized(a: &[f64]) -> Vec<f64> {
    let n = norm(a);
    a.iter().map(|x| x / n).collect()
}

pub fn basis(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

pub fn mat_vec(m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(u)).as_slice().to_vec()
}

pub fn mat_t_vec(m: &DMatrix<f64>, u: &[f64]) -> Vec<f64> {
    (m.transpose() * DVector::from_column_slice(u)).as_slice().to_vec()
}

/// Quadratic form `u^T m u`.
pub fn quad_form(m: &DMatrix<f64>, u: &[f64]) -> f64 {
    let v = DVector::from_column_slice(u);
    v.dot(&(m * &v))
}

/// Checks that the columns of `b` are orthonormal within `tol`.
pub fn is_orthonormal(b: &DMatrix<f64>, tol: f64) -> bool {
    let g = b.transpose() * b;
    let k = g.nrows();
    (0..k).all(|i| (0..k).all(|j| (g[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs() <= tol))
}

/// Symmetric positive definite check through Cholesky after a symmetry test.
pub fn is_spd(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1e-300);
    if (m - m.transpose()).amax() > tol * scale {
        return false;
    }
    m.clone().cholesky().is_some()
}
