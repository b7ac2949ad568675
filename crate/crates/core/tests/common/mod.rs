//! Random test inputs and independent oracles.
//!
//! Nothing here goes through the crate's own eigensolver or polar
//! decomposition: unitaries come from Gram–Schmidt on Gaussian matrices and
//! POVMs from blocks of a random isometry, so `Σ A_x = I` holds by
//! construction.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qca_core::linalg::{inner, ComplexMatrix};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_vec<R: Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    (0..dim).map(|_| gaussian(rng)).collect()
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> Vec<Complex64> {
    let v = gaussian_vec(rng, dim);
    let n = inner(&v, &v).re.sqrt();
    v.into_iter().map(|x| x / n).collect()
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::new(dim, (0..dim * dim).map(|_| gaussian(rng)).collect()).unwrap()
}

/// Columns orthonormalized by modified Gram–Schmidt, `rows × cols`, row-major.
fn orthonormal_columns<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Vec<Complex64> {
    let mut columns: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v = gaussian_vec(rng, rows);
        for q in &columns {
            let p = inner(q, &v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= p * y;
            }
        }
        let n = inner(&v, &v).re.sqrt();
        if n > 1e-6 {
            columns.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    let mut out = vec![Complex64::new(0.0, 0.0); rows * cols];
    for (j, col) in columns.iter().enumerate() {
        for (i, x) in col.iter().enumerate() {
            out[i * cols + j] = *x;
        }
    }
    out
}

pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::new(dim, orthonormal_columns(rng, dim, dim)).unwrap()
}

/// `outcomes` elements `A_x = V_x† V_x`, with `V_x` the d×d blocks of a
/// random isometry from `C^d` to `C^{d·outcomes}`.
pub fn random_povm<R: Rng>(rng: &mut R, dim: usize, outcomes: usize) -> Vec<ComplexMatrix> {
    let iso = orthonormal_columns(rng, dim * outcomes, dim);
    (0..outcomes)
        .map(|x| {
            let block: Vec<Complex64> = iso[x * dim * dim..(x + 1) * dim * dim].to_vec();
            let v = ComplexMatrix::new(dim, block).unwrap();
            &v.adjoint() * &v
        })
        .collect()
}

pub fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.entries())
}

/// Eigenvalues from nalgebra, descending.
pub fn oracle_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_nalgebra(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Singular values from nalgebra, descending.
pub fn oracle_singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut sv: Vec<f64> = to_nalgebra(m).singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn oracle_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    DVector::from_column_slice(a).dotc(&DVector::from_column_slice(b))
}

/// Largest eigenvalue of a 2×2 Hermitian matrix, in closed form.
pub fn top_eigenvalue_2x2(m: &ComplexMatrix) -> f64 {
    let (a, d, b) = (m[(0, 0)].re, m[(1, 1)].re, m[(0, 1)]);
    0.5 * (a + d) + (0.25 * (a - d).powi(2) + b.norm_sqr()).sqrt()
}
