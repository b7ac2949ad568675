//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Matrices here are tiny (dimension 2 to 8), so everything is a plain
//! row-major `Vec<Complex64>` and the decompositions are Jacobi methods:
//! the two-sided cyclic variant for Hermitian eigenproblems and the
//! one-sided (Hestenes) variant for the SVD behind the polar decomposition.
//! Sweep order is fixed (row-cyclic, `p < q`), so results are reproducible
//! bit-for-bit on a given platform.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

use crate::tolerance::{self, Tolerances};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |m - m†| = {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix dimension must be at least 1")]
    Empty,
}

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Builds a `dim × dim` matrix from row-major entries.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::Empty);
        }
        if entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(LinalgError::NonFinite);
        }
        Ok(Self { dim, entries })
    }

    /// Builds a matrix from real rows. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for row in rows {
            assert_eq!(row.len(), dim, "rows must form a square matrix");
            entries.extend(row.iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self::new(dim, entries).expect("finite square input")
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = Complex64::new(v, 0.0);
        }
        m
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &[Complex64], b: &[Complex64]) -> Self {
        assert_eq!(a.len(), b.len());
        let dim = a.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = a[i] * b[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Real part of `⟨v|M|v⟩`.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        inner(v, &self.mul_vec(v)).re
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |m - m†|`
    pub fn hermitian_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    fn frobenius(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    fn from_columns(columns: &[Vec<Complex64>]) -> Self {
        let n = columns.len();
        let mut m = Self::zeros(n);
        for (j, col) in columns.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `a ⊗ b`
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Eigenvalues sorted descending; `eigenvectors` holds the matching orthonormal columns.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, k: usize) -> Vec<Complex64> {
        self.eigenvectors.column(k)
    }

    /// `Q f(Λ) Q†`
    pub fn apply_spectral(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fl = f(lambda);
            if fl == 0.0 {
                continue;
            }
            for i in 0..n {
                let qik = q[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += qik * q[(j, k)].conj();
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_spectral(|l| l)
    }
}

/// Unitary and PSD factors of `k = unitary · psd_root`.
#[derive(Clone, Debug)]
pub struct PolarFactors {
    pub unitary: ComplexMatrix,
    pub psd_root: ComplexMatrix,
}

/// Complex Jacobi rotation `G` such that `G† H G` is diagonal for the 2×2
/// Hermitian block `H = [[a, b], [b*, d]]`. Returns `(g_pp, g_pq, g_qp, g_qq)`.
fn jacobi_rotation(a: f64, d: f64, b: Complex64) -> (Complex64, Complex64, Complex64, Complex64) {
    let r = b.norm();
    let phase = b / r;
    let theta = (d - a) / (2.0 * r);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let conj_phase = phase.conj();
    (
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        conj_phase * -s,
        conj_phase * c,
    )
}

/// Right-multiplies columns `p`, `q` of `m` by the rotation.
fn rotate_columns(
    m: &mut ComplexMatrix,
    p: usize,
    q: usize,
    g: (Complex64, Complex64, Complex64, Complex64),
) {
    let (gpp, gpq, gqp, gqq) = g;
    for k in 0..m.dim {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * gpp + mkq * gqp;
        m[(k, q)] = mkp * gpq + mkq * gqq;
    }
}

/// Left-multiplies rows `p`, `q` of `m` by the adjoint rotation.
fn rotate_rows_adjoint(
    m: &mut ComplexMatrix,
    p: usize,
    q: usize,
    g: (Complex64, Complex64, Complex64, Complex64),
) {
    let (gpp, gpq, gqp, gqq) = g;
    for k in 0..m.dim {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = gpp.conj() * mpk + gqp.conj() * mqk;
        m[(q, k)] = gpq.conj() * mpk + gqq.conj() * mqk;
    }
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim;
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Hermitian eigendecomposition with default tolerances.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<EigenDecomposition, LinalgError> {
    hermitian_eig_with(m, &Tolerances::default())
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
pub fn hermitian_eig_with(
    m: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<EigenDecomposition, LinalgError> {
    let residual = m.hermitian_residual();
    if residual > tol.hermitian {
        return Err(LinalgError::NotHermitian { residual });
    }
    let n = m.dim;
    // Work on the exactly Hermitian part.
    let mut a = (m + &m.adjoint()).scale(0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius();
    let stop = f64::EPSILON * scale;
    let skip = 0.5 * f64::EPSILON * scale / n as f64;

    let mut converged = n == 1 || off_diagonal_norm(&a) <= stop;
    let mut sweeps = 0;
    while !converged {
        if sweeps == tol.max_jacobi_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let b = a[(p, q)];
                if b.norm() <= skip || b.norm() < f64::MIN_POSITIVE {
                    continue;
                }
                let g = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, b);
                rotate_columns(&mut a, p, q, g);
                rotate_rows_adjoint(&mut a, p, q, g);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                rotate_columns(&mut v, p, q, g);
            }
        }
        converged = off_diagonal_norm(&a) <= stop;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let columns: Vec<Vec<Complex64>> = order.iter().map(|&i| v.column(i)).collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(&columns),
    })
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    psd_sqrt_with(m, &Tolerances::default())
}

pub fn psd_sqrt_with(m: &ComplexMatrix, tol: &Tolerances) -> Result<ComplexMatrix, LinalgError> {
    let eig = hermitian_eig_with(m, tol)?;
    let min_eigenvalue = *eig.eigenvalues.last().expect("dim >= 1");
    if min_eigenvalue < -tol.psd_clamp {
        return Err(LinalgError::NotPsd { min_eigenvalue });
    }
    Ok(eig.apply_spectral(|l| l.max(0.0).sqrt()))
}

/// Polar decomposition `k = U P` with `P = √(k†k)`.
///
/// Computed from a one-sided Jacobi SVD `k = W V†` (columns of `W` mutually
/// orthogonal), so small singular values stay accurate. On a rank-deficient
/// `k` the unitary is completed by Gram–Schmidt over the standard basis,
/// taken in index order.
pub fn polar_decompose(k: &ComplexMatrix) -> Result<PolarFactors, LinalgError> {
    polar_decompose_with(k, &Tolerances::default())
}

pub fn polar_decompose_with(
    k: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<PolarFactors, LinalgError> {
    let n = k.dim;
    let mut w = k.clone();
    let mut v = ComplexMatrix::identity(n);

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let wp = w.column(p);
                let wq = w.column(q);
                let alpha = inner(&wp, &wp).re;
                let beta = inner(&wq, &wq).re;
                let gamma = inner(&wp, &wq);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                let g = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, g);
                rotate_columns(&mut v, p, q, g);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
        sweeps += 1;
        if sweeps == tol.max_jacobi_sweeps {
            return Err(LinalgError::NoConvergence { sweeps });
        }
    }

    let sigma: Vec<f64> = (0..n).map(|j| norm(&w.column(j))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let sigma_max = sigma[order[0]];
    let rank_cut = 1e-13 * sigma_max;

    // Left singular vectors for the numerical range, largest first.
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut paired: Vec<usize> = Vec::with_capacity(n);
    for &j in &order {
        if sigma[j] > rank_cut && sigma[j] > 0.0 {
            let u: Vec<Complex64> = w.column(j).iter().map(|z| z / sigma[j]).collect();
            if let Some(u) = orthonormalize_against(&basis, u, 0.5) {
                basis.push(u);
                paired.push(j);
            }
        }
    }
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|j| !paired.contains(j))
        .collect();
    let mut e = 0;
    for &j in &null {
        loop {
            assert!(e < n, "standard basis exhausted during unitary completion");
            let mut unit = vec![ZERO; n];
            unit[e] = ONE;
            e += 1;
            if let Some(u) = orthonormalize_against(&basis, unit, 1e-8) {
                basis.push(u);
                paired.push(j);
                break;
            }
        }
    }

    let mut unitary = ComplexMatrix::zeros(n);
    let mut psd_root = ComplexMatrix::zeros(n);
    for (u, &j) in basis.iter().zip(&paired) {
        let vj = v.column(j);
        let s = if sigma[j] > rank_cut { sigma[j] } else { 0.0 };
        for r in 0..n {
            for c in 0..n {
                let vjc = vj[c].conj();
                unitary[(r, c)] += u[r] * vjc;
                psd_root[(r, c)] += vj[r] * vjc * s;
            }
        }
    }
    // Hermitian by construction; remove rounding asymmetry.
    psd_root = (&psd_root + &psd_root.adjoint()).scale(0.5);
    Ok(PolarFactors { unitary, psd_root })
}

/// Two passes of modified Gram–Schmidt against an orthonormal `basis`.
/// Returns `None` when the remaining norm falls below `min_norm`.
fn orthonormalize_against(
    basis: &[Vec<Complex64>],
    mut x: Vec<Complex64>,
    min_norm: f64,
) -> Option<Vec<Complex64>> {
    let start = norm(&x);
    for _ in 0..2 {
        for b in basis {
            let proj = inner(b, &x);
            for (xi, bi) in x.iter_mut().zip(b) {
                *xi -= proj * bi;
            }
        }
    }
    let remaining = norm(&x);
    if remaining < min_norm * start || remaining == 0.0 {
        return None;
    }
    Some(x.into_iter().map(|z| z / remaining).collect())
}

/// `‖m†m − I‖_max ≤ tol`
pub fn is_unitary(m: &ComplexMatrix, tol: f64) -> bool {
    (&m.adjoint() * m).max_abs_diff(&ComplexMatrix::identity(m.dim)) <= tol
}

/// Hermitian within `tol` and smallest eigenvalue `≥ −tol`.
pub fn is_psd(m: &ComplexMatrix, tol: f64) -> bool {
    if m.hermitian_residual() > tol {
        return false;
    }
    let tols = Tolerances {
        hermitian: tol.max(tolerance::HERMITIAN),
        ..Tolerances::default()
    };
    match hermitian_eig_with(m, &tols) {
        Ok(eig) => eig.eigenvalues.iter().all(|&l| l >= -tol),
        Err(_) => false,
    }
}
