//! Dense and matrix-free linear algebra helpers.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

pub fn random_c64<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

pub fn random_vector<R: Rng>(dim: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(dim, |_, _| random_c64(rng))
}

pub fn random_unit_vector<R: Rng>(dim: usize, rng: &mut R) -> DVector<C64> {
    let v = random_vector(dim, rng);
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| random_c64(rng));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Largest singular value by dense SVD.
pub fn operator_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(m).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Result of [`lanczos_top`].
#[derive(Clone, Debug)]
pub struct TopEigen {
    pub value: f64,
    pub vector: DVector<C64>,
    /// `|| A v - value v ||` for the returned Ritz pair.
    pub residual: f64,
    pub iterations: usize,
}

/// Largest eigenpair of a Hermitian positive semidefinite operator given
/// only through `apply`, by Lanczos with full reorthogonalization.
pub fn lanczos_top<R, F>(dim: usize, apply: F, max_iter: usize, tol: f64, rng: &mut R) -> TopEigen
where
    R: Rng,
    F: Fn(&DVector<C64>) -> DVector<C64>,
{
    let max_iter = max_iter.min(dim).max(1);
    let mut basis: Vec<DVector<C64>> = vec![random_unit_vector(dim, rng)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = (0.0, DVector::from_element(1, 1.0), f64::INFINITY);
    for k in 0..max_iter {
        let mut w = apply(&basis[k]);
        let alpha = basis[k].dotc(&w).re;
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w.axpy(-c, q, C64::new(1.0, 0.0));
            }
        }
        let beta = w.norm();

        let m = alphas.len();
        let t = DMatrix::from_fn(m, m, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let s = eig.eigenvectors.column(imax).into_owned();
        let residual = beta * s[m - 1].abs();
        best = (theta, s, residual);
        if residual <= tol * theta.abs().max(1.0) || beta < 1e-14 || k + 1 == max_iter {
            break;
        }
        betas.push(beta);
        basis.push(w / C64::new(beta, 0.0));
    }
    let (value, s, _) = best;
    let mut vector = DVector::from_element(dim, C64::new(0.0, 0.0));
    for (q, si) in basis.iter().zip(s.iter()) {
        vector.axpy(C64::new(*si, 0.0), q, C64::new(1.0, 0.0));
    }
    let n = vector.norm();
    vector /= C64::new(n, 0.0);
    let residual = (apply(&vector) - &vector * C64::new(value, 0.0)).norm();
    TopEigen { value, vector, residual, iterations: alphas.len() }
}

/// Column-compressed sparse complex matrix, built column by column.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    pub fn new(rows: usize) -> Self {
        Self { rows, col_ptr: vec![0], row_idx: Vec::new(), values: Vec::new() }
    }

    /// Appends a column given as `(row, value)` entries.
    pub fn push_column<I: IntoIterator<Item = (usize, C64)>>(&mut self, entries: I) {
        for (r, v) in entries {
            debug_assert!(r < self.rows);
            self.row_idx.push(r);
            self.values.push(v);
        }
        self.col_ptr.push(self.row_idx.len());
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// `A x`.
    pub fn mul_vec(&self, x: &[C64]) -> DVector<C64> {
        let mut y = DVector::from_element(self.rows, C64::new(0.0, 0.0));
        for (j, xj) in x.iter().enumerate() {
            if *xj == C64::new(0.0, 0.0) {
                continue;
            }
            for (r, v) in self.column(j) {
                y[r] += v * xj;
            }
        }
        y
    }

    /// `A^H x`.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> DVector<C64> {
        DVector::from_fn(self.cols(), |j, _| self.column(j).map(|(r, v)| v.conj() * x[r]).sum())
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::from_element(self.rows, self.cols(), C64::new(0.0, 0.0));
        for j in 0..self.cols() {
            for (r, v) in self.column(j) {
                m[(r, j)] += v;
            }
        }
        m
    }
}
