//! Dense linear algebra helpers: norms, Hermitian functional calculus and
//! rank / null-space computations with a relative singular-value threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative singular-value threshold used for every rank decision.
pub const RANK_THRESHOLD: f64 = 1e-8;

pub fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().cloned().fold(0.0, f64::max)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_defect(m: &CMatrix) -> f64 {
    frobenius(&(m - m.adjoint()))
}

/// `‖M* M − 1‖`.
pub fn isometry_defect(m: &CMatrix) -> f64 {
    let n = m.ncols();
    spectral_norm(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let n = m.nrows();
    let herm = (m + m.adjoint()) * c64(0.5);
    let eig = herm.symmetric_eigen();
    let mut out = CMatrix::zeros(n, n);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let fl = f(lambda);
        out += (v * v.adjoint()) * fl;
    }
    out
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let herm = (m + m.adjoint()) * c64(0.5);
    let mut ev: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

pub fn sqrt_psd(m: &CMatrix) -> CMatrix {
    hermitian_map(m, |x| c64(x.max(0.0).sqrt()))
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Rank and orthonormal null-space basis of a (possibly tall) matrix.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub rank: usize,
    pub basis: Vec<DVector<Complex64>>,
    pub singular_values: Vec<f64>,
}

impl NullSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Null space of `m` from its singular value decomposition, with the
/// threshold `RANK_THRESHOLD` relative to the largest singular value.
pub fn null_space(m: &CMatrix) -> NullSpace {
    let n = m.ncols();
    if n == 0 {
        return NullSpace {
            rank: 0,
            basis: vec![],
            singular_values: vec![],
        };
    }
    // pad wide matrices so that the SVD exposes a full right basis
    let padded = if m.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cut = RANK_THRESHOLD * smax;
    let mut basis = Vec::new();
    let mut rank = 0;
    for (k, &s) in sv.iter().enumerate() {
        if smax == 0.0 || s <= cut {
            basis.push(v_t.row(k).adjoint());
        } else {
            rank += 1;
        }
    }
    let mut singular_values = sv;
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    NullSpace {
        rank,
        basis,
        singular_values,
    }
}

/// Null space from a precomputed Hermitian PSD Gram matrix `G = M* M`.
///
/// Eigenvalues of `G` carry an absolute error of order `n · ε · λ_max`, so
/// singular values below `√(n ε) · s_max` cannot be resolved on this route;
/// the cut is the larger of that floor and `RANK_THRESHOLD · s_max`.
pub fn null_space_of_gram(gram: &CMatrix) -> NullSpace {
    let n = gram.ncols();
    if n == 0 {
        return NullSpace {
            rank: 0,
            basis: vec![],
            singular_values: vec![],
        };
    }
    let all_real = gram.iter().all(|z| z.im == 0.0);
    let (values, vectors): (Vec<f64>, Vec<DVector<Complex64>>) = if all_real {
        let real = gram.map(|z| z.re);
        let eig = real.symmetric_eigen();
        (
            eig.eigenvalues.iter().cloned().collect(),
            (0..n).map(|k| eig.eigenvectors.column(k).map(c64)).collect(),
        )
    } else {
        let herm = (gram + gram.adjoint()) * c64(0.5);
        let eig = herm.symmetric_eigen();
        (
            eig.eigenvalues.iter().cloned().collect(),
            (0..n).map(|k| eig.eigenvectors.column(k).into_owned()).collect(),
        )
    };
    let sv: Vec<f64> = values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let floor = (64.0 * n as f64 * f64::EPSILON).sqrt();
    let cut = RANK_THRESHOLD.max(floor) * smax;
    let mut basis = Vec::new();
    let mut rank = 0;
    for (k, &s) in sv.iter().enumerate() {
        if smax == 0.0 || s <= cut {
            basis.push(vectors[k].clone());
        } else {
            rank += 1;
        }
    }
    let mut singular_values = sv;
    singular_values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    NullSpace {
        rank,
        basis,
        singular_values,
    }
}

/// Numerical rank via SVD with the relative threshold.
pub fn rank(m: &CMatrix) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_THRESHOLD * smax).count()
}

/// Accumulates a sparse linear system row by row and exposes its Gram matrix.
///
/// Rows are stored sparsely; the Gram matrix is formed directly, which keeps
/// systems with many more equations than unknowns cheap.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    n_unknowns: usize,
    rows: Vec<Vec<(usize, Complex64)>>,
}

impl SparseSystem {
    pub fn new(n_unknowns: usize) -> Self {
        Self {
            n_unknowns,
            rows: Vec::new(),
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.n_unknowns
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row, merging duplicate columns and dropping exact zeros.
    pub fn push_row(&mut self, mut entries: Vec<(usize, Complex64)>) {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, Complex64)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            debug_assert!(c < self.n_unknowns);
            match merged.last_mut() {
                Some(last) if last.0 == c => last.1 += v,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|e| e.1 != Complex64::new(0.0, 0.0));
        if !merged.is_empty() {
            self.rows.push(merged);
        }
    }

    pub fn gram(&self) -> CMatrix {
        let mut g = CMatrix::zeros(self.n_unknowns, self.n_unknowns);
        for row in &self.rows {
            for &(i, vi) in row {
                for &(j, vj) in row {
                    g[(i, j)] += vi.conj() * vj;
                }
            }
        }
        g
    }

    pub fn null_space(&self) -> NullSpace {
        null_space_of_gram(&self.gram())
    }

    /// Max row residual `|Σ a_ij x_j|` for a candidate solution.
    pub fn residual(&self, x: &[Complex64]) -> Result<f64> {
        if x.len() != self.n_unknowns {
            return Err(Error::Dimension("solution length mismatch".into()));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum::<Complex64>().norm())
            .fold(0.0, f64::max))
    }
}
