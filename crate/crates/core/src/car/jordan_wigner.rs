//! Jordan–Wigner realization of a finite CAR algebra on `2^m` dimensions.
//!
//! Basis vectors are bitmasks `|b⟩`; `a_j |b⟩ = (−1)^{#\{i < j : b_i = 1\}} |b − e_j⟩`
//! when bit `j` is set. This agrees with the wedge convention of the Fock
//! layer, `a_i e_J = (−1)^{#\{j ∈ J : j < i\}} e_{J∖i}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};

/// Largest mode count for the sparse generators.
pub const MAX_JW_MODES: usize = 16;

/// Column-compressed sparse operator on `ℂ^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    cols: Vec<Vec<(usize, Complex64)>>,
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            cols: (0..dim).map(|j| vec![(j, c64(1.0))]).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.cols.iter().map(Vec::len).sum()
    }

    fn normalize(mut col: Vec<(usize, Complex64)>) -> Vec<(usize, Complex64)> {
        col.sort_by_key(|e| e.0);
        let mut out: Vec<(usize, Complex64)> = Vec::with_capacity(col.len());
        for (r, v) in col {
            match out.last_mut() {
                Some(last) if last.0 == r => last.1 += v,
                _ => out.push((r, v)),
            }
        }
        out.retain(|e| e.1 != c64(0.0));
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let cols = self
            .cols
            .iter()
            .zip(&other.cols)
            .map(|(a, b)| Self::normalize(a.iter().chain(b).copied().collect()))
            .collect();
        Self { dim: self.dim, cols }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(c64(-1.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let cols = self
            .cols
            .iter()
            .map(|col| Self::normalize(col.iter().map(|&(r, v)| (r, v * c)).collect()))
            .collect();
        Self { dim: self.dim, cols }
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        let cols = other
            .cols
            .iter()
            .map(|col| {
                let mut acc = Vec::new();
                for &(k, v) in col {
                    acc.extend(self.cols[k].iter().map(|&(r, w)| (r, w * v)));
                }
                Self::normalize(acc)
            })
            .collect();
        Self { dim: self.dim, cols }
    }

    pub fn adjoint(&self) -> Self {
        let mut cols = vec![Vec::new(); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                cols[i].push((j, v.conj()));
            }
        }
        Self {
            dim: self.dim,
            cols: cols.into_iter().map(Self::normalize).collect(),
        }
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        self.mul(other).add(&other.mul(self))
    }

    pub fn frobenius(&self) -> f64 {
        self.cols.iter().flatten().map(|e| e.1.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![c64(0.0); self.dim];
        for (j, col) in self.cols.iter().enumerate() {
            if v[j] != c64(0.0) {
                for &(i, w) in col {
                    out[i] += w * v[j];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                m[(i, j)] = v;
            }
        }
        m
    }
}

/// The CAR algebra over `ℂ^m` in its Fock (Jordan–Wigner) representation.
#[derive(Debug, Clone)]
pub struct FiniteCARAlgebra {
    n_modes: usize,
    gens: Vec<SparseOp>,
    even_only: bool,
}

impl FiniteCARAlgebra {
    pub fn new(n_modes: usize, even_only: bool) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_JW_MODES {
            return Err(Error::Argument(format!("mode count {n_modes} outside 1..={MAX_JW_MODES}")));
        }
        let dim = 1usize << n_modes;
        let gens = (0..n_modes)
            .map(|j| {
                let cols = (0..dim)
                    .map(|b| {
                        if b >> j & 1 == 1 {
                            let sign = if (b & ((1 << j) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                            vec![(b ^ (1 << j), c64(sign))]
                        } else {
                            Vec::new()
                        }
                    })
                    .collect();
                SparseOp { dim, cols }
            })
            .collect();
        Ok(Self { n_modes, gens, even_only })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        1 << self.n_modes
    }

    pub fn even_only(&self) -> bool {
        self.even_only
    }

    /// `a_j = a(e_j)`.
    pub fn generator(&self, j: usize) -> &SparseOp {
        &self.gens[j]
    }

    /// `a(f) = Σ_j conj(f_j) a_j` (antilinear in `f`).
    pub fn annihilation(&self, f: &[Complex64]) -> Result<SparseOp> {
        if f.len() != self.n_modes {
            return Err(Error::Dimension(format!("vector of length {} for {} modes", f.len(), self.n_modes)));
        }
        let mut acc = SparseOp::zero(self.dim());
        for (j, z) in f.iter().enumerate() {
            if *z != c64(0.0) {
                acc = acc.add(&self.gens[j].scale(z.conj()));
            }
        }
        Ok(acc)
    }

    pub fn creation(&self, f: &[Complex64]) -> Result<SparseOp> {
        Ok(self.annihilation(f)?.adjoint())
    }

    /// Parity `Γ(−1) = diag((−1)^{|b|})`.
    pub fn parity(&self) -> SparseOp {
        let cols = (0..self.dim())
            .map(|b: usize| vec![(b, c64(if b.count_ones().is_multiple_of(2) { 1.0 } else { -1.0 }))])
            .collect();
        SparseOp { dim: self.dim(), cols }
    }

    /// `(‖{a(f), a(g)}‖, ‖{a(f), a(g)*} − ⟨f, g⟩ 1‖)` in Frobenius norm.
    pub fn car_defects(&self, f: &[Complex64], g: &[Complex64]) -> Result<(f64, f64)> {
        let af = self.annihilation(f)?;
        let ag = self.annihilation(g)?;
        let ip: Complex64 = f.iter().zip(g).map(|(a, b)| a.conj() * b).sum();
        let first = af.anticommutator(&ag).frobenius();
        let second = af
            .anticommutator(&ag.adjoint())
            .sub(&SparseOp::identity(self.dim()).scale(ip))
            .frobenius();
        Ok((first, second))
    }

    /// `Π_j (a_j*)^{α_j} · Π_j a_j^{β_j}` with both products in increasing `j`.
    pub fn monomial(&self, alpha: u64, beta: u64) -> SparseOp {
        let mut acc = SparseOp::identity(self.dim());
        for j in 0..self.n_modes {
            if alpha >> j & 1 == 1 {
                acc = acc.mul(&self.gens[j].adjoint());
            }
        }
        for j in 0..self.n_modes {
            if beta >> j & 1 == 1 {
                acc = acc.mul(&self.gens[j]);
            }
        }
        acc
    }

    /// The `4^m` monomials spanning the algebra, or the even ones when the
    /// algebra is restricted to the parity-fixed part.
    pub fn basis_monomials(&self) -> Result<Vec<SparseOp>> {
        if self.n_modes > 6 {
            return Err(Error::Resource(format!("4^{} monomials requested", self.n_modes)));
        }
        let top = 1u64 << self.n_modes;
        let mut out = Vec::new();
        for alpha in 0..top {
            for beta in 0..top {
                if self.even_only && (alpha.count_ones() + beta.count_ones()) % 2 == 1 {
                    continue;
                }
                out.push(self.monomial(alpha, beta));
            }
        }
        Ok(out)
    }
}
