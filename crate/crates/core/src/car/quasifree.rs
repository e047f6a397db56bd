//! Gauge-invariant quasi-free states `ω_A` with `A = 1 ⊗ R` on the grid.
//!
//! Two-point functions: `ω(a(x) a*(y)) = ⟨x, (1 − A) y⟩` and
//! `ω(a*(y) a(x)) = ⟨x, A y⟩`. Higher moments follow by Wick's rule.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::local_operator;
use crate::linalg::{c64, hermitian_defect, hermitian_eigenvalues, hermitian_map, CMatrix};

/// Spectral margin: eigenvalues of `R` must lie in `[margin, 1 − margin]`.
pub const SPECTRUM_MARGIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuasiFreeSpec {
    r: CMatrix,
}

impl QuasiFreeSpec {
    /// Validates `R = R*` with spectrum strictly inside `(0, 1)`.
    pub fn new(r: CMatrix) -> Result<Self> {
        if r.nrows() != r.ncols() || r.nrows() == 0 {
            return Err(Error::Dimension(format!("R is {}x{}", r.nrows(), r.ncols())));
        }
        let herm = hermitian_defect(&r);
        if herm > 1e-12 {
            return Err(Error::Argument(format!("R is not Hermitian (defect {herm:.3e})")));
        }
        let ev = hermitian_eigenvalues(&r);
        if let Some(bad) = ev.iter().find(|&&x| !(SPECTRUM_MARGIN..=1.0 - SPECTRUM_MARGIN).contains(&x)) {
            return Err(Error::Argument(format!("eigenvalue {bad} of R outside (0, 1)")));
        }
        Ok(Self { r })
    }

    /// `R = λ · 1_d`.
    pub fn scalar(lambda: f64, d: usize) -> Result<Self> {
        Self::new(CMatrix::identity(d, d) * c64(lambda))
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        Self::new(CMatrix::from_fn(n, n, |i, j| if i == j { c64(values[i]) } else { c64(0.0) }))
    }

    pub fn d(&self) -> usize {
        self.r.nrows()
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.r)
    }

    /// `A = 1 ⊗ R` over `n_cells` cells.
    pub fn a_operator(&self, n_cells: usize) -> CMatrix {
        local_operator(n_cells, &self.r)
    }

    pub fn sqrt_a(&self, n_cells: usize) -> CMatrix {
        local_operator(n_cells, &hermitian_map(&self.r, |x| c64(x.sqrt())))
    }

    pub fn sqrt_one_minus_a(&self, n_cells: usize) -> CMatrix {
        local_operator(n_cells, &hermitian_map(&self.r, |x| c64((1.0 - x).sqrt())))
    }

    /// `A^{is} (1 − A)^{−is}`.
    pub fn modular_unitary(&self, n_cells: usize, s: f64) -> CMatrix {
        let u = hermitian_map(&self.r, |x| Complex64::from_polar(1.0, s * (x.ln() - (1.0 - x).ln())));
        local_operator(n_cells, &u)
    }

    /// Whether `R = 1/2`, the tracial case.
    pub fn is_tracial(&self) -> bool {
        self.eigenvalues().iter().all(|&x| (x - 0.5).abs() < 1e-12)
            && hermitian_defect(&(&self.r - CMatrix::identity(self.d(), self.d()) * c64(0.5))) < 1e-12
    }
}

/// One letter of a monomial: `a(f)` or `a*(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Letter {
    pub dagger: bool,
    pub f: Vec<Complex64>,
}

impl Letter {
    pub fn annihilation(f: Vec<Complex64>) -> Self {
        Self { dagger: false, f }
    }

    pub fn creation(f: Vec<Complex64>) -> Self {
        Self { dagger: true, f }
    }
}

fn inner_with(x: &[Complex64], op: &CMatrix, y: &[Complex64]) -> Complex64 {
    let n = x.len();
    let mut acc = c64(0.0);
    for i in 0..n {
        let row: Complex64 = (0..n).map(|j| op[(i, j)] * y[j]).sum();
        acc += x[i].conj() * row;
    }
    acc
}

fn check_lengths(spec: &QuasiFreeSpec, n_cells: usize, vs: &[&[Complex64]]) -> Result<()> {
    let m = n_cells * spec.d();
    if let Some(v) = vs.iter().find(|v| v.len() != m) {
        return Err(Error::Dimension(format!("vector of length {} on {m} modes", v.len())));
    }
    Ok(())
}

/// `ω(a(x_n) ⋯ a(x_1) a*(y_1) ⋯ a*(y_m)) = δ_{nm} det⟨x_i, (1 − A) y_j⟩`.
pub fn quasi_free_moment(spec: &QuasiFreeSpec, n_cells: usize, xs: &[Vec<Complex64>], ys: &[Vec<Complex64>]) -> Result<Complex64> {
    let m = n_cells * spec.d();
    let one_minus = CMatrix::identity(m, m) - spec.a_operator(n_cells);
    gram_determinant(spec, n_cells, xs, ys, &one_minus)
}

/// `ω(a*(y_1) ⋯ a*(y_m) a(x_n) ⋯ a(x_1)) = δ_{nm} det⟨x_i, A y_j⟩`.
pub fn normal_ordered_moment(spec: &QuasiFreeSpec, n_cells: usize, xs: &[Vec<Complex64>], ys: &[Vec<Complex64>]) -> Result<Complex64> {
    let a = spec.a_operator(n_cells);
    gram_determinant(spec, n_cells, xs, ys, &a)
}

fn gram_determinant(spec: &QuasiFreeSpec, n_cells: usize, xs: &[Vec<Complex64>], ys: &[Vec<Complex64>], op: &CMatrix) -> Result<Complex64> {
    let all: Vec<&[Complex64]> = xs.iter().chain(ys).map(Vec::as_slice).collect();
    check_lengths(spec, n_cells, &all)?;
    if xs.len() != ys.len() {
        return Ok(c64(0.0));
    }
    if xs.is_empty() {
        return Ok(c64(1.0));
    }
    let n = xs.len();
    Ok(CMatrix::from_fn(n, n, |i, j| inner_with(&xs[i], op, &ys[j])).determinant())
}

/// Two-point function `ω(b_1 b_2)`.
pub fn two_point(spec: &QuasiFreeSpec, n_cells: usize, b1: &Letter, b2: &Letter) -> Result<Complex64> {
    check_lengths(spec, n_cells, &[&b1.f, &b2.f])?;
    let m = n_cells * spec.d();
    Ok(match (b1.dagger, b2.dagger) {
        (false, true) => inner_with(&b1.f, &(CMatrix::identity(m, m) - spec.a_operator(n_cells)), &b2.f),
        (true, false) => inner_with(&b2.f, &spec.a_operator(n_cells), &b1.f),
        _ => c64(0.0),
    })
}

/// `ω(b_1 ⋯ b_k)` as the Pfaffian of the contraction matrix.
pub fn wick_moment(spec: &QuasiFreeSpec, n_cells: usize, word: &[Letter]) -> Result<Complex64> {
    let k = word.len();
    if k % 2 == 1 {
        for l in word {
            check_lengths(spec, n_cells, &[&l.f])?;
        }
        return Ok(c64(0.0));
    }
    let mut m = vec![vec![c64(0.0); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let v = two_point(spec, n_cells, &word[i], &word[j])?;
            m[i][j] = v;
            m[j][i] = -v;
        }
    }
    Ok(pfaffian(&m))
}

/// Pfaffian of an antisymmetric matrix by expansion along the first row.
pub fn pfaffian(m: &[Vec<Complex64>]) -> Complex64 {
    let idx: Vec<usize> = (0..m.len()).collect();
    pfaffian_on(m, &idx)
}

fn pfaffian_on(m: &[Vec<Complex64>], idx: &[usize]) -> Complex64 {
    if idx.is_empty() {
        return c64(1.0);
    }
    let first = idx[0];
    let mut acc = c64(0.0);
    for (pos, &j) in idx.iter().enumerate().skip(1) {
        if m[first][j] == c64(0.0) {
            continue;
        }
        let rest: Vec<usize> = idx[1..].iter().copied().filter(|&i| i != j).collect();
        let sign = if pos % 2 == 1 { 1.0 } else { -1.0 };
        acc += m[first][j] * sign * pfaffian_on(m, &rest);
    }
    acc
}

/// Growth class of a diagnostic series over increasing cell counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    /// Identically zero on every truncation.
    Bounded,
    /// Proportional to the cell count.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeDiagnostics {
    /// `(n_cells, tr(A − A²))`.
    pub trace_series: Vec<(usize, f64)>,
    /// `(n_cells, ‖A − 1/2‖²_HS)`.
    pub hilbert_schmidt_series: Vec<(usize, f64)>,
    pub trace_growth: Growth,
    pub hilbert_schmidt_growth: Growth,
}

impl TypeDiagnostics {
    /// Continuum prediction from the growth pattern, for Toeplitz `A = 1 ⊗ R`.
    pub fn predicted_type(&self) -> &'static str {
        match (self.trace_growth, self.hilbert_schmidt_growth) {
            (Growth::Bounded, _) => "I",
            (Growth::Linear, Growth::Bounded) => "II_1",
            (Growth::Linear, Growth::Linear) => "III",
        }
    }
}

fn classify(series: &[(usize, f64)]) -> Growth {
    if series.iter().all(|&(_, v)| v.abs() < 1e-12) {
        Growth::Bounded
    } else {
        Growth::Linear
    }
}

/// `tr(A − A²)` and `‖A − 1/2‖²_HS` on truncations of `1..=max_cells` cells.
pub fn type_diagnostics(spec: &QuasiFreeSpec, max_cells: usize) -> Result<TypeDiagnostics> {
    if max_cells == 0 {
        return Err(Error::Argument("type diagnostics need at least one cell".into()));
    }
    let d = spec.d();
    let mut trace_series = Vec::new();
    let mut hilbert_schmidt_series = Vec::new();
    for n in 1..=max_cells {
        let a = spec.a_operator(n);
        let tr = (&a - &a * &a).trace().re;
        let shifted = &a - CMatrix::identity(n * d, n * d) * c64(0.5);
        let hs = shifted.iter().map(|z| z.norm_sqr()).sum::<f64>();
        trace_series.push((n, tr));
        hilbert_schmidt_series.push((n, hs));
    }
    let trace_growth = classify(&trace_series);
    let hilbert_schmidt_growth = classify(&hilbert_schmidt_series);
    Ok(TypeDiagnostics {
        trace_series,
        hilbert_schmidt_series,
        trace_growth,
        hilbert_schmidt_growth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn spectrum_is_validated() {
        assert!(QuasiFreeSpec::scalar(0.5, 2).is_ok());
        assert!(matches!(QuasiFreeSpec::scalar(0.0, 1), Err(Error::Argument(_))));
        assert!(matches!(QuasiFreeSpec::scalar(1.0, 1), Err(Error::Argument(_))));
        assert!(matches!(QuasiFreeSpec::diagonal(&[0.3, 1.2]), Err(Error::Argument(_))));
        let mut r = CMatrix::identity(2, 2) * c64(0.5);
        r[(0, 1)] = Complex64::new(0.0, 0.1);
        assert!(matches!(QuasiFreeSpec::new(r), Err(Error::Argument(_))));
    }

    #[test]
    fn two_point_at_half() {
        let spec = QuasiFreeSpec::scalar(0.5, 1).unwrap();
        let f = vec![c64(1.0)];
        let v = quasi_free_moment(&spec, 1, std::slice::from_ref(&f), std::slice::from_ref(&f)).unwrap();
        assert!((v - c64(0.5)).norm() < 1e-15);
        assert_eq!(quasi_free_moment(&spec, 1, std::slice::from_ref(&f), &[]).unwrap(), c64(0.0));
    }

    #[test]
    fn wick_agrees_with_determinants() {
        let spec = QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mut rng = rng::seeded(3);
        let xs: Vec<_> = (0..2).map(|_| rng::complex_vec(&mut rng, 4)).collect();
        let ys: Vec<_> = (0..2).map(|_| rng::complex_vec(&mut rng, 4)).collect();
        // a(x_2) a(x_1) a*(y_1) a*(y_2)
        let word = vec![
            Letter::annihilation(xs[1].clone()),
            Letter::annihilation(xs[0].clone()),
            Letter::creation(ys[0].clone()),
            Letter::creation(ys[1].clone()),
        ];
        let det = quasi_free_moment(&spec, 2, &xs, &ys).unwrap();
        assert!((wick_moment(&spec, 2, &word).unwrap() - det).norm() < 1e-13);
        // a*(y_1) a*(y_2) a(x_2) a(x_1)
        let word = vec![
            Letter::creation(ys[0].clone()),
            Letter::creation(ys[1].clone()),
            Letter::annihilation(xs[1].clone()),
            Letter::annihilation(xs[0].clone()),
        ];
        let det = normal_ordered_moment(&spec, 2, &xs, &ys).unwrap();
        assert!((wick_moment(&spec, 2, &word).unwrap() - det).norm() < 1e-13);
    }

    #[test]
    fn modular_unitary_is_trivial_when_tracial() {
        let spec = QuasiFreeSpec::scalar(0.5, 2).unwrap();
        assert!(spec.is_tracial());
        let u = spec.modular_unitary(3, 1.7);
        assert!(crate::linalg::frobenius(&(u - CMatrix::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn type_patterns() {
        let tracial = type_diagnostics(&QuasiFreeSpec::scalar(0.5, 1).unwrap(), 4).unwrap();
        assert_eq!(tracial.trace_growth, Growth::Linear);
        assert_eq!(tracial.hilbert_schmidt_growth, Growth::Bounded);
        assert_eq!(tracial.predicted_type(), "II_1");
        let generic = type_diagnostics(&QuasiFreeSpec::diagonal(&[0.25, 0.5]).unwrap(), 4).unwrap();
        assert_eq!(generic.predicted_type(), "III");
        let (n, v) = generic.trace_series[3];
        assert!((v - n as f64 * (0.25 - 0.0625 + 0.25)).abs() < 1e-12);
    }
}
