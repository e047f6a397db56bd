//! GNS representation of a quasi-free state on `Γ(ℂ^m) ⊗ Γ(ℂ^m)`:
//! `π(a(f)) = a(√(1−A) f) ⊗ Γ(−1) + 1 ⊗ a*(j √A f)` with `Ω = Ω ⊗ Ω`,
//! where `j` is complex conjugation in the mode basis.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::car::jordan_wigner::FiniteCARAlgebra;
use crate::car::quasifree::{normal_ordered_moment, pfaffian, quasi_free_moment, two_point, Letter, QuasiFreeSpec};
use crate::error::{Error, Result};
use crate::linalg::{c64, kron, CMatrix};

/// Default memory budget for one dense GNS operator.
pub const DEFAULT_GNS_BUDGET_BYTES: usize = 64 << 20;

#[derive(Debug, Clone)]
pub struct GnsRep {
    spec: QuasiFreeSpec,
    n_cells: usize,
    left_annihilators: Vec<CMatrix>,
    parity: CMatrix,
    gens: Vec<CMatrix>,
    omega: DVector<Complex64>,
}

impl GnsRep {
    pub fn new(spec: QuasiFreeSpec, n_cells: usize, budget_bytes: usize) -> Result<Self> {
        let m = n_cells * spec.d();
        if m == 0 {
            return Err(Error::Argument("GNS representation needs at least one mode".into()));
        }
        let bytes = 16usize.saturating_mul(1usize.checked_shl(4 * m as u32).unwrap_or(usize::MAX));
        if m > 15 || bytes > budget_bytes {
            return Err(Error::Resource(format!(
                "GNS operators on 4^{m} dimensions need {bytes} bytes, budget is {budget_bytes}"
            )));
        }
        let alg = FiniteCARAlgebra::new(m, false)?;
        let left_annihilators: Vec<CMatrix> = (0..m).map(|j| alg.generator(j).to_dense()).collect();
        let parity = alg.parity().to_dense();
        let mut rep = Self {
            spec,
            n_cells,
            left_annihilators,
            parity,
            gens: Vec::new(),
            omega: DVector::zeros(1 << (2 * m)),
        };
        rep.omega[0] = c64(1.0);
        rep.gens = (0..m)
            .map(|j| {
                let mut e = vec![c64(0.0); m];
                e[j] = c64(1.0);
                rep.field(&e)
            })
            .collect::<Result<_>>()?;
        Ok(rep)
    }

    pub fn spec(&self) -> &QuasiFreeSpec {
        &self.spec
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_modes(&self) -> usize {
        self.left_annihilators.len()
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &DVector<Complex64> {
        &self.omega
    }

    /// `π(a_j)`.
    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.gens[j]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.gens
    }

    fn single_annihilation(&self, f: &[Complex64]) -> CMatrix {
        let half = self.parity.nrows();
        let mut acc = CMatrix::zeros(half, half);
        for (j, z) in f.iter().enumerate() {
            if *z != c64(0.0) {
                acc += &self.left_annihilators[j] * z.conj();
            }
        }
        acc
    }

    /// `π(a(f))`.
    pub fn field(&self, f: &[Complex64]) -> Result<CMatrix> {
        let m = self.n_modes();
        if f.len() != m {
            return Err(Error::Dimension(format!("vector of length {} on {m} modes", f.len())));
        }
        let fv = DVector::from_column_slice(f);
        let g = self.spec.sqrt_one_minus_a(self.n_cells) * &fv;
        let h = (self.spec.sqrt_a(self.n_cells) * &fv).map(|z| z.conj());
        let half = self.parity.nrows();
        let left = kron(&self.single_annihilation(g.as_slice()), &self.parity);
        let right = kron(&CMatrix::identity(half, half), &self.single_annihilation(h.as_slice()).adjoint());
        Ok(left + right)
    }

    pub fn letter(&self, l: &Letter) -> Result<CMatrix> {
        let a = self.field(&l.f)?;
        Ok(if l.dagger { a.adjoint() } else { a })
    }

    /// `⟨Ω, π(b_1) ⋯ π(b_k) Ω⟩`.
    pub fn word_moment(&self, word: &[Letter]) -> Result<Complex64> {
        let mut v = self.omega.clone();
        for l in word.iter().rev() {
            v = self.letter(l)? * v;
        }
        Ok(self.omega.dotc(&v))
    }

    /// Total parity `Γ(−1) ⊗ Γ(−1)`, implementing the grading and fixing `Ω`.
    pub fn total_parity(&self) -> CMatrix {
        kron(&self.parity, &self.parity)
    }

    /// `Π_j π(a_j*)^{α_j} · Π_j π(a_j)^{β_j}` over the listed modes.
    pub fn monomial(&self, modes: &[usize], alpha: u64, beta: u64) -> CMatrix {
        let mut acc = CMatrix::identity(self.dim(), self.dim());
        for (k, &j) in modes.iter().enumerate() {
            if alpha >> k & 1 == 1 {
                acc *= self.gens[j].adjoint();
            }
        }
        for (k, &j) in modes.iter().enumerate() {
            if beta >> k & 1 == 1 {
                acc *= &self.gens[j];
            }
        }
        acc
    }

    /// The `4^{|modes|}` monomials over `modes`; spans the generated algebra.
    pub fn monomials(&self, modes: &[usize]) -> Vec<CMatrix> {
        let top = 1u64 << modes.len();
        (0..top)
            .flat_map(|a| (0..top).map(move |b| (a, b)))
            .map(|(a, b)| self.monomial(modes, a, b))
            .collect()
    }
}

/// Vacuum moments of every word of length `1..=max_len` in the basis
/// fields, compared with Wick's rule and, for words of the two ordered
/// shapes, with the determinant formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub words: usize,
    pub wick_defect: f64,
    pub determinant_words: usize,
    pub determinant_defect: f64,
}

pub fn moment_check(gns: &GnsRep, max_len: usize) -> Result<MomentCheck> {
    let m = gns.n_modes();
    let n_cells = gns.n_cells();
    let spec = gns.spec();
    let basis = |j: usize| -> Vec<Complex64> { (0..m).map(|i| c64(if i == j { 1.0 } else { 0.0 })).collect() };
    // letter 2j is a(e_j), letter 2j + 1 is a*(e_j)
    let letters: Vec<Letter> = (0..m)
        .flat_map(|j| [Letter::annihilation(basis(j)), Letter::creation(basis(j))])
        .collect();
    let mats: Vec<CMatrix> = letters.iter().map(|l| gns.letter(l)).collect::<Result<_>>()?;
    let n_letters = letters.len();
    let mut contraction = vec![vec![c64(0.0); n_letters]; n_letters];
    for (i, row) in contraction.iter_mut().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            *c = two_point(spec, n_cells, &letters[i], &letters[j])?;
        }
    }
    let mut out = MomentCheck {
        words: 0,
        wick_defect: 0.0,
        determinant_words: 0,
        determinant_defect: 0.0,
    };
    // depth-first over words, growing to the left
    let mut stack: Vec<(Vec<usize>, DVector<Complex64>)> = vec![(Vec::new(), gns.omega().clone())];
    while let Some((word, v)) = stack.pop() {
        if !word.is_empty() {
            let direct = gns.omega().dotc(&v);
            let wick = word_pfaffian(&contraction, &word);
            out.words += 1;
            out.wick_defect = out.wick_defect.max((direct - wick).norm());
            if let Some(det) = ordered_determinant(spec, n_cells, &letters, &word)? {
                out.determinant_words += 1;
                out.determinant_defect = out.determinant_defect.max((direct - det).norm());
            }
        }
        if word.len() < max_len {
            for l in 0..n_letters {
                let mut w = Vec::with_capacity(word.len() + 1);
                w.push(l);
                w.extend_from_slice(&word);
                stack.push((w, &mats[l] * &v));
            }
        }
    }
    Ok(out)
}

fn word_pfaffian(contraction: &[Vec<Complex64>], word: &[usize]) -> Complex64 {
    if word.len() % 2 == 1 {
        return c64(0.0);
    }
    let k = word.len();
    let mut m = vec![vec![c64(0.0); k]; k];
    for i in 0..k {
        for j in i + 1..k {
            m[i][j] = contraction[word[i]][word[j]];
            m[j][i] = -m[i][j];
        }
    }
    pfaffian(&m)
}

/// Determinant value for `a ⋯ a a* ⋯ a*` and `a* ⋯ a* a ⋯ a` words.
fn ordered_determinant(spec: &QuasiFreeSpec, n_cells: usize, letters: &[Letter], word: &[usize]) -> Result<Option<Complex64>> {
    let daggers: Vec<bool> = word.iter().map(|&l| letters[l].dagger).collect();
    let split = daggers.iter().position(|&d| d != daggers[0]).unwrap_or(daggers.len());
    if daggers[split..].iter().any(|&d| d == daggers[0]) || 2 * split != word.len() {
        return Ok(None);
    }
    let (left, right) = word.split_at(split);
    let fs = |ls: &[usize]| -> Vec<Vec<Complex64>> { ls.iter().map(|&l| letters[l].f.clone()).collect() };
    if !daggers[0] {
        // a(x_n) ⋯ a(x_1) a*(y_1) ⋯ a*(y_n)
        let mut xs = fs(left);
        xs.reverse();
        Ok(Some(quasi_free_moment(spec, n_cells, &xs, &fs(right))?))
    } else {
        // a*(y_1) ⋯ a*(y_n) a(x_n) ⋯ a(x_1)
        let mut xs = fs(right);
        xs.reverse();
        Ok(Some(normal_ordered_moment(spec, n_cells, &xs, &fs(left))?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car::quasifree::wick_moment;
    use crate::linalg::frobenius;
    use crate::rng;

    fn rep(spec: QuasiFreeSpec, n: usize) -> GnsRep {
        GnsRep::new(spec, n, DEFAULT_GNS_BUDGET_BYTES).unwrap()
    }

    #[test]
    fn fields_satisfy_car() {
        let g = rep(QuasiFreeSpec::diagonal(&[0.2, 0.7]).unwrap(), 1);
        let id = CMatrix::identity(g.dim(), g.dim());
        for i in 0..2 {
            for j in 0..2 {
                let (a, b) = (g.generator(i), g.generator(j));
                assert!(frobenius(&(a * b + b * a)) < 1e-13);
                let expect = if i == j { id.clone() } else { id.clone() * c64(0.0) };
                assert!(frobenius(&(a * b.adjoint() + b.adjoint() * a - expect)) < 1e-13);
            }
        }
    }

    #[test]
    fn vacuum_reproduces_the_state() {
        let spec = QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap();
        let g = rep(spec.clone(), 1);
        let mut rng = rng::seeded(5);
        let xs: Vec<_> = (0..2).map(|_| rng::complex_vec(&mut rng, 2)).collect();
        let ys: Vec<_> = (0..2).map(|_| rng::complex_vec(&mut rng, 2)).collect();
        let word = vec![
            Letter::annihilation(xs[1].clone()),
            Letter::annihilation(xs[0].clone()),
            Letter::creation(ys[0].clone()),
            Letter::creation(ys[1].clone()),
        ];
        let direct = g.word_moment(&word).unwrap();
        assert!((direct - quasi_free_moment(&spec, 1, &xs, &ys).unwrap()).norm() < 1e-13);
        let mixed = vec![
            Letter::creation(ys[0].clone()),
            Letter::annihilation(xs[1].clone()),
            Letter::annihilation(xs[0].clone()),
            Letter::creation(ys[1].clone()),
        ];
        assert!((g.word_moment(&mixed).unwrap() - wick_moment(&spec, 1, &mixed).unwrap()).norm() < 1e-13);
    }

    #[test]
    fn omega_is_even() {
        let g = rep(QuasiFreeSpec::scalar(0.5, 1).unwrap(), 2);
        let p = g.total_parity();
        assert!((&p * g.omega() - g.omega()).norm() < 1e-15);
        for a in g.generators() {
            assert!(frobenius(&(&p * a + a * &p)) < 1e-13);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let res = GnsRep::new(QuasiFreeSpec::scalar(0.5, 1).unwrap(), 5, 1 << 20);
        assert!(matches!(res, Err(Error::Resource(_))));
    }

    #[test]
    fn all_short_words_match() {
        let g = rep(QuasiFreeSpec::scalar(0.5, 1).unwrap(), 2);
        let res = moment_check(&g, 4).unwrap();
        assert_eq!(res.words, 4 + 16 + 64 + 256);
        assert!(res.wick_defect < 1e-12 && res.determinant_defect < 1e-12);
        assert!(res.determinant_words > 0);
    }
}
