//! The 2-index: size of a maximal family of mutually orthogonal defective
//! 2-addits, with an orthogonality certificate and a maximality certificate.

use crate::cohomology::exclusion::cocycle_system;
use crate::cohomology::two_addit::{basis_symbol, clifford_two_addit, elementary_symbol, TwoAddit};
use crate::error::{Error, Result};
use crate::grid::{GridInterval, MultiplicitySpace};
use crate::linalg::{null_space, CMatrix};
use crate::rng::{self, SeededRng};
use crate::sps::{SectorMask, SuperProductSystem, TensorSquare};

/// Orthogonality tolerance for the candidate family.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoIndexEstimate {
    /// Size of the verified orthogonal family.
    pub count: usize,
    /// `max |⟨a_ij(s,t), a_kl(s,t)⟩|` over distinct members and grid pairs.
    pub orthogonality_defect: f64,
    /// Smallest member norm over grid pairs; positive for a genuine family.
    pub min_member_norm: f64,
    /// Null-space dimension of the constraints `⟨a_ij, a^g⟩ = 0` over all
    /// symbols `g`; zero certifies maximality.
    pub maximality_nullity: usize,
    pub maximality_rank: usize,
    pub smallest_singular_value: f64,
    /// For the tensor-square system, the worst intertwining defect of the
    /// identification with the doubled Clifford system.
    pub intertwining_defect: Option<f64>,
    /// Grid 2-cocycles of the 2-particle sector, defective or not, that are
    /// orthogonal to the whole family (the "all 2-addits" reading).
    pub all_addits_orthogonal_dim: Option<usize>,
}

impl TwoIndexEstimate {
    pub fn is_certified(&self) -> bool {
        self.orthogonality_defect <= ORTHOGONALITY_TOL && self.min_member_norm > 0.0 && self.maximality_nullity == 0
    }
}

/// 2-index of the Clifford system `sps` from the basis symbols `e_i ⊗ e_j`.
pub fn two_index_estimate(sps: &SuperProductSystem) -> Result<TwoIndexEstimate> {
    if *sps.grading() != SectorMask::Even {
        return Err(Error::Argument("the 2-index estimator runs on a Clifford system".into()));
    }
    let n = sps.n_cells();
    let d = sps.d();
    if n < 2 {
        return Err(Error::Argument("the 2-index needs at least two cells".into()));
    }
    let family: Vec<TwoAddit> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| clifford_two_addit(sps, &basis_symbol(d, n, i, j)))
        .collect::<Result<_>>()?;
    let pairs = SuperProductSystem::pairs(n);

    let mut orthogonality_defect: f64 = 0.0;
    let mut min_member_norm = f64::INFINITY;
    for (a_idx, a) in family.iter().enumerate() {
        for &(s, t) in &pairs {
            min_member_norm = min_member_norm.min(a.value(s, t)?.norm());
            for b in &family[a_idx + 1..] {
                orthogonality_defect = orthogonality_defect.max(a.value(s, t)?.inner(b.value(s, t)?)?.norm());
            }
        }
    }

    // columns: elementary symbols g(r)[m1, m2], r = 1..n−1
    let elementary: Vec<TwoAddit> = (1..n)
        .flat_map(|r| (0..d).flat_map(move |m1| (0..d).map(move |m2| (r, m1, m2))))
        .map(|(r, m1, m2)| clifford_two_addit(sps, &elementary_symbol(d, n, r, m1, m2)))
        .collect::<Result<_>>()?;
    let mut m = CMatrix::zeros(family.len() * pairs.len(), elementary.len());
    for (fi, a) in family.iter().enumerate() {
        for (pi, &(s, t)) in pairs.iter().enumerate() {
            for (ci, e) in elementary.iter().enumerate() {
                m[(fi * pairs.len() + pi, ci)] = a.value(s, t)?.inner(e.value(s, t)?)?;
            }
        }
    }
    let ns = null_space(&m);

    Ok(TwoIndexEstimate {
        count: family.len(),
        orthogonality_defect,
        min_member_norm,
        maximality_nullity: ns.dim(),
        maximality_rank: ns.rank,
        smallest_singular_value: ns.singular_values.last().copied().unwrap_or(0.0),
        intertwining_defect: None,
        all_addits_orthogonal_dim: None,
    })
}

/// Adds the count for the undefective reading: grid 2-cocycles of the
/// 2-particle sector orthogonal to every `a_ij` at every grid pair.
pub fn all_addits_orthogonal_dim(sps: &SuperProductSystem, budget_bytes: usize) -> Result<usize> {
    let n = sps.n_cells();
    let d = sps.d();
    let (mut system, columns) = cocycle_system(n, d, 1, budget_bytes, false)?;
    for i in 0..d {
        for j in 0..d {
            let a = clifford_two_addit(sps, &basis_symbol(d, n, i, j))?;
            for (s, t) in SuperProductSystem::pairs(n) {
                let row = a
                    .value(s, t)?
                    .amplitudes()
                    .iter()
                    .filter_map(|(k, z)| columns.get(&((s, t), *k)).map(|&c| (c, z.conj())))
                    .collect();
                system.push_row(row);
            }
        }
    }
    Ok(system.null_space().dim())
}

/// 2-index of the tensor-square system `E^k_{2ℕ₀}` through its
/// identification with the Clifford system over `k ⊕ k`; the identification
/// is certified on random samples over all grid pairs.
pub fn tensor_square_two_index(
    grid: GridInterval,
    mult: MultiplicitySpace,
    rng: &mut SeededRng,
    samples: usize,
) -> Result<TwoIndexEstimate> {
    let ts = TensorSquare::new(grid, mult)?;
    let mut worst: f64 = 0.0;
    for (s, t) in SuperProductSystem::pairs(grid.n_cells()) {
        for _ in 0..samples {
            let x = ts.random_fiber_vector(rng, s, 2);
            let y = ts.random_fiber_vector(rng, t, 2);
            let scale = 1.0 / (x.norm() * y.norm()).max(f64::MIN_POSITIVE);
            worst = worst.max(ts.intertwining_defect(s, t, &x, &y)? * scale);
        }
    }
    let truncated = SuperProductSystem::clifford(grid, MultiplicitySpace::new(2 * mult.dim())?, Some(2))?;
    let mut est = two_index_estimate(&truncated)?;
    est.intertwining_defect = Some(worst);
    Ok(est)
}

/// Random symbol pair for seeded checks.
pub fn random_symbol_pair(rng: &mut SeededRng, d: usize, n: usize) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let mk = |rng: &mut SeededRng| {
        let mut f: Vec<CMatrix> = (0..n).map(|_| rng::complex_matrix(rng, d, d)).collect();
        f[0] = CMatrix::zeros(d, d);
        f
    };
    let f = mk(rng);
    let g = mk(rng);
    (f, g)
}

/// Symbol orthogonal to `f` at every difference.
pub fn pointwise_orthogonal(rng: &mut SeededRng, f: &[CMatrix]) -> Vec<CMatrix> {
    f.iter()
        .map(|fr| {
            let h = rng::complex_matrix(rng, fr.nrows(), fr.ncols());
            let nn: num_complex::Complex64 = fr.iter().map(|z| z.norm_sqr()).sum::<f64>().into();
            if nn.norm() == 0.0 {
                return h;
            }
            let c: num_complex::Complex64 = fr.iter().zip(h.iter()).map(|(a, b)| a.conj() * b).sum::<num_complex::Complex64>() / nn;
            h - fr * c
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohomology::exclusion::DEFAULT_BUDGET_BYTES;

    fn clifford(n: usize, d: usize) -> SuperProductSystem {
        SuperProductSystem::clifford(GridInterval::unit(n).unwrap(), MultiplicitySpace::new(d).unwrap(), Some(2)).unwrap()
    }

    #[test]
    fn clifford_index_is_d_squared() {
        for (d, expect) in [(1, 1), (2, 4)] {
            let est = two_index_estimate(&clifford(5, d)).unwrap();
            assert_eq!(est.count, expect);
            assert!(est.is_certified(), "{est:?}");
        }
    }

    #[test]
    fn maximality_constraints_have_full_rank() {
        let sps = clifford(4, 2);
        let est = two_index_estimate(&sps).unwrap();
        assert_eq!(est.maximality_rank, 4 * 3);
    }

    #[test]
    fn tensor_square_index_is_four_d_squared() {
        let mut rng = rng::seeded(11);
        let est = tensor_square_two_index(GridInterval::unit(4).unwrap(), MultiplicitySpace::new(1).unwrap(), &mut rng, 2).unwrap();
        assert_eq!(est.count, 4);
        assert!(est.is_certified());
        assert!(est.intertwining_defect.unwrap() < 1e-12);
    }

    #[test]
    fn undefective_reading_is_reported() {
        let sps = clifford(4, 1);
        let dim = all_addits_orthogonal_dim(&sps, DEFAULT_BUDGET_BYTES).unwrap();
        // non-defective 2-cocycles orthogonal to the family exist
        assert_eq!(dim, 4);
    }
}
