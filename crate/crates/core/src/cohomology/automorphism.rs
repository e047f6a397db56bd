//! Automorphisms `U_(λ,F)` of the Clifford system.
//!
//! On the grid the action is defined on cell-simple basis tuples, those
//! occupying every cell at most once. The sorted modes are paired
//! consecutively, `(y₁ < x₁) < (y₂ < x₂) < …`, and each pair with cell
//! difference `r = c_x − c_y` is transformed by `F(r)` acting on `k ⊗ k`,
//! the first factor belonging to the later mode:
//!
//! ```text
//! e_(cy,my) ∧ e_(cx,mx) ↦ Σ F(r)[(mx'·d + my'), (mx·d + my)] e_(cy,my') ∧ e_(cx,mx')
//! ```
//!
//! Because every block of an even fiber carries an even number of modes,
//! consecutive pairing never straddles a block boundary.

use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::linalg::{c64, isometry_defect, CMatrix};
use crate::modes::ModeSet;
use crate::rng::{self, SeededRng};
use crate::sps::{SectorMask, SuperProductSystem};
use num_complex::Complex64;

/// Unitarity tolerance for `F(r)`.
pub const UNITARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AutomorphismElement {
    lambda: f64,
    /// `F(r)` on `k ⊗ k`, indexed by the cell difference; entry 0 is unused.
    f: Vec<CMatrix>,
}

impl AutomorphismElement {
    pub fn new(lambda: f64, f: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = f.first() else {
            return Err(Error::Argument("F needs at least one grid difference".into()));
        };
        let dd = first.nrows();
        for (r, m) in f.iter().enumerate() {
            if m.nrows() != dd || m.ncols() != dd {
                return Err(Error::Dimension(format!("F({r}) must be {dd}x{dd}")));
            }
            let defect = isometry_defect(m).max(isometry_defect(&m.adjoint()));
            if defect > UNITARY_TOL {
                return Err(Error::NotUnitary {
                    defect,
                    location: format!("F({r})"),
                });
            }
        }
        Ok(Self { lambda, f })
    }

    pub fn identity(d: usize, n_cells: usize) -> Self {
        Self {
            lambda: 0.0,
            f: vec![CMatrix::identity(d * d, d * d); n_cells.max(1)],
        }
    }

    /// Constant `F ≡ u ⊗ u`.
    pub fn constant(lambda: f64, u: &CMatrix, n_cells: usize) -> Result<Self> {
        Self::new(lambda, vec![u.kronecker(u); n_cells.max(1)])
    }

    pub fn random(rng: &mut SeededRng, d: usize, n_cells: usize) -> Self {
        let lambda = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let mut f: Vec<CMatrix> = (0..n_cells.max(1)).map(|_| rng::unitary(rng, d * d)).collect();
        f[0] = CMatrix::identity(d * d, d * d);
        Self { lambda, f }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn f(&self) -> &[CMatrix] {
        &self.f
    }

    /// Group law of `ℝ × M(ℝ₊; U(k⊗k))`: sum of phases, pointwise product.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.f.len() != other.f.len() {
            return Err(Error::Dimension("elements cover different grids".into()));
        }
        let f = self.f.iter().zip(&other.f).map(|(a, b)| a * b).collect();
        Ok(Self {
            lambda: self.lambda + other.lambda,
            f,
        })
    }

    pub fn inverse(&self) -> Self {
        Self {
            lambda: -self.lambda,
            f: self.f.iter().map(|m| m.adjoint()).collect(),
        }
    }
}

fn is_cell_simple(k: &ModeSet, d: usize) -> bool {
    let mut last = None;
    for m in k.iter() {
        if last == Some(m / d) {
            return false;
        }
        last = Some(m / d);
    }
    true
}

/// `U_(λ,F)(t) v` for `v` in the cell-simple part of `fiber(t)`.
pub fn automorphism_apply(sps: &SuperProductSystem, g: &AutomorphismElement, t_cells: usize, v: &FockVector) -> Result<FockVector> {
    if *sps.grading() != SectorMask::Even {
        return Err(Error::Argument("automorphisms act on the Clifford system".into()));
    }
    let d = sps.d();
    if g.f.len() < sps.n_cells() || g.f[0].nrows() != d * d {
        return Err(Error::Dimension("F does not match the grid or k ⊗ k".into()));
    }
    sps.check_fiber(v, t_cells)?;
    let phase = Complex64::from_polar(1.0, g.lambda * sps.grid().time(t_cells));
    let mut out = sps.vacuum().scale(c64(0.0));
    for (k, &z) in v.amplitudes() {
        if !is_cell_simple(k, d) {
            return Err(Error::Argument(format!(
                "basis tuple {:?} occupies a cell twice",
                k.iter().collect::<Vec<_>>()
            )));
        }
        let modes: Vec<usize> = k.iter().collect();
        // expand pair by pair; cell order is preserved so keys stay sorted
        let mut terms: Vec<(Vec<usize>, Complex64)> = vec![(Vec::new(), z * phase)];
        for pair in modes.chunks(2) {
            let (y, x) = (pair[0], pair[1]);
            let (cy, my, cx, mx) = (y / d, y % d, x / d, x % d);
            let fr = &g.f[cx - cy];
            let col = mx * d + my;
            let mut next = Vec::with_capacity(terms.len() * d * d);
            for (acc, w) in &terms {
                for mx2 in 0..d {
                    for my2 in 0..d {
                        let c = fr[(mx2 * d + my2, col)];
                        if c == c64(0.0) {
                            continue;
                        }
                        let mut a = acc.clone();
                        a.push(cy * d + my2);
                        a.push(cx * d + mx2);
                        next.push((a, w * c));
                    }
                }
            }
            terms = next;
        }
        for (a, w) in terms {
            let key = ModeSet::from_modes(a);
            let prev = out.amplitude(&key);
            out.set(key, prev + w)?;
        }
    }
    Ok(out)
}

/// `max ‖V_{s+t} U_{s,t}(x ⊗ y) − U_{s,t}(V_s x ⊗ V_t y)‖` over random
/// cell-simple samples, relative to `‖x‖‖y‖`.
pub fn automorphism_defect(
    sps: &SuperProductSystem,
    g: &AutomorphismElement,
    s: usize,
    t: usize,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let cap = sps.space().max_particles();
        let x = random_cell_simple(sps, rng, s, 4.min(cap), 8);
        let used = x.max_particle_number().unwrap_or(0);
        let y = random_cell_simple(sps, rng, t, 4.min(cap - used), 8);
        let lhs = automorphism_apply(sps, g, s + t, &sps.u_st(s, t, &x, &y)?)?;
        let rhs = sps.u_st(s, t, &automorphism_apply(sps, g, s, &x)?, &automorphism_apply(sps, g, t, &y)?)?;
        let scale = (x.norm() * y.norm()).max(f64::MIN_POSITIVE);
        worst = worst.max(lhs.sub(&rhs)?.norm() / scale);
    }
    Ok(worst)
}

/// The injectivity test vector `e_(0,my) ∧ e_(r,mx)`.
pub fn separation_vector(sps: &SuperProductSystem, r: usize, mx: usize, my: usize) -> Result<FockVector> {
    let d = sps.d();
    if r == 0 || r >= sps.n_cells() || mx >= d || my >= d {
        return Err(Error::Argument(format!("no separation vector at r = {r}, ({mx}, {my})")));
    }
    FockVector::basis(sps.space(), ModeSet::from_modes([my, r * d + mx]))
}

/// `max ‖U_g v − U_h v‖` over the vacuum and all separation vectors in
/// `fiber(n_cells)`; positive exactly when `g ≠ h` on the grid.
pub fn separation(sps: &SuperProductSystem, g: &AutomorphismElement, h: &AutomorphismElement) -> Result<f64> {
    let n = sps.n_cells();
    let om = sps.vacuum();
    let mut worst = automorphism_apply(sps, g, n, &om)?
        .sub(&automorphism_apply(sps, h, n, &om)?)?
        .norm();
    let d = sps.d();
    for r in 1..n {
        for mx in 0..d {
            for my in 0..d {
                let v = separation_vector(sps, r, mx, my)?;
                // compare with phases removed so that F is probed on its own
                let a = automorphism_apply(sps, g, r + 1, &v)?.scale(Complex64::from_polar(1.0, -g.lambda * sps.grid().time(r + 1)));
                let b = automorphism_apply(sps, h, r + 1, &v)?.scale(Complex64::from_polar(1.0, -h.lambda * sps.grid().time(r + 1)));
                worst = worst.max(a.sub(&b)?.norm());
            }
        }
    }
    Ok(worst)
}

/// Random cell-simple vector of `fiber(t)` with even particle numbers up to
/// `max_n` and at most `max_terms` basis tuples.
pub fn random_cell_simple(sps: &SuperProductSystem, rng: &mut SeededRng, t_cells: usize, max_n: usize, max_terms: usize) -> FockVector {
    let d = sps.d();
    let top = max_n.min(t_cells).min(sps.space().max_particles());
    let mut v = sps.vacuum().scale(c64(0.0));
    for _ in 0..max_terms {
        let k = 2 * rng.gen_range(0..=top / 2);
        let cells = sample(rng, t_cells.max(1), k.min(t_cells));
        let key = ModeSet::from_modes(cells.iter().map(|c| c * d + rng.gen_range(0..d)));
        if sps.grading().contains(key.len()) && key.last().is_none_or(|m| m < t_cells * d) {
            let z = rng::complex(rng);
            let prev = v.amplitude(&key);
            v.set(key, prev + z).expect("tuple fits the space");
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridInterval, MultiplicitySpace};

    fn clifford(n: usize, d: usize) -> SuperProductSystem {
        SuperProductSystem::clifford(GridInterval::unit(n).unwrap(), MultiplicitySpace::new(d).unwrap(), Some(6)).unwrap()
    }

    #[test]
    fn identity_acts_trivially() {
        let sps = clifford(6, 2);
        let mut rng = rng::seeded(1);
        let g = AutomorphismElement::identity(2, 6);
        for _ in 0..5 {
            let v = random_cell_simple(&sps, &mut rng, 6, 6, 12);
            assert_eq!(automorphism_apply(&sps, &g, 6, &v).unwrap(), v);
        }
    }

    #[test]
    fn vacuum_phase() {
        let sps = SuperProductSystem::clifford(GridInterval::new(1.0, 4).unwrap(), MultiplicitySpace::new(1).unwrap(), None).unwrap();
        let g = AutomorphismElement::new(std::f64::consts::PI, vec![CMatrix::identity(1, 1); 4]).unwrap();
        let out = automorphism_apply(&sps, &g, 4, &sps.vacuum()).unwrap();
        assert!(out.add(&sps.vacuum()).unwrap().norm() < 1e-15);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let mut f = vec![CMatrix::identity(4, 4); 3];
        f[2][(0, 0)] = c64(1.1);
        assert!(matches!(AutomorphismElement::new(0.0, f), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn morphism_law_and_isometry() {
        let sps = clifford(6, 2);
        let mut rng = rng::seeded(2);
        for _ in 0..4 {
            let g = AutomorphismElement::random(&mut rng, 2, 6);
            for (s, t) in SuperProductSystem::pairs(6) {
                assert!(automorphism_defect(&sps, &g, s, t, 2, &mut rng).unwrap() < 1e-10);
            }
            let v = random_cell_simple(&sps, &mut rng, 6, 6, 16);
            let w = automorphism_apply(&sps, &g, 6, &v).unwrap();
            assert!((w.norm() - v.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn group_law() {
        let sps = clifford(5, 2);
        let mut rng = rng::seeded(3);
        let g = AutomorphismElement::random(&mut rng, 2, 5);
        let h = AutomorphismElement::random(&mut rng, 2, 5);
        let gh = g.compose(&h).unwrap();
        let v = random_cell_simple(&sps, &mut rng, 5, 4, 16);
        let a = automorphism_apply(&sps, &g, 5, &automorphism_apply(&sps, &h, 5, &v).unwrap()).unwrap();
        let b = automorphism_apply(&sps, &gh, 5, &v).unwrap();
        assert!(a.sub(&b).unwrap().norm() < 1e-12);
        let back = automorphism_apply(&sps, &g.inverse(), 5, &automorphism_apply(&sps, &g, 5, &v).unwrap()).unwrap();
        assert!(back.sub(&v).unwrap().norm() < 1e-12);
    }

    #[test]
    fn constant_element_is_second_quantization() {
        let sps = clifford(5, 2);
        let mut rng = rng::seeded(4);
        let u = rng::unitary(&mut rng, 2);
        let lambda = 0.7;
        let g = AutomorphismElement::constant(lambda, &u, 5).unwrap();
        let big = crate::grid::local_operator(5, &u);
        for t in [2, 4, 5] {
            let v = random_cell_simple(&sps, &mut rng, t, 4, 16);
            let a = automorphism_apply(&sps, &g, t, &v).unwrap();
            let b = v
                .second_quantize(&big)
                .unwrap()
                .scale(Complex64::from_polar(1.0, lambda * sps.grid().time(t)));
            assert!(a.sub(&b).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn separation_of_distinct_parameters() {
        let sps = clifford(5, 2);
        let mut rng = rng::seeded(5);
        let g = AutomorphismElement::random(&mut rng, 2, 5);
        assert!(separation(&sps, &g, &g).unwrap() < 1e-14);
        let mut f = g.f().to_vec();
        f[3] = &f[3] * rng::unitary(&mut rng, 4);
        let h = AutomorphismElement::new(g.lambda(), f).unwrap();
        assert!(separation(&sps, &g, &h).unwrap() > 1e-3);
        let shifted = AutomorphismElement::new(g.lambda() + 0.5, g.f().to_vec()).unwrap();
        assert!(separation(&sps, &g, &shifted).unwrap() > 1e-3);
    }

    #[test]
    fn multiply_occupied_cell_is_rejected() {
        let sps = clifford(3, 2);
        let v = FockVector::basis(sps.space(), ModeSet::from_modes([0, 1])).unwrap();
        let g = AutomorphismElement::identity(2, 3);
        assert!(matches!(automorphism_apply(&sps, &g, 3, &v), Err(Error::Argument(_))));
    }
}
