//! The CAR flow on a GNS representation: `α_k(π(a(f))) = π(a(T_k f))` for
//! `f` supported on the source cells `[0, n − k)`.

use nalgebra::DVector;

use crate::car::gns::GnsRep;
use crate::car::tomita::ModularData;
use crate::error::{Error, Result};
use crate::linalg::{frobenius, spectral_norm, CMatrix, RANK_THRESHOLD};

/// Residual above which an operator is reported outside the source algebra.
pub const SOURCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CarFlow<'a> {
    gns: &'a GnsRep,
    k: usize,
    source: Vec<usize>,
    image: Vec<usize>,
    source_monomials: Vec<CMatrix>,
    image_monomials: Vec<CMatrix>,
    /// Vectorized source monomials and their pseudo-inverse.
    flat_basis: CMatrix,
    flat_pinv: CMatrix,
}

/// The CAR flow by `k` cells; `k ≥ n_cells` leaves no source and is rejected.
pub fn car_flow_morphism(gns: &GnsRep, k: usize) -> Result<CarFlow<'_>> {
    let n = gns.n_cells();
    if k >= n {
        return Err(Error::Argument(format!(
            "shift by {k} cells on a {n}-cell grid has an empty source"
        )));
    }
    let d = gns.spec().d();
    let source: Vec<usize> = (0..(n - k) * d).collect();
    let image: Vec<usize> = source.iter().map(|j| j + k * d).collect();
    let source_monomials = gns.monomials(&source);
    let image_monomials = gns.monomials(&image);
    let dim = gns.dim();
    let mut flat_basis = CMatrix::zeros(dim * dim, source_monomials.len());
    for (c, x) in source_monomials.iter().enumerate() {
        flat_basis.set_column(c, &DVector::from_column_slice(x.as_slice()));
    }
    let flat_pinv = pseudo(&flat_basis)?;
    Ok(CarFlow {
        gns,
        k,
        source,
        image,
        source_monomials,
        image_monomials,
        flat_basis,
        flat_pinv,
    })
}

impl<'a> CarFlow<'a> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn source_modes(&self) -> &[usize] {
        &self.source
    }

    pub fn source_monomials(&self) -> &[CMatrix] {
        &self.source_monomials
    }

    /// `α_k(π(a_j))` for a source mode `j`.
    pub fn generator_image(&self, j: usize) -> Result<&CMatrix> {
        let pos = self
            .source
            .iter()
            .position(|&s| s == j)
            .ok_or_else(|| Error::Argument(format!("mode {j} is not in the source")))?;
        Ok(self.gns.generator(self.image[pos]))
    }

    /// Coefficients of `y` in the source monomials.
    fn expand(&self, y: &CMatrix) -> Result<DVector<num_complex::Complex64>> {
        let target = DVector::from_column_slice(y.as_slice());
        let coeffs = &self.flat_pinv * &target;
        let residual = (&self.flat_basis * &coeffs - &target).norm() / target.norm().max(1.0);
        if residual > SOURCE_TOL {
            return Err(Error::Argument(format!(
                "operator is not in the source algebra (residual {residual:.3e})"
            )));
        }
        Ok(coeffs)
    }

    /// `α_k(y)` for `y` in the source algebra.
    pub fn apply(&self, y: &CMatrix) -> Result<CMatrix> {
        let c = self.expand(y)?;
        let n = self.gns.dim();
        let mut out = CMatrix::zeros(n, n);
        for (coef, img) in c.iter().zip(&self.image_monomials) {
            out += img * *coef;
        }
        Ok(out)
    }

    /// Worst of `‖α(xy) − α(x)α(y)‖` and `‖α(x*) − α(x)*‖` over the source
    /// fields, their adjoints and the identity.
    pub fn morphism_defect(&self) -> Result<f64> {
        let n = self.gns.dim();
        let mut letters = vec![(CMatrix::identity(n, n), CMatrix::identity(n, n))];
        for (&j, &i) in self.source.iter().zip(&self.image) {
            let (x, ax) = (self.gns.generator(j), self.gns.generator(i));
            letters.push((x.clone(), ax.clone()));
            letters.push((x.adjoint(), ax.adjoint()));
        }
        let mut worst: f64 = 0.0;
        for (x, ax) in &letters {
            worst = worst.max(frobenius(&(self.apply(&x.adjoint())? - ax.adjoint())));
            for (y, ay) in &letters {
                worst = worst.max(frobenius(&(self.apply(&(x * y))? - ax * ay)));
            }
        }
        Ok(worst)
    }

    /// `max_x |ω(α(x)) − ω(x)|` over source monomials.
    pub fn state_defect(&self) -> f64 {
        let om = self.gns.omega();
        self.source_monomials
            .iter()
            .zip(&self.image_monomials)
            .map(|(x, ax)| (om.dotc(&(ax * om)) - om.dotc(&(x * om))).norm())
            .fold(0.0, f64::max)
    }

    /// `α'_k(x') = J α_k(J x' J) J` for `x'` in `J M_source J`.
    pub fn complementary_action(&self, modular: &ModularData, x_prime: &CMatrix) -> Result<CMatrix> {
        let y = modular.conjugate(x_prime);
        Ok(modular.conjugate(&self.apply(&y)?))
    }

    /// Canonical unit `S_k : xΩ ↦ α_k(x)Ω` on the source orbit, zero on its
    /// orthogonal complement.
    pub fn canonical_unit(&self) -> Result<CanonicalUnit> {
        let om = self.gns.omega();
        let n = self.gns.dim();
        let cols = self.source_monomials.len();
        let mut v = CMatrix::zeros(n, cols);
        let mut w = CMatrix::zeros(n, cols);
        for (c, (x, ax)) in self.source_monomials.iter().zip(&self.image_monomials).enumerate() {
            v.set_column(c, &(x * om));
            w.set_column(c, &(ax * om));
        }
        let gram_defect = spectral_norm(&(v.adjoint() * &v - w.adjoint() * &w));
        if gram_defect > 1e-10 {
            return Err(Error::NotIsometric { defect: gram_defect });
        }
        let pinv = pseudo(&v)?;
        let s = &w * &pinv;
        let projector = &v * pinv;
        let isometry_defect = spectral_norm(&(s.adjoint() * &s - &projector));
        Ok(CanonicalUnit {
            s,
            projector,
            isometry_defect,
            gram_defect,
        })
    }
}

fn pseudo(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.pseudo_inverse(RANK_THRESHOLD * smax)
        .map_err(|e| Error::Structural(format!("pseudo-inverse failed: {e}")))
}

#[derive(Debug, Clone)]
pub struct CanonicalUnit {
    pub s: CMatrix,
    /// Orthogonal projection onto the source orbit `[M_source Ω]`.
    pub projector: CMatrix,
    /// `‖S* S − P‖`.
    pub isometry_defect: f64,
    /// `‖V* V − W* W‖` for the orbit matrices of `x` and `α(x)`.
    pub gram_defect: f64,
}

/// `‖(S_{k1} S_{k2} − S_{k1+k2}) P_{k1+k2}‖`.
pub fn unit_composition_defect(gns: &GnsRep, k1: usize, k2: usize) -> Result<f64> {
    let s1 = car_flow_morphism(gns, k1)?.canonical_unit()?;
    let s2 = car_flow_morphism(gns, k2)?.canonical_unit()?;
    let s12 = car_flow_morphism(gns, k1 + k2)?.canonical_unit()?;
    Ok(spectral_norm(&((&s1.s * &s2.s - &s12.s) * &s12.projector)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car::gns::DEFAULT_GNS_BUDGET_BYTES;
    use crate::car::quasifree::QuasiFreeSpec;
    use crate::car::tomita::gns_modular_data;
    use crate::linalg::c64;

    fn gns(n: usize) -> GnsRep {
        GnsRep::new(QuasiFreeSpec::scalar(0.3, 1).unwrap(), n, DEFAULT_GNS_BUDGET_BYTES).unwrap()
    }

    #[test]
    fn flow_is_a_state_preserving_morphism() {
        let g = gns(3);
        let flow = car_flow_morphism(&g, 1).unwrap();
        assert!(flow.morphism_defect().unwrap() < 1e-10);
        assert!(flow.state_defect() < 1e-12);
        let a0 = flow.generator_image(0).unwrap();
        let a1 = flow.generator_image(1).unwrap();
        let id = CMatrix::identity(g.dim(), g.dim());
        assert!(frobenius(&(a0 * a1.adjoint() + a1.adjoint() * a0)) < 1e-12);
        assert!(frobenius(&(a0 * a0.adjoint() + a0.adjoint() * a0 - id)) < 1e-12);
    }

    #[test]
    fn degenerate_shift_is_rejected() {
        let g = gns(2);
        assert!(matches!(car_flow_morphism(&g, 2), Err(Error::Argument(_))));
        let flow = car_flow_morphism(&g, 1).unwrap();
        assert!(matches!(flow.apply(g.generator(1)), Err(Error::Argument(_))));
    }

    #[test]
    fn complementary_action_lands_in_commutant() {
        let g = gns(2);
        let md = gns_modular_data(&g).unwrap();
        let flow = car_flow_morphism(&g, 1).unwrap();
        let x_prime = md.conjugate(g.generator(0));
        let image = flow.complementary_action(&md, &x_prime).unwrap();
        for a in g.generators() {
            assert!(frobenius(&(&image * a - a * &image)) < 1e-10);
        }
        let om = g.omega();
        assert!((om.dotc(&(&image * om)) - om.dotc(&(&x_prime * om))).norm() < 1e-12);
    }

    #[test]
    fn canonical_unit_is_an_isometric_unit() {
        let g = gns(3);
        let unit = car_flow_morphism(&g, 1).unwrap().canonical_unit().unwrap();
        assert!(unit.isometry_defect < 1e-10);
        assert!((&unit.s * g.omega() - g.omega()).norm() < 1e-12);
        assert!(unit_composition_defect(&g, 1, 1).unwrap() < 1e-10);
        let zero = car_flow_morphism(&g, 0).unwrap().canonical_unit().unwrap();
        assert!(frobenius(&(zero.s - CMatrix::identity(g.dim(), g.dim()) * c64(1.0))) < 1e-9);
    }
}
