//! Finite-dimensional Tomita–Takesaki data for an algebra with cyclic and
//! separating vector `Ω`.
//!
//! With `V = [x_k Ω]` and `W = [x_k* Ω]` over a spanning set `{x_k}`, the
//! antilinear `S : xΩ ↦ x*Ω` is `S v = L conj(v)` with `L = W conj(V⁺)`.
//! Then `Δ = S*S = conj(L* L)` and `J = S Δ^{−1/2}` has `J v = J_lin conj(v)`
//! with `J_lin = L conj(Δ^{−1/2})`.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::car::gns::GnsRep;
use crate::error::{Error, Result};
use crate::linalg::{c64, frobenius, hermitian_eigenvalues, hermitian_map, rank, spectral_norm, CMatrix, RANK_THRESHOLD};

#[derive(Debug, Clone)]
pub struct ModularData {
    l: CMatrix,
    delta: CMatrix,
    j_lin: CMatrix,
}

fn pseudo_inverse(m: &CMatrix) -> Result<CMatrix> {
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.pseudo_inverse(RANK_THRESHOLD * smax)
        .map_err(|e| Error::Structural(format!("pseudo-inverse failed: {e}")))
}

fn conj(m: &CMatrix) -> CMatrix {
    m.map(|z| z.conj())
}

/// Modular data of the algebra spanned by `span` with respect to `omega`.
pub fn tomita_engine(span: &[CMatrix], omega: &DVector<Complex64>) -> Result<ModularData> {
    let n = omega.len();
    if span.is_empty() {
        return Err(Error::Argument("empty spanning set".into()));
    }
    let mut v = CMatrix::zeros(n, span.len());
    let mut w = CMatrix::zeros(n, span.len());
    let mut flat = CMatrix::zeros(n * n, span.len());
    for (k, x) in span.iter().enumerate() {
        if x.nrows() != n || x.ncols() != n {
            return Err(Error::Dimension(format!("algebra element of shape {}x{}", x.nrows(), x.ncols())));
        }
        v.set_column(k, &(x * omega));
        w.set_column(k, &(x.adjoint() * omega));
        flat.set_column(k, &DVector::from_column_slice(x.as_slice()));
    }
    let orbit_rank = rank(&v);
    if orbit_rank < n {
        return Err(Error::Structural(format!("Ω is not cyclic: orbit rank {orbit_rank} < {n}")));
    }
    let algebra_rank = rank(&flat);
    if algebra_rank != orbit_rank {
        return Err(Error::Structural(format!(
            "Ω is not separating: algebra dimension {algebra_rank}, orbit rank {orbit_rank}"
        )));
    }
    let l = &w * conj(&pseudo_inverse(&v)?);
    let delta = conj(&(l.adjoint() * &l));
    let ev = hermitian_eigenvalues(&delta);
    if ev[0] <= 0.0 {
        return Err(Error::Structural(format!("Δ is singular (smallest eigenvalue {:.3e})", ev[0])));
    }
    let inv_sqrt = hermitian_map(&delta, |x| c64(1.0 / x.sqrt()));
    let j_lin = &l * conj(&inv_sqrt);
    Ok(ModularData { l, delta, j_lin })
}

impl ModularData {
    pub fn delta(&self) -> &CMatrix {
        &self.delta
    }

    /// `S v`.
    pub fn s_apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.l * v.map(|z| z.conj())
    }

    /// `J v`.
    pub fn j_apply(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.j_lin * v.map(|z| z.conj())
    }

    /// `Δ^{is}`.
    pub fn delta_it(&self, s: f64) -> CMatrix {
        hermitian_map(&self.delta, |x| Complex64::from_polar(1.0, s * x.ln()))
    }

    pub fn delta_power(&self, p: f64) -> CMatrix {
        hermitian_map(&self.delta, |x| c64(x.powf(p)))
    }

    /// `J x J`, a linear operator.
    pub fn conjugate(&self, x: &CMatrix) -> CMatrix {
        &self.j_lin * conj(x) * conj(&self.j_lin)
    }

    /// `σ_s(x) = Δ^{is} x Δ^{−is}`.
    pub fn modular_automorphism(&self, x: &CMatrix, s: f64) -> CMatrix {
        self.delta_it(s) * x * self.delta_it(-s)
    }

    /// `‖J² − 1‖` plus the antiunitarity defect `‖J_lin* J_lin − 1‖`.
    pub fn involution_defect(&self) -> f64 {
        let n = self.j_lin.nrows();
        let id = CMatrix::identity(n, n);
        let j2 = &self.j_lin * conj(&self.j_lin);
        spectral_norm(&(j2 - &id)) + spectral_norm(&(self.j_lin.adjoint() * &self.j_lin - id))
    }

    /// `max(‖JΩ − Ω‖, ‖ΔΩ − Ω‖)`.
    pub fn vacuum_defect(&self, omega: &DVector<Complex64>) -> f64 {
        (self.j_apply(omega) - omega).norm().max((&self.delta * omega - omega).norm())
    }

    /// `max_x ‖J Δ^{1/2} x Ω − x* Ω‖ / ‖x‖`.
    pub fn polar_defect(&self, span: &[CMatrix], omega: &DVector<Complex64>) -> f64 {
        let half = self.delta_power(0.5);
        span.iter()
            .map(|x| {
                let lhs = self.j_apply(&(&half * (x * omega)));
                (lhs - x.adjoint() * omega).norm() / frobenius(x).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }

    /// `max ‖[J x J, y]‖` over pairs from `span`, relative to `‖x‖ ‖y‖`.
    pub fn commutant_defect(&self, span: &[CMatrix]) -> f64 {
        let mut worst: f64 = 0.0;
        for x in span {
            let jxj = self.conjugate(x);
            for y in span {
                let c = &jxj * y - y * &jxj;
                worst = worst.max(frobenius(&c) / (frobenius(x) * frobenius(y)).max(f64::MIN_POSITIVE));
            }
        }
        worst
    }

    /// `‖Δ − 1‖`.
    pub fn trace_defect(&self) -> f64 {
        let n = self.delta.nrows();
        spectral_norm(&(&self.delta - CMatrix::identity(n, n)))
    }
}

/// Modular data of a GNS representation over its full monomial basis.
pub fn gns_modular_data(gns: &GnsRep) -> Result<ModularData> {
    let modes: Vec<usize> = (0..gns.n_modes()).collect();
    tomita_engine(&gns.monomials(&modes), gns.omega())
}

/// `max_j ‖σ_s(π(a(e_j))) − π(a(A^{is}(1−A)^{−is} e_j))‖` (spectral norm).
pub fn modular_vs_bogoliubov(gns: &GnsRep, modular: &ModularData, s: f64) -> Result<f64> {
    let m = gns.n_modes();
    let u = gns.spec().modular_unitary(gns.n_cells(), s);
    let mut worst: f64 = 0.0;
    for j in 0..m {
        let lhs = modular.modular_automorphism(gns.generator(j), s);
        let f: Vec<Complex64> = u.column(j).iter().copied().collect();
        let rhs = gns.field(&f)?;
        worst = worst.max(spectral_norm(&(lhs - rhs)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::car::gns::DEFAULT_GNS_BUDGET_BYTES;
    use crate::car::quasifree::QuasiFreeSpec;

    fn data(spec: QuasiFreeSpec, n: usize) -> (GnsRep, ModularData, Vec<CMatrix>) {
        let g = GnsRep::new(spec, n, DEFAULT_GNS_BUDGET_BYTES).unwrap();
        let modes: Vec<usize> = (0..g.n_modes()).collect();
        let span = g.monomials(&modes);
        let md = tomita_engine(&span, g.omega()).unwrap();
        (g, md, span)
    }

    #[test]
    fn modular_relations_hold() {
        let (g, md, span) = data(QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(), 1);
        assert!(md.vacuum_defect(g.omega()) < 1e-12);
        assert!(md.polar_defect(&span, g.omega()) < 1e-9);
        assert!(md.involution_defect() < 1e-10);
        assert!(md.commutant_defect(&span) < 1e-10);
    }

    #[test]
    fn tracial_state_has_trivial_delta() {
        let (_, md, _) = data(QuasiFreeSpec::scalar(0.5, 1).unwrap(), 2);
        assert!(md.trace_defect() < 1e-12);
    }

    #[test]
    fn modular_group_is_bogoliubov() {
        let (g, md, _) = data(QuasiFreeSpec::diagonal(&[1.0 / 3.0, 2.0 / 3.0]).unwrap(), 1);
        for s in [0.5, 1.0, 2.0] {
            assert!(modular_vs_bogoliubov(&g, &md, s).unwrap() < 1e-8, "s = {s}");
        }
    }

    #[test]
    fn non_cyclic_vector_is_rejected() {
        let g = GnsRep::new(QuasiFreeSpec::scalar(0.5, 1).unwrap(), 1, DEFAULT_GNS_BUDGET_BYTES).unwrap();
        let err = tomita_engine(&[g.generator(0).clone()], g.omega()).unwrap_err();
        assert!(matches!(err, Error::Structural(_)));
    }
}
