//! Intertwiner spaces of the CAR flow on finite grids.
//!
//! Intertwiners are maps `T` from the source Hilbert space into the full
//! space with `α_k(x) T = T x` for generators `x` of the source algebra.
//! In the full-algebra mode the algebra is the CAR algebra in its Fock
//! representation (a type I factor). In the with-commutant mode it is the
//! GNS representation of a quasi-free state, the constraints also include
//! `α'_k(x') T = T x'`, and, when requested, `T` must commute with the
//! grading. Every continuum intertwiner of a factor with outer grading
//! commutes with it; on a finite grid the grading is inner and the equations
//! alone do not force this.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::car::flow::car_flow_morphism;
use crate::car::gns::{GnsRep, DEFAULT_GNS_BUDGET_BYTES};
use crate::car::jordan_wigner::FiniteCARAlgebra;
use crate::car::quasifree::QuasiFreeSpec;
use crate::car::tomita::gns_modular_data;
use crate::error::{Error, Result};
use crate::linalg::{c64, frobenius, CMatrix, NullSpace, SparseSystem, RANK_THRESHOLD};
use crate::rng;

/// Entries below this magnitude are dropped from the linear system.
const ENTRY_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntertwinerMode {
    FullAlgebra,
    WithCommutant,
}

/// How the source generators are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorChoice {
    /// `a(e_j)` for the source modes.
    Basis,
    /// `a(f_i)` for seeded random `f_i` spanning the source modes.
    Random(u64),
}

#[derive(Debug, Clone)]
pub struct IntertwinerResult {
    pub mode: IntertwinerMode,
    pub dim: usize,
    pub n_unknowns: usize,
    pub n_equations: usize,
    /// `2^{kd}` in the full-algebra mode; `2^{2kd − 1}`, the even-degree
    /// count of `Γ(ℂ^{kd}) ⊗ Γ(ℂ^{kd})`, in the with-commutant mode.
    pub expected: usize,
    /// Solution count of the with-commutant equations without the grading
    /// constraint.
    pub ungraded_dim: Option<usize>,
    /// `max ‖α(x) T − T x‖` over the returned basis and the generators.
    pub residual: f64,
    pub basis: Vec<CMatrix>,
}

/// Solves `A_i T = T B_i` for `T : ℂ^{dim_s} → ℂ^{dim_t}`.
fn solve(pairs: &[(CMatrix, CMatrix)], dim_t: usize, dim_s: usize) -> (NullSpace, usize) {
    let mut system = SparseSystem::new(dim_t * dim_s);
    for (a, b) in pairs {
        for i in 0..dim_t {
            for j in 0..dim_s {
                let mut row = Vec::new();
                for l in 0..dim_t {
                    let v = a[(i, l)];
                    if v.norm() > ENTRY_FLOOR {
                        row.push((l * dim_s + j, v));
                    }
                }
                for l in 0..dim_s {
                    let v = b[(l, j)];
                    if v.norm() > ENTRY_FLOOR {
                        row.push((i * dim_s + l, -v));
                    }
                }
                system.push_row(row);
            }
        }
    }
    let rows = system.n_rows();
    (system.null_space(), rows)
}

fn reshape(v: &DVector<Complex64>, dim_t: usize, dim_s: usize) -> CMatrix {
    CMatrix::from_fn(dim_t, dim_s, |i, j| v[i * dim_s + j])
}

fn residual(pairs: &[(CMatrix, CMatrix)], basis: &[CMatrix]) -> f64 {
    basis
        .iter()
        .flat_map(|t| pairs.iter().map(move |(a, b)| frobenius(&(a * t - t * b)) / frobenius(t)))
        .fold(0.0, f64::max)
}

fn source_vectors(choice: GeneratorChoice, n_source: usize) -> Vec<Vec<Complex64>> {
    match choice {
        GeneratorChoice::Basis => (0..n_source)
            .map(|j| (0..n_source).map(|i| c64(if i == j { 1.0 } else { 0.0 })).collect())
            .collect(),
        GeneratorChoice::Random(seed) => {
            let mut r = rng::seeded(seed);
            (0..n_source).map(|_| rng::complex_vec(&mut r, n_source)).collect()
        }
    }
}

/// Intertwiners of the shift by `k` cells on the Fock representation of
/// the CAR algebra over `n_cells · d` modes. With `even_only`, the source
/// algebra is its even part, generated by products of two fields.
pub fn full_algebra_intertwiners(
    d: usize,
    n_cells: usize,
    k: usize,
    choice: GeneratorChoice,
    even_only: bool,
) -> Result<IntertwinerResult> {
    if k == 0 || k >= n_cells {
        return Err(Error::Argument(format!("shift by {k} cells on a {n_cells}-cell grid")));
    }
    let m = n_cells * d;
    let ms = (n_cells - k) * d;
    if m > 8 {
        return Err(Error::Resource(format!("intertwiner system over {m} modes")));
    }
    let alg = FiniteCARAlgebra::new(m, even_only)?;
    let dim_t = alg.dim();
    let dim_s = 1usize << ms;
    let mut fields: Vec<(CMatrix, CMatrix)> = Vec::new();
    for f in source_vectors(choice, ms) {
        let mut embedded = vec![c64(0.0); m];
        let mut shifted = vec![c64(0.0); m];
        embedded[..ms].copy_from_slice(&f);
        shifted[k * d..].copy_from_slice(&f);
        // the source space spans the low bits and is invariant
        let src = alg.annihilation(&embedded)?.to_dense().view((0, 0), (dim_s, dim_s)).into_owned();
        let img = alg.annihilation(&shifted)?.to_dense();
        fields.push((img.adjoint(), src.adjoint()));
        fields.push((img, src));
    }
    let pairs: Vec<(CMatrix, CMatrix)> = if even_only {
        let mut out = Vec::new();
        for (a1, b1) in &fields {
            for (a2, b2) in &fields {
                out.push((a1 * a2, b1 * b2));
            }
        }
        out
    } else {
        fields
    };
    let (ns, n_equations) = solve(&pairs, dim_t, dim_s);
    let basis: Vec<CMatrix> = ns.basis.iter().map(|v| reshape(v, dim_t, dim_s)).collect();
    Ok(IntertwinerResult {
        mode: IntertwinerMode::FullAlgebra,
        dim: basis.len(),
        n_unknowns: dim_t * dim_s,
        n_equations,
        expected: 1 << (k * d),
        ungraded_dim: None,
        residual: residual(&pairs, &basis),
        basis,
    })
}

/// Orthonormal basis of the column span of `m`.
fn range_basis(m: &CMatrix) -> CMatrix {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > RANK_THRESHOLD * smax)
        .collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Intertwiners of the CAR flow by `k` cells on the GNS representation of
/// `spec` over `n_cells` cells, constrained by the flow and its
/// complementary action.
pub fn commutant_intertwiners(spec: &QuasiFreeSpec, n_cells: usize, k: usize, graded: bool) -> Result<IntertwinerResult> {
    if k == 0 {
        return Err(Error::Argument("shift by zero cells".into()));
    }
    let gns = GnsRep::new(spec.clone(), n_cells, DEFAULT_GNS_BUDGET_BYTES)?;
    let dim = gns.dim();
    if dim > 64 {
        return Err(Error::Resource(format!("with-commutant intertwiners on {dim} dimensions")));
    }
    let md = gns_modular_data(&gns)?;
    let flow = car_flow_morphism(&gns, k)?;
    let om = gns.omega();

    // source space [M_source M'_source Ω]
    let monos = flow.source_monomials();
    let mut orbit = CMatrix::zeros(dim, monos.len() * monos.len());
    for (a, x) in monos.iter().enumerate() {
        for (b, y) in monos.iter().enumerate() {
            orbit.set_column(a * monos.len() + b, &(x * md.conjugate(y) * om));
        }
    }
    let q = range_basis(&orbit);
    let dim_s = q.ncols();
    let restrict = |x: &CMatrix| -> Result<CMatrix> {
        let xq = x * &q;
        let inside = q.adjoint() * &xq;
        let leak = frobenius(&(&xq - &q * &inside));
        if leak > 1e-9 {
            return Err(Error::Structural(format!("source space is not invariant (leak {leak:.3e})")));
        }
        Ok(inside)
    };

    let mut pairs = Vec::new();
    for &j in flow.source_modes() {
        let x = gns.generator(j);
        let ax = flow.generator_image(j)?;
        let xp = md.conjugate(x);
        let axp = md.conjugate(ax);
        for (a, b) in [(ax.clone(), x.clone()), (axp, xp)] {
            pairs.push((a.adjoint(), restrict(&b.adjoint())?));
            pairs.push((a, restrict(&b)?));
        }
    }
    let (ungraded, _) = solve(&pairs, dim, dim_s);
    let theta = gns.total_parity();
    let mut graded_pairs = pairs.clone();
    graded_pairs.push((theta.clone(), restrict(&theta)?));
    let active = if graded { &graded_pairs } else { &pairs };
    let (ns, n_equations) = solve(active, dim, dim_s);
    let basis: Vec<CMatrix> = ns.basis.iter().map(|v| reshape(v, dim, dim_s)).collect();
    let kd = k * spec.d();
    Ok(IntertwinerResult {
        mode: IntertwinerMode::WithCommutant,
        dim: basis.len(),
        n_unknowns: dim * dim_s,
        n_equations,
        expected: 1 << (2 * kd - 1),
        ungraded_dim: Some(ungraded.dim()),
        residual: residual(active, &basis),
        basis,
    })
}
