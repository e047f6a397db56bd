//! 2-addits of the Clifford system built from symbols, and the inner-product
//! lemma relating them.
//!
//! A symbol is a list `f[r]` of `d × d` matrices indexed by the cell
//! difference `r ≥ 1`; entry `[mx, my]` is the coefficient of `e_mx ⊗ e_my`,
//! the first factor belonging to the later coordinate. On the grid the
//! square function of `a^f_{s,t}` is
//!
//! ```text
//! F((cx,mx),(cy,my)) =  dt · f[cx − cy][mx, my]   for cx ∈ [s, s+t), cy ∈ [0, s)
//! F((cy,my),(cx,mx)) = −dt · f[cx − cy][mx, my]
//! ```
//!
//! so the wedge amplitude on `e_(cy,my) ∧ e_(cx,mx)` is `−√2 · dt · f[r][mx, my]`
//! and `⟨a^f_{s,t}, a^g_{s,t}⟩ = 2 dt² Σ ⟨f(cx−cy), g(cx−cy)⟩` over the support
//! rectangle.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::cohomology::cochain::Cochain;
use crate::error::{Error, Result};
use crate::fock::{square_from_two_particle, FockVector};
use crate::linalg::{c64, rank, CMatrix};
use crate::modes::ModeSet;
use crate::sps::{DefectReport, SectorMask, SuperProductSystem};

/// Grid symbol `r ↦ f(r) ∈ k ⊗ k`; entry 0 is unused.
pub type Symbol = Vec<CMatrix>;

/// Constant symbol `f(r) ≡ m` covering `n_cells` differences.
pub fn constant_symbol(m: &CMatrix, n_cells: usize) -> Symbol {
    vec![m.clone(); n_cells.max(1)]
}

/// Elementary symbol supported at one difference `r`, entry `(mx, my)`.
pub fn elementary_symbol(d: usize, n_cells: usize, r: usize, mx: usize, my: usize) -> Symbol {
    let mut f = vec![CMatrix::zeros(d, d); n_cells.max(1)];
    f[r][(mx, my)] = c64(1.0);
    f
}

/// Symbol `f_ij(r) ≡ e_i ⊗ e_j`.
pub fn basis_symbol(d: usize, n_cells: usize, i: usize, j: usize) -> Symbol {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = c64(1.0);
    constant_symbol(&m, n_cells)
}

/// A family `a_{s,t} ∈ fiber(s + t)` over positive grid pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAddit {
    horizon: usize,
    values: BTreeMap<(usize, usize), FockVector>,
    symbol: Option<Symbol>,
}

impl TwoAddit {
    pub fn from_values(horizon: usize, values: BTreeMap<(usize, usize), FockVector>) -> Result<Self> {
        for (s, t) in SuperProductSystem::pairs(horizon) {
            if !values.contains_key(&(s, t)) {
                return Err(Error::Argument(format!("missing value at ({s}, {t})")));
            }
        }
        Ok(Self {
            horizon,
            values,
            symbol: None,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn symbol(&self) -> Option<&Symbol> {
        self.symbol.as_ref()
    }

    pub fn values(&self) -> &BTreeMap<(usize, usize), FockVector> {
        &self.values
    }

    pub fn value(&self, s: usize, t: usize) -> Result<&FockVector> {
        self.values
            .get(&(s, t))
            .ok_or_else(|| Error::Argument(format!("2-addit has no value at ({s}, {t})")))
    }

    pub fn to_cochain(&self) -> Result<Cochain> {
        Cochain::from_fn(2, self.horizon, |s| self.value(s[0], s[1]).cloned())
    }

    /// Worst defect of `a_{r,s} + a_{r+s,t} = κ_r a_{s,t} + a_{r,s+t}` over
    /// positive grid triples.
    pub fn identity_defect(&self, sps: &SuperProductSystem) -> Result<DefectReport> {
        let items = SuperProductSystem::triples(self.horizon)
            .into_par_iter()
            .map(|(r, s, t)| {
                let lhs = self.value(r, s)?.add(self.value(r + s, t)?)?;
                let rhs = sps.kappa(r, self.value(s, t)?)?.add(self.value(r, s + t)?)?;
                Ok((vec![r, s, t], lhs.sub(&rhs)?.norm()))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut report = DefectReport {
            max_defect: 0.0,
            worst: None,
            evaluated: items.len(),
        };
        for (k, v) in items {
            if v > report.max_defect {
                report.max_defect = v;
                report.worst = Some(k);
            }
        }
        Ok(report)
    }

    /// `max_{s,t} ‖P a_{s,t}‖` with `P` the projection onto `U_{s,t}(H_s ⊗ H_t)`.
    pub fn defectiveness(&self, sps: &SuperProductSystem) -> f64 {
        self.values
            .iter()
            .map(|((s, t), v)| sps.image_projection(v, &[*s, *t]).norm())
            .fold(0.0, f64::max)
    }

    /// Fiber membership of every value.
    pub fn check_fibers(&self, sps: &SuperProductSystem) -> Result<()> {
        for ((s, t), v) in &self.values {
            sps.check_fiber(v, s + t)?;
        }
        Ok(())
    }
}

fn validate_symbol(sps: &SuperProductSystem, f: &Symbol) -> Result<()> {
    let n = sps.n_cells();
    if f.len() < n {
        return Err(Error::Argument(format!(
            "symbol covers {} differences, the grid needs {n}",
            f.len()
        )));
    }
    let d = sps.d();
    if f.iter().any(|m| m.nrows() != d || m.ncols() != d) {
        return Err(Error::Dimension(format!("symbol values must be {d}x{d}")));
    }
    Ok(())
}

/// The 2-addit `a^f` of the Clifford system.
pub fn clifford_two_addit(sps: &SuperProductSystem, f: &Symbol) -> Result<TwoAddit> {
    if *sps.grading() != SectorMask::Even {
        return Err(Error::Argument("Clifford 2-addits live in the EVEN grading".into()));
    }
    if sps.space().max_particles() < 2 {
        return Err(Error::Argument("the 2-particle sector is truncated away".into()));
    }
    validate_symbol(sps, f)?;
    let n = sps.n_cells();
    let d = sps.d();
    let amp = -std::f64::consts::SQRT_2 * sps.grid().dt();
    let mut values = BTreeMap::new();
    for (s, t) in SuperProductSystem::pairs(n) {
        let mut v = sps.vacuum().scale(c64(0.0));
        for cx in s..s + t {
            for cy in 0..s {
                let fr = &f[cx - cy];
                for mx in 0..d {
                    for my in 0..d {
                        let z = fr[(mx, my)] * amp;
                        if z != c64(0.0) {
                            v.set(ModeSet::from_modes([cy * d + my, cx * d + mx]), z)?;
                        }
                    }
                }
            }
        }
        values.insert((s, t), v);
    }
    Ok(TwoAddit {
        horizon: n,
        values,
        symbol: Some(f.clone()),
    })
}

/// The family `(1_{[0,s)} ⊗ ξ) ∧ (1_{[s,s+t)} ⊗ η)`, which equals `a^f` for
/// the constant symbol `f ≡ −(1/√2) η ⊗ ξ`.
pub fn wedge_two_addit(sps: &SuperProductSystem, xi: &[Complex64], eta: &[Complex64]) -> Result<TwoAddit> {
    let d = sps.d();
    if xi.len() != d || eta.len() != d {
        return Err(Error::Dimension("ξ and η must lie in k".into()));
    }
    let n = sps.n_cells();
    let scale = sps.grid().dt().sqrt();
    let block = |v: &[Complex64], a: usize, b: usize| -> Result<FockVector> {
        let mut f = vec![c64(0.0); n * d];
        for c in a..b {
            for m in 0..d {
                f[c * d + m] = v[m] * scale;
            }
        }
        FockVector::one_particle(sps.space(), &f)
    };
    let mut values = BTreeMap::new();
    for (s, t) in SuperProductSystem::pairs(n) {
        values.insert((s, t), block(xi, 0, s)?.wedge(&block(eta, s, s + t)?)?);
    }
    let mut m = CMatrix::zeros(d, d);
    for mx in 0..d {
        for my in 0..d {
            m[(mx, my)] = -eta[mx] * xi[my] * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    Ok(TwoAddit {
        horizon: n,
        values,
        symbol: Some(constant_symbol(&m, n)),
    })
}

/// Square function of every value of a Clifford 2-addit.
pub fn square_values(a: &TwoAddit) -> BTreeMap<(usize, usize), CMatrix> {
    a.values.iter().map(|(k, v)| (*k, square_from_two_particle(v))).collect()
}

/// Number of cell pairs `cx ∈ [s, s+t)`, `cy ∈ [0, s)` with `cx − cy = r`.
pub fn pair_count(s: usize, t: usize, r: usize) -> usize {
    (s..s + t).filter(|&cx| cx >= r && cx - r < s).count()
}

/// Symbol pairing `Σ_{m} conj(f[m]) g[m]` at one difference.
pub fn symbol_pairing(f: &CMatrix, g: &CMatrix) -> Complex64 {
    f.iter().zip(g.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Fock inner product of two 2-addits and, when both carry symbols, the
/// quadrature `2 dt² Σ ⟨f(p − q), g(p − q)⟩` over the support rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerComparison {
    pub fock: Complex64,
    pub quadrature: Option<Complex64>,
}

/// Agreement tolerance between the Fock value and the quadrature.
pub const QUADRATURE_TOL: f64 = 1e-10;

pub fn two_addit_inner(sps: &SuperProductSystem, a: &TwoAddit, b: &TwoAddit, s: usize, t: usize) -> Result<InnerComparison> {
    let fock = a.value(s, t)?.inner(b.value(s, t)?)?;
    let quadrature = match (&a.symbol, &b.symbol) {
        (Some(f), Some(g)) => {
            let dt = sps.grid().dt();
            let mut q = c64(0.0);
            for cx in s..s + t {
                for cy in 0..s {
                    q += symbol_pairing(&f[cx - cy], &g[cx - cy]);
                }
            }
            let q = q * (2.0 * dt * dt);
            if (q - fock).norm() > QUADRATURE_TOL * fock.norm().max(1.0) {
                return Err(Error::Validation(format!(
                    "Fock inner product {fock} and quadrature {q} disagree at ({s}, {t})"
                )));
            }
            Some(q)
        }
        _ => None,
    };
    Ok(InnerComparison { fock, quadrature })
}

/// `max_{s,t} |⟨a^f_{s,t}, a^g_{s,t}⟩|`.
pub fn orthogonality_forward(sps: &SuperProductSystem, a: &TwoAddit, b: &TwoAddit) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (s, t) in SuperProductSystem::pairs(a.horizon.min(b.horizon)) {
        worst = worst.max(two_addit_inner(sps, a, b, s, t)?.fock.norm());
    }
    Ok(worst)
}

/// Diagonal pairings `⟨f(r), g(r)⟩` recovered from the inner products of two
/// 2-addits alone.
#[derive(Debug, Clone)]
pub struct PairingRecovery {
    /// Index `r`; entry 0 is unused.
    pub pairings: Vec<Complex64>,
    pub rank: usize,
    pub unknowns: usize,
    pub residual: f64,
}

/// Solves `⟨a_{s,t}, b_{s,t}⟩ = 2 dt² Σ_r N_{s,t}(r) p(r)` for `p`, where
/// `N_{s,t}(r)` counts the cell pairs of the rectangle at difference `r`.
pub fn recover_pairings(sps: &SuperProductSystem, a: &TwoAddit, b: &TwoAddit) -> Result<PairingRecovery> {
    let n = a.horizon.min(b.horizon);
    if n < 2 {
        return Err(Error::Argument("pairing recovery needs at least two cells".into()));
    }
    let pairs = SuperProductSystem::pairs(n);
    let dt = sps.grid().dt();
    let unknowns = n - 1;
    let mut m = CMatrix::zeros(pairs.len(), unknowns);
    let mut rhs = DVector::zeros(pairs.len());
    for (row, &(s, t)) in pairs.iter().enumerate() {
        for r in 1..n {
            m[(row, r - 1)] = c64(2.0 * dt * dt * pair_count(s, t, r) as f64);
        }
        rhs[row] = a.value(s, t)?.inner(b.value(s, t)?)?;
    }
    let rk = rank(&m);
    let svd = m.clone().svd(true, true);
    let p = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::Structural(format!("least-squares solve failed: {e}")))?;
    let residual = (&m * &p - &rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut pairings = vec![c64(0.0)];
    pairings.extend(p.iter().copied());
    Ok(PairingRecovery {
        pairings,
        rank: rk,
        unknowns,
        residual,
    })
}
