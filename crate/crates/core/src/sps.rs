//! Super-product systems on the grid.
//!
//! All fibers live inside one ambient Fock space over `n_cells × d` modes:
//! `fiber(t)` is the span of basis tuples supported in the first `t` cells
//! whose particle number lies in the grading `G`. The isometries are
//!
//! ```text
//! U_{s,t}(x ⊗ y) = Γ(T_s) y ∧ x,   U_{s,t}(e_I ⊗ e_J) = (-1)^{|I||J|} e_{I ∪ (J + s·d)}
//! ```
//!
//! so inclusions between fibers are literal and `κ_s` is a mode shift.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{FockSpace, FockVector};
use crate::grid::{GridInterval, MultiplicitySpace};
use crate::linalg::{c64, spectral_norm, CMatrix};
use crate::modes::ModeSet;
use crate::rng::{self, SeededRng};

/// Default tolerance of the defining identities checked in this module.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Particle-number grading `G ⊆ ℕ₀`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SectorMask {
    All,
    Even,
    Set(BTreeSet<usize>),
}

impl SectorMask {
    pub fn from_sectors(sectors: impl IntoIterator<Item = usize>) -> Self {
        SectorMask::Set(sectors.into_iter().collect())
    }

    pub fn contains(&self, n: usize) -> bool {
        match self {
            SectorMask::All => true,
            SectorMask::Even => n.is_multiple_of(2),
            SectorMask::Set(s) => s.contains(&n),
        }
    }

    /// Additive closure of `G` up to `limit`; the error carries a witness.
    pub fn check_closed(&self, limit: usize) -> Result<()> {
        for a in 0..=limit {
            if !self.contains(a) {
                continue;
            }
            for b in a..=limit - a {
                if self.contains(b) && !self.contains(a + b) {
                    return Err(Error::NotAdditivelyClosed(a, b, a + b));
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            SectorMask::All => "all".into(),
            SectorMask::Even => "even".into(),
            SectorMask::Set(s) => {
                let v: Vec<String> = s.iter().map(|n| n.to_string()).collect();
                format!("{{{}}}", v.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperProductSystem {
    grid: GridInterval,
    mult: MultiplicitySpace,
    grading: SectorMask,
    space: FockSpace,
}

impl SuperProductSystem {
    /// CAR product system: every sector, truncated at `max_particles`.
    pub fn new(grid: GridInterval, mult: MultiplicitySpace, max_particles: Option<usize>) -> Result<Self> {
        Self::with_grading(grid, mult, max_particles, SectorMask::All)
    }

    /// Clifford super-product system (even sectors).
    pub fn clifford(grid: GridInterval, mult: MultiplicitySpace, max_particles: Option<usize>) -> Result<Self> {
        Self::with_grading(grid, mult, max_particles, SectorMask::Even)
    }

    pub fn with_grading(grid: GridInterval, mult: MultiplicitySpace, max_particles: Option<usize>, grading: SectorMask) -> Result<Self> {
        let n_modes = grid.n_cells() * mult.dim();
        let space = match max_particles {
            Some(m) => FockSpace::truncated(n_modes, m)?,
            None => FockSpace::full(n_modes)?,
        };
        grading.check_closed(space.max_particles())?;
        Ok(Self {
            grid,
            mult,
            grading,
            space,
        })
    }

    /// The subsystem `H_G` of a system graded by every sector.
    pub fn restrict_to_grading(&self, grading: SectorMask) -> Result<Self> {
        if self.grading != SectorMask::All {
            return Err(Error::Argument(format!(
                "restriction starts from the ALL grading, not {}",
                self.grading.label()
            )));
        }
        grading.check_closed(self.space.max_particles())?;
        Ok(Self { grading, ..self.clone() })
    }

    pub fn grid(&self) -> GridInterval {
        self.grid
    }

    pub fn mult(&self) -> MultiplicitySpace {
        self.mult
    }

    pub fn grading(&self) -> &SectorMask {
        &self.grading
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    pub fn d(&self) -> usize {
        self.mult.dim()
    }

    pub fn vacuum(&self) -> FockVector {
        FockVector::vacuum(self.space)
    }

    pub fn is_product_system(&self) -> bool {
        self.grading == SectorMask::All
    }

    pub fn in_fiber(&self, v: &FockVector, t_cells: usize) -> bool {
        self.check_fiber(v, t_cells).is_ok()
    }

    pub fn check_fiber(&self, v: &FockVector, t_cells: usize) -> Result<()> {
        if v.space() != self.space {
            return Err(Error::Dimension("vector is not in the ambient Fock space".into()));
        }
        let limit = t_cells * self.d();
        for k in v.amplitudes().keys() {
            if let Some(m) = k.last() {
                if m >= limit {
                    return Err(Error::NotInFiber {
                        t_cells,
                        reason: format!("mode {m} lies beyond cell {t_cells}"),
                    });
                }
            }
            if !self.grading.contains(k.len()) {
                return Err(Error::NotInFiber {
                    t_cells,
                    reason: format!("{}-particle component outside grading {}", k.len(), self.grading.label()),
                });
            }
        }
        Ok(())
    }

    /// Basis tuples of `fiber(t)` with at most `max_n` particles.
    pub fn fiber_basis(&self, t_cells: usize, max_n: usize) -> Vec<ModeSet> {
        let modes: Vec<usize> = (0..t_cells * self.d()).collect();
        let top = max_n.min(self.space.max_particles());
        (0..=top)
            .filter(|n| self.grading.contains(*n))
            .flat_map(|n| FockSpace::sector_basis_in(&modes, n))
            .collect()
    }

    /// `κ_s`: the embedding `x ↦ U_{s,t}(Ω_s ⊗ x)`, a shift by `s` cells.
    pub fn kappa(&self, s_cells: usize, v: &FockVector) -> Result<FockVector> {
        v.shift_modes(s_cells * self.d())
    }

    pub fn u_st(&self, s: usize, t: usize, x: &FockVector, y: &FockVector) -> Result<FockVector> {
        if s + t > self.n_cells() {
            return Err(Error::Overflow(format!(
                "s + t = {} cells exceeds the horizon {}",
                s + t,
                self.n_cells()
            )));
        }
        self.check_fiber(x, s)?;
        self.check_fiber(y, t)?;
        let by = s * self.d();
        let limit = self.space.n_modes();
        let mut out = BTreeMap::new();
        for (i, a) in x.amplitudes() {
            for (j, b) in y.amplitudes() {
                let js = j.shifted(by, limit).expect("fiber check bounds the shift");
                let sign = if i.len() * j.len() % 2 == 0 { 1.0 } else { -1.0 };
                let key = i.union(&js);
                let e = out.entry(key).or_insert(Complex64::new(0.0, 0.0));
                *e += a * b * sign;
            }
        }
        FockVector::from_map(self.space, out)
    }

    /// `U_{s_1,…,s_n}(x_1 ⊗ … ⊗ x_n)`, assembled left to right.
    pub fn u_multi(&self, parts: &[(usize, &FockVector)]) -> Result<FockVector> {
        let mut acc = self.vacuum();
        let mut len = 0;
        for (s, x) in parts {
            acc = self.u_st(len, *s, &acc, x)?;
            len += s;
        }
        Ok(acc)
    }

    pub fn associativity_defect(&self, s1: usize, s2: usize, s3: usize, x: &FockVector, y: &FockVector, z: &FockVector) -> Result<f64> {
        let left = self.u_st(s1, s2 + s3, x, &self.u_st(s2, s3, y, z)?)?;
        let right = self.u_st(s1 + s2, s3, &self.u_st(s1, s2, x, y)?, z)?;
        Ok(left.sub(&right)?.norm())
    }

    /// `|⟨U(x⊗y), U(x'⊗y')⟩ − ⟨x,x'⟩⟨y,y'⟩|`.
    pub fn isometry_defect(&self, s: usize, t: usize, x: (&FockVector, &FockVector), y: (&FockVector, &FockVector)) -> Result<f64> {
        let lhs = self.u_st(s, t, x.0, y.0)?.inner(&self.u_st(s, t, x.1, y.1)?)?;
        let rhs = x.0.inner(x.1)? * y.0.inner(y.1)?;
        Ok((lhs - rhs).norm())
    }

    /// Orthogonal projection onto `U_{s_1,…,s_n}(H_{s_1} ⊗ … ⊗ H_{s_n})`.
    ///
    /// The image is spanned by the basis tuples whose particle count in every
    /// block of cells lies in the grading.
    pub fn image_projection(&self, v: &FockVector, blocks: &[usize]) -> FockVector {
        let d = self.d();
        let total: usize = blocks.iter().sum();
        v.filter(|k| {
            if k.last().is_some_and(|m| m >= total * d) {
                return false;
            }
            let mut lo = 0;
            blocks.iter().all(|&b| {
                let n = k.count_in(lo * d, (lo + b) * d);
                lo += b;
                self.grading.contains(n)
            })
        })
    }

    /// Random vector of `fiber(t)` with at most `max_n` particles; dense when
    /// the fiber has at most `max_terms` basis tuples, otherwise sampled.
    pub fn random_fiber_vector(&self, rng: &mut SeededRng, t_cells: usize, max_n: usize, max_terms: usize) -> FockVector {
        let basis = self.fiber_basis(t_cells, max_n);
        let mut v = self.vacuum().scale(c64(0.0));
        if basis.len() <= max_terms {
            for k in basis {
                v.set(k, rng::complex(rng)).expect("basis tuple fits");
            }
        } else {
            for _ in 0..max_terms {
                let k = basis[rng.gen_range(0..basis.len())];
                v.set(k, rng::complex(rng)).expect("basis tuple fits");
            }
        }
        v
    }

    /// All pairs `(s, t)` of positive cell counts with `s + t ≤ horizon`.
    pub fn pairs(horizon: usize) -> Vec<(usize, usize)> {
        (1..horizon).flat_map(|s| (1..=horizon - s).map(move |t| (s, t))).collect()
    }

    /// All triples of positive cell counts with sum `≤ horizon`.
    pub fn triples(horizon: usize) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for r in 1..=horizon {
            for s in 1..=horizon.saturating_sub(r) {
                for t in 1..=horizon.saturating_sub(r + s) {
                    out.push((r, s, t));
                }
            }
        }
        out
    }
}

/// A section `t ↦ x_t ∈ fiber(t)` evaluated at grid times.
pub trait Section: Sync {
    fn value(&self, sps: &SuperProductSystem, t_cells: usize) -> Result<FockVector>;
}

/// Values stored per grid time.
#[derive(Debug, Clone, Default)]
pub struct Tabulated(pub BTreeMap<usize, FockVector>);

impl Section for Tabulated {
    fn value(&self, sps: &SuperProductSystem, t_cells: usize) -> Result<FockVector> {
        if t_cells == 0 {
            return Ok(self.0.get(&0).cloned().unwrap_or_else(|| sps.vacuum()));
        }
        self.0
            .get(&t_cells)
            .cloned()
            .ok_or_else(|| Error::Argument(format!("section has no value at {t_cells} cells")))
    }
}

/// The vacuum unit `{Ω_t}`.
pub struct VacuumSection;

impl Section for VacuumSection {
    fn value(&self, sps: &SuperProductSystem, _t_cells: usize) -> Result<FockVector> {
        Ok(sps.vacuum())
    }
}

/// The one-particle addit `b_t = ξ ⊗ 1_{[0,t)}`.
#[derive(Debug, Clone)]
pub struct OneParticleAddit {
    pub xi: Vec<Complex64>,
}

impl Section for OneParticleAddit {
    fn value(&self, sps: &SuperProductSystem, t_cells: usize) -> Result<FockVector> {
        let d = sps.d();
        if self.xi.len() != d {
            return Err(Error::Dimension(format!("ξ has length {}, k has dimension {d}", self.xi.len())));
        }
        if t_cells > sps.n_cells() {
            return Err(Error::Overflow(format!("{t_cells} cells exceed the horizon")));
        }
        let scale = sps.grid().dt().sqrt();
        let mut f = vec![Complex64::new(0.0, 0.0); sps.space().n_modes()];
        for c in 0..t_cells {
            for m in 0..d {
                f[c * d + m] = self.xi[m] * scale;
            }
        }
        let v = FockVector::one_particle(sps.space(), &f)?;
        sps.check_fiber(&v, t_cells)?;
        Ok(v)
    }
}

/// Exponential unit of an addit at full cell refinement.
pub struct ExpUnit<'a> {
    pub addit: &'a dyn Section,
    pub max_terms: usize,
}

impl Section for ExpUnit<'_> {
    fn value(&self, sps: &SuperProductSystem, t_cells: usize) -> Result<FockVector> {
        if t_cells == 0 {
            return Ok(sps.vacuum());
        }
        exp_addit(sps, self.addit, t_cells, t_cells)?.materialize(sps, self.max_terms)
    }
}

/// Worst defect of a defining identity over a scan of grid times.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectReport {
    pub max_defect: f64,
    pub worst: Option<Vec<usize>>,
    pub evaluated: usize,
}

impl DefectReport {
    fn from_results(items: Vec<(Vec<usize>, f64)>) -> Self {
        let evaluated = items.len();
        let mut best: Option<(Vec<usize>, f64)> = None;
        for (k, v) in items {
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((k, v));
            }
        }
        match best {
            Some((k, v)) => DefectReport {
                max_defect: v,
                worst: Some(k),
                evaluated,
            },
            None => DefectReport {
                max_defect: 0.0,
                worst: None,
                evaluated,
            },
        }
    }
}

/// `max ‖u_{s+t} − U_{s,t}(u_s ⊗ u_t)‖` over grid pairs.
pub fn check_unit(sps: &SuperProductSystem, u: &dyn Section) -> Result<DefectReport> {
    let values = tabulate(sps, u)?;
    let items = SuperProductSystem::pairs(sps.n_cells())
        .into_par_iter()
        .map(|(s, t)| {
            let prod = sps.u_st(s, t, &values[s], &values[t])?;
            Ok((vec![s, t], values[s + t].sub(&prod)?.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DefectReport::from_results(items))
}

/// `max ‖U_{s,t}(b_s ⊗ Ω_t) + U_{s,t}(Ω_s ⊗ b_t) − b_{s+t}‖` over grid pairs.
pub fn check_addit(sps: &SuperProductSystem, b: &dyn Section) -> Result<DefectReport> {
    let values = tabulate(sps, b)?;
    let om = sps.vacuum();
    let items = SuperProductSystem::pairs(sps.n_cells())
        .into_par_iter()
        .map(|(s, t)| {
            let lhs = sps.u_st(s, t, &values[s], &om)?.add(&sps.u_st(s, t, &om, &values[t])?)?;
            Ok((vec![s, t], lhs.sub(&values[s + t])?.norm()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DefectReport::from_results(items))
}

/// Whether `⟨Ω_t, b_t⟩ = 0` at every grid time.
pub fn is_centered(sps: &SuperProductSystem, b: &dyn Section, tol: f64) -> Result<bool> {
    let om = sps.vacuum();
    for t in 1..=sps.n_cells() {
        if om.inner(&b.value(sps, t)?)?.norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

fn tabulate(sps: &SuperProductSystem, x: &dyn Section) -> Result<Vec<FockVector>> {
    (0..=sps.n_cells())
        .map(|t| {
            let v = x.value(sps, t)?;
            sps.check_fiber(&v, t)?;
            Ok(v)
        })
        .collect()
}

/// The refinement-`n` approximant `U(x ⊗ … ⊗ x)`, `x = Ω_δ + b_δ`, kept in
/// factored form.
///
/// Inner products of two such products factor as `⟨x, y⟩^n` because `U` is
/// isometric, so large refinements never need the assembled vector.
#[derive(Debug, Clone)]
pub struct PartitionProduct {
    pub delta_cells: usize,
    pub pieces: usize,
    pub factor: FockVector,
}

impl PartitionProduct {
    pub fn inner(&self, other: &PartitionProduct) -> Result<Complex64> {
        if self.delta_cells != other.delta_cells || self.pieces != other.pieces {
            return Err(Error::Argument("partition products over different partitions".into()));
        }
        Ok(self.factor.inner(&other.factor)?.powu(self.pieces as u32))
    }

    /// Inner product with the vacuum of the fiber.
    pub fn vacuum_overlap(&self) -> Complex64 {
        self.factor.amplitude(&ModeSet::EMPTY).powu(self.pieces as u32)
    }

    /// The assembled vector; fails once it would exceed `max_terms` amplitudes.
    pub fn materialize(&self, sps: &SuperProductSystem, max_terms: usize) -> Result<FockVector> {
        let mut acc = self.factor.clone();
        for k in 1..self.pieces {
            if acc.nnz().saturating_mul(self.factor.nnz()) > max_terms {
                return Err(Error::Resource(format!(
                    "assembling {} pieces of {} cells exceeds {max_terms} amplitudes",
                    self.pieces, self.delta_cells
                )));
            }
            acc = sps.u_st(k * self.delta_cells, self.delta_cells, &acc, &self.factor)?;
        }
        Ok(acc)
    }
}

/// `Π_{k=1..n} (Ω_{t/n} + b_{t/n})`, the refinement-`n` approximant to
/// `Exp_Ω(b)_t`.
pub fn exp_addit(sps: &SuperProductSystem, b: &dyn Section, t_cells: usize, n: usize) -> Result<PartitionProduct> {
    if !sps.is_product_system() {
        return Err(Error::Argument("Exp is defined on the product system (ALL grading)".into()));
    }
    if n == 0 || t_cells == 0 || !t_cells.is_multiple_of(n) {
        return Err(Error::Argument(format!("refinement {n} does not divide {t_cells} cells")));
    }
    let delta = t_cells / n;
    let bd = b.value(sps, delta)?;
    sps.check_fiber(&bd, delta)?;
    Ok(PartitionProduct {
        delta_cells: delta,
        pieces: n,
        factor: sps.vacuum().add(&bd)?,
    })
}

/// `Σ_k U(Ω_{(k−1)δ} ⊗ (u_δ − Ω_δ) ⊗ Ω_{(n−k)δ})`, the refinement-`n`
/// approximant to `Log_Ω(u)_t`.
///
/// The exponential normalization is checked at `δ`; for a unit it then holds
/// at every multiple of `δ`.
pub fn log_unit(sps: &SuperProductSystem, u: &dyn Section, t_cells: usize, n: usize) -> Result<FockVector> {
    if n == 0 || t_cells == 0 || !t_cells.is_multiple_of(n) {
        return Err(Error::Argument(format!("refinement {n} does not divide {t_cells} cells")));
    }
    let delta = t_cells / n;
    let ud = u.value(sps, delta)?;
    sps.check_fiber(&ud, delta)?;
    let overlap = sps.vacuum().inner(&ud)?;
    if (overlap - c64(1.0)).norm() > IDENTITY_TOL {
        return Err(Error::Normalization {
            t_cells: delta,
            value: format!("{overlap}"),
        });
    }
    let w = ud.sub(&sps.vacuum())?;
    let mut acc = sps.vacuum().scale(c64(0.0));
    for k in 0..n {
        acc = acc.add(&sps.u_st(k * delta, delta, &sps.vacuum(), &w)?)?;
    }
    Ok(acc)
}

/// The fiber-wise unitary of the type I classification built from an
/// orthonormal family of centered addits.
///
/// On the CAR system a centered one-particle addit is fixed by its one-cell
/// increment; with `W` the one-particle operator sending `1_cell/√dt ⊗ e_i`
/// to the shifted increment of the `i`-th addit, the map sending addit
/// wedges to canonical wedges is `Γ(W*)`.
#[derive(Debug, Clone)]
pub struct TypeOneIso {
    w_adjoint: CMatrix,
}

impl TypeOneIso {
    pub fn one_particle(&self) -> &CMatrix {
        &self.w_adjoint
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        v.second_quantize(&self.w_adjoint)
    }

    /// `‖V_{s+t} U(x ⊗ y) − U(V_s x ⊗ V_t y)‖`.
    pub fn intertwining_defect(&self, sps: &SuperProductSystem, s: usize, t: usize, x: &FockVector, y: &FockVector) -> Result<f64> {
        let lhs = self.apply(&sps.u_st(s, t, x, y)?)?;
        let rhs = sps.u_st(s, t, &self.apply(x)?, &self.apply(y)?)?;
        Ok(lhs.sub(&rhs)?.norm())
    }
}

pub fn type_one_isomorphism(sps: &SuperProductSystem, addits: &[&dyn Section]) -> Result<TypeOneIso> {
    if !sps.is_product_system() {
        return Err(Error::Argument("the type I construction needs the ALL grading".into()));
    }
    let d = sps.d();
    if addits.len() != d {
        return Err(Error::Validation(format!(
            "{} addits cannot form a basis of the {d}-dimensional centered addits",
            addits.len()
        )));
    }
    let n = sps.n_cells();
    let mut increments = Vec::with_capacity(d);
    for (i, b) in addits.iter().enumerate() {
        let report = check_addit(sps, *b)?;
        if report.max_defect > IDENTITY_TOL {
            return Err(Error::Validation(format!(
                "addit {i} has identity defect {:.3e}",
                report.max_defect
            )));
        }
        if !is_centered(sps, *b, IDENTITY_TOL)? {
            return Err(Error::Validation(format!("addit {i} is not centered")));
        }
        let inc = b.value(sps, 1)?;
        if inc.amplitudes().keys().any(|k| k.len() != 1) {
            return Err(Error::Validation(format!("addit {i} is not a one-particle addit")));
        }
        increments.push(inc);
    }
    // Gram matrix of the addits at unit time, ⟨b^i_T, b^j_T⟩ / T.
    let horizon = sps.grid().time(n);
    let finals: Vec<FockVector> = addits.iter().map(|b| b.value(sps, n)).collect::<Result<_>>()?;
    let mut gram = CMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            gram[(i, j)] = finals[i].inner(&finals[j])? / horizon;
        }
    }
    let defect = spectral_norm(&(gram - CMatrix::identity(d, d)));
    if defect > IDENTITY_TOL {
        return Err(Error::Validation(format!("addit family has Gram defect {defect:.3e}")));
    }
    let scale = sps.grid().dt().sqrt();
    let modes = n * d;
    let mut w = CMatrix::zeros(modes, modes);
    for c in 0..n {
        for (i, inc) in increments.iter().enumerate() {
            for (k, z) in inc.amplitudes() {
                let m = k.iter().next().expect("one-particle tuple");
                w[(c * d + m, c * d + i)] = z / scale;
            }
        }
    }
    Ok(TypeOneIso { w_adjoint: w.adjoint() })
}

/// Element of `H(t) ⊗ H(t)` in the product basis `e_I ⊗ e_J`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TensorVector {
    amps: BTreeMap<(ModeSet, ModeSet), Complex64>,
}

impl TensorVector {
    pub fn product(x: &FockVector, y: &FockVector) -> Self {
        let mut amps = BTreeMap::new();
        for (i, a) in x.amplitudes() {
            for (j, b) in y.amplitudes() {
                amps.insert((*i, *j), a * b);
            }
        }
        Self { amps }
    }

    pub fn amplitudes(&self) -> &BTreeMap<(ModeSet, ModeSet), Complex64> {
        &self.amps
    }

    pub fn insert(&mut self, key: (ModeSet, ModeSet), z: Complex64) {
        *self.amps.entry(key).or_insert(Complex64::new(0.0, 0.0)) += z;
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, z) in &other.amps {
            out.insert(*k, *z);
        }
        out
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|(k, z)| (*k, z * c)).collect(),
        }
    }

    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().filter_map(|(k, a)| other.amps.get(k).map(|b| a.conj() * b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn total_degrees(&self) -> BTreeSet<usize> {
        self.amps.keys().map(|(i, j)| i.len() + j.len()).collect()
    }
}

/// The tensor-square system `E^k(t) = H^k(t) ⊗ H^k(t)` with
/// `U²_{s,t} = (U_{s,t} ⊗ U_{s,t})` after the middle flip, restricted to
/// even total degree, and its identification with the Clifford system over
/// `k ⊕ k`.
///
/// Doubled modes are ordered `(cell, copy, m)`. The identification is
/// `V(e_A ⊗ e_B) = (-1)^{p(A,B)} e_{A ⊔ B}` where `p(A,B)` counts the pairs
/// `(a, b) ∈ A × B` lying in different cells; this is the unique sign of
/// that form making `V` intertwine `U²` with `U`.
#[derive(Debug, Clone)]
pub struct TensorSquare {
    base: SuperProductSystem,
    doubled: SuperProductSystem,
}

impl TensorSquare {
    pub fn new(grid: GridInterval, mult: MultiplicitySpace) -> Result<Self> {
        let base = SuperProductSystem::new(grid, mult, None)?;
        let doubled = SuperProductSystem::clifford(grid, MultiplicitySpace::new(2 * mult.dim())?, None)?;
        Ok(Self { base, doubled })
    }

    pub fn base(&self) -> &SuperProductSystem {
        &self.base
    }

    /// The Clifford system `H^{k⊕k}_{2ℕ₀}`.
    pub fn doubled(&self) -> &SuperProductSystem {
        &self.doubled
    }

    pub fn vacuum(&self) -> TensorVector {
        TensorVector::product(&self.base.vacuum(), &self.base.vacuum())
    }

    /// Support check in `E(t) = H(t) ⊗ H(t)`.
    pub fn check_fiber(&self, x: &TensorVector, t_cells: usize) -> Result<()> {
        let limit = t_cells * self.base.d();
        for (i, j) in x.amps.keys() {
            if i.last().is_some_and(|m| m >= limit) || j.last().is_some_and(|m| m >= limit) {
                return Err(Error::NotInFiber {
                    t_cells,
                    reason: "support beyond the fiber".into(),
                });
            }
        }
        Ok(())
    }

    /// Membership in the even-total-degree subsystem `E_{2ℕ₀}(t)`.
    pub fn check_even_fiber(&self, x: &TensorVector, t_cells: usize) -> Result<()> {
        self.check_fiber(x, t_cells)?;
        if x.total_degrees().iter().any(|n| n % 2 == 1) {
            return Err(Error::NotInFiber {
                t_cells,
                reason: "odd total degree".into(),
            });
        }
        Ok(())
    }

    pub fn u2_st(&self, s: usize, t: usize, x: &TensorVector, y: &TensorVector) -> Result<TensorVector> {
        if s + t > self.base.n_cells() {
            return Err(Error::Overflow("s + t exceeds the horizon".into()));
        }
        self.check_fiber(x, s)?;
        self.check_fiber(y, t)?;
        let by = s * self.base.d();
        let limit = self.base.space().n_modes();
        let mut out = TensorVector::default();
        for ((i1, i2), a) in &x.amps {
            for ((j1, j2), b) in &y.amps {
                let sign = if (i1.len() * j1.len() + i2.len() * j2.len()) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                };
                let k1 = i1.union(&j1.shifted(by, limit).expect("checked"));
                let k2 = i2.union(&j2.shifted(by, limit).expect("checked"));
                out.insert((k1, k2), a * b * sign);
            }
        }
        Ok(out)
    }

    /// The identification `V: E^k(t) → H^{k⊕k}(t)`.
    pub fn iso(&self, x: &TensorVector) -> Result<FockVector> {
        let d = self.base.d();
        let mut out = BTreeMap::new();
        for ((a, b), z) in &x.amps {
            let mut key = ModeSet::EMPTY;
            for m in a.iter() {
                key.insert((m / d) * 2 * d + m % d);
            }
            for m in b.iter() {
                key.insert((m / d) * 2 * d + d + m % d);
            }
            let mut crossings = 0;
            for p in a.iter() {
                for q in b.iter() {
                    if p / d != q / d {
                        crossings += 1;
                    }
                }
            }
            let sign = if crossings % 2 == 0 { 1.0 } else { -1.0 };
            *out.entry(key).or_insert(Complex64::new(0.0, 0.0)) += z * sign;
        }
        FockVector::from_map(self.doubled.space(), out)
    }

    /// `‖V_{s+t} U²_{s,t}(x ⊗ y) − U_{s,t}(V_s x ⊗ V_t y)‖`.
    pub fn intertwining_defect(&self, s: usize, t: usize, x: &TensorVector, y: &TensorVector) -> Result<f64> {
        let lhs = self.iso(&self.u2_st(s, t, x, y)?)?;
        let rhs = self.doubled.u_st(s, t, &self.iso(x)?, &self.iso(y)?)?;
        Ok(lhs.sub(&rhs)?.norm())
    }

    /// Random element of `E_{2ℕ₀}(t)` spanned by products of basis tuples
    /// with at most `max_n` particles per factor.
    pub fn random_fiber_vector(&self, rng: &mut SeededRng, t_cells: usize, max_n: usize) -> TensorVector {
        let basis = self.base.fiber_basis(t_cells, max_n);
        let mut out = TensorVector::default();
        for i in &basis {
            for j in &basis {
                if (i.len() + j.len()) % 2 == 0 {
                    out.insert((*i, *j), rng::complex(rng));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridFunction;

    fn system(n: usize, d: usize) -> SuperProductSystem {
        SuperProductSystem::new(GridInterval::unit(n).unwrap(), MultiplicitySpace::new(d).unwrap(), None).unwrap()
    }

    fn one_particle(sps: &SuperProductSystem, f: &GridFunction) -> FockVector {
        FockVector::one_particle(sps.space(), f.amplitudes()).unwrap()
    }

    #[test]
    fn grading_closure() {
        assert!(SectorMask::All.check_closed(8).is_ok());
        assert!(SectorMask::Even.check_closed(8).is_ok());
        assert_eq!(
            SectorMask::from_sectors([0, 2, 3]).check_closed(8),
            Err(Error::NotAdditivelyClosed(2, 2, 4))
        );
        let full = system(4, 1);
        assert!(matches!(
            full.restrict_to_grading(SectorMask::from_sectors([0, 1])),
            Err(Error::NotAdditivelyClosed(1, 1, 2))
        ));
    }

    #[test]
    fn u_st_examples() {
        let sps = system(6, 2);
        let grid = sps.grid();
        let mult = sps.mult();
        let mut rng = rng::seeded(1);
        let f = GridFunction::from_amplitudes(grid, mult, {
            let mut a = rng::complex_vec(&mut rng, 12);
            a[4..].iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            a
        })
        .unwrap();
        let fv = one_particle(&sps, &f);
        let om = sps.vacuum();
        assert_eq!(sps.u_st(2, 3, &fv, &om).unwrap(), fv);
        let g = f.clone();
        let shifted = one_particle(&sps, &g.shift(2).unwrap());
        assert!(sps.u_st(2, 3, &om, &fv).unwrap().sub(&shifted).unwrap().norm() < 1e-15);
        let prod = sps.u_st(2, 3, &fv, &fv).unwrap();
        assert!((prod.norm() - fv.norm() * fv.norm()).abs() < 1e-12);
        // the shifted factor is wedged in front
        let expect = shifted.wedge(&fv).unwrap();
        assert!(prod.sub(&expect).unwrap().norm() < 1e-12);
        assert!(matches!(sps.u_st(4, 3, &om, &om), Err(Error::Overflow(_))));
        assert!(matches!(sps.u_st(1, 3, &fv, &om), Err(Error::NotInFiber { .. })));
    }

    #[test]
    fn associativity_and_isometry_on_random_vectors() {
        let sps = system(5, 1);
        let mut rng = rng::seeded(2);
        for (s1, s2, s3) in SuperProductSystem::triples(5) {
            let x = sps.random_fiber_vector(&mut rng, s1, 3, 64);
            let y = sps.random_fiber_vector(&mut rng, s2, 3, 64);
            let z = sps.random_fiber_vector(&mut rng, s3, 3, 64);
            assert!(sps.associativity_defect(s1, s2, s3, &x, &y, &z).unwrap() < 1e-12);
        }
        let om = sps.vacuum();
        assert_eq!(sps.associativity_defect(1, 2, 2, &om, &om, &om).unwrap(), 0.0);
        for (s, t) in SuperProductSystem::pairs(5) {
            let x = sps.random_fiber_vector(&mut rng, s, 5, 64);
            let x2 = sps.random_fiber_vector(&mut rng, s, 5, 64);
            let y = sps.random_fiber_vector(&mut rng, t, 5, 64);
            let y2 = sps.random_fiber_vector(&mut rng, t, 5, 64);
            let scale = x.norm() * x2.norm() * y.norm() * y2.norm();
            assert!(sps.isometry_defect(s, t, (&x, &x2), (&y, &y2)).unwrap() < 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn graded_systems() {
        let full = system(4, 1);
        assert_eq!(full.restrict_to_grading(SectorMask::All).unwrap(), full);
        let cl = full.restrict_to_grading(SectorMask::Even).unwrap();
        let mut rng = rng::seeded(3);
        let x = cl.random_fiber_vector(&mut rng, 2, 2, 64);
        let y = cl.random_fiber_vector(&mut rng, 2, 2, 64);
        let z = cl.u_st(2, 2, &x, &y).unwrap();
        assert!(z.amplitudes().keys().all(|k| k.len() % 2 == 0));
        let trivial = full.restrict_to_grading(SectorMask::from_sectors([0])).unwrap();
        assert_eq!(trivial.fiber_basis(4, 4), vec![ModeSet::EMPTY]);
    }

    #[test]
    fn vacuum_unit_and_one_particle_addit() {
        let sps = system(6, 2);
        assert_eq!(check_unit(&sps, &VacuumSection).unwrap().max_defect, 0.0);
        let b = OneParticleAddit {
            xi: vec![Complex64::new(0.3, -0.1), c64(0.8)],
        };
        let report = check_addit(&sps, &b).unwrap();
        assert!(report.max_defect < 1e-14, "{report:?}");
        assert!(is_centered(&sps, &b, 1e-14).unwrap());
        let cl = sps.restrict_to_grading(SectorMask::Even).unwrap();
        assert!(matches!(check_addit(&cl, &b), Err(Error::NotInFiber { .. })));
        assert_eq!(check_unit(&cl, &VacuumSection).unwrap().max_defect, 0.0);
    }

    #[test]
    fn exp_inner_products() {
        let sps = SuperProductSystem::new(GridInterval::new(1.0, 16).unwrap(), MultiplicitySpace::new(1).unwrap(), None).unwrap();
        let zero = OneParticleAddit { xi: vec![c64(0.0)] };
        for n in [1, 2, 4, 16] {
            let e = exp_addit(&sps, &zero, 16, n).unwrap().materialize(&sps, 1 << 20).unwrap();
            assert_eq!(e, sps.vacuum());
        }
        let b = OneParticleAddit { xi: vec![c64(1.0)] };
        let mut last = f64::INFINITY;
        for n in [1, 2, 4, 8, 16] {
            let e = exp_addit(&sps, &b, 16, n).unwrap();
            let err = (e.inner(&e).unwrap() - c64(std::f64::consts::E)).norm();
            assert!(err < last);
            last = err;
        }
        assert!(matches!(exp_addit(&sps, &b, 16, 3), Err(Error::Argument(_))));
    }

    #[test]
    fn factored_and_assembled_products_agree() {
        let sps = SuperProductSystem::new(GridInterval::new(1.0, 8).unwrap(), MultiplicitySpace::new(2).unwrap(), None).unwrap();
        let b = OneParticleAddit {
            xi: vec![c64(0.6), Complex64::new(0.0, 0.5)],
        };
        let b2 = OneParticleAddit {
            xi: vec![Complex64::new(-0.2, 0.1), c64(0.4)],
        };
        for n in [1, 2, 4, 8] {
            let e = exp_addit(&sps, &b, 8, n).unwrap();
            let e2 = exp_addit(&sps, &b2, 8, n).unwrap();
            let dense = e
                .materialize(&sps, 1 << 20)
                .unwrap()
                .inner(&e2.materialize(&sps, 1 << 20).unwrap())
                .unwrap();
            assert!((dense - e.inner(&e2).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn exponential_unit_and_log() {
        let sps = SuperProductSystem::new(GridInterval::new(1.0, 6).unwrap(), MultiplicitySpace::new(1).unwrap(), None).unwrap();
        let b = OneParticleAddit { xi: vec![c64(0.7)] };
        let u = ExpUnit {
            addit: &b,
            max_terms: 1 << 16,
        };
        assert!(check_unit(&sps, &u).unwrap().max_defect < 1e-12);
        let log = log_unit(&sps, &u, 6, 6).unwrap();
        assert!(log.sub(&b.value(&sps, 6).unwrap()).unwrap().norm() < 1e-12);
        assert!(log_unit(&sps, &VacuumSection, 6, 3).unwrap().is_zero());
        let coarse = log_unit(&sps, &u, 6, 2).unwrap();
        assert!(coarse.sub(&b.value(&sps, 6).unwrap()).unwrap().norm() > 1e-3);
        let not_exp = Tabulated((1..=6).map(|t| (t, sps.vacuum().scale(c64(2.0)))).collect());
        assert!(matches!(log_unit(&sps, &not_exp, 6, 6), Err(Error::Normalization { .. })));
    }

    #[test]
    fn type_one_isomorphism_examples() {
        let sps = system(4, 2);
        let e0 = OneParticleAddit {
            xi: vec![c64(1.0), c64(0.0)],
        };
        let e1 = OneParticleAddit {
            xi: vec![c64(0.0), c64(1.0)],
        };
        let iso = type_one_isomorphism(&sps, &[&e0, &e1]).unwrap();
        assert!(crate::linalg::frobenius(&(iso.one_particle() - CMatrix::identity(8, 8))) < 1e-12);

        let mut rng = rng::seeded(4);
        let w = rng::unitary(&mut rng, 2);
        let r0 = OneParticleAddit {
            xi: vec![w[(0, 0)], w[(1, 0)]],
        };
        let r1 = OneParticleAddit {
            xi: vec![w[(0, 1)], w[(1, 1)]],
        };
        let iso = type_one_isomorphism(&sps, &[&r0, &r1]).unwrap();
        let gamma = crate::grid::local_operator(4, &w.adjoint());
        for _ in 0..5 {
            let v = sps.random_fiber_vector(&mut rng, 4, 2, 64);
            let diff = iso.apply(&v).unwrap().sub(&v.second_quantize(&gamma).unwrap()).unwrap();
            assert!(diff.norm() < 1e-10);
        }
        for (s, t) in SuperProductSystem::pairs(4) {
            let x = sps.random_fiber_vector(&mut rng, s, 2, 64).sector_project(2);
            let y = sps.random_fiber_vector(&mut rng, t, 2, 64).sector_project(2);
            assert!(iso.intertwining_defect(&sps, s, t, &x, &y).unwrap() < 1e-10);
        }
        let bad = OneParticleAddit {
            xi: vec![c64(0.5), c64(0.0)],
        };
        assert!(matches!(type_one_isomorphism(&sps, &[&bad, &e1]), Err(Error::Validation(_))));
    }

    #[test]
    fn tensor_square_identification() {
        let e = TensorSquare::new(GridInterval::unit(4).unwrap(), MultiplicitySpace::new(1).unwrap()).unwrap();
        assert_eq!(e.iso(&e.vacuum()).unwrap(), e.doubled().vacuum());
        let base = e.base();
        let mut rng = rng::seeded(5);
        for (s, t) in SuperProductSystem::pairs(4) {
            let x = e.random_fiber_vector(&mut rng, s, 2);
            let y = e.random_fiber_vector(&mut rng, t, 2);
            assert!(e.intertwining_defect(s, t, &x, &y).unwrap() < 1e-12);
            assert!((e.iso(&x).unwrap().norm() - x.norm()).abs() < 1e-12);
        }
        // f in the first copy, g in the second
        let f = base.random_fiber_vector(&mut rng, 2, 1, 8).sector_project(1);
        let g = base.random_fiber_vector(&mut rng, 2, 1, 8).sector_project(1);
        let om = base.vacuum();
        let prod = e
            .u2_st(2, 2, &TensorVector::product(&f, &om), &TensorVector::product(&om, &g))
            .unwrap();
        let v = e.iso(&prod).unwrap();
        assert!(v.amplitudes().keys().all(|k| k.len() == 2 && k.count_in(0, 4) == 1));
        for k in v.amplitudes().keys() {
            let modes: Vec<usize> = k.iter().collect();
            assert_eq!(modes[0] % 2, 0);
            assert_eq!(modes[1] % 2, 1);
        }
    }
}
