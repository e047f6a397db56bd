//! Square-picture 2-cocycles and recovery of their symbols.
//!
//! A square family stores, for every grid pair `(s, t)`, a matrix
//! `g[(cx·d + mx), (cy·d + my)]` on the `n_cells · d` one-particle modes:
//! the two-particle function in `L²([0, s+t], k)^{⊗2}` with the cell factor
//! `dt` included. The defective cocycles are those of the form
//!
//! ```text
//! g_{s,t}(x, y) = 1_{[s,s+t)×[0,s)}(x, y) f1(x − y) + 1_{[0,s)×[s,s+t)}(x, y) f2(y − x)
//! ```

use std::collections::BTreeMap;

use crate::cohomology::two_addit::{Symbol, TwoAddit};
use crate::error::{Error, Result};
use crate::fock::{square_from_two_particle, FockVector};
use crate::linalg::{c64, frobenius, CMatrix};
use crate::modes::ModeSet;
use crate::sps::{DefectReport, SuperProductSystem, TensorSquare, TensorVector};

/// Default tolerance for the recovery checks.
pub const RECOVERY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SquareFamily {
    n_cells: usize,
    d: usize,
    dt: f64,
    values: BTreeMap<(usize, usize), CMatrix>,
}

/// Which off-diagonal rectangle of `[0, s+t)²` a cell pair lies in.
fn region(s: usize, t: usize, cx: usize, cy: usize) -> Option<u8> {
    let early = |c: usize| c < s;
    let late = |c: usize| (s..s + t).contains(&c);
    if late(cx) && early(cy) {
        Some(1)
    } else if early(cx) && late(cy) {
        Some(2)
    } else {
        None
    }
}

impl SquareFamily {
    pub fn new(n_cells: usize, d: usize, dt: f64, values: BTreeMap<(usize, usize), CMatrix>) -> Result<Self> {
        let n = n_cells * d;
        for (s, t) in SuperProductSystem::pairs(n_cells) {
            let m = values
                .get(&(s, t))
                .ok_or_else(|| Error::Argument(format!("missing value at ({s}, {t})")))?;
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Dimension(format!("square values must be {n}x{n}")));
            }
        }
        Ok(Self { n_cells, d, dt, values })
    }

    /// Square picture of a Clifford 2-addit.
    pub fn from_clifford(sps: &SuperProductSystem, a: &TwoAddit) -> Result<Self> {
        let values = a.values().iter().map(|(k, v)| (*k, square_from_two_particle(v))).collect();
        Self::new(a.horizon(), sps.d(), sps.grid().dt(), values)
    }

    /// The general defective form with independent symbols `f1`, `f2`.
    pub fn from_symbols(n_cells: usize, d: usize, dt: f64, f1: &Symbol, f2: &Symbol) -> Result<Self> {
        if f1.len() < n_cells || f2.len() < n_cells {
            return Err(Error::Argument("symbols do not cover the grid".into()));
        }
        let mut values = BTreeMap::new();
        for (s, t) in SuperProductSystem::pairs(n_cells) {
            let mut g = CMatrix::zeros(n_cells * d, n_cells * d);
            for cx in 0..s + t {
                for cy in 0..s + t {
                    let f = match region(s, t, cx, cy) {
                        Some(1) => &f1[cx - cy],
                        Some(_) => &f2[cy - cx],
                        None => continue,
                    };
                    for mx in 0..d {
                        for my in 0..d {
                            g[(cx * d + mx, cy * d + my)] = f[(mx, my)] * dt;
                        }
                    }
                }
            }
            values.insert((s, t), g);
        }
        Ok(Self { n_cells, d, dt, values })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn values(&self) -> &BTreeMap<(usize, usize), CMatrix> {
        &self.values
    }

    pub fn value(&self, s: usize, t: usize) -> Result<&CMatrix> {
        self.values
            .get(&(s, t))
            .ok_or_else(|| Error::Argument(format!("square family has no value at ({s}, {t})")))
    }

    pub fn value_mut(&mut self, s: usize, t: usize) -> Result<&mut CMatrix> {
        self.values
            .get_mut(&(s, t))
            .ok_or_else(|| Error::Argument(format!("square family has no value at ({s}, {t})")))
    }

    /// `S_r`: both coordinates shifted by `r` cells.
    fn shift(&self, m: &CMatrix, r: usize) -> CMatrix {
        let n = m.nrows();
        let by = r * self.d;
        let mut out = CMatrix::zeros(n, n);
        for i in 0..n - by.min(n) {
            for j in 0..n - by.min(n) {
                out[(i + by, j + by)] = m[(i, j)];
            }
        }
        out
    }

    /// Worst Frobenius defect of `a(r,s) + a(r+s,t) − S_r a(s,t) − a(r,s+t)`.
    pub fn cocycle_defect(&self) -> Result<DefectReport> {
        let mut report = DefectReport {
            max_defect: 0.0,
            worst: None,
            evaluated: 0,
        };
        for (r, s, t) in SuperProductSystem::triples(self.n_cells) {
            let diff = self.value(r, s)? + self.value(r + s, t)? - self.shift(self.value(s, t)?, r) - self.value(r, s + t)?;
            let v = frobenius(&diff);
            report.evaluated += 1;
            if v > report.max_defect {
                report.max_defect = v;
                report.worst = Some(vec![r, s, t]);
            }
        }
        Ok(report)
    }

    /// Mixed one-and-one-particle vectors of the tensor-square system.
    pub fn to_tensor(&self) -> BTreeMap<(usize, usize), TensorVector> {
        self.values
            .iter()
            .map(|(k, g)| {
                let mut v = TensorVector::default();
                for ((i, j), z) in g.iter().enumerate().map(|(idx, z)| ((idx % g.nrows(), idx / g.nrows()), z)) {
                    if *z != c64(0.0) {
                        v.insert((ModeSet::from_modes([i]), ModeSet::from_modes([j])), *z);
                    }
                }
                (*k, v)
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SymbolRecovery {
    pub f1: Symbol,
    pub f2: Symbol,
    /// Max deviation of any entry from its diagonal average.
    pub invariance_defect: f64,
    /// Max Frobenius distance between the input and the rebuilt family.
    pub residual: f64,
}

/// Checks the cocycle identity, support in the off-diagonal rectangles and
/// translation invariance along diagonals, then extracts `f1`, `f2`.
pub fn symbol_recovery(family: &SquareFamily, tol: f64) -> Result<SymbolRecovery> {
    let report = family.cocycle_defect()?;
    if report.max_defect > tol {
        return Err(Error::Structural(format!(
            "cocycle identity fails at (r, s, t) = {:?} by {:.3e}",
            report.worst.unwrap_or_default(),
            report.max_defect
        )));
    }
    let n = family.n_cells;
    let d = family.d;
    for ((s, t), g) in &family.values {
        for cx in 0..n {
            for cy in 0..n {
                if region(*s, *t, cx, cy).is_some() {
                    continue;
                }
                for mx in 0..d {
                    for my in 0..d {
                        let z = g[(cx * d + mx, cy * d + my)].norm();
                        if z > tol {
                            return Err(Error::Structural(format!(
                                "value at (s, t) = ({s}, {t}) has weight {z:.3e} at cells ({cx}, {cy}) outside the off-diagonal rectangles"
                            )));
                        }
                    }
                }
            }
        }
    }
    let mut sums = [vec![CMatrix::zeros(d, d); n.max(1)], vec![CMatrix::zeros(d, d); n.max(1)]];
    let mut counts = [vec![0usize; n.max(1)], vec![0usize; n.max(1)]];
    let block = |g: &CMatrix, cx: usize, cy: usize| g.view((cx * d, cy * d), (d, d)).into_owned();
    for ((s, t), g) in &family.values {
        for cx in 0..s + t {
            for cy in 0..s + t {
                match region(*s, *t, cx, cy) {
                    Some(1) => {
                        sums[0][cx - cy] += block(g, cx, cy);
                        counts[0][cx - cy] += 1;
                    }
                    Some(_) => {
                        sums[1][cy - cx] += block(g, cx, cy);
                        counts[1][cy - cx] += 1;
                    }
                    None => {}
                }
            }
        }
    }
    let mean = |k: usize| -> Symbol {
        (0..n.max(1))
            .map(|r| {
                if counts[k][r] == 0 {
                    CMatrix::zeros(d, d)
                } else {
                    &sums[k][r] / c64(counts[k][r] as f64 * family.dt)
                }
            })
            .collect()
    };
    let (f1, f2) = (mean(0), mean(1));

    let mut invariance_defect: f64 = 0.0;
    let mut witness = None;
    for ((s, t), g) in &family.values {
        for cx in 0..s + t {
            for cy in 0..s + t {
                let expected = match region(*s, *t, cx, cy) {
                    Some(1) => &f1[cx - cy],
                    Some(_) => &f2[cy - cx],
                    None => continue,
                };
                let dev = frobenius(&(block(g, cx, cy) - expected * c64(family.dt)));
                if dev > invariance_defect {
                    invariance_defect = dev;
                    witness = Some((*s, *t, cx, cy));
                }
            }
        }
    }
    if invariance_defect > tol {
        let (s, t, cx, cy) = witness.expect("positive defect has a witness");
        return Err(Error::Structural(format!(
            "not translation invariant: value at (s, t) = ({s}, {t}), cells ({cx}, {cy}) deviates by {invariance_defect:.3e}"
        )));
    }
    let rebuilt = SquareFamily::from_symbols(n, d, family.dt, &f1, &f2)?;
    let mut residual: f64 = 0.0;
    for (k, g) in &family.values {
        residual = residual.max(frobenius(&(g - &rebuilt.values[k])));
    }
    Ok(SymbolRecovery {
        f1,
        f2,
        invariance_defect,
        residual,
    })
}

/// The mixed part `a⁰` of a 2-addit of the tensor-square system, built from
/// independent symbols.
pub fn tensor_square_two_addit(ts: &TensorSquare, f1: &Symbol, f2: &Symbol) -> Result<BTreeMap<(usize, usize), TensorVector>> {
    let base = ts.base();
    let fam = SquareFamily::from_symbols(base.n_cells(), base.d(), base.grid().dt(), f1, f2)?;
    Ok(fam.to_tensor())
}

/// 2-addit identity defect in the tensor-square system, with the shift
/// realized as `U²_{r,·}(Ω ⊗ ·)`.
pub fn tensor_square_identity_defect(ts: &TensorSquare, a: &BTreeMap<(usize, usize), TensorVector>) -> Result<f64> {
    let get = |s: usize, t: usize| {
        a.get(&(s, t))
            .ok_or_else(|| Error::Argument(format!("missing value at ({s}, {t})")))
    };
    let om = ts.vacuum();
    let mut worst: f64 = 0.0;
    for (r, s, t) in SuperProductSystem::triples(ts.base().n_cells()) {
        let shifted = ts.u2_st(r, s + t, &om, get(s, t)?)?;
        let lhs = get(r, s)?.add(get(r + s, t)?);
        let rhs = shifted.add(get(r, s + t)?);
        worst = worst.max(lhs.add(&rhs.scale(c64(-1.0))).norm());
    }
    Ok(worst)
}

/// Transports a tensor-square family to the Clifford system over `k ⊕ k`.
pub fn transport_to_doubled(ts: &TensorSquare, a: &BTreeMap<(usize, usize), TensorVector>) -> Result<TwoAddit> {
    let values: BTreeMap<(usize, usize), FockVector> = a.iter().map(|(k, v)| Ok((*k, ts.iso(v)?))).collect::<Result<_>>()?;
    TwoAddit::from_values(ts.base().n_cells(), values)
}
