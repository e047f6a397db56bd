//! Adapted cochains over positive grid tuples and their coboundaries.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fock::FockVector;
use crate::linalg::c64;
use crate::rng::SeededRng;
use crate::sps::{Section, SuperProductSystem};

/// Tolerance for the vacuum-orthogonality part of adaptedness.
pub const ADAPTED_TOL: f64 = 1e-12;

/// Sign attached to the contracted terms of the coboundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignConvention {
    /// `(−1)^i` on the `i`-th contraction (group-cohomology differential).
    Alternating,
    /// `(−1)^n` on every contraction, as printed in the source formula.
    Literal,
}

/// An `n`-cochain on tuples of positive cell counts with sum `≤ horizon`.
///
/// A degree-0 cochain is a single vector (stored under the empty tuple)
/// that must fit `horizon` further cells of shift.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    degree: usize,
    horizon: usize,
    values: BTreeMap<Vec<usize>, FockVector>,
}

impl Cochain {
    /// Positive `degree`-tuples with sum `≤ horizon`.
    pub fn tuples(degree: usize, horizon: usize) -> Vec<Vec<usize>> {
        fn rec(left: usize, budget: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left == 0 {
                out.push(cur.clone());
                return;
            }
            for s in 1..=budget.saturating_sub(left - 1) {
                cur.push(s);
                rec(left - 1, budget - s, cur, out);
                cur.pop();
            }
        }
        let mut out = Vec::new();
        rec(degree, horizon, &mut Vec::new(), &mut out);
        out
    }

    pub fn from_fn(degree: usize, horizon: usize, mut f: impl FnMut(&[usize]) -> Result<FockVector>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for s in Self::tuples(degree, horizon) {
            let v = f(&s)?;
            values.insert(s, v);
        }
        Ok(Self { degree, horizon, values })
    }

    /// Random adapted cochain with at most `max_n` particles per value.
    pub fn random_adapted(
        sps: &SuperProductSystem,
        rng: &mut SeededRng,
        degree: usize,
        horizon: usize,
        max_n: usize,
        max_terms: usize,
    ) -> Result<Self> {
        if horizon > sps.n_cells() {
            return Err(Error::Overflow("cochain horizon beyond the grid".into()));
        }
        let om = sps.vacuum();
        Self::from_fn(degree, horizon, |s| {
            let support = if degree == 0 { sps.n_cells() - horizon } else { s.iter().sum() };
            let v = sps.random_fiber_vector(rng, support, max_n, max_terms);
            v.sub(&om.scale(om.inner(&v)?))
        })
    }

    /// The 1-cochain `s ↦ b_s` of a section.
    pub fn from_section(sps: &SuperProductSystem, b: &dyn Section, horizon: usize) -> Result<Self> {
        Self::from_fn(1, horizon, |s| b.value(sps, s[0]))
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn values(&self) -> &BTreeMap<Vec<usize>, FockVector> {
        &self.values
    }

    pub fn value(&self, s: &[usize]) -> Result<&FockVector> {
        self.values
            .get(s)
            .ok_or_else(|| Error::Argument(format!("cochain has no value at {s:?}")))
    }

    /// Adaptedness: `c(s) ∈ fiber(Σ s) ⊖ ℂΩ` (degree 0: orthogonal to `Ω`
    /// and supported where `horizon` cells of shift still fit).
    pub fn check_adapted(&self, sps: &SuperProductSystem) -> Result<()> {
        let om = sps.vacuum();
        for (s, v) in &self.values {
            let support = if self.degree == 0 {
                sps.n_cells() - self.horizon
            } else {
                s.iter().sum()
            };
            sps.check_fiber(v, support)?;
            let overlap = om.inner(v)?.norm();
            if overlap > ADAPTED_TOL {
                return Err(Error::NotInFiber {
                    t_cells: support,
                    reason: format!("vacuum component {overlap:.3e} at {s:?}"),
                });
            }
        }
        Ok(())
    }

    pub fn max_norm(&self) -> f64 {
        self.values.values().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `d^n c(s_1,…,s_{n+1}) = κ_{s_1} c(s_2,…) + Σ_i ε_i c(…, s_i + s_{i+1}, …)
    /// + (−1)^{n+1} c(s_1,…,s_n)`.
    pub fn coboundary(&self, sps: &SuperProductSystem, convention: SignConvention) -> Result<Cochain> {
        let n = self.degree;
        if self.horizon > sps.n_cells() {
            return Err(Error::Overflow("cochain horizon beyond the grid".into()));
        }
        let sign = |k: usize| if k.is_multiple_of(2) { c64(1.0) } else { c64(-1.0) };
        Cochain::from_fn(n + 1, self.horizon, |s| {
            let tail = if n == 0 { vec![] } else { s[1..].to_vec() };
            let mut acc = sps.kappa(s[0], self.value(&tail)?)?;
            for i in 1..=n {
                let mut merged = s[..i - 1].to_vec();
                merged.push(s[i - 1] + s[i]);
                merged.extend_from_slice(&s[i + 1..]);
                let eps = match convention {
                    SignConvention::Alternating => sign(i),
                    SignConvention::Literal => sign(n),
                };
                acc = acc.add(&self.value(&merged)?.scale(eps))?;
            }
            let head = if n == 0 { vec![] } else { s[..n].to_vec() };
            acc.add(&self.value(&head)?.scale(sign(n + 1)))
        })
    }
}

/// `max_s ‖P_s c(s)‖` with `P_s` the projection onto
/// `U_{s_1,…,s_n}(H_{s_1} ⊗ … ⊗ H_{s_n})`; zero certifies a defective cochain.
pub fn defectiveness(sps: &SuperProductSystem, c: &Cochain) -> Result<f64> {
    if c.degree() == 0 {
        return Err(Error::Argument("defectiveness is defined for degree ≥ 1".into()));
    }
    Ok(c.values()
        .iter()
        .map(|(s, v)| sps.image_projection(v, s).norm())
        .fold(0.0, f64::max))
}
