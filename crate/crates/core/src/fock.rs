//! Truncated antisymmetric Fock spaces over a finite one-particle space.
//!
//! Basis vectors `e_{i1} ∧ … ∧ e_{in}` with `i1 < … < in` are orthonormal and
//! keyed by [`ModeSet`]. With this convention `a*(f) e_I = Σ_i f_i e_i ∧ e_I`
//! and `a(f) = a*(f)*`, so
//!
//! ```text
//! a_i e_J = (-1)^{#{j ∈ J : j < i}} e_{J \ i}   (i ∈ J)
//! ```
//!
//! which is the Jordan–Wigner sign convention used in [`crate::car`].
//!
//! Two-particle vectors also have a square-function picture: an antisymmetric
//! coefficient matrix `F[p][q]` in `L² ⊗ L²`. The conversion is
//! `w_{pq} = (F[p][q] − F[q][p]) / √2` for `p < q`, which is unitary.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, isometry_defect, CMatrix};
use crate::modes::{ModeSet, MAX_MODES};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Tolerance on `‖U*U − 1‖` accepted by [`FockVector::second_quantize`].
pub const ISOMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_modes: usize,
    max_particles: usize,
}

impl FockSpace {
    /// Untruncated space `Γ(C^n_modes)`.
    pub fn full(n_modes: usize) -> Result<Self> {
        Self::truncated(n_modes, n_modes)
    }

    pub fn truncated(n_modes: usize, max_particles: usize) -> Result<Self> {
        if n_modes == 0 || n_modes > MAX_MODES {
            return Err(Error::Argument(format!(
                "number of modes must be in 1..={MAX_MODES}, got {n_modes}"
            )));
        }
        Ok(Self {
            n_modes,
            max_particles: max_particles.min(n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn max_particles(&self) -> usize {
        self.max_particles
    }

    pub fn is_full(&self) -> bool {
        self.max_particles == self.n_modes
    }

    pub fn sector_dim(&self, n: usize) -> u128 {
        if n > self.max_particles {
            0
        } else {
            binomial(self.n_modes, n)
        }
    }

    pub fn dim(&self) -> u128 {
        (0..=self.max_particles).map(|n| binomial(self.n_modes, n)).sum()
    }

    /// All basis tuples of sector `n` drawn from `modes` (increasing).
    pub fn sector_basis_in(modes: &[usize], n: usize) -> Vec<ModeSet> {
        let mut out = Vec::new();
        let mut pick = Vec::with_capacity(n);
        fn rec(modes: &[usize], n: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<ModeSet>) {
            if pick.len() == n {
                out.push(ModeSet::from_modes(pick.iter().cloned()));
                return;
            }
            let need = n - pick.len();
            for k in start..=modes.len().saturating_sub(need) {
                pick.push(modes[k]);
                rec(modes, n, k + 1, pick, out);
                pick.pop();
            }
        }
        if n <= modes.len() {
            rec(modes, n, 0, &mut pick, &mut out);
        }
        out
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    space: FockSpace,
    amps: BTreeMap<ModeSet, Complex64>,
}

impl FockVector {
    pub fn zero(space: FockSpace) -> Self {
        Self {
            space,
            amps: BTreeMap::new(),
        }
    }

    /// The vacuum `Ω`.
    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis(space, ModeSet::EMPTY).expect("vacuum always fits")
    }

    pub fn basis(space: FockSpace, modes: ModeSet) -> Result<Self> {
        let mut v = Self::zero(space);
        v.set(modes, c64(1.0))?;
        Ok(v)
    }

    /// Embeds a one-particle vector, `f ↦ a*(f)Ω`.
    pub fn one_particle(space: FockSpace, f: &[Complex64]) -> Result<Self> {
        if f.len() != space.n_modes {
            return Err(Error::Dimension(format!(
                "one-particle vector has length {}, space has {} modes",
                f.len(),
                space.n_modes
            )));
        }
        if space.max_particles == 0 && f.iter().any(|z| *z != ZERO) {
            return Err(Error::Overflow("one-particle vector in a 0-particle truncation".into()));
        }
        let mut v = Self::zero(space);
        for (i, &z) in f.iter().enumerate() {
            if z != ZERO {
                v.amps.insert(ModeSet::from_modes([i]), z);
            }
        }
        Ok(v)
    }

    pub fn from_map(space: FockSpace, amps: BTreeMap<ModeSet, Complex64>) -> Result<Self> {
        let mut v = Self::zero(space);
        for (k, z) in amps {
            v.set(k, z)?;
        }
        Ok(v)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &BTreeMap<ModeSet, Complex64> {
        &self.amps
    }

    pub fn amplitude(&self, modes: &ModeSet) -> Complex64 {
        self.amps.get(modes).cloned().unwrap_or(ZERO)
    }

    pub fn set(&mut self, modes: ModeSet, z: Complex64) -> Result<()> {
        if let Some(m) = modes.last() {
            if m >= self.space.n_modes {
                return Err(Error::Dimension(format!("mode {m} outside the space")));
            }
        }
        if modes.len() > self.space.max_particles {
            return Err(Error::Overflow(format!(
                "{} particles exceed the truncation {}",
                modes.len(),
                self.space.max_particles
            )));
        }
        if z == ZERO {
            self.amps.remove(&modes);
        } else {
            self.amps.insert(modes, z);
        }
        Ok(())
    }

    fn accumulate(&mut self, modes: ModeSet, z: Complex64) {
        let e = self.amps.entry(modes).or_insert(ZERO);
        *e += z;
        if *e == ZERO {
            self.amps.remove(&modes);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.amps.len()
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::Dimension("Fock vectors live in different spaces".into()));
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_space(other)?;
        let (small, large, flip) = if self.amps.len() <= other.amps.len() {
            (self, other, false)
        } else {
            (other, self, true)
        };
        let mut acc = ZERO;
        for (k, a) in &small.amps {
            if let Some(b) = large.amps.get(k) {
                acc += if flip { b.conj() * a } else { a.conj() * b };
            }
        }
        Ok(acc)
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let mut out = self.clone();
        for (k, z) in &other.amps {
            out.accumulate(*k, *z);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(c64(-1.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == ZERO {
            return Self::zero(self.space);
        }
        Self {
            space: self.space,
            amps: self.amps.iter().map(|(k, z)| (*k, z * c)).collect(),
        }
    }

    /// Drops amplitudes with modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            space: self.space,
            amps: self.amps.iter().filter(|(_, z)| z.norm() > tol).map(|(k, z)| (*k, *z)).collect(),
        }
    }

    pub fn max_particle_number(&self) -> Option<usize> {
        self.amps.keys().map(|k| k.len()).max()
    }

    /// The same amplitudes viewed in another space with at least as many modes.
    pub fn embed(&self, space: FockSpace) -> Result<Self> {
        Self::from_map(space, self.amps.clone())
    }

    /// Antisymmetric product `self ∧ other`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let mut out = Self::zero(self.space);
        for (i, a) in &self.amps {
            for (j, b) in &other.amps {
                if let Some(sign) = i.wedge_sign(j) {
                    let modes = i.union(j);
                    if modes.len() > self.space.max_particles {
                        return Err(Error::Overflow(format!(
                            "wedge of {} and {} particles exceeds the truncation {}",
                            i.len(),
                            j.len(),
                            self.space.max_particles
                        )));
                    }
                    out.accumulate(modes, a * b * sign);
                }
            }
        }
        Ok(out)
    }

    /// `a*(f) v = f ∧ v`.
    pub fn create(&self, f: &[Complex64]) -> Result<Self> {
        let fv = Self::one_particle(self.space, f)?;
        fv.wedge(self)
    }

    /// `a(f) v`, antilinear in `f`.
    pub fn annihilate(&self, f: &[Complex64]) -> Result<Self> {
        if f.len() != self.space.n_modes {
            return Err(Error::Dimension("annihilation vector has wrong length".into()));
        }
        let mut out = Self::zero(self.space);
        for (k, z) in &self.amps {
            for i in k.iter() {
                if f[i] == ZERO {
                    continue;
                }
                let sign = if k.count_below(i) % 2 == 0 { 1.0 } else { -1.0 };
                let mut rest = *k;
                rest.remove(i);
                out.accumulate(rest, f[i].conj() * z * sign);
            }
        }
        Ok(out)
    }

    /// `Γ(U) v` for an isometry `U` on the one-particle space.
    pub fn second_quantize(&self, u: &CMatrix) -> Result<Self> {
        let n = self.space.n_modes;
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Dimension(format!("one-particle operator must be {n}x{n}")));
        }
        let defect = isometry_defect(u);
        if defect > ISOMETRY_TOL {
            return Err(Error::NotIsometric { defect });
        }
        let columns: Vec<Vec<Complex64>> = (0..n).map(|j| u.column(j).iter().cloned().collect()).collect();
        let mut out = Self::zero(self.space);
        for (k, z) in &self.amps {
            let modes: Vec<usize> = k.iter().collect();
            let mut acc = Self::vacuum(self.space);
            for &i in modes.iter().rev() {
                acc = acc.create(&columns[i])?;
            }
            for (kk, zz) in acc.amps {
                out.accumulate(kk, zz * z);
            }
        }
        Ok(out)
    }

    /// `Γ(−1) v`.
    pub fn parity(&self) -> Self {
        Self {
            space: self.space,
            amps: self
                .amps
                .iter()
                .map(|(k, z)| (*k, if k.len() % 2 == 0 { *z } else { -z }))
                .collect(),
        }
    }

    pub fn sector_project(&self, n: usize) -> Self {
        self.filter(|k| k.len() == n)
    }

    pub fn filter(&self, keep: impl Fn(&ModeSet) -> bool) -> Self {
        Self {
            space: self.space,
            amps: self.amps.iter().filter(|(k, _)| keep(k)).map(|(k, z)| (*k, *z)).collect(),
        }
    }

    /// Moves every mode up by `by` (the second quantization of a shift).
    pub fn shift_modes(&self, by: usize) -> Result<Self> {
        let mut out = Self::zero(self.space);
        for (k, z) in &self.amps {
            let s = k
                .shifted(by, self.space.n_modes)
                .ok_or_else(|| Error::Overflow(format!("shift by {by} modes leaves the {}-mode space", self.space.n_modes)))?;
            out.amps.insert(s, *z);
        }
        Ok(out)
    }

    /// Dense coefficient vector indexed by the bit mask of each basis tuple.
    pub fn to_dense(&self) -> Result<Vec<Complex64>> {
        let n = self.space.n_modes;
        if n > 20 {
            return Err(Error::Resource(format!("dense Fock vector over {n} modes")));
        }
        let mut v = vec![ZERO; 1 << n];
        for (k, z) in &self.amps {
            v[k.low_bits() as usize] = *z;
        }
        Ok(v)
    }

    pub fn from_dense(space: FockSpace, v: &[Complex64]) -> Result<Self> {
        if v.len() != 1 << space.n_modes {
            return Err(Error::Dimension("dense vector has wrong length".into()));
        }
        let mut out = Self::zero(space);
        for (i, z) in v.iter().enumerate() {
            if *z != ZERO {
                out.set(ModeSet::from_bits(i as u64), *z)?;
            }
        }
        Ok(out)
    }
}

/// Dense matrix of `a*(f)` on the untruncated space, indexed by bit masks.
pub fn creation_matrix(n_modes: usize, f: &[Complex64]) -> Result<CMatrix> {
    if n_modes > 12 {
        return Err(Error::Resource(format!("dense creation operator over {n_modes} modes")));
    }
    if f.len() != n_modes {
        return Err(Error::Dimension("creation vector has wrong length".into()));
    }
    let dim = 1usize << n_modes;
    let mut m = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let k = ModeSet::from_bits(col as u64);
        for (i, &fi) in f.iter().enumerate() {
            if fi == ZERO || k.contains(i) {
                continue;
            }
            let sign = if k.count_below(i).is_multiple_of(2) { 1.0 } else { -1.0 };
            let mut kk = k;
            kk.insert(i);
            m[(kk.low_bits() as usize, col)] += fi * sign;
        }
    }
    Ok(m)
}

/// Two-particle vector from an antisymmetric square coefficient matrix.
pub fn two_particle_from_square(space: FockSpace, square: &CMatrix) -> Result<FockVector> {
    let n = space.n_modes;
    if square.nrows() != n || square.ncols() != n {
        return Err(Error::Dimension(format!("square function must be {n}x{n}")));
    }
    let mut v = FockVector::zero(space);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for p in 0..n {
        for q in p + 1..n {
            let w = (square[(p, q)] - square[(q, p)]) * s;
            if w != ZERO {
                v.set(ModeSet::from_modes([p, q]), w)?;
            }
        }
    }
    Ok(v)
}

/// Antisymmetric square coefficient matrix of the two-particle part of `v`.
pub fn square_from_two_particle(v: &FockVector) -> CMatrix {
    let n = v.space.n_modes;
    let mut sq = DMatrix::zeros(n, n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for (k, z) in &v.amps {
        if k.len() != 2 {
            continue;
        }
        let mut it = k.iter();
        let (p, q) = (it.next().unwrap(), it.next().unwrap());
        sq[(p, q)] = z * s;
        sq[(q, p)] = -z * s;
    }
    sq
}
