//! Grid-level exclusion of defective 2-cocycles in higher particle sectors
//! of the Clifford system.
//!
//! The unknowns are the amplitudes of `a(s,t)` on the `2N`-particle basis
//! tuples of `fiber(s+t)`; defectiveness removes the tuples with an even
//! count in `[0, s)`, which span the image of `U_{s,t}`. Each grid triple and
//! each tuple `K` contributes the coefficient of `K` in
//! `a(r,s) + a(r+s,t) − κ_r a(s,t) − a(r,s+t)`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockSpace;
use crate::linalg::{c64, SparseSystem};
use crate::modes::ModeSet;
use crate::sps::SuperProductSystem;

/// Default memory budget for the Gram matrix.
pub const DEFAULT_BUDGET_BYTES: usize = 1 << 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionResult {
    pub n_cells: usize,
    pub d: usize,
    pub half_sector: usize,
    pub defective: bool,
    pub n_unknowns: usize,
    pub n_equations: usize,
    pub rank: usize,
    pub nullity: usize,
    /// The grid is too coarse for the count to reflect the continuum.
    pub informational: bool,
}

impl ExclusionResult {
    /// Free symbol values `d²(n_cells − 1)`: the predicted defective count
    /// in the 2-particle sector.
    pub fn symbol_space_dim(n_cells: usize, d: usize) -> usize {
        d * d * n_cells.saturating_sub(1)
    }
}

/// The 2-addit equations on the `2N`-particle sector with their column
/// layout `((s, t), tuple) ↦ unknown`.
pub fn cocycle_system(
    n_cells: usize,
    d: usize,
    half_sector: usize,
    budget_bytes: usize,
    defective: bool,
) -> Result<(SparseSystem, HashMap<((usize, usize), ModeSet), usize>)> {
    let k = 2 * half_sector;
    let modes = n_cells * d;
    if modes > 64 {
        return Err(Error::Resource(format!("{modes} modes exceed the exclusion solver's range")));
    }

    // column layout: per pair, the admissible tuples of fiber(s + t)
    let pairs = SuperProductSystem::pairs(n_cells);
    let mut columns: HashMap<((usize, usize), ModeSet), usize> = HashMap::new();
    for &(s, t) in &pairs {
        let all: Vec<usize> = (0..(s + t) * d).collect();
        for key in FockSpace::sector_basis_in(&all, k) {
            if defective && key.count_in(0, s * d) % 2 == 0 {
                continue;
            }
            let n = columns.len();
            columns.insert(((s, t), key), n);
        }
    }
    let n_unknowns = columns.len();
    let gram_bytes = n_unknowns.saturating_mul(n_unknowns).saturating_mul(16);
    if gram_bytes > budget_bytes {
        return Err(Error::Resource(format!(
            "Gram matrix of {n_unknowns} unknowns needs {gram_bytes} bytes, budget is {budget_bytes} \
             (n_cells = {n_cells}, d = {d}, sector = {k})"
        )));
    }

    let triples = SuperProductSystem::triples(n_cells);
    let rows: Vec<Vec<(usize, num_complex::Complex64)>> = triples
        .par_iter()
        .flat_map_iter(|&(r, s, t)| {
            let mut by_key: BTreeMap<ModeSet, Vec<(usize, num_complex::Complex64)>> = BTreeMap::new();
            let mut add = |pair: (usize, usize), key: ModeSet, target: ModeSet, sign: f64| {
                if let Some(&c) = columns.get(&(pair, key)) {
                    by_key.entry(target).or_default().push((c, c64(sign)));
                }
            };
            let limit = modes;
            for (&(pair, key), _) in columns
                .iter()
                .filter(|((p, _), _)| *p == (r, s) || *p == (r + s, t) || *p == (s, t) || *p == (r, s + t))
            {
                if pair == (r, s) {
                    add(pair, key, key, 1.0);
                }
                if pair == (r + s, t) {
                    add(pair, key, key, 1.0);
                }
                if pair == (r, s + t) {
                    add(pair, key, key, -1.0);
                }
                if pair == (s, t) {
                    let shifted = key.shifted(r * d, limit).expect("r + s + t fits the grid");
                    add(pair, key, shifted, -1.0);
                }
            }
            by_key.into_values().collect::<Vec<_>>()
        })
        .collect();

    let mut system = SparseSystem::new(n_unknowns);
    for row in rows {
        system.push_row(row);
    }
    Ok((system, columns))
}

/// Null-space dimension of the 2-addit equations on the `2N`-particle sector.
///
/// `defective = false` drops the defectiveness constraint and counts every
/// grid 2-cocycle of the sector.
pub fn higher_sector_exclusion(
    n_cells: usize,
    d: usize,
    half_sector: usize,
    budget_bytes: usize,
    defective: bool,
) -> Result<ExclusionResult> {
    if half_sector == 0 {
        return Err(Error::Argument("N must be at least 1".into()));
    }
    if n_cells < 2 {
        return Err(Error::Argument("exclusion needs at least two cells".into()));
    }
    let (system, _) = cocycle_system(n_cells, d, half_sector, budget_bytes, defective)?;
    let n_unknowns = system.n_unknowns();
    let ns = system.null_space();
    Ok(ExclusionResult {
        n_cells,
        d,
        half_sector,
        defective,
        n_unknowns,
        n_equations: system.n_rows(),
        rank: ns.rank,
        nullity: ns.dim(),
        informational: n_cells < 4 * half_sector,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_particle_control_counts_symbols() {
        for (n, d) in [(3, 1), (4, 1), (5, 1), (3, 2), (4, 2)] {
            let res = higher_sector_exclusion(n, d, 1, DEFAULT_BUDGET_BYTES, true).unwrap();
            assert_eq!(res.nullity, ExclusionResult::symbol_space_dim(n, d), "n = {n}, d = {d}");
        }
    }

    #[test]
    fn four_particle_sector_excluded() {
        let res = higher_sector_exclusion(6, 1, 2, DEFAULT_BUDGET_BYTES, true).unwrap();
        assert!(res.informational);
        let res = higher_sector_exclusion(8, 1, 2, DEFAULT_BUDGET_BYTES, true).unwrap();
        assert!(!res.informational);
        assert_eq!(res.nullity, 0);
    }

    #[test]
    fn budget_overrun_is_a_resource_error() {
        let err = higher_sector_exclusion(8, 1, 2, 1024, true).unwrap_err();
        assert!(matches!(err, Error::Resource(ref m) if m.contains("unknowns")));
    }

    #[test]
    fn coarse_grid_is_informational() {
        let res = higher_sector_exclusion(2, 1, 2, DEFAULT_BUDGET_BYTES, true).unwrap();
        assert!(res.informational);
        assert_eq!(res.n_unknowns, 0);
    }
}
