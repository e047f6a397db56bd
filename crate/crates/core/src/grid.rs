//! Uniform grids on `(0, t_max)`, one-particle spaces `L²((0,t_max), k)` and
//! the right shift semigroup.
//!
//! Functions are cell-constant. A [`GridFunction`] stores one coefficient per
//! `(cell, multiplicity)` pair in the orthonormal basis `1_cell / sqrt(dt) ⊗ e_m`,
//! so the discrete inner product equals the continuum `L²` pairing. A function
//! taking the value `v` on a cell therefore has amplitude `v * sqrt(dt)` there.
//!
//! Times are carried as integer cell counts; real times are converted with
//! [`GridInterval::cells`], which refuses anything that is not a multiple of `dt`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

const SNAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridInterval {
    t_max: f64,
    n_cells: usize,
}

impl GridInterval {
    pub fn new(t_max: f64, n_cells: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(Error::Argument(format!("t_max must be positive, got {t_max}")));
        }
        if n_cells == 0 {
            return Err(Error::Argument("n_cells must be positive".into()));
        }
        Ok(Self { t_max, n_cells })
    }

    /// Unit-width cells: `dt = 1`.
    pub fn unit(n_cells: usize) -> Result<Self> {
        Self::new(n_cells as f64, n_cells)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_cells as f64
    }

    /// Converts a real time to a cell count. Non-multiples of `dt` and times
    /// outside `[0, t_max]` are rejected.
    pub fn cells(&self, t: f64) -> Result<usize> {
        let q = t / self.dt();
        let r = q.round();
        if !t.is_finite() || (q - r).abs() > SNAP_TOL * q.abs().max(1.0) {
            return Err(Error::Argument(format!("time {t} is not a multiple of dt = {}", self.dt())));
        }
        if r < 0.0 || r as usize > self.n_cells {
            return Err(Error::Argument(format!("time {t} outside [0, {}]", self.t_max)));
        }
        Ok(r as usize)
    }

    pub fn time(&self, cells: usize) -> f64 {
        cells as f64 * self.dt()
    }
}

/// The multiplicity space `k = C^d` with componentwise conjugation as `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplicitySpace {
    dim_k: usize,
}

impl MultiplicitySpace {
    pub fn new(dim_k: usize) -> Result<Self> {
        if dim_k == 0 {
            return Err(Error::Argument("dim_k must be positive".into()));
        }
        Ok(Self { dim_k })
    }

    pub fn dim(&self) -> usize {
        self.dim_k
    }

    /// The conjugation `j`.
    pub fn conjugate(&self, v: &[Complex64]) -> Vec<Complex64> {
        v.iter().map(|z| z.conj()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: GridInterval,
    mult: MultiplicitySpace,
    amps: Vec<Complex64>,
}

impl GridFunction {
    pub fn zero(grid: GridInterval, mult: MultiplicitySpace) -> Self {
        Self {
            grid,
            mult,
            amps: vec![Complex64::new(0.0, 0.0); grid.n_cells() * mult.dim()],
        }
    }

    pub fn from_amplitudes(grid: GridInterval, mult: MultiplicitySpace, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.n_cells() * mult.dim() {
            return Err(Error::Dimension(format!(
                "expected {} amplitudes, got {}",
                grid.n_cells() * mult.dim(),
                amps.len()
            )));
        }
        Ok(Self { grid, mult, amps })
    }

    /// Builds a function from its cell values (not amplitudes).
    pub fn from_values(grid: GridInterval, mult: MultiplicitySpace, values: impl Fn(usize) -> Vec<Complex64>) -> Result<Self> {
        let scale = grid.dt().sqrt();
        let mut amps = Vec::with_capacity(grid.n_cells() * mult.dim());
        for c in 0..grid.n_cells() {
            let v = values(c);
            if v.len() != mult.dim() {
                return Err(Error::Dimension(format!(
                    "cell value has length {}, expected {}",
                    v.len(),
                    mult.dim()
                )));
            }
            amps.extend(v.into_iter().map(|z| z * scale));
        }
        Ok(Self { grid, mult, amps })
    }

    /// Normalized indicator `1_cell / sqrt(dt) ⊗ e_m`.
    pub fn cell_indicator(grid: GridInterval, mult: MultiplicitySpace, cell: usize, m: usize) -> Result<Self> {
        if cell >= grid.n_cells() || m >= mult.dim() {
            return Err(Error::Argument(format!("mode ({cell}, {m}) out of range")));
        }
        let mut f = Self::zero(grid, mult);
        f.amps[cell * mult.dim() + m] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    /// `ξ ⊗ 1_[a, b)` for cell indices `a <= b`.
    pub fn constant_on(grid: GridInterval, mult: MultiplicitySpace, xi: &[Complex64], a: usize, b: usize) -> Result<Self> {
        if xi.len() != mult.dim() {
            return Err(Error::Dimension("xi has wrong length".into()));
        }
        if a > b || b > grid.n_cells() {
            return Err(Error::Argument(format!("bad cell range [{a}, {b})")));
        }
        Self::from_values(grid, mult, |c| {
            if (a..b).contains(&c) {
                xi.to_vec()
            } else {
                vec![Complex64::new(0.0, 0.0); xi.len()]
            }
        })
    }

    pub fn grid(&self) -> GridInterval {
        self.grid
    }

    pub fn mult(&self) -> MultiplicitySpace {
        self.mult
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitude(&self, cell: usize, m: usize) -> Complex64 {
        self.amps[cell * self.mult.dim() + m]
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid || self.mult != other.mult {
            return Err(Error::Dimension(
                "grid functions live on different grids or multiplicity spaces".into(),
            ));
        }
        Ok(())
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_compatible(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Smallest cell count `c` such that the support lies in `[0, c)`.
    pub fn support_end(&self) -> usize {
        let d = self.mult.dim();
        (0..self.grid.n_cells())
            .rev()
            .find(|&c| self.amps[c * d..(c + 1) * d].iter().any(|z| *z != Complex64::new(0.0, 0.0)))
            .map_or(0, |c| c + 1)
    }

    /// `T_t f` with `t` given in cells.
    pub fn shift(&self, t_cells: usize) -> Result<Self> {
        ShiftOp::new(t_cells).apply(self)
    }

    /// `1_[a, b) f` with cell indices.
    pub fn restrict(&self, a: usize, b: usize) -> Result<Self> {
        if a >= b {
            return Err(Error::Argument(format!("restrict needs a < b, got [{a}, {b})")));
        }
        if b > self.grid.n_cells() {
            return Err(Error::Argument(format!("restrict end {b} beyond the horizon")));
        }
        let d = self.mult.dim();
        let mut out = self.clone();
        for (i, z) in out.amps.iter_mut().enumerate() {
            let c = i / d;
            if c < a || c >= b {
                *z = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let amps = self.amps.iter().zip(&other.amps).map(|(a, b)| a + b).collect();
        Ok(Self { amps, ..*self })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a * c).collect(),
            ..*self
        }
    }

    /// Applies `j` pointwise.
    pub fn conjugate(&self) -> Self {
        Self {
            amps: self.amps.iter().map(|a| a.conj()).collect(),
            ..*self
        }
    }

    /// Applies `1 ⊗ r` for a `d x d` matrix `r`.
    pub fn apply_local(&self, r: &DMatrix<Complex64>) -> Result<Self> {
        let d = self.mult.dim();
        if r.nrows() != d || r.ncols() != d {
            return Err(Error::Dimension("local operator must be d x d".into()));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for c in 0..self.grid.n_cells() {
            for i in 0..d {
                amps[c * d + i] = (0..d).map(|j| r[(i, j)] * self.amps[c * d + j]).sum();
            }
        }
        Ok(Self { amps, ..*self })
    }
}

/// The right shift `T_t` by a whole number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftOp {
    offset_cells: usize,
}

impl ShiftOp {
    pub fn new(offset_cells: usize) -> Self {
        Self { offset_cells }
    }

    pub fn offset(&self) -> usize {
        self.offset_cells
    }

    pub fn compose(&self, other: &ShiftOp) -> ShiftOp {
        ShiftOp::new(self.offset_cells + other.offset_cells)
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        let n = f.grid.n_cells();
        let end = f.support_end();
        if end + self.offset_cells > n {
            return Err(Error::Overflow(format!(
                "shift by {} cells moves support [0, {end}) past the horizon of {n} cells",
                self.offset_cells
            )));
        }
        let d = f.mult.dim();
        let mut amps = vec![Complex64::new(0.0, 0.0); f.amps.len()];
        let k = self.offset_cells * d;
        amps[k..end * d + k].copy_from_slice(&f.amps[..end * d]);
        Ok(GridFunction { amps, ..*f })
    }

    /// Matrix of the partial isometry on the `n_cells * d` dimensional space.
    pub fn matrix(&self, n_cells: usize, d: usize) -> DMatrix<Complex64> {
        let n = n_cells * d;
        let k = self.offset_cells * d;
        let mut t = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(k) {
            t[(i + k, i)] = Complex64::new(1.0, 0.0);
        }
        t
    }
}

/// `1 ⊗ r` on the grid one-particle space.
pub fn local_operator(n_cells: usize, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let d = r.nrows();
    let mut a = DMatrix::zeros(n_cells * d, n_cells * d);
    for c in 0..n_cells {
        a.view_mut((c * d, c * d), (d, d)).copy_from(r);
    }
    a
}

/// `‖T_t* A T_t − A‖` (spectral norm) on the block where `T_t` is isometric.
pub fn toeplitz_defect(a: &DMatrix<Complex64>, grid: GridInterval, mult: MultiplicitySpace, t_cells: usize) -> Result<f64> {
    let n = grid.n_cells() * mult.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::Dimension(format!(
            "operator is {}x{}, grid space has dimension {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    if t_cells > grid.n_cells() {
        return Err(Error::Argument("shift beyond horizon".into()));
    }
    let k = t_cells * mult.dim();
    let m = n - k;
    if m == 0 {
        return Ok(0.0);
    }
    let shifted = a.view((k, k), (m, m)).into_owned();
    let base = a.view((0, 0), (m, m)).into_owned();
    Ok(crate::linalg::spectral_norm(&(shifted - base)))
}
