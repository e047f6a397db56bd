//! CAR algebras, quasi-free states and the CAR flow on finite grids.

pub mod flow;
pub mod gns;
pub mod intertwiner;
pub mod jordan_wigner;
pub mod quasifree;
pub mod tomita;
