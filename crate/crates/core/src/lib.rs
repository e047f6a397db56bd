//! Super-product systems, CAR algebras and 2-cocycle cohomology realized on
//! finite time grids and truncated antisymmetric Fock spaces.

pub mod car;
pub mod cohomology;
pub mod error;
pub mod fock;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod modes;
pub mod rng;
pub mod sps;

pub use error::{Error, Result};
