//! Adapted cochains, 2-addits of the Clifford system and the symbol calculus.

pub mod automorphism;
pub mod cochain;
pub mod exclusion;
pub mod symbol;
pub mod two_addit;
pub mod two_index;
