//! Seeded random samplers shared by the checks and the tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::CMatrix;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the square `[-1, 1] × [-1, 1] i`.
pub fn complex(rng: &mut SeededRng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn complex_vec(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| complex(rng)).collect()
}

pub fn complex_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

/// Unitary from the QR factor of a random complex matrix.
pub fn unitary(rng: &mut SeededRng, n: usize) -> CMatrix {
    complex_matrix(rng, n, n).qr().q()
}

/// Unit vector with uniformly sampled complex entries.
pub fn unit_vec(rng: &mut SeededRng, n: usize) -> Vec<Complex64> {
    let v = complex_vec(rng, n);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}
