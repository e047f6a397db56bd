//! Fixed-width bit sets of one-particle modes.
//!
//! Mode `cell * d + m` is the `(cell, m)` basis function, so the integer order
//! is the lexicographic `(cell, mult)` order.

use std::fmt;

const WORDS: usize = 8;

/// Largest number of one-particle modes a Fock space may have.
pub const MAX_MODES: usize = WORDS * 64;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ModeSet([u64; WORDS]);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet([0; WORDS]);

    pub fn from_modes(modes: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::EMPTY;
        for m in modes {
            s.insert(m);
        }
        s
    }

    /// Bit set from the low 64 modes given as an integer mask.
    pub fn from_bits(bits: u64) -> Self {
        let mut w = [0; WORDS];
        w[0] = bits;
        ModeSet(w)
    }

    /// Low 64 modes as an integer mask (dense basis index for small spaces).
    pub fn low_bits(&self) -> u64 {
        self.0[0]
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < MAX_MODES, "mode {i} beyond MAX_MODES");
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    pub fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    /// Number of elements strictly below `i`.
    pub fn count_below(&self, i: usize) -> usize {
        let (w, b) = (i / 64, i % 64);
        let mut n: usize = self.0[..w.min(WORDS)].iter().map(|x| x.count_ones() as usize).sum();
        if w < WORDS && b > 0 {
            n += (self.0[w] & ((1u64 << b) - 1)).count_ones() as usize;
        }
        n
    }

    /// Number of elements in `[lo, hi)`.
    pub fn count_in(&self, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            return 0;
        }
        self.count_below(hi.min(MAX_MODES)) - self.count_below(lo.min(MAX_MODES))
    }

    pub fn is_disjoint(&self, other: &ModeSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &ModeSet) -> ModeSet {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(&other.0) {
            *a |= b;
        }
        ModeSet(w)
    }

    pub fn intersection(&self, other: &ModeSet) -> ModeSet {
        let mut w = self.0;
        for (a, b) in w.iter_mut().zip(&other.0) {
            *a &= b;
        }
        ModeSet(w)
    }

    pub fn last(&self) -> Option<usize> {
        (0..WORDS)
            .rev()
            .find(|&w| self.0[w] != 0)
            .map(|w| w * 64 + 63 - self.0[w].leading_zeros() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let b = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    /// Moves every mode up by `by`; `None` if a mode would reach `limit`.
    pub fn shifted(&self, by: usize, limit: usize) -> Option<ModeSet> {
        let mut out = ModeSet::EMPTY;
        for i in self.iter() {
            if i + by >= limit {
                return None;
            }
            out.insert(i + by);
        }
        Some(out)
    }

    /// Sign of `e_self ∧ e_other` relative to `e_{self ∪ other}`; `None` if the
    /// sets overlap.
    pub fn wedge_sign(&self, other: &ModeSet) -> Option<f64> {
        if !self.is_disjoint(other) {
            return None;
        }
        let inversions: usize = self.iter().map(|i| other.count_below(i)).sum();
        Some(if inversions.is_multiple_of(2) { 1.0 } else { -1.0 })
    }
}

impl fmt::Debug for ModeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
