//! Random-tape plumbing.
//!
//! Every random choice a party makes is a draw from its tape. Tapes are
//! pluggable so the same protocol code runs in three regimes:
//!
//! * seeded simulation ([`StreamTape`]),
//! * exhaustive enumeration over explicit values ([`FlatTape`]),
//! * symbolic execution for the privacy verifier (a tape handing out fresh
//!   affine variables).
//!
//! Seeded streams are derived as ChaCha8 keyed by
//! `SHA-256("smt/v1" || seed_le || label)`, so a single 64-bit seed spawns
//! independent, platform-stable streams per party and sub-protocol path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

use crate::field::{Field, FieldElement};

/// Values protocol code can compute with: concrete field elements during
/// simulation, affine expressions during symbolic verification.
///
/// Only affine operations exist on purpose. Code written against this trait
/// cannot smuggle in a value-dependent branch or a product of two secrets,
/// which is what makes the symbolic privacy analysis sound.
pub trait ProtocolValue: Clone + fmt::Debug {
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    /// Multiplication by a small public constant.
    fn mul_const(&self, k: u64) -> Self;
    /// Equality when it is decidable without knowing tape values.
    /// `None` means "depends on the tape", which concrete values never are.
    fn known_eq(&self, other: &Self) -> Option<bool>;
}

impl ProtocolValue for FieldElement {
    fn add(&self, other: &Self) -> Self {
        FieldElement::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        FieldElement::sub(self, other)
    }
    fn mul_const(&self, k: u64) -> Self {
        self.mul(&self.field().elem(k))
    }
    fn known_eq(&self, other: &Self) -> Option<bool> {
        Some(self == other)
    }
}

/// A source of per-party randomness, addressed by sub-protocol path.
pub trait Tape<V> {
    fn draw(&mut self, path: &[u8]) -> V;
}

/// Derives a deterministic ChaCha8 stream from a master seed and a label.
pub fn stream_rng(seed: u64, label: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"smt/v1");
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn path_label(party: &str, path: &[u8]) -> String {
    let mut s = String::from(party);
    s.push('/');
    for (i, p) in path.iter().enumerate() {
        if i > 0 {
            s.push('.');
        }
        s.push_str(&p.to_string());
    }
    s
}

/// Seeded tape with one independent stream per sub-protocol path.
pub struct StreamTape {
    field: Field,
    seed: u64,
    party: String,
    streams: BTreeMap<Vec<u8>, ChaCha8Rng>,
}

impl StreamTape {
    pub fn new(field: Field, seed: u64, party: &str) -> Self {
        StreamTape {
            field,
            seed,
            party: party.to_string(),
            streams: BTreeMap::new(),
        }
    }
}

impl Tape<FieldElement> for StreamTape {
    fn draw(&mut self, path: &[u8]) -> FieldElement {
        let rng = self
            .streams
            .entry(path.to_vec())
            .or_insert_with(|| stream_rng(self.seed, &path_label(&self.party, path)));
        self.field.random(rng)
    }
}

/// Explicit tape values in draw order, for exhaustive enumeration. Paths are
/// ignored; the draw order of a fixed plan is deterministic, so a flat vector
/// addresses every choice. Running past the end is a harness bug.
pub struct FlatTape {
    field: Field,
    values: Vec<u64>,
    pos: usize,
}

impl FlatTape {
    pub fn new(field: Field, values: Vec<u64>) -> Self {
        FlatTape {
            field,
            values,
            pos: 0,
        }
    }

    pub fn fully_consumed(&self) -> bool {
        self.pos == self.values.len()
    }
}

impl Tape<FieldElement> for FlatTape {
    fn draw(&mut self, _path: &[u8]) -> FieldElement {
        let v = *self
            .values
            .get(self.pos)
            .expect("flat tape exhausted: enumeration sized the tape wrong");
        self.pos += 1;
        self.field.elem(v)
    }
}

/// Counts draws (returning zeros), used to size tapes before enumerating.
pub struct CountingTape {
    field: Field,
    count: usize,
}

impl CountingTape {
    pub fn new(field: Field) -> Self {
        CountingTape { field, count: 0 }
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl Tape<FieldElement> for CountingTape {
    fn draw(&mut self, _path: &[u8]) -> FieldElement {
        self.count += 1;
        self.field.zero()
    }
}

/// Tape backed by any RNG, for randomized trial sweeps.
pub struct RngTape<R: Rng> {
    field: Field,
    rng: R,
}

impl<R: Rng> RngTape<R> {
    pub fn new(field: Field, rng: R) -> Self {
        RngTape { field, rng }
    }
}

impl<R: Rng> Tape<FieldElement> for RngTape<R> {
    fn draw(&mut self, _path: &[u8]) -> FieldElement {
        self.field.random(&mut self.rng)
    }
}

/// Enumerates all tape assignments of a given length over GF(p), in
/// lexicographic order with the first draw as the most significant digit.
pub fn for_each_tape(p: u64, len: usize, mut f: impl FnMut(&[u64])) {
    let mut values = vec![0u64; len];
    loop {
        f(&values);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            values[i] += 1;
            if values[i] < p {
                break;
            }
            values[i] = 0;
            if i == 0 {
                return;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_deterministic_and_label_separated() {
        let f = Field::new(5).unwrap();
        let mut t1 = StreamTape::new(f, 42, "sender");
        let mut t2 = StreamTape::new(f, 42, "sender");
        let a: Vec<_> = (0..10).map(|_| t1.draw(&[1, 2]).value()).collect();
        let b: Vec<_> = (0..10).map(|_| t2.draw(&[1, 2]).value()).collect();
        assert_eq!(a, b);

        let mut t3 = StreamTape::new(f, 42, "receiver");
        let c: Vec<_> = (0..10).map(|_| t3.draw(&[1, 2]).value()).collect();
        assert_ne!(a, c, "party label must separate streams");

        let mut t4 = StreamTape::new(f, 43, "sender");
        let d: Vec<_> = (0..10).map(|_| t4.draw(&[1, 2]).value()).collect();
        assert_ne!(a, d, "seed must separate streams");
    }

    #[test]
    fn tape_enumeration_order_and_count() {
        let mut seen = Vec::new();
        for_each_tape(3, 2, |v| seen.push(v.to_vec()));
        assert_eq!(seen.len(), 9);
        assert_eq!(seen[0], vec![0, 0]);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[8], vec![2, 2]);

        let mut count = 0usize;
        for_each_tape(5, 0, |_| count += 1);
        assert_eq!(count, 1, "empty tape has exactly one assignment");
    }

    #[test]
    fn flat_tape_reduces_mod_p() {
        let f = Field::new(5).unwrap();
        let mut t = FlatTape::new(f, vec![7, 3]);
        assert_eq!(t.draw(&[]).value(), 2);
        assert_eq!(t.draw(&[]).value(), 3);
        assert!(t.fully_consumed());
    }
}
