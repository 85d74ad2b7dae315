//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("modulus {modulus} is not prime")]
    NotPrime { modulus: u64 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("duplicate x coordinate {x} in point set")]
    DuplicateX { x: u64 },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("wire index {wire} out of range for {wires} wires")]
    WireOutOfRange { wire: usize, wires: usize },
    #[error("wire count {wires} exceeds the supported maximum of {max}")]
    TooManyWires { wires: usize, max: usize },
    #[error("wire count must be at least 1")]
    NoWires,
    #[error("subset size {size} exceeds wire count {wires}")]
    SubsetTooLarge { size: usize, wires: usize },
    #[error("unknown obliviousness mode {0:?}")]
    UnknownMode(String),
}

/// Planning failures. Refusals carry the offending cover so callers can
/// re-check the verdict independently.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("structure is infeasible for {setting}: witness {witness}")]
    Infeasible { setting: String, witness: String },
    #[error("no wire satisfies the avoidance constraint {constraint}")]
    NoWireAvailable { constraint: String },
    #[error("structure has {pairs} pairs, above the recursion cap of {cap}")]
    TooManyPairs { pairs: usize, cap: usize },
    #[error("protocols require a field with at least 5 elements, got {modulus}")]
    FieldTooSmall { modulus: u64 },
}

/// Harness faults: things that indicate a broken caller or an adversary
/// stepping outside its declared power, never ordinary protocol outcomes.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("strategy wrote to wire {wire} which is not in its disrupt set")]
    IllegalDisruption { wire: usize },
    #[error("public send produced no majority for slot {slot}")]
    NoMajority { slot: String },
    #[error("duplicate slot in outgoing batch: {slot}")]
    DuplicateSlot { slot: String },
    #[error("tape exhausted: protocol asked for more randomness than provided")]
    TapeExhausted,
    #[error("adversary pair index {index} out of range ({pairs} pairs)")]
    PairOutOfRange { index: usize, pairs: usize },
    #[error("a value comparison depends on hidden randomness; symbolic analysis refused")]
    SymbolicUndecidable,
}

/// A failed decode on the receiver side. This is data, not a panic: it means
/// the adversary acted outside the declared structure (or the protocol was
/// deliberately mis-planned, as the negative controls do).
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeFailure {
    #[error("no two of the three sharing sums agree")]
    NoMajorityValue,
    #[error("no polynomial of degree <= 1 agrees with enough candidates")]
    NoConsistentLine,
    #[error("round-two payload is inconsistent with receiver state: {reason}")]
    InconsistentPayload { reason: String },
    #[error("child decode failed below recovery threshold")]
    ChildFailures,
}
