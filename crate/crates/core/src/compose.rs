//! Shared decode step for the four-way inductive composition.
//!
//! When a message m is fanned out as m + j*r over four sub-protocols
//! (j = 1..4) of which at most one can be compromised, the receiver fits the
//! unique degree-one polynomial through at least three of the candidates and
//! reads the message off at zero. A sub-protocol that failed outright counts
//! as an erasure.

use crate::error::DecodeFailure;
use crate::field::{decode_with_errors, DecodeOutcome, Field, FieldElement};

/// Recovers m from candidates v_j claimed to equal m + j*r.
pub fn decode_shifted_candidates(
    field: Field,
    candidates: &[(u64, Result<FieldElement, DecodeFailure>)],
) -> Result<FieldElement, DecodeFailure> {
    let points: Vec<(FieldElement, FieldElement)> = candidates
        .iter()
        .filter_map(|(j, r)| r.as_ref().ok().map(|v| (field.elem(*j), *v)))
        .collect();
    if points.len() < 3 {
        return Err(DecodeFailure::ChildFailures);
    }
    // All four survived: tolerate one bad value. One erased: the erased one
    // was the bad one, so the rest must agree exactly.
    let max_errors = points.len() - 3;
    match decode_with_errors(field, &points, 1, max_errors)
        .expect("candidate x coordinates are distinct")
    {
        DecodeOutcome::Decoded { poly, .. } => Ok(poly.at_zero()),
        DecodeOutcome::NoDecode => Err(DecodeFailure::NoConsistentLine),
    }
}
