//! Secure message transmission over adversarial wires.
//!
//! A sender and a receiver are connected by n parallel wires. An adversary
//! commits to one (disrupt, listen) pair from a known structure: it replaces
//! everything on the disrupt wires and hears everything on the listen wires.
//! This crate provides:
//!
//! * exact feasibility deciders for one-way, two-way and two-round settings,
//!   with re-checkable cover witnesses when transmission is impossible;
//! * the one-round and two-round protocols themselves, built from additive
//!   sharing, degree-one polynomial pads and majority broadcast;
//! * a deterministic simulation harness with full transcripts and lawful
//!   adversary views;
//! * verification oracles that decide reliability and perfect privacy by
//!   enumeration at small field sizes, plus converse attacks that produce
//!   verifiable indistinguishability witnesses on infeasible structures.

pub mod adversary;
// pub mod attacks;
pub mod compose;
// pub mod corpus;
pub mod error;
pub mod feasibility;
pub mod field;
pub mod oneway;
pub mod strategy;
pub mod tape;
pub mod transport;
pub mod twoway;
pub mod verify;

pub use adversary::{
    covers, AdversaryPair, AdversaryStructure, ObliviousnessMode, StructureDoc, WireSet,
};
pub use error::{DecodeFailure, ExecError, FieldError, PlanError, StructureError};
pub use feasibility::{
    feasible, feasible_classic, feasible_oneway, feasible_twoway_completely_oblivious,
    feasible_tworound_non_completely_oblivious, ClassicKind, CoverWitness, FeasibilityReport,
    Setting,
};
pub use field::{decode_with_errors, interpolate, DecodeOutcome, Field, FieldElement, Polynomial};
pub use strategy::{Behavior, Disruption, StrategyHandle};
pub use transport::{
    majority3, view_from_transcript, AdversaryView, Direction, Engine, Outgoing, SlotId, SlotTag,
    Transcript, Transmission, ViewEntry, ViewKind,
};
