//! Pluggable adversary behaviors.
//!
//! A strategy commits to one pair of the structure before execution and then
//! decides, round by round, which of the slots on its disrupt wires to
//! replace. It may leave transmissions untouched. Replacements are either
//! explicit values, fresh random noise, or a deterministic function of the
//! lawful view; the transport engine rejects writes outside the disrupt set.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::field::FieldElement;
use crate::transport::{AdversaryView, Direction, SlotId};

/// What to put on a disrupted slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Disruption {
    /// Replace with this exact value.
    Value(FieldElement),
    /// Replace with a fresh uniform value drawn by the engine.
    FreshRandom,
}

/// Per-round context handed to reactive strategies.
pub struct RoundInfo {
    pub round: u32,
    pub direction: Direction,
    /// Every slot in this round's batch.
    pub all_slots: Vec<SlotId>,
    /// Slots in this round's batch that travel on the adversary's disrupt
    /// wires, i.e. everything it is allowed to replace.
    pub disruptable: Vec<SlotId>,
}

type ViewFn =
    dyn Fn(&AdversaryView, &RoundInfo) -> BTreeMap<SlotId, Disruption> + Send + Sync;

#[derive(Clone)]
pub enum Behavior {
    /// Let everything through unaltered.
    Passive,
    /// Replace every reachable slot with fresh noise.
    RandomNoise,
    /// Fixed slot-to-replacement map, applied wherever it intersects the
    /// round's disruptable slots. Unmatched slots pass through.
    Scripted(BTreeMap<SlotId, Disruption>),
    /// Deterministic function of the current lawful view.
    ViewFunction(Arc<ViewFn>),
}

impl std::fmt::Debug for Behavior {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Behavior::Passive => write!(f, "Passive"),
            Behavior::RandomNoise => write!(f, "RandomNoise"),
            Behavior::Scripted(m) => write!(f, "Scripted({} slots)", m.len()),
            Behavior::ViewFunction(_) => write!(f, "ViewFunction"),
        }
    }
}

/// A committed adversary: which pair it controls and how it behaves.
/// `pair: None` is the vacuous adversary for empty structures.
#[derive(Debug, Clone)]
pub struct StrategyHandle {
    pub pair: Option<usize>,
    pub behavior: Behavior,
}

impl StrategyHandle {
    pub fn passive(pair: Option<usize>) -> Self {
        StrategyHandle {
            pair,
            behavior: Behavior::Passive,
        }
    }

    pub fn noise(pair: usize) -> Self {
        StrategyHandle {
            pair: Some(pair),
            behavior: Behavior::RandomNoise,
        }
    }

    pub fn scripted(pair: usize, script: BTreeMap<SlotId, Disruption>) -> Self {
        StrategyHandle {
            pair: Some(pair),
            behavior: Behavior::Scripted(script),
        }
    }

    /// Replacements this strategy wants for the given round. The engine
    /// validates the slots and fills in noise values.
    pub fn decide(
        &self,
        view: &AdversaryView,
        info: &RoundInfo,
    ) -> BTreeMap<SlotId, Disruption> {
        match &self.behavior {
            Behavior::Passive => BTreeMap::new(),
            Behavior::RandomNoise => info
                .disruptable
                .iter()
                .map(|s| (s.clone(), Disruption::FreshRandom))
                .collect(),
            // Scripts match against the whole batch, not just the lawful
            // slots; the engine flags out-of-power writes as faults.
            Behavior::Scripted(script) => info
                .all_slots
                .iter()
                .filter_map(|s| script.get(s).map(|d| (s.clone(), d.clone())))
                .collect(),
            Behavior::ViewFunction(f) => f(view, info),
        }
    }
}
