//! The simulated wire layer.
//!
//! A round is one half-duplex phase: every outgoing slot travels at once,
//! the adversary replaces what it can reach, and the survivors are delivered
//! verbatim. The engine records a full transcript and maintains the
//! adversary's lawful view as execution proceeds.
//!
//! Slots exist because a conceptual wire carries many field elements per
//! round here: the protocols multiplex shares, anchors and public payload
//! fields onto the same physical wire within one phase.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryStructure, ObliviousnessMode, WireSet};
use crate::error::ExecError;
use crate::field::{Field, FieldElement};
use crate::strategy::{Disruption, RoundInfo, StrategyHandle};
use crate::tape::{stream_rng, ProtocolValue};

/// Which way a phase flows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    SenderToReceiver,
    ReceiverToSender,
}

/// Distinguishes the roles a slot can play within a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlotTag {
    /// One-way base case: sharing s of the message, share k. 1-based.
    Share { sharing: u8, share: u8 },
    /// Two-way round one: random share k of the pad for polynomial `poly`
    /// at evaluation point `point`. k is 1 or 2.
    Rand { poly: u8, point: u8, share: u8 },
    /// Two-way round one: the completing share p_i(j) - r1 - r2.
    Diff { poly: u8, point: u8 },
    /// Two-way round one: copy c of the anchor value p_i(4).
    Anchor { poly: u8, copy: u8 },
    /// Public payload field at position `field`, copy c.
    Public { field: u8, copy: u8 },
}

impl fmt::Display for SlotTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SlotTag::Share { sharing, share } => write!(f, "sh{sharing}.{share}"),
            SlotTag::Rand { poly, point, share } => write!(f, "r{poly}.{point}.{share}"),
            SlotTag::Diff { poly, point } => write!(f, "c{poly}.{point}"),
            SlotTag::Anchor { poly, copy } => write!(f, "a{poly}.{copy}"),
            SlotTag::Public { field, copy } => write!(f, "pub{field}.{copy}"),
        }
    }
}

/// A unique address for one field element in flight: the recursion path of
/// the sub-protocol that produced it plus a role tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId {
    pub path: Vec<u8>,
    pub tag: SlotTag,
}

impl SlotId {
    pub fn new(path: &[u8], tag: SlotTag) -> Self {
        SlotId {
            path: path.to_vec(),
            tag,
        }
    }
}

impl fmt::Display for SlotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{p}")?;
        }
        if !self.path.is_empty() {
            write!(f, "/")?;
        }
        write!(f, "{}", self.tag)
    }
}

/// One slot queued for transmission. `public` marks broadcast copies whose
/// content the whole world, adversary included, is assumed to see.
#[derive(Debug, Clone)]
pub struct Outgoing<V> {
    pub wire: usize,
    pub slot: SlotId,
    pub value: V,
    pub public: bool,
}

/// One recorded transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transmission {
    pub round: u32,
    pub direction: Direction,
    pub wire: usize,
    pub slot: SlotId,
    pub sent: FieldElement,
    pub delivered: FieldElement,
    /// True when the adversary wrote the delivered value, even if it chose
    /// the original value by luck.
    pub replaced: bool,
    pub public: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<Transmission>,
    pub rounds: u32,
}

impl Transcript {
    /// Number of half-duplex phases recorded.
    pub fn phases(&self) -> u32 {
        self.rounds
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    /// Original transmission on a listened wire.
    Sent,
    /// Replacement value on a disrupted wire, visible only when the
    /// adversary is not completely oblivious.
    Delivered,
    /// A public broadcast copy, visible to everyone.
    Public,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ViewEntry {
    pub round: u32,
    pub direction: Direction,
    pub wire: usize,
    pub slot: SlotId,
    pub kind: ViewKind,
    pub value: FieldElement,
}

/// Everything the adversary lawfully observes during one execution, in a
/// canonical order.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct AdversaryView {
    pub entries: Vec<ViewEntry>,
}

impl AdversaryView {
    /// Compact canonical encoding, used as a multiset key by the privacy
    /// verifier.
    pub fn fingerprint(&self) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            out.push(e.value.value());
        }
        out
    }
}

/// The result of driving one protocol execution end to end.
#[derive(Debug, Clone)]
pub struct ExecutionOutcome {
    pub message: FieldElement,
    pub decoded: Result<FieldElement, crate::error::DecodeFailure>,
    pub rounds: u32,
    pub transcript: Transcript,
    pub view: AdversaryView,
}

impl ExecutionOutcome {
    pub fn reliable(&self) -> bool {
        self.decoded.as_ref() == Ok(&self.message)
    }
}

/// The round-based execution engine for one adversary against one run.
pub struct Engine<'a> {
    structure: &'a AdversaryStructure,
    strategy: StrategyHandle,
    noise_rng: ChaCha8Rng,
    field: Field,
    round: u32,
    pub transcript: Transcript,
    pub view: AdversaryView,
}

impl<'a> Engine<'a> {
    pub fn new(
        structure: &'a AdversaryStructure,
        strategy: StrategyHandle,
        field: Field,
        seed: u64,
    ) -> Result<Self, ExecError> {
        if let Some(p) = strategy.pair {
            if p >= structure.len() {
                return Err(ExecError::PairOutOfRange {
                    index: p,
                    pairs: structure.len(),
                });
            }
        }
        Ok(Engine {
            structure,
            strategy,
            noise_rng: stream_rng(seed, "adversary"),
            field,
            round: 0,
            transcript: Transcript::default(),
            view: AdversaryView::default(),
        })
    }

    pub fn disrupt_set(&self) -> WireSet {
        match self.strategy.pair {
            Some(i) => self.structure.pair(i).disrupt,
            None => WireSet::empty(self.structure.wires()),
        }
    }

    pub fn listen_set(&self) -> WireSet {
        match self.strategy.pair {
            Some(i) => self.structure.pair(i).listen,
            None => WireSet::empty(self.structure.wires()),
        }
    }

    pub fn rounds(&self) -> u32 {
        self.round
    }

    /// Runs one half-duplex phase: ships every outgoing slot, lets the
    /// adversary replace slots on its disrupt wires, updates transcript and
    /// view, and returns what arrived.
    pub fn exchange_round(
        &mut self,
        direction: Direction,
        outgoing: &[Outgoing<FieldElement>],
    ) -> Result<BTreeMap<SlotId, FieldElement>, ExecError> {
        self.round += 1;
        let round = self.round;
        let disrupt = self.disrupt_set();
        let listen = self.listen_set();
        let mode = self.structure.mode();

        let mut seen = BTreeSet::new();
        for o in outgoing {
            if !seen.insert((o.wire, o.slot.clone())) {
                return Err(ExecError::DuplicateSlot {
                    slot: o.slot.to_string(),
                });
            }
        }

        // What the adversary hears as the round goes out, in canonical
        // (wire, slot) order: public copies, listened wires, and, for a
        // non-oblivious adversary, originals on its own disrupt wires.
        let mut heard: Vec<&Outgoing<FieldElement>> = outgoing.iter().collect();
        heard.sort_by(|a, b| (a.wire, &a.slot).cmp(&(b.wire, &b.slot)));
        for o in heard {
            let kind = if o.public {
                Some(ViewKind::Public)
            } else if listen.contains(o.wire) {
                Some(ViewKind::Sent)
            } else if mode == ObliviousnessMode::NonOblivious && disrupt.contains(o.wire) {
                Some(ViewKind::Sent)
            } else {
                None
            };
            if let Some(kind) = kind {
                self.view.entries.push(ViewEntry {
                    round,
                    direction,
                    wire: o.wire,
                    slot: o.slot.clone(),
                    kind,
                    value: o.value,
                });
            }
        }

        let disruptable: Vec<SlotId> = {
            let mut v: Vec<&Outgoing<FieldElement>> = outgoing
                .iter()
                .filter(|o| disrupt.contains(o.wire))
                .collect();
            v.sort_by(|a, b| (a.wire, &a.slot).cmp(&(b.wire, &b.slot)));
            v.into_iter().map(|o| o.slot.clone()).collect()
        };

        let all_slots = {
            let mut v: Vec<&Outgoing<FieldElement>> = outgoing.iter().collect();
            v.sort_by(|a, b| (a.wire, &a.slot).cmp(&(b.wire, &b.slot)));
            v.into_iter().map(|o| o.slot.clone()).collect()
        };
        let info = RoundInfo {
            round,
            direction,
            all_slots,
            disruptable: disruptable.clone(),
        };
        let actions = self.strategy.decide(&self.view, &info);

        let allowed: BTreeSet<&SlotId> = disruptable.iter().collect();
        for slot in actions.keys() {
            if !allowed.contains(slot) {
                let wire = outgoing
                    .iter()
                    .find(|o| &o.slot == slot)
                    .map(|o| o.wire)
                    .unwrap_or(usize::MAX);
                return Err(ExecError::IllegalDisruption { wire });
            }
        }

        // Resolve replacement values in canonical slot order so noise draws
        // are reproducible.
        let mut replacements: BTreeMap<SlotId, FieldElement> = BTreeMap::new();
        for (slot, action) in &actions {
            let value = match action {
                Disruption::Value(v) => *v,
                Disruption::FreshRandom => self.field.random(&mut self.noise_rng),
            };
            replacements.insert(slot.clone(), value);
        }

        let mut delivered_map = BTreeMap::new();
        for o in outgoing {
            let (delivered, replaced) = match replacements.get(&o.slot) {
                Some(v) => (*v, true),
                None => (o.value, false),
            };
            self.transcript.entries.push(Transmission {
                round,
                direction,
                wire: o.wire,
                slot: o.slot.clone(),
                sent: o.value,
                delivered,
                replaced,
                public: o.public,
            });
            delivered_map.insert(o.slot.clone(), delivered);
        }
        self.transcript.rounds = round;

        // A not-completely-oblivious adversary additionally sees what it put
        // on the wire. Recorded in canonical order.
        if mode != ObliviousnessMode::CompletelyOblivious {
            for (slot, value) in &replacements {
                let o = outgoing.iter().find(|o| &o.slot == slot).unwrap();
                self.view.entries.push(ViewEntry {
                    round,
                    direction,
                    wire: o.wire,
                    slot: slot.clone(),
                    kind: ViewKind::Delivered,
                    value: *value,
                });
            }
        }

        Ok(delivered_map)
    }

    /// Broadcasts a batch of values, each copied onto the three given wires,
    /// in a single phase; the receiving side takes a majority per value.
    /// Fails if some value ends up with three pairwise different copies,
    /// which a single structure pair can never cause.
    pub fn public_send(
        &mut self,
        direction: Direction,
        path: &[u8],
        values: &[FieldElement],
        wires: [usize; 3],
    ) -> Result<Vec<FieldElement>, ExecError> {
        let outgoing = build_public_outgoing(path, values, wires);
        let delivered = self.exchange_round(direction, &outgoing)?;
        majority_decode(path, values.len(), &delivered)
    }
}

/// Lays out `values` as public slots, one copy per wire.
pub fn build_public_outgoing<V: ProtocolValue>(
    path: &[u8],
    values: &[V],
    wires: [usize; 3],
) -> Vec<Outgoing<V>> {
    let mut out = Vec::with_capacity(values.len() * 3);
    for (f, v) in values.iter().enumerate() {
        for (c, &wire) in wires.iter().enumerate() {
            out.push(Outgoing {
                wire,
                slot: SlotId::new(
                    path,
                    SlotTag::Public {
                        field: f as u8,
                        copy: c as u8 + 1,
                    },
                ),
                value: v.clone(),
                public: true,
            });
        }
    }
    out
}

/// Majority over the three delivered copies of each public field.
pub fn majority_decode(
    path: &[u8],
    fields: usize,
    delivered: &BTreeMap<SlotId, FieldElement>,
) -> Result<Vec<FieldElement>, ExecError> {
    let mut out = Vec::with_capacity(fields);
    for f in 0..fields {
        let copy = |c: u8| {
            delivered
                .get(&SlotId::new(
                    path,
                    SlotTag::Public {
                        field: f as u8,
                        copy: c,
                    },
                ))
                .copied()
        };
        let (a, b, c) = (copy(1), copy(2), copy(3));
        let slot = SlotId::new(
            path,
            SlotTag::Public {
                field: f as u8,
                copy: 1,
            },
        );
        let (a, b, c) = match (a, b, c) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(ExecError::NoMajority {
                    slot: slot.to_string(),
                })
            }
        };
        match majority3(a, b, c) {
            Some(v) => out.push(v),
            None => {
                return Err(ExecError::NoMajority {
                    slot: slot.to_string(),
                })
            }
        }
    }
    Ok(out)
}

/// The value appearing at least twice among three, if any.
pub fn majority3(a: FieldElement, b: FieldElement, c: FieldElement) -> Option<FieldElement> {
    if a == b || a == c {
        Some(a)
    } else if b == c {
        Some(b)
    } else {
        None
    }
}

/// Rebuilds the adversary view a given execution must have produced. The
/// view is a function of the transcript, the chosen pair and the mode; this
/// is the replay check used by the harness tests.
pub fn view_from_transcript(
    transcript: &Transcript,
    structure: &AdversaryStructure,
    pair: Option<usize>,
) -> AdversaryView {
    let (disrupt, listen) = match pair {
        Some(i) => (structure.pair(i).disrupt, structure.pair(i).listen),
        None => (
            WireSet::empty(structure.wires()),
            WireSet::empty(structure.wires()),
        ),
    };
    let mode = structure.mode();
    let mut view = AdversaryView::default();
    for round in 1..=transcript.rounds {
        let mut in_round: Vec<&Transmission> = transcript
            .entries
            .iter()
            .filter(|t| t.round == round)
            .collect();
        in_round.sort_by(|a, b| (a.wire, &a.slot).cmp(&(b.wire, &b.slot)));
        for t in &in_round {
            let kind = if t.public {
                Some(ViewKind::Public)
            } else if listen.contains(t.wire) {
                Some(ViewKind::Sent)
            } else if mode == ObliviousnessMode::NonOblivious && disrupt.contains(t.wire) {
                Some(ViewKind::Sent)
            } else {
                None
            };
            if let Some(kind) = kind {
                view.entries.push(ViewEntry {
                    round,
                    direction: t.direction,
                    wire: t.wire,
                    slot: t.slot.clone(),
                    kind,
                    value: t.sent,
                });
            }
        }
        if mode != ObliviousnessMode::CompletelyOblivious {
            for t in &in_round {
                if t.replaced {
                    view.entries.push(ViewEntry {
                        round,
                        direction: t.direction,
                        wire: t.wire,
                        slot: t.slot.clone(),
                        kind: ViewKind::Delivered,
                        value: t.delivered,
                    });
                }
            }
        }
    }
    view
}
