//! Verification oracles: reliability by enumeration, perfect privacy by
//! exact distribution comparison, and feasibility cross-validation.
//!
//! Everything here decides, never estimates: reliability sweeps enumerate
//! the adversary's reachable effect space, privacy verdicts are exact
//! multiset comparisons, and when a check would exceed its budget it refuses
//! instead of sampling.

pub mod affine;
mod privacy;

pub use privacy::{
    default_battery, extended_battery, verify_privacy, BatteryStrategy, BatteryValue,
    PrivacyBudget, PrivacyCounterexample, PrivacyRefusal, PrivacyReport, SlotPick,
};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::adversary::{AdversaryStructure, WireSet};
use crate::error::ExecError;
use crate::feasibility::{
    feasible_classic, feasible_oneway, feasible_twoway_completely_oblivious,
    feasible_tworound_non_completely_oblivious, ClassicKind,
};
use crate::field::{Field, FieldElement};
use crate::oneway::{run_oneway, send_oneway, OneWayPlan, PlanNode};
use crate::strategy::{Disruption, StrategyHandle};
use crate::tape::{for_each_tape, stream_rng, StreamTape, Tape};
use crate::transport::{ExecutionOutcome, SlotId, SlotTag};
use crate::twoway::{round1_receiver, run_twoway, ReceiverState, TwoWayPlan};

/// The protocol a verification sweep drives.
pub enum ProtocolUnderTest<'a> {
    OneWay(&'a OneWayPlan),
    TwoWay(&'a TwoWayPlan),
}

impl<'a> ProtocolUnderTest<'a> {
    pub fn field(&self) -> Field {
        match self {
            ProtocolUnderTest::OneWay(p) => p.field,
            ProtocolUnderTest::TwoWay(p) => p.field,
        }
    }

    /// Slots of the protocol's first sending phase, with wires.
    pub fn round1_slots(&self) -> Vec<(SlotId, usize)> {
        match self {
            ProtocolUnderTest::OneWay(p) => p.slots(),
            ProtocolUnderTest::TwoWay(p) => p.round1_slots(),
        }
    }

    pub fn run(
        &self,
        structure: &AdversaryStructure,
        m: FieldElement,
        seed: u64,
        strategy: StrategyHandle,
    ) -> Result<ExecutionOutcome, ExecError> {
        match self {
            ProtocolUnderTest::OneWay(p) => run_oneway(p, structure, m, seed, strategy),
            ProtocolUnderTest::TwoWay(p) => run_twoway(p, structure, m, seed, strategy),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityFailure {
    pub pair: usize,
    pub message: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReliabilityReport {
    pub trials: u64,
    pub failures: Vec<ReliabilityFailure>,
    /// True when the adversary's full reachable effect space was enumerated
    /// for every pair; `mode` records how.
    pub exhaustive: bool,
    pub mode: String,
}

impl ReliabilityReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ReliabilityBudget {
    /// Value assignments over raw slots are enumerated when p^slots stays
    /// at or below this.
    pub raw_cap: u64,
    /// Aggregate-class assignments are enumerated when p^classes stays at
    /// or below this.
    pub class_cap: u64,
    /// Randomized joint trials per (pair, message) on top of any sweep.
    pub random_trials: u64,
    /// Engine-path re-runs per (pair, message) cross-checking the patched
    /// fast path.
    pub consistency_trials: u64,
    pub max_recorded_failures: usize,
}

impl Default for ReliabilityBudget {
    fn default() -> Self {
        ReliabilityBudget {
            raw_cap: 16_000,
            class_cap: 400_000,
            random_trials: 64,
            consistency_trials: 8,
            max_recorded_failures: 16,
        }
    }
}

/// Decides reliability for every message and every pair of the structure.
///
/// Per pair, the disruptable slots are those on the pair's disrupt wires.
/// Three sweep modes, picked per pair by size:
///
/// * raw: every value assignment over the disruptable slots of the first
///   phase (replacing a slot with its original value subsumes "leave it
///   alone", so this covers the whole disruption lattice);
/// * classes: the receiver-relevant state is additive, so replacing any one
///   slot of a share group sweeps that group's sum across the whole field.
///   Enumerating full-field values on one canonical slot per group reaches
///   exactly the adversary's effect space with exponentially fewer runs.
///   Anchor and broadcast copies, whose effect is majority-limited, are
///   swept one at a time on top;
/// * randomized fallback when even the class count is too large.
///
/// Randomized joint trials and engine-path consistency re-runs are always
/// added; the fast sweeps patch delivered values directly and must agree
/// with full transport executions.
pub fn verify_reliability(
    protocol: &ProtocolUnderTest<'_>,
    structure: &AdversaryStructure,
    budget: &ReliabilityBudget,
) -> ReliabilityReport {
    let field = protocol.field();
    let p = field.modulus();
    let mut trials = 0u64;
    let mut failures: Vec<ReliabilityFailure> = Vec::new();
    let mut exhaustive = true;
    let mut modes: Vec<String> = Vec::new();

    let record = |failures: &mut Vec<ReliabilityFailure>, pair, message, detail: String| {
        if failures.len() < budget.max_recorded_failures {
            failures.push(ReliabilityFailure {
                pair,
                message,
                detail,
            });
        }
    };

    if structure.is_empty() {
        // Vacuous adversary: a single passive run per message.
        for m in 0..p {
            trials += 1;
            let out = protocol
                .run(structure, field.elem(m), 0, StrategyHandle::passive(None))
                .expect("passive run cannot fault");
            if !out.reliable() {
                record(&mut failures, usize::MAX, m, "passive run failed".into());
            }
        }
        return ReliabilityReport {
            trials,
            failures,
            exhaustive: true,
            mode: "vacuous".into(),
        };
    }

    let slots = protocol.round1_slots();
    for pair in 0..structure.len() {
        let disrupt = structure.pair(pair).disrupt;
        let ds: Vec<&(SlotId, usize)> =
            slots.iter().filter(|(_, w)| disrupt.contains(*w)).collect();
        let mode = pick_mode(p, ds.len(), class_count(&ds), budget);
        modes.push(format!("pair {pair}: {mode:?} ({} slots)", ds.len()));
        if matches!(mode, SweepMode::Randomized) {
            exhaustive = false;
        }

        for m in 0..p {
            let message = field.elem(m);
            let runner = FastRunner::new(protocol, message);
            let mut rng = stream_rng(m * 7919 + pair as u64, "reliability-sweep");

            let mut check_script = |script: &[(SlotId, u64)], trials: &mut u64| {
                *trials += 1;
                let decoded = runner.run_patched(script);
                if decoded.as_ref() != Ok(&message) {
                    record(
                        &mut failures,
                        pair,
                        m,
                        format!("script {script:?} decoded {decoded:?}"),
                    );
                }
            };

            match mode {
                SweepMode::Raw => {
                    let chosen: Vec<SlotId> = ds.iter().map(|(s, _)| s.clone()).collect();
                    for_each_tape(p, chosen.len(), |values| {
                        let script: Vec<(SlotId, u64)> = chosen
                            .iter()
                            .cloned()
                            .zip(values.iter().copied())
                            .collect();
                        check_script(&script, &mut trials);
                    });
                }
                SweepMode::Classes => {
                    let canon = canonical_class_slots(&ds);
                    for_each_tape(p, canon.len(), |values| {
                        let script: Vec<(SlotId, u64)> = canon
                            .iter()
                            .cloned()
                            .zip(values.iter().copied())
                            .collect();
                        check_script(&script, &mut trials);
                    });
                    // Majority-protected copies, one at a time.
                    for (slot, _) in ds.iter().filter(|(s, _)| {
                        matches!(s.tag, SlotTag::Anchor { .. })
                    }) {
                        for v in 0..p {
                            check_script(&[(slot.clone(), v)], &mut trials);
                        }
                    }
                }
                SweepMode::Randomized => {}
            }

            // Broadcast-phase copies for two-round protocols: disruptable
            // copies of the undisturbed payload shape, one at a time.
            if let ProtocolUnderTest::TwoWay(plan) = protocol {
                for (slot, v) in broadcast_sweep_slots(plan, disrupt, p) {
                    trials += 1;
                    let out = protocol
                        .run(
                            structure,
                            message,
                            0,
                            StrategyHandle::scripted(
                                pair,
                                BTreeMap::from([(slot.clone(), Disruption::Value(field.elem(v)))]),
                            ),
                        )
                        .expect("scripted run stays within the disrupt set");
                    if !out.reliable() {
                        record(
                            &mut failures,
                            pair,
                            m,
                            format!("broadcast slot {slot} := {v} decoded {:?}", out.decoded),
                        );
                    }
                }
            }

            // Randomized joint trials over everything reachable, through the
            // full transport engine.
            for t in 0..budget.random_trials {
                trials += 1;
                let mut script = BTreeMap::new();
                for (slot, _) in &ds {
                    if rng.gen_bool(0.5) {
                        script.insert(
                            slot.clone(),
                            Disruption::Value(field.random(&mut rng)),
                        );
                    }
                }
                let seed = rng.gen();
                let out = protocol
                    .run(
                        structure,
                        message,
                        seed,
                        StrategyHandle::scripted(pair, script.clone()),
                    )
                    .expect("scripted run stays within the disrupt set");
                if !out.reliable() {
                    record(
                        &mut failures,
                        pair,
                        m,
                        format!("random trial {t} seed {seed} decoded {:?}", out.decoded),
                    );
                }
            }

            // Fast path versus engine path on random scripts.
            for _ in 0..budget.consistency_trials {
                let mut script: Vec<(SlotId, u64)> = Vec::new();
                for (s, _) in &ds {
                    if rng.gen_bool(0.6) {
                        script.push((s.clone(), rng.gen_range(0..p)));
                    }
                }
                let fast = runner.run_patched(&script);
                let engine_script: BTreeMap<SlotId, Disruption> = script
                    .iter()
                    .map(|(s, v)| (s.clone(), Disruption::Value(field.elem(*v))))
                    .collect();
                let full = protocol
                    .run(
                        structure,
                        message,
                        0,
                        StrategyHandle::scripted(pair, engine_script),
                    )
                    .expect("scripted run stays within the disrupt set");
                assert_eq!(
                    fast, full.decoded,
                    "patched fast path diverged from the transport engine"
                );
            }
        }
    }

    ReliabilityReport {
        trials,
        failures,
        exhaustive,
        mode: modes.join("; "),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SweepMode {
    Raw,
    Classes,
    Randomized,
}

fn pow_at_most(p: u64, k: usize, cap: u64) -> bool {
    let mut acc = 1u64;
    for _ in 0..k {
        acc = match acc.checked_mul(p) {
            Some(v) if v <= cap => v,
            _ => return false,
        };
    }
    true
}

fn pick_mode(p: u64, raw_slots: usize, classes: usize, budget: &ReliabilityBudget) -> SweepMode {
    if pow_at_most(p, raw_slots, budget.raw_cap) {
        SweepMode::Raw
    } else if pow_at_most(p, classes, budget.class_cap) {
        SweepMode::Classes
    } else {
        SweepMode::Randomized
    }
}

/// Share-group key of a slot: slots of one group feed one delivered sum.
fn class_key(slot: &SlotId) -> Option<(Vec<u8>, u8, u8)> {
    match slot.tag {
        SlotTag::Share { sharing, .. } => Some((slot.path.clone(), 0, sharing)),
        SlotTag::Rand { poly, point, .. } => Some((slot.path.clone(), poly, point)),
        SlotTag::Diff { poly, point } => Some((slot.path.clone(), poly, point)),
        _ => None,
    }
}

fn class_count(ds: &[&(SlotId, usize)]) -> usize {
    let mut keys: Vec<_> = ds.iter().filter_map(|(s, _)| class_key(s)).collect();
    keys.sort();
    keys.dedup();
    keys.len()
}

/// Lowest slot of each share group among the disruptable slots.
fn canonical_class_slots(ds: &[&(SlotId, usize)]) -> Vec<SlotId> {
    let mut by_class: BTreeMap<(Vec<u8>, u8, u8), SlotId> = BTreeMap::new();
    for (slot, _) in ds {
        if let Some(key) = class_key(slot) {
            let entry = by_class.entry(key).or_insert_with(|| slot.clone());
            if slot < entry {
                *entry = slot.clone();
            }
        }
    }
    by_class.into_values().collect()
}

/// Disruptable broadcast copies of the undisturbed (case A) payload shape.
fn broadcast_sweep_slots(
    plan: &TwoWayPlan,
    disrupt: WireSet,
    p: u64,
) -> Vec<(SlotId, u64)> {
    let mut out = Vec::new();
    for leaf in plan.base_leaves() {
        for (c, &wire) in leaf.public_wires.iter().enumerate() {
            if !disrupt.contains(wire) {
                continue;
            }
            for f in 0..3u8 {
                for v in 0..p {
                    out.push((
                        SlotId::new(
                            leaf.path,
                            SlotTag::Public {
                                field: f,
                                copy: c as u8 + 1,
                            },
                        ),
                        v,
                    ));
                }
            }
        }
    }
    out
}

/// Precomputed clean execution that re-decodes with a handful of delivered
/// slots patched, bypassing the transport engine and working directly on
/// the receiver-relevant state. The receiver only ever reads share-group
/// sums, anchor majorities and the broadcast payload, so a slot replacement
/// acts as a delta on its group sum (or a copy substitution before the
/// majority); consistency trials pin this path to full engine executions.
struct FastRunner<'a> {
    protocol: &'a ProtocolUnderTest<'a>,
    message: FieldElement,
    /// Original value of every first-phase slot.
    slot_values: BTreeMap<SlotId, FieldElement>,
    /// One-round: sharing sums per leaf. Two-round: evaluation sums
    /// pbar[i][j] for j < 3 per leaf.
    sums: BTreeMap<Vec<u8>, [[FieldElement; 3]; 4]>,
    oneway_sums: BTreeMap<Vec<u8>, [FieldElement; 3]>,
    /// Two-round: the three delivered anchor copies per (leaf, poly).
    anchors: BTreeMap<Vec<u8>, [[FieldElement; 3]; 4]>,
    state: Option<ReceiverState<FieldElement>>,
    /// Two-round: the sender's blinding draw per inductive node.
    blinds: BTreeMap<Vec<u8>, FieldElement>,
}

impl<'a> FastRunner<'a> {
    fn new(protocol: &'a ProtocolUnderTest<'a>, message: FieldElement) -> Self {
        match protocol {
            ProtocolUnderTest::OneWay(plan) => {
                let mut tape = StreamTape::new(plan.field, 0, "sender");
                let sends = send_oneway(plan, &message, &mut tape);
                let mut oneway_sums: BTreeMap<Vec<u8>, [FieldElement; 3]> = BTreeMap::new();
                let zero = plan.field.zero();
                for o in &sends {
                    if let SlotTag::Share { sharing, .. } = o.slot.tag {
                        let sums = oneway_sums
                            .entry(o.slot.path.clone())
                            .or_insert([zero; 3]);
                        sums[sharing as usize - 1] =
                            sums[sharing as usize - 1].add(&o.value);
                    }
                }
                FastRunner {
                    protocol,
                    message,
                    slot_values: sends.into_iter().map(|o| (o.slot, o.value)).collect(),
                    sums: BTreeMap::new(),
                    oneway_sums,
                    anchors: BTreeMap::new(),
                    state: None,
                    blinds: BTreeMap::new(),
                }
            }
            ProtocolUnderTest::TwoWay(plan) => {
                let mut tape = StreamTape::new(plan.field, 0, "receiver");
                let (sends, state) = round1_receiver::<FieldElement>(plan, &mut tape);
                let zero = plan.field.zero();
                let mut sums: BTreeMap<Vec<u8>, [[FieldElement; 3]; 4]> = BTreeMap::new();
                let mut anchors: BTreeMap<Vec<u8>, [[FieldElement; 3]; 4]> = BTreeMap::new();
                for o in &sends {
                    match o.slot.tag {
                        SlotTag::Rand { poly, point, .. } | SlotTag::Diff { poly, point } => {
                            let s = sums
                                .entry(o.slot.path.clone())
                                .or_insert([[zero; 3]; 4]);
                            let cell = &mut s[poly as usize - 1][point as usize - 1];
                            *cell = cell.add(&o.value);
                        }
                        SlotTag::Anchor { poly, copy } => {
                            let a = anchors
                                .entry(o.slot.path.clone())
                                .or_insert([[zero; 3]; 4]);
                            a[poly as usize - 1][copy as usize - 1] = o.value;
                        }
                        _ => {}
                    }
                }
                // The sender's blinding values per inductive node come from
                // the same stream a real run would use.
                let mut s_tape = StreamTape::new(plan.field, 0, "sender");
                let mut blinds = BTreeMap::new();
                fn walk_blinds(
                    node: &crate::twoway::TwNode,
                    tape: &mut StreamTape,
                    out: &mut BTreeMap<Vec<u8>, FieldElement>,
                ) {
                    if let crate::twoway::TwNode::Inductive { path, children } = node {
                        out.insert(path.clone(), tape.draw(path));
                        for c in children {
                            walk_blinds(c, tape, out);
                        }
                    }
                }
                walk_blinds(&plan.root, &mut s_tape, &mut blinds);
                FastRunner {
                    protocol,
                    message,
                    slot_values: sends.into_iter().map(|o| (o.slot, o.value)).collect(),
                    sums,
                    oneway_sums: BTreeMap::new(),
                    anchors,
                    state: Some(state),
                    blinds,
                }
            }
        }
    }

    /// Decodes with the given slots replaced.
    fn run_patched(
        &self,
        script: &[(SlotId, u64)],
    ) -> Result<FieldElement, crate::error::DecodeFailure> {
        match self.protocol {
            ProtocolUnderTest::OneWay(plan) => {
                // Apply deltas to the affected sharing sums, then decode.
                let mut sums = self.oneway_sums.clone();
                for (slot, v) in script {
                    let old = self.slot_values[slot];
                    let SlotTag::Share { sharing, .. } = slot.tag else {
                        unreachable!("one-round slots are shares");
                    };
                    let cell = &mut sums.get_mut(&slot.path).unwrap()[sharing as usize - 1];
                    *cell = cell.add(&plan.field.elem(*v)).sub(&old);
                }
                decode_oneway_from_sums(&plan.root, &sums)
            }
            ProtocolUnderTest::TwoWay(plan) => {
                let field = plan.field;
                // Per-leaf scratch aggregates, patched where the script hits.
                let mut patched: BTreeMap<&[u8], ([[FieldElement; 3]; 4], [[FieldElement; 3]; 4])> =
                    BTreeMap::new();
                for (slot, v) in script {
                    let old = self.slot_values[slot];
                    let entry = patched.entry(&slot.path).or_insert_with(|| {
                        (self.sums[&slot.path], self.anchors[&slot.path])
                    });
                    match slot.tag {
                        SlotTag::Rand { poly, point, .. } | SlotTag::Diff { poly, point } => {
                            let cell = &mut entry.0[poly as usize - 1][point as usize - 1];
                            *cell = cell.add(&field.elem(*v)).sub(&old);
                        }
                        SlotTag::Anchor { poly, copy } => {
                            entry.1[poly as usize - 1][copy as usize - 1] = field.elem(*v);
                        }
                        _ => unreachable!("first-phase slots only"),
                    }
                }
                self.decode_tw_node(field, &plan.root, self.message, &patched)
            }
        }
    }

    fn decode_tw_node(
        &self,
        field: Field,
        node: &crate::twoway::TwNode,
        m: FieldElement,
        patched: &BTreeMap<&[u8], ([[FieldElement; 3]; 4], [[FieldElement; 3]; 4])>,
    ) -> Result<FieldElement, crate::error::DecodeFailure> {
        match node {
            crate::twoway::TwNode::Base { path, .. } => {
                let (sums, anchors) = patched
                    .get(path.as_slice())
                    .copied()
                    .unwrap_or((self.sums[path], self.anchors[path]));
                let pbar = std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        if j < 3 {
                            sums[i][j]
                        } else {
                            crate::transport::majority3(
                                anchors[i][0],
                                anchors[i][1],
                                anchors[i][2],
                            )
                            .unwrap_or(anchors[i][0])
                        }
                    })
                });
                let agg = crate::twoway::LeafAggregates { pbar };
                let payload = crate::twoway::select_payload(field, m, &agg);
                crate::twoway::decode_leaf(&self.state.as_ref().unwrap().leaves[path], &payload)
            }
            crate::twoway::TwNode::Inductive { path, children } => {
                let r = self.blinds[path];
                let candidates: Vec<_> = children
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| {
                        let mj = m.add(&r.mul(&field.elem(idx as u64 + 1)));
                        (idx as u64 + 1, self.decode_tw_node(field, c, mj, patched))
                    })
                    .collect();
                crate::compose::decode_shifted_candidates(field, &candidates)
            }
        }
    }
}

/// Decodes a one-round plan from patched sharing sums: majority of the
/// three sums at each leaf, line recovery at each inductive node. This is
/// the sum-level view of `receive_oneway`, which only ever reads the sums.
fn decode_oneway_from_sums(
    node: &PlanNode,
    sums: &BTreeMap<Vec<u8>, [FieldElement; 3]>,
) -> Result<FieldElement, crate::error::DecodeFailure> {
    match node {
        PlanNode::Base { path, .. } => {
            let s = &sums[path];
            if s[0] == s[1] || s[0] == s[2] {
                Ok(s[0])
            } else if s[1] == s[2] {
                Ok(s[1])
            } else {
                Err(crate::error::DecodeFailure::NoMajorityValue)
            }
        }
        PlanNode::Inductive { children, .. } => {
            let field = sums.values().next().expect("leaves exist")[0].field();
            let candidates: Vec<_> = children
                .iter()
                .enumerate()
                .map(|(idx, c)| (idx as u64 + 1, decode_oneway_from_sums(c, sums)))
                .collect();
            crate::compose::decode_shifted_candidates(field, &candidates)
        }
    }
}

/// Randomized reliability over seeded trials: random pair, random script or
/// noise, random tape. Used for composed plans whose effect space is too
/// large to enumerate.
pub fn verify_reliability_randomized(
    protocol: &ProtocolUnderTest<'_>,
    structure: &AdversaryStructure,
    trials: u64,
    seed: u64,
) -> ReliabilityReport {
    let field = protocol.field();
    let p = field.modulus();
    let slots = protocol.round1_slots();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for t in 0..trials {
        let m = field.elem(rng.gen_range(0..p));
        let pair = rng.gen_range(0..structure.len());
        let disrupt = structure.pair(pair).disrupt;
        let strategy = if rng.gen_bool(0.3) {
            StrategyHandle::noise(pair)
        } else {
            let mut script: BTreeMap<SlotId, Disruption> = BTreeMap::new();
            for (s, w) in &slots {
                if disrupt.contains(*w) && rng.gen_bool(0.5) {
                    script.insert(s.clone(), Disruption::Value(field.random(&mut rng)));
                }
            }
            StrategyHandle::scripted(pair, script)
        };
        let run_seed = rng.gen();
        let out = protocol
            .run(structure, m, run_seed, strategy)
            .expect("in-structure strategies cannot fault");
        if !out.reliable() && failures.len() < 16 {
            failures.push(ReliabilityFailure {
                pair,
                message: m.value(),
                detail: format!("trial {t} seed {run_seed} decoded {:?}", out.decoded),
            });
        }
    }
    ReliabilityReport {
        trials,
        failures,
        exhaustive: false,
        mode: "randomized".into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossValidationReport {
    pub cases: u64,
    pub disagreements: Vec<String>,
}

impl CrossValidationReport {
    pub fn ok(&self) -> bool {
        self.disagreements.is_empty()
    }
}

/// Checks the structural deciders against the closed-form conditions on
/// every threshold structure with up to `max_threshold_wires` wires and
/// every fixed-size structure with up to `max_fixed_wires` wires.
pub fn crossvalidate_feasibility(
    max_threshold_wires: usize,
    max_fixed_wires: usize,
) -> CrossValidationReport {
    let mut cases = 0u64;
    let mut disagreements = Vec::new();
    let mut check = |name: String, structural: bool, classic: bool| {
        cases += 1;
        if structural != classic {
            disagreements.push(format!(
                "{name}: structural {structural}, closed form {classic}"
            ));
        }
    };

    for n in 1..=max_threshold_wires {
        for k in 0..=n {
            let s = AdversaryStructure::threshold(n, k).unwrap();
            check(
                format!("threshold n={n} k={k} oneway"),
                feasible_oneway(&s).feasible,
                feasible_classic(ClassicKind::ThresholdOneway { n, k }),
            );
            check(
                format!("threshold n={n} k={k} twoway"),
                feasible_twoway_completely_oblivious(&s).feasible,
                feasible_classic(ClassicKind::ThresholdTwoway { n, k }),
            );
            // With disrupt equal to listen, the two-round condition
            // coincides with the two-way one.
            check(
                format!("threshold n={n} k={k} tworound"),
                feasible_tworound_non_completely_oblivious(&s).feasible,
                feasible_classic(ClassicKind::ThresholdTwoway { n, k }),
            );
        }
    }

    for n in 1..=max_fixed_wires {
        for d in 0..=n {
            for l in 0..=n {
                let s = AdversaryStructure::fixed_sizes(n, d, l).unwrap();
                check(
                    format!("fixed n={n} d={d} l={l} oneway"),
                    feasible_oneway(&s).feasible,
                    feasible_classic(ClassicKind::FixedSizesOneway { n, d, l }),
                );
                check(
                    format!("fixed n={n} d={d} l={l} twoway"),
                    feasible_twoway_completely_oblivious(&s).feasible,
                    feasible_classic(ClassicKind::FixedSizesTwoway { n, d, l }),
                );
            }
        }
    }

    CrossValidationReport {
        cases,
        disagreements,
    }
}

/// Negative control: rebuilds the plan with every base-leaf share forced
/// onto one wire, so any pair disrupting that wire owns every sharing.
pub fn sabotage_oneway_reliability(plan: &OneWayPlan, wire: usize) -> OneWayPlan {
    let mut out = plan.clone();
    fn rewrite(node: &mut PlanNode, wire: usize) {
        match node {
            PlanNode::Base { wires, .. } => *wires = [[wire; 3]; 3],
            PlanNode::Inductive { children, .. } => {
                children.iter_mut().for_each(|c| rewrite(c, wire))
            }
        }
    }
    rewrite(&mut out.root, wire);
    out
}

/// Negative control: routes every share of the first sharing over one wire,
/// handing its sum, the message, to anyone listening there.
pub fn sabotage_oneway_privacy(plan: &OneWayPlan, wire: usize) -> OneWayPlan {
    let mut out = plan.clone();
    fn rewrite(node: &mut PlanNode, wire: usize) {
        match node {
            PlanNode::Base { wires, .. } => wires[0] = [wire; 3],
            PlanNode::Inductive { children, .. } => {
                children.iter_mut().for_each(|c| rewrite(c, wire))
            }
        }
    }
    rewrite(&mut out.root, wire);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oneway::plan_oneway;
    use crate::twoway::plan_twoway;

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    fn ws(n: usize, labels: &[usize]) -> WireSet {
        WireSet::from_labels(n, labels).unwrap()
    }

    #[test]
    fn crossvalidation_small() {
        let report = crossvalidate_feasibility(4, 3);
        assert!(report.ok(), "{:?}", report.disagreements);
        assert!(report.cases > 30);
    }

    #[test]
    fn oneway_reliability_exhaustive_base() {
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        let report = verify_reliability(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &ReliabilityBudget::default(),
        );
        assert!(report.ok(), "{:?}", report.failures.first());
        assert!(report.exhaustive);
        assert!(report.trials > 100);
    }

    #[test]
    fn oneway_reliability_composed() {
        let s = AdversaryStructure::threshold(4, 1).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        let report = verify_reliability(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &ReliabilityBudget::default(),
        );
        assert!(report.ok(), "{:?}", report.failures.first());
        assert!(report.exhaustive, "classes keep composed plans exhaustive: {}", report.mode);
    }

    #[test]
    fn twoway_reliability_exhaustive_base() {
        let s = AdversaryStructure::threshold(3, 1).unwrap();
        let plan = plan_twoway(&s, f5()).unwrap();
        let report = verify_reliability(
            &ProtocolUnderTest::TwoWay(&plan),
            &s,
            &ReliabilityBudget::default(),
        );
        assert!(report.ok(), "{:?}", report.failures.first());
        assert!(report.exhaustive);
    }

    #[test]
    fn sabotaged_reliability_is_detected() {
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        // Cram everything onto wire 1, which pair 0 disrupts.
        let bad = sabotage_oneway_reliability(&plan, 0);
        let report = verify_reliability(
            &ProtocolUnderTest::OneWay(&bad),
            &s,
            &ReliabilityBudget::default(),
        );
        assert!(!report.ok(), "sabotage must be caught");
    }

    #[test]
    fn randomized_reliability_composed_twoway() {
        let s = AdversaryStructure::threshold(4, 1).unwrap();
        let plan = plan_twoway(&s, f5()).unwrap();
        let report = verify_reliability_randomized(
            &ProtocolUnderTest::TwoWay(&plan),
            &s,
            2_000,
            42,
        );
        assert!(report.ok(), "{:?}", report.failures.first());
        assert_eq!(report.trials, 2_000);
    }

    #[test]
    fn empty_structure_reliability() {
        let s = AdversaryStructure::general(3, &[]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        let report = verify_reliability(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &ReliabilityBudget::default(),
        );
        assert!(report.ok());
        assert_eq!(report.mode, "vacuous");
    }
}
