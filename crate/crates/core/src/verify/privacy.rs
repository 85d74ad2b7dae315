//! Perfect-privacy verification.
//!
//! Privacy is distribution equality: for a fixed pair and strategy, the
//! multiset of adversary views over all random tapes must be identical for
//! every message. Verdicts are exact. When a check cannot be afforded it
//! refuses; it never samples.
//!
//! One-round protocols are checked by full tape enumeration. Two-round
//! protocols have far too many tape coordinates for that, so they get an
//! exact conditional argument instead:
//!
//! 1. The first phase and the adversary's reaction never see the message
//!    (their signatures take no message), so the joint distribution of
//!    (round-one view, sender-side aggregates) is message independent.
//! 2. Running that pipeline symbolically over affine expressions yields the
//!    exact linear map from tape to (view, aggregates). Symbolic execution
//!    doubles as a proof of affineness: a nonlinear step cannot be typed,
//!    and a tape-dependent branch aborts the analysis.
//! 3. The full view is (round-one view v, payload(m, aggregates)). Group
//!    executions by v: conditioned on v, the aggregates are uniform over a
//!    coset of a fixed subspace U (the image under the aggregate map of the
//!    view map's kernel), and every image point carries the same number of
//!    tapes. View multisets are therefore message independent if and only
//!    if, for every such coset, the payload multiset over the coset is
//!    message independent. Distinct views sharing a coset share one check,
//!    so enumerating cosets of U inside the aggregates' reachable space
//!    covers every view without enumerating views.
//!
//! Step 3's coset sweep is exhaustive and exact; its size is p^rank of the
//! aggregate variation, which the budget gates.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::adversary::{AdversaryStructure, ObliviousnessMode};
use crate::error::ExecError;
use crate::field::FieldElement;
use crate::oneway::{send_oneway, OneWayPlan};
use crate::strategy::{Disruption, StrategyHandle};
use crate::tape::{for_each_tape, FlatTape};
use crate::transport::{Direction, Engine, Outgoing, SlotId};
use crate::twoway::{
    aggregate_leaf, round1_receiver, select_payload, LeafAggregates, TwoWayPlan,
};

use super::affine::{kernel_basis, AffineExpr, Subspace, SymbolicTape};

/// What a battery strategy writes on a disrupted slot.
///
/// `Noise` is a value the adversary cannot predict: it becomes one more
/// enumerated tape coordinate, visible to the adversary only when the mode
/// says replacement values are heard. `Const` is an adversary-chosen value,
/// which a completely oblivious adversary cannot have on wires it does not
/// hear; such picks are skipped as unlawful there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatteryValue {
    Noise,
    Const(u64),
}

#[derive(Debug, Clone)]
pub enum SlotPick {
    Passive,
    /// The lowest disruptable slot.
    First(BatteryValue),
    /// Every disruptable slot.
    All(BatteryValue),
    /// Exactly these slots (ignored where not disruptable).
    Explicit(Vec<(SlotId, BatteryValue)>),
}

#[derive(Debug, Clone)]
pub struct BatteryStrategy {
    pub name: String,
    pub pick: SlotPick,
}

impl BatteryStrategy {
    pub fn new(name: &str, pick: SlotPick) -> Self {
        BatteryStrategy {
            name: name.to_string(),
            pick,
        }
    }
}

/// Passive plus single-slot noise and constant disruptions.
pub fn default_battery() -> Vec<BatteryStrategy> {
    vec![
        BatteryStrategy::new("passive", SlotPick::Passive),
        BatteryStrategy::new("noise-first", SlotPick::First(BatteryValue::Noise)),
        BatteryStrategy::new("const0-first", SlotPick::First(BatteryValue::Const(0))),
    ]
}

/// The default battery plus blanket noise over every reachable slot.
pub fn extended_battery() -> Vec<BatteryStrategy> {
    let mut b = default_battery();
    b.push(BatteryStrategy::new(
        "noise-all",
        SlotPick::All(BatteryValue::Noise),
    ));
    b
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyCounterexample {
    pub pair: usize,
    pub strategy: String,
    pub message_a: u64,
    pub message_b: u64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PrivacyReport {
    pub equal: bool,
    pub counterexample: Option<PrivacyCounterexample>,
    /// One entry per (pair, strategy) actually checked.
    pub checks: Vec<String>,
    /// Strategies skipped as unlawful for a pair under the structure mode.
    pub skipped: Vec<String>,
}

/// An explicit refusal: the requested verification would exceed its budget
/// or fall outside what can be decided exactly.
#[derive(Debug, Clone, thiserror::Error)]
#[error("privacy verification refused: {reason}")]
pub struct PrivacyRefusal {
    pub reason: String,
}

#[derive(Debug, Clone, Copy)]
pub struct PrivacyBudget {
    /// Cap on enumerated assignments (tapes for one-round checks, coset
    /// points for two-round checks), per pair, strategy and message.
    pub max_enumeration: u64,
}

impl Default for PrivacyBudget {
    fn default() -> Self {
        PrivacyBudget {
            max_enumeration: 2_000_000,
        }
    }
}

/// Dispatches to the enumerative or the conditional-coset engine.
pub fn verify_privacy(
    protocol: &super::ProtocolUnderTest<'_>,
    structure: &AdversaryStructure,
    battery: &[BatteryStrategy],
    budget: &PrivacyBudget,
) -> Result<PrivacyReport, PrivacyRefusal> {
    match protocol {
        super::ProtocolUnderTest::OneWay(plan) => {
            verify_privacy_oneway(plan, structure, battery, budget)
        }
        super::ProtocolUnderTest::TwoWay(plan) => {
            verify_privacy_twoway(plan, structure, battery, budget)
        }
    }
}

/// Resolved disruption plan of a battery strategy against one pair.
struct ResolvedPicks {
    /// (slot, value); `None` value means an enumerated noise coordinate.
    slots: Vec<(SlotId, Option<u64>)>,
}

fn resolve_picks(
    pick: &SlotPick,
    disruptable: &[(SlotId, usize)],
) -> Vec<(SlotId, BatteryValue)> {
    match pick {
        SlotPick::Passive => Vec::new(),
        SlotPick::First(v) => disruptable
            .iter()
            .map(|(s, _)| s.clone())
            .min()
            .map(|s| vec![(s, *v)])
            .unwrap_or_default(),
        SlotPick::All(v) => disruptable.iter().map(|(s, _)| (s.clone(), *v)).collect(),
        SlotPick::Explicit(list) => list
            .iter()
            .filter(|(s, _)| disruptable.iter().any(|(d, _)| d == s))
            .cloned()
            .collect(),
    }
}

/// Constant-valued picks are unlawful for a completely oblivious adversary
/// on wires it does not listen to: it could never know the value it wrote.
fn picks_lawful(
    structure: &AdversaryStructure,
    pair: usize,
    picks: &[(SlotId, BatteryValue)],
    slot_wires: &BTreeMap<SlotId, usize>,
) -> bool {
    if structure.mode() != ObliviousnessMode::CompletelyOblivious {
        return true;
    }
    let listen = structure.pair(pair).listen;
    picks.iter().all(|(slot, value)| match value {
        BatteryValue::Noise => true,
        BatteryValue::Const(_) => listen.contains(slot_wires[slot]),
    })
}

fn to_resolved(picks: Vec<(SlotId, BatteryValue)>) -> ResolvedPicks {
    ResolvedPicks {
        slots: picks
            .into_iter()
            .map(|(s, v)| match v {
                BatteryValue::Noise => (s, None),
                BatteryValue::Const(c) => (s, Some(c)),
            })
            .collect(),
    }
}

fn pow_checked(p: u64, k: usize, cap: u64) -> Option<u64> {
    let mut acc = 1u64;
    for _ in 0..k {
        acc = acc.checked_mul(p).filter(|&v| v <= cap)?;
    }
    Some(acc)
}

/// Full tape enumeration for the one-round protocol.
fn verify_privacy_oneway(
    plan: &OneWayPlan,
    structure: &AdversaryStructure,
    battery: &[BatteryStrategy],
    budget: &PrivacyBudget,
) -> Result<PrivacyReport, PrivacyRefusal> {
    let field = plan.field;
    let p = field.modulus();
    let slots = plan.slots();
    let slot_wires: BTreeMap<SlotId, usize> = slots.iter().cloned().collect();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();

    for pair in 0..structure.len() {
        let disrupt = structure.pair(pair).disrupt;
        let disruptable: Vec<(SlotId, usize)> = slots
            .iter()
            .filter(|(_, w)| disrupt.contains(*w))
            .cloned()
            .collect();
        for strategy in battery {
            let picks = resolve_picks(&strategy.pick, &disruptable);
            if !picks_lawful(structure, pair, &picks, &slot_wires) {
                skipped.push(format!("pair {pair} / {}", strategy.name));
                continue;
            }
            let picks = to_resolved(picks);
            let noise_dims = picks.slots.iter().filter(|(_, v)| v.is_none()).count();
            let dims = plan.tape_len() + noise_dims;
            let Some(tapes) = pow_checked(p, dims, budget.max_enumeration) else {
                return Err(PrivacyRefusal {
                    reason: format!(
                        "one-round enumeration needs p^{dims} tapes for pair {pair} / {}, budget {}",
                        strategy.name, budget.max_enumeration
                    ),
                });
            };

            let mut per_message: Vec<BTreeMap<Vec<u64>, u64>> = Vec::with_capacity(p as usize);
            let mut view_len: Option<usize> = None;
            for m in 0..p {
                let message = field.elem(m);
                let mut multiset: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
                for_each_tape(p, dims, |assignment| {
                    let mut tape =
                        FlatTape::new(field, assignment[..plan.tape_len()].to_vec());
                    let sends = send_oneway(plan, &message, &mut tape);
                    let script: BTreeMap<SlotId, Disruption> = picks
                        .slots
                        .iter()
                        .scan(plan.tape_len(), |noise_at, (slot, value)| {
                            let v = match value {
                                Some(c) => *c,
                                None => {
                                    let v = assignment[*noise_at];
                                    *noise_at += 1;
                                    v
                                }
                            };
                            Some((slot.clone(), Disruption::Value(field.elem(v))))
                        })
                        .collect();
                    let mut engine =
                        Engine::new(structure, StrategyHandle::scripted(pair, script), field, 0)
                            .expect("pair index is in range");
                    engine
                        .exchange_round(Direction::SenderToReceiver, &sends)
                        .expect("battery scripts stay within the disrupt set");
                    let fp = engine.view.fingerprint();
                    match view_len {
                        None => view_len = Some(fp.len()),
                        Some(l) => debug_assert_eq!(l, fp.len(), "view shape must be fixed"),
                    }
                    *multiset.entry(fp).or_insert(0) += 1;
                });
                per_message.push(multiset);
            }
            if let Some((a, b)) = first_difference(&per_message) {
                return Ok(PrivacyReport {
                    equal: false,
                    counterexample: Some(PrivacyCounterexample {
                        pair,
                        strategy: strategy.name.clone(),
                        message_a: a,
                        message_b: b,
                        detail: format!("view multisets differ over {tapes} tapes"),
                    }),
                    checks,
                    skipped,
                });
            }
            checks.push(format!(
                "pair {pair} / {}: {tapes} tapes per message",
                strategy.name
            ));
        }
    }
    Ok(PrivacyReport {
        equal: true,
        counterexample: None,
        checks,
        skipped,
    })
}

fn first_difference(per_message: &[BTreeMap<Vec<u64>, u64>]) -> Option<(u64, u64)> {
    for a in 0..per_message.len() {
        for b in a + 1..per_message.len() {
            if per_message[a] != per_message[b] {
                return Some((a as u64, b as u64));
            }
        }
    }
    None
}

/// Conditional-coset verification for the two-round protocol.
fn verify_privacy_twoway(
    plan: &TwoWayPlan,
    structure: &AdversaryStructure,
    battery: &[BatteryStrategy],
    budget: &PrivacyBudget,
) -> Result<PrivacyReport, PrivacyRefusal> {
    if plan.leaves() != 1 {
        return Err(PrivacyRefusal {
            reason: format!(
                "two-round privacy verification handles single-leaf plans; this one has {} leaves",
                plan.leaves()
            ),
        });
    }
    let field = plan.field;
    let p = field.modulus();
    let slots = plan.round1_slots();
    let slot_wires: BTreeMap<SlotId, usize> = slots.iter().cloned().collect();
    let mode = structure.mode();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();

    for pair in 0..structure.len() {
        let disrupt = structure.pair(pair).disrupt;
        let listen = structure.pair(pair).listen;
        let disruptable: Vec<(SlotId, usize)> = slots
            .iter()
            .filter(|(_, w)| disrupt.contains(*w))
            .cloned()
            .collect();
        for strategy in battery {
            let picks = resolve_picks(&strategy.pick, &disruptable);
            if !picks_lawful(structure, pair, &picks, &slot_wires) {
                skipped.push(format!("pair {pair} / {}", strategy.name));
                continue;
            }
            let picks = to_resolved(picks);

            // Symbolic first phase. Tape variables: receiver draws first,
            // then one per noise slot.
            let mut sym_tape = SymbolicTape::new(field);
            let (sends, _state) = round1_receiver::<AffineExpr>(plan, &mut sym_tape);
            let receiver_dims = sym_tape.vars_used();
            let mut replacements: BTreeMap<SlotId, AffineExpr> = BTreeMap::new();
            for (slot, value) in &picks.slots {
                let expr = match value {
                    Some(c) => AffineExpr::constant(field, field.elem(*c)),
                    None => sym_tape.fresh(),
                };
                replacements.insert(slot.clone(), expr);
            }
            let dims = sym_tape.vars_used();

            // Round-one view coordinates, in the transport engine's order:
            // originals heard by (wire, slot), then replacements it knows
            // by slot when the mode reveals them.
            let mut heard: Vec<&Outgoing<AffineExpr>> = sends.iter().collect();
            heard.sort_by(|a, b| (a.wire, &a.slot).cmp(&(b.wire, &b.slot)));
            let mut view_coords: Vec<AffineExpr> = Vec::new();
            for o in heard {
                let visible = listen.contains(o.wire)
                    || (mode == ObliviousnessMode::NonOblivious && disrupt.contains(o.wire));
                if visible {
                    view_coords.push(o.value.clone());
                }
            }
            if mode != ObliviousnessMode::CompletelyOblivious {
                for expr in replacements.values() {
                    view_coords.push(expr.clone());
                }
            }

            // Delivered slots and sender aggregates, symbolically.
            let delivered: BTreeMap<SlotId, AffineExpr> = sends
                .iter()
                .map(|o| {
                    let v = replacements.get(&o.slot).unwrap_or(&o.value).clone();
                    (o.slot.clone(), v)
                })
                .collect();
            let leaves = plan.base_leaves();
            let agg = match aggregate_leaf(&leaves[0], &delivered) {
                Ok(a) => a,
                Err(ExecError::SymbolicUndecidable) => {
                    return Err(PrivacyRefusal {
                        reason: format!(
                            "pair {pair} / {}: aggregate majority depends on hidden randomness",
                            strategy.name
                        ),
                    })
                }
                Err(e) => panic!("symbolic aggregation failed: {e}"),
            };
            let agg_exprs: Vec<&AffineExpr> = agg.pbar.iter().flatten().collect();

            // U: how the aggregates move while the view stays fixed.
            let view_rows: Vec<Vec<u64>> =
                view_coords.iter().map(|e| e.row(dims)).collect();
            let kernel = kernel_basis(field, &view_rows, dims);
            let apply = |t: &[u64]| -> Vec<u64> {
                agg_exprs
                    .iter()
                    .map(|e| {
                        e.row(dims)
                            .iter()
                            .zip(t)
                            .fold(0u64, |acc, (c, x)| (acc + c * x) % p)
                    })
                    .collect()
            };
            let mut u_space = Subspace::empty(field, 16);
            for k in &kernel {
                u_space.insert(&apply(k));
            }
            // W: everything the aggregates reach as the tape varies.
            let mut w_space = Subspace::empty(field, 16);
            for c in 0..dims {
                let mut unit = vec![0u64; dims];
                unit[c] = 1;
                w_space.insert(&apply(&unit));
            }
            // Coset directions: a complement Q of U inside W.
            let mut q_dirs: Vec<Vec<u64>> = Vec::new();
            {
                let mut ext = u_space.clone();
                for w in w_space.basis() {
                    if ext.insert(w) {
                        q_dirs.push(w.clone());
                    }
                }
            }
            let mut q_space = Subspace::empty(field, 16);
            for q in &q_dirs {
                q_space.insert(q);
            }

            let total_rank = u_space.rank() + q_space.rank();
            let Some(points) = pow_checked(p, total_rank, budget.max_enumeration) else {
                return Err(PrivacyRefusal {
                    reason: format!(
                        "coset sweep needs p^{total_rank} points for pair {pair} / {}, budget {}",
                        strategy.name, budget.max_enumeration
                    ),
                });
            };

            let p0: Vec<u64> = agg_exprs
                .iter()
                .map(|e| e.constant_term().value())
                .collect();

            // Every coset of U inside the reachable aggregate space: the
            // payload multiset over the coset must not depend on m.
            let mut failure: Option<(u64, u64)> = None;
            q_space.for_each_point(|rho| {
                if failure.is_some() {
                    return;
                }
                let mut per_message: Vec<Vec<Vec<u64>>> =
                    vec![Vec::new(); p as usize];
                u_space.for_each_point(|u| {
                    let point: Vec<u64> = p0
                        .iter()
                        .zip(rho.iter().zip(u))
                        .map(|(c, (r, uu))| (c + r + uu) % p)
                        .collect();
                    let aggregates = LeafAggregates {
                        pbar: std::array::from_fn(|i| {
                            std::array::from_fn(|j| field.elem(point[i * 4 + j]))
                        }),
                    };
                    for m in 0..p {
                        let payload = select_payload(field, field.elem(m), &aggregates);
                        let key: Vec<u64> =
                            payload.encode(field).iter().map(|e| e.value()).collect();
                        per_message[m as usize].push(key);
                    }
                });
                for msgs in per_message.iter_mut() {
                    msgs.sort();
                }
                for a in 0..per_message.len() {
                    for b in a + 1..per_message.len() {
                        if per_message[a] != per_message[b] {
                            failure = Some((a as u64, b as u64));
                            return;
                        }
                    }
                }
            });
            if let Some((a, b)) = failure {
                return Ok(PrivacyReport {
                    equal: false,
                    counterexample: Some(PrivacyCounterexample {
                        pair,
                        strategy: strategy.name.clone(),
                        message_a: a,
                        message_b: b,
                        detail: format!(
                            "payload multisets differ on a coset ({} points each)",
                            points / pow_checked(p, q_space.rank(), u64::MAX).unwrap_or(1)
                        ),
                    }),
                    checks,
                    skipped,
                });
            }

            // Symbolic model versus the transport engine on spot tapes.
            spot_check_symbolic(
                plan, structure, pair, &picks, receiver_dims, dims, &view_coords, &agg,
            );

            checks.push(format!(
                "pair {pair} / {}: {} cosets x {} points",
                strategy.name,
                pow_checked(p, q_space.rank(), u64::MAX).unwrap_or(0),
                pow_checked(p, u_space.rank(), u64::MAX).unwrap_or(0),
            ));
        }
    }
    Ok(PrivacyReport {
        equal: true,
        counterexample: None,
        checks,
        skipped,
    })
}

/// Replays a few concrete tapes through the real engine and compares the
/// round-one view and the broadcast payload with the symbolic predictions.
#[allow(clippy::too_many_arguments)]
fn spot_check_symbolic(
    plan: &TwoWayPlan,
    structure: &AdversaryStructure,
    pair: usize,
    picks: &ResolvedPicks,
    receiver_dims: usize,
    dims: usize,
    view_coords: &[AffineExpr],
    agg: &LeafAggregates<AffineExpr>,
) {
    let field = plan.field;
    let p = field.modulus();
    let mut rng = crate::tape::stream_rng(17, "privacy-spot-check");
    use rand::Rng;
    for _ in 0..3 {
        let assignment: Vec<u64> = (0..dims).map(|_| rng.gen_range(0..p)).collect();
        let message = field.random(&mut rng);

        let mut tape = FlatTape::new(field, assignment[..receiver_dims].to_vec());
        let (sends, _state) = round1_receiver::<FieldElement>(plan, &mut tape);
        let script: BTreeMap<SlotId, Disruption> = picks
            .slots
            .iter()
            .scan(receiver_dims, |noise_at, (slot, value)| {
                let v = match value {
                    Some(c) => *c,
                    None => {
                        let v = assignment[*noise_at];
                        *noise_at += 1;
                        v
                    }
                };
                Some((slot.clone(), Disruption::Value(field.elem(v))))
            })
            .collect();
        let mut engine = Engine::new(
            structure,
            StrategyHandle::scripted(pair, script),
            field,
            0,
        )
        .expect("pair index is in range");
        let delivered = engine
            .exchange_round(Direction::ReceiverToSender, &sends)
            .expect("battery scripts stay within the disrupt set");

        let engine_view: Vec<u64> = engine.view.fingerprint();
        let predicted_view: Vec<u64> = view_coords
            .iter()
            .map(|e| e.eval(&assignment).value())
            .collect();
        assert_eq!(
            engine_view, predicted_view,
            "symbolic view model diverged from the engine"
        );

        let leaves = plan.base_leaves();
        let concrete = aggregate_leaf(&leaves[0], &delivered)
            .expect("concrete aggregation cannot be undecidable");
        let predicted = LeafAggregates {
            pbar: std::array::from_fn(|i| {
                std::array::from_fn(|j| agg.pbar[i][j].eval(&assignment))
            }),
        };
        for i in 0..4 {
            assert_eq!(
                concrete.pbar[i], predicted.pbar[i],
                "symbolic aggregates diverged from the engine"
            );
        }
        let engine_payload = select_payload(field, message, &concrete);
        let predicted_payload = select_payload(field, message, &predicted);
        assert_eq!(engine_payload, predicted_payload);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversaryPair, WireSet};
    use crate::field::Field;
    use crate::oneway::{plan_oneway, plan_oneway_forced};
    use crate::transport::SlotTag;
    use crate::twoway::plan_twoway;
    use crate::verify::{sabotage_oneway_privacy, ProtocolUnderTest};

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    fn ws(n: usize, labels: &[usize]) -> WireSet {
        WireSet::from_labels(n, labels).unwrap()
    }

    #[test]
    fn oneway_privacy_holds_on_feasible_base() {
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        let report = verify_privacy(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &extended_battery(),
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(report.equal, "{:?}", report.counterexample);
        assert!(!report.checks.is_empty());
    }

    #[test]
    fn oneway_privacy_leak_is_detected() {
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        // All first-sharing shares onto wire 2, which pair 1 listens to.
        let bad = sabotage_oneway_privacy(&plan, 1);
        let report = verify_privacy(
            &ProtocolUnderTest::OneWay(&bad),
            &s,
            &default_battery(),
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(!report.equal);
        assert_eq!(report.counterexample.unwrap().pair, 1);
    }

    #[test]
    fn oneway_privacy_refuses_over_budget() {
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        let tiny = PrivacyBudget {
            max_enumeration: 100,
        };
        assert!(verify_privacy(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &default_battery(),
            &tiny
        )
        .is_err());
    }

    #[test]
    fn twoway_privacy_holds_on_threshold_base() {
        let s = AdversaryStructure::threshold(3, 1).unwrap();
        let plan = plan_twoway(&s, f5()).unwrap();
        let report = verify_privacy(
            &ProtocolUnderTest::TwoWay(&plan),
            &s,
            &default_battery(),
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(report.equal, "{:?}", report.counterexample);
    }

    /// The strengthening negative control: planning as if the adversary were
    /// completely oblivious, then running against one that hears what it
    /// writes, leaks through the case tag. A lucky constant on a pad whose
    /// sibling shares and anchor are all heard pins the masked value.
    #[test]
    fn unstrengthened_plan_leaks_against_hearing_adversary() {
        let s = AdversaryStructure::new(
            4,
            vec![
                AdversaryPair {
                    disrupt: ws(4, &[1]),
                    listen: ws(4, &[2]),
                },
                AdversaryPair {
                    disrupt: WireSet::empty(4),
                    listen: ws(4, &[1]),
                },
                AdversaryPair {
                    disrupt: WireSet::empty(4),
                    listen: ws(4, &[1]),
                },
            ],
            ObliviousnessMode::Oblivious,
        )
        .unwrap();
        let plan = plan_twoway(&s, f5()).unwrap();
        let battery = vec![BatteryStrategy::new(
            "lucky-pad",
            SlotPick::Explicit(vec![(
                SlotId::new(
                    &[],
                    SlotTag::Rand {
                        poly: 1,
                        point: 2,
                        share: 1,
                    },
                ),
                BatteryValue::Const(0),
            )]),
        )];
        let report = verify_privacy(
            &ProtocolUnderTest::TwoWay(&plan),
            &s,
            &battery,
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(!report.equal, "skipping the strengthening must leak");

        // The strengthened plan closes the leak: the dangerous slot is no
        // longer reachable, and what remains is private.
        let strong = s.strengthen().with_mode(ObliviousnessMode::Oblivious);
        let plan2 = plan_twoway(&strong, f5()).unwrap();
        let mut battery2 = default_battery();
        battery2.extend(battery);
        let report2 = verify_privacy(
            &ProtocolUnderTest::TwoWay(&plan2),
            &strong,
            &battery2,
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(report2.equal, "{:?}", report2.counterexample);
    }

    #[test]
    fn twoway_privacy_refuses_composed_plans() {
        let s = AdversaryStructure::threshold(4, 1).unwrap();
        let plan = plan_twoway(&s, f5()).unwrap();
        assert!(verify_privacy(
            &ProtocolUnderTest::TwoWay(&plan),
            &s,
            &default_battery(),
            &PrivacyBudget::default()
        )
        .is_err());
    }

    #[test]
    fn forced_oneway_plan_on_infeasible_structure_leaks() {
        // One-round transmission is impossible here; the forced plan must
        // leak to somebody.
        let s = AdversaryStructure::threshold(3, 1).unwrap();
        let plan = plan_oneway_forced(&s, f5()).unwrap();
        let report = verify_privacy(
            &ProtocolUnderTest::OneWay(&plan),
            &s,
            &default_battery(),
            &PrivacyBudget::default(),
        )
        .unwrap();
        assert!(!report.equal);
    }
}
