//! The one-round protocol.
//!
//! Base case (at most three pairs, padded with empty pairs): the sender
//! splits m three times into additive shares r1, r2, m - r1 - r2. Sharing s
//! travels on wires avoiding both disrupt sets of the other two pairs, and
//! its k-th share additionally avoids listen set k. Whichever pair the
//! adversary chose, at least two sharing sums survive intact and agree, and
//! every pair misses at least one share of each sharing.
//!
//! Larger structures recurse: four sub-plans, each built for the structure
//! with one pair removed, carry m + j*r for j = 1..4. At most one sub-plan
//! is compromised, so the receiver fits a line through the candidates.
//! Everything still fits in a single phase.

use std::collections::BTreeMap;

use crate::adversary::{AdversaryPair, AdversaryStructure, WireSet};
use crate::compose::decode_shifted_candidates;
use crate::error::{DecodeFailure, ExecError, PlanError};
use crate::feasibility::feasible_oneway;
use crate::field::{Field, FieldElement};
use crate::strategy::StrategyHandle;
use crate::tape::{ProtocolValue, StreamTape, Tape};
use crate::transport::{Direction, Engine, ExecutionOutcome, Outgoing, SlotId, SlotTag};

/// Recursion cap: plans grow like 4^(pairs - 3).
pub const MAX_PAIRS: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanNode {
    Base {
        path: Vec<u8>,
        /// wires[s][k]: the wire carrying share k of sharing s, 0-based.
        wires: [[usize; 3]; 3],
    },
    Inductive {
        path: Vec<u8>,
        /// Exactly four children; child j omits pair j of this node's list.
        children: Vec<PlanNode>,
    },
}

impl PlanNode {
    fn leaves(&self) -> usize {
        match self {
            PlanNode::Base { .. } => 1,
            PlanNode::Inductive { children, .. } => children.iter().map(|c| c.leaves()).sum(),
        }
    }

    fn tape_len(&self) -> usize {
        match self {
            PlanNode::Base { .. } => 6,
            PlanNode::Inductive { children, .. } => {
                1 + children.iter().map(|c| c.tape_len()).sum::<usize>()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneWayPlan {
    pub structure: AdversaryStructure,
    pub field: Field,
    pub root: PlanNode,
    /// True when built without the feasibility check, with relaxed wire
    /// selection. Used to exhibit attacks on infeasible structures.
    pub forced: bool,
}

impl OneWayPlan {
    pub fn leaves(&self) -> usize {
        self.root.leaves()
    }

    /// Number of sender tape draws one execution consumes.
    pub fn tape_len(&self) -> usize {
        self.root.tape_len()
    }

    /// Every slot this plan transmits, with its wire.
    pub fn slots(&self) -> Vec<(SlotId, usize)> {
        fn walk(node: &PlanNode, out: &mut Vec<(SlotId, usize)>) {
            match node {
                PlanNode::Base { path, wires } => {
                    for s in 0..3 {
                        for k in 0..3 {
                            out.push((
                                SlotId::new(
                                    path,
                                    SlotTag::Share {
                                        sharing: s as u8 + 1,
                                        share: k as u8 + 1,
                                    },
                                ),
                                wires[s][k],
                            ));
                        }
                    }
                }
                PlanNode::Inductive { children, .. } => {
                    for c in children {
                        walk(c, out);
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }
}

/// Pads a pair list up to three entries with empty pairs.
pub(crate) fn padded3(pairs: &[AdversaryPair], wires: usize) -> [AdversaryPair; 3] {
    let empty = AdversaryPair {
        disrupt: WireSet::empty(wires),
        listen: WireSet::empty(wires),
    };
    [
        pairs.first().copied().unwrap_or(empty),
        pairs.get(1).copied().unwrap_or(empty),
        pairs.get(2).copied().unwrap_or(empty),
    ]
}

/// Lowest wire avoiding `avoid`. Forced plans fall back to the weaker
/// `forced_avoid` constraint (and then to wire 0) instead of refusing, so an
/// attack can still run a protocol on a structure where the constraint is
/// unsatisfiable.
pub(crate) fn pick_wire(
    wires: usize,
    avoid: WireSet,
    forced_avoid: WireSet,
    forced: bool,
    what: &str,
) -> Result<usize, PlanError> {
    if let Some(w) = (0..wires).find(|&w| !avoid.contains(w)) {
        return Ok(w);
    }
    if forced {
        return Ok((0..wires).find(|&w| !forced_avoid.contains(w)).unwrap_or(0));
    }
    Err(PlanError::NoWireAvailable {
        constraint: what.to_string(),
    })
}

fn build_node(
    pairs: &[AdversaryPair],
    wires: usize,
    path: Vec<u8>,
    forced: bool,
) -> Result<PlanNode, PlanError> {
    if pairs.len() <= 3 {
        let p = padded3(pairs, wires);
        let mut chosen = [[0usize; 3]; 3];
        for s in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&a| a != s).collect();
            let avoid_d = p[others[0]].disrupt.union(&p[others[1]].disrupt);
            for k in 0..3 {
                let avoid = avoid_d.union(&p[k].listen);
                chosen[s][k] = pick_wire(
                    wires,
                    avoid,
                    avoid_d,
                    forced,
                    &format!("sharing {} share {} at {:?}", s + 1, k + 1, path),
                )?;
            }
        }
        return Ok(PlanNode::Base {
            path,
            wires: chosen,
        });
    }
    let mut children = Vec::with_capacity(4);
    for j in 0..4 {
        let sub: Vec<AdversaryPair> = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, p)| *p)
            .collect();
        let mut child_path = path.clone();
        child_path.push(j as u8 + 1);
        children.push(build_node(&sub, wires, child_path, forced)?);
    }
    Ok(PlanNode::Inductive { path, children })
}

fn plan_checks(structure: &AdversaryStructure, field: Field) -> Result<(), PlanError> {
    if field.modulus() < 5 {
        return Err(PlanError::FieldTooSmall {
            modulus: field.modulus(),
        });
    }
    if structure.len() > MAX_PAIRS {
        return Err(PlanError::TooManyPairs {
            pairs: structure.len(),
            cap: MAX_PAIRS,
        });
    }
    Ok(())
}

/// Builds the one-round plan, refusing infeasible structures with the
/// covering witness.
pub fn plan_oneway(structure: &AdversaryStructure, field: Field) -> Result<OneWayPlan, PlanError> {
    plan_checks(structure, field)?;
    let report = feasible_oneway(structure);
    if !report.feasible {
        return Err(PlanError::Infeasible {
            setting: "oneway".into(),
            witness: format!("{:?}", report.witness.unwrap()),
        });
    }
    Ok(OneWayPlan {
        structure: structure.clone(),
        field,
        root: build_node(structure.pairs(), structure.wires(), Vec::new(), false)?,
        forced: false,
    })
}

/// Builds a plan without the feasibility gate, degrading wire choices where
/// constraints cannot be met. The result is deliberately breakable.
pub fn plan_oneway_forced(
    structure: &AdversaryStructure,
    field: Field,
) -> Result<OneWayPlan, PlanError> {
    plan_checks(structure, field)?;
    Ok(OneWayPlan {
        structure: structure.clone(),
        field,
        root: build_node(structure.pairs(), structure.wires(), Vec::new(), true)?,
        forced: true,
    })
}

/// Produces the single round of transmissions for message m.
///
/// Tape order per node, depth first: an inductive node draws its blinding
/// value r before descending into children 1..4; a base node draws r1, r2
/// for sharings 1, 2, 3 in order.
pub fn send_oneway<V: ProtocolValue>(
    plan: &OneWayPlan,
    m: &V,
    tape: &mut dyn Tape<V>,
) -> Vec<Outgoing<V>> {
    fn walk<V: ProtocolValue>(
        node: &PlanNode,
        m: &V,
        tape: &mut dyn Tape<V>,
        out: &mut Vec<Outgoing<V>>,
    ) {
        match node {
            PlanNode::Base { path, wires } => {
                for s in 0..3 {
                    let r1 = tape.draw(path);
                    let r2 = tape.draw(path);
                    let shares = [r1.clone(), r2.clone(), m.sub(&r1).sub(&r2)];
                    for (k, share) in shares.into_iter().enumerate() {
                        out.push(Outgoing {
                            wire: wires[s][k],
                            slot: SlotId::new(
                                path,
                                SlotTag::Share {
                                    sharing: s as u8 + 1,
                                    share: k as u8 + 1,
                                },
                            ),
                            value: share,
                            public: false,
                        });
                    }
                }
            }
            PlanNode::Inductive { path, children } => {
                let r = tape.draw(path);
                for (idx, child) in children.iter().enumerate() {
                    let mj = m.add(&r.mul_const(idx as u64 + 1));
                    walk(child, &mj, tape, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(&plan.root, m, tape, &mut out);
    out
}

/// Decodes the delivered slots back to the message.
pub fn receive_oneway(
    plan: &OneWayPlan,
    delivered: &BTreeMap<SlotId, FieldElement>,
) -> Result<FieldElement, DecodeFailure> {
    fn node_value(
        node: &PlanNode,
        field: Field,
        delivered: &BTreeMap<SlotId, FieldElement>,
    ) -> Result<FieldElement, DecodeFailure> {
        match node {
            PlanNode::Base { path, .. } => {
                let mut sums = Vec::with_capacity(3);
                for s in 0..3 {
                    let mut sum = field.zero();
                    for k in 0..3 {
                        let slot = SlotId::new(
                            path,
                            SlotTag::Share {
                                sharing: s as u8 + 1,
                                share: k as u8 + 1,
                            },
                        );
                        let v = delivered
                            .get(&slot)
                            .expect("transport conserves slots, so every share arrives");
                        sum = sum.add(v);
                    }
                    sums.push(sum);
                }
                // At least two sums agree for any in-structure adversary.
                if sums[0] == sums[1] || sums[0] == sums[2] {
                    Ok(sums[0])
                } else if sums[1] == sums[2] {
                    Ok(sums[1])
                } else {
                    Err(DecodeFailure::NoMajorityValue)
                }
            }
            PlanNode::Inductive { children, .. } => {
                let candidates: Vec<(u64, Result<FieldElement, DecodeFailure>)> = children
                    .iter()
                    .enumerate()
                    .map(|(idx, c)| (idx as u64 + 1, node_value(c, field, delivered)))
                    .collect();
                decode_shifted_candidates(field, &candidates)
            }
        }
    }
    node_value(&plan.root, plan.field, delivered)
}

/// One full seeded execution against the given adversary.
pub fn run_oneway(
    plan: &OneWayPlan,
    structure: &AdversaryStructure,
    m: FieldElement,
    seed: u64,
    strategy: StrategyHandle,
) -> Result<ExecutionOutcome, ExecError> {
    let mut tape = StreamTape::new(plan.field, seed, "sender");
    let sends = send_oneway(plan, &m, &mut tape);
    let mut engine = Engine::new(structure, strategy, plan.field, seed)?;
    let delivered = engine.exchange_round(Direction::SenderToReceiver, &sends)?;
    let decoded = receive_oneway(plan, &delivered);
    Ok(ExecutionOutcome {
        message: m,
        decoded,
        rounds: engine.rounds(),
        transcript: engine.transcript,
        view: engine.view,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::ObliviousnessMode;
    use crate::strategy::{Behavior, Disruption};
    use crate::tape::FlatTape;

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    fn f11() -> Field {
        Field::new(11).unwrap()
    }

    fn ws(n: usize, labels: &[usize]) -> WireSet {
        WireSet::from_labels(n, labels).unwrap()
    }

    #[test]
    fn plan_shapes() {
        let two = AdversaryStructure::general(3, &[ws(3, &[1]), ws(3, &[2])]).unwrap();
        let plan = plan_oneway(&two, f5()).unwrap();
        assert!(matches!(plan.root, PlanNode::Base { .. }));
        assert_eq!(plan.slots().len(), 9);

        let four = AdversaryStructure::threshold(4, 1).unwrap();
        let plan = plan_oneway(&four, f5()).unwrap();
        match &plan.root {
            PlanNode::Inductive { children, .. } => {
                assert_eq!(children.len(), 4);
                assert!(children.iter().all(|c| matches!(c, PlanNode::Base { .. })));
            }
            _ => panic!("expected an inductive root"),
        }
        assert_eq!(plan.leaves(), 4);
        assert_eq!(plan.tape_len(), 1 + 4 * 6);
    }

    #[test]
    fn five_pairs_make_sixteen_leaves() {
        // 4^(5-3) leaves once two inductive levels unfold.
        let sets = [
            ws(5, &[1]),
            ws(5, &[2]),
            ws(5, &[3]),
            ws(5, &[4]),
            ws(5, &[5]),
        ];
        let s = AdversaryStructure::general(5, &sets).unwrap();
        let plan = plan_oneway(&s, f5()).unwrap();
        assert_eq!(plan.leaves(), 16);
    }

    #[test]
    fn base_case_share_identity() {
        let s = AdversaryStructure::threshold(3, 1).unwrap();
        // Infeasible for one round, so force-plan just to exercise sending.
        let plan = plan_oneway_forced(&s, f11()).unwrap();
        let m = f11().elem(4);
        let mut tape = FlatTape::new(f11(), vec![1, 2, 0, 0, 0, 0]);
        let sends = send_oneway(&plan, &m, &mut tape);
        assert_eq!(sends.len(), 9);
        // First sharing: r1 = 1, r2 = 2, third share = 4 - 1 - 2 = 1.
        assert_eq!(sends[2].value, f11().elem(1));
        for s_idx in 0..3 {
            let sum = sends[s_idx * 3..s_idx * 3 + 3]
                .iter()
                .fold(f11().zero(), |acc, o| acc.add(&o.value));
            assert_eq!(sum, m, "every sharing sums to the message");
        }
    }

    #[test]
    fn inductive_children_carry_shifted_messages() {
        let s = AdversaryStructure::threshold(4, 1).unwrap();
        let plan = plan_oneway(&s, f11()).unwrap();
        let m = f11().elem(5);
        // First draw is the blinding value r = 2; children use zeros.
        let mut values = vec![2u64];
        values.extend(std::iter::repeat(0).take(24));
        let mut tape = FlatTape::new(f11(), values);
        let sends = send_oneway(&plan, &m, &mut tape);
        assert_eq!(sends.len(), 36);
        // Child j's sharings each sum to m + 2j: 7, 9, 0, 2.
        for (j, want) in [(1u8, 7u64), (2, 9), (3, 0), (4, 2)] {
            let child: Vec<_> = sends.iter().filter(|o| o.slot.path == vec![j]).collect();
            assert_eq!(child.len(), 9);
            for sh in 1..=3u8 {
                let sum = child
                    .iter()
                    .filter(
                        |o| matches!(o.slot.tag, SlotTag::Share { sharing, .. } if sharing == sh),
                    )
                    .fold(f11().zero(), |acc, o| acc.add(&o.value));
                assert_eq!(sum, f11().elem(want));
            }
        }
    }

    #[test]
    fn receive_majority_of_three_sums() {
        // Build a 1-leaf plan and hand-feed delivered shares so the sums are
        // (4, 4, 9): majority 4.
        let s = AdversaryStructure::general(2, &[ws(2, &[1])]).unwrap();
        let plan = plan_oneway(&s, f11()).unwrap();
        let mut delivered = BTreeMap::new();
        let put = |d: &mut BTreeMap<SlotId, FieldElement>, sh: u8, vals: [u64; 3]| {
            for (k, v) in vals.into_iter().enumerate() {
                d.insert(
                    SlotId::new(
                        &[],
                        SlotTag::Share {
                            sharing: sh,
                            share: k as u8 + 1,
                        },
                    ),
                    f11().elem(v),
                );
            }
        };
        put(&mut delivered, 1, [1, 1, 2]);
        put(&mut delivered, 2, [0, 0, 4]);
        put(&mut delivered, 3, [3, 3, 3]);
        assert_eq!(receive_oneway(&plan, &delivered).unwrap(), f11().elem(4));

        put(&mut delivered, 2, [0, 0, 3]);
        put(&mut delivered, 3, [0, 0, 1]);
        assert!(matches!(
            receive_oneway(&plan, &delivered),
            Err(DecodeFailure::NoMajorityValue)
        ));
    }

    #[test]
    fn end_to_end_reliable_under_noise() {
        let f = f5();
        for s in [
            AdversaryStructure::threshold(4, 1).unwrap(),
            AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap(),
        ] {
            let plan = plan_oneway(&s, f).unwrap();
            for m in 0..5 {
                for pair in 0..s.len() {
                    for seed in 0..4 {
                        let out =
                            run_oneway(&plan, &s, f.elem(m), seed, StrategyHandle::noise(pair))
                                .unwrap();
                        assert_eq!(out.rounds, 1, "one phase only");
                        assert!(out.reliable(), "m={m} pair={pair} seed={seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn padding_is_transparent() {
        let n = 4;
        let sets = [ws(n, &[1]), ws(n, &[2])];
        let two = AdversaryStructure::general(n, &sets).unwrap();
        let padded = AdversaryStructure::new(
            n,
            two.pairs()
                .iter()
                .copied()
                .chain([AdversaryPair {
                    disrupt: WireSet::empty(n),
                    listen: WireSet::empty(n),
                }])
                .collect(),
            ObliviousnessMode::CompletelyOblivious,
        )
        .unwrap();
        let f = f5();
        let p1 = plan_oneway(&two, f).unwrap();
        let p2 = plan_oneway(&padded, f).unwrap();
        assert_eq!(p1.root, p2.root);
        let o1 = run_oneway(&p1, &two, f.elem(3), 11, StrategyHandle::noise(1)).unwrap();
        let o2 = run_oneway(&p2, &padded, f.elem(3), 11, StrategyHandle::noise(1)).unwrap();
        assert_eq!(o1.transcript, o2.transcript);
    }

    #[test]
    fn infeasible_structures_are_refused_with_witness() {
        let s = AdversaryStructure::threshold(3, 1).unwrap();
        match plan_oneway(&s, f5()) {
            Err(PlanError::Infeasible { setting, witness }) => {
                assert_eq!(setting, "oneway");
                assert!(witness.contains("DisruptDisruptListen"));
            }
            other => panic!("expected infeasible refusal, got {other:?}"),
        }
    }

    #[test]
    fn scripted_single_corruption_still_decodes() {
        let f = f11();
        let s = AdversaryStructure::general(4, &[ws(4, &[1]), ws(4, &[2]), ws(4, &[3])]).unwrap();
        let plan = plan_oneway(&s, f).unwrap();
        // Find a slot on a wire pair 0 can disrupt and flip it.
        let target = plan
            .slots()
            .into_iter()
            .find(|(_, w)| s.pair(0).disrupt.contains(*w))
            .expect("pair 0 reaches some slot");
        let script = BTreeMap::from([(target.0, Disruption::Value(f.elem(9)))]);
        let out = run_oneway(
            &plan,
            &s,
            f.elem(6),
            3,
            StrategyHandle {
                pair: Some(0),
                behavior: Behavior::Scripted(script),
            },
        )
        .unwrap();
        assert!(out.reliable());
    }
}
