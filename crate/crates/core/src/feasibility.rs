//! Feasibility deciders for secure message transmission.
//!
//! Each setting reduces to a non-cover condition over the structure's
//! disrupt/listen sets. The deciders run the exhaustive search over pair
//! indices and, when transmission is impossible, return the first covering
//! witness in lexicographic index order so verdicts are reproducible and
//! independently re-checkable.

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryStructure, WireSet};

/// Which decider produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    /// One round, sender to receiver only.
    Oneway,
    /// Two rounds against a completely oblivious adversary.
    Twoway,
    /// Two rounds against an adversary that is not completely oblivious.
    TworoundNonCompletelyOblivious,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::Oneway => "oneway",
            Setting::Twoway => "twoway",
            Setting::TworoundNonCompletelyOblivious => "tworound_nco",
        }
    }
}

/// A concrete cover certifying infeasibility. Indices are 0-based positions
/// into the structure's pair list; `union` re-states the covered wire set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoverWitness {
    /// disrupt(i) ∪ disrupt(j) ∪ listen(k) covers all wires.
    DisruptDisruptListen { i: usize, j: usize, k: usize },
    /// disrupt(i) ∪ disrupt(j) covers all wires.
    DisruptDisrupt { i: usize, j: usize },
    /// disrupt(i) ∪ listen(j) covers all wires.
    DisruptListen { i: usize, j: usize },
    /// disrupt(i) ∪ disrupt(j) ∪ listen(j) covers all wires.
    DisruptDisruptListenSame { i: usize, j: usize },
}

impl CoverWitness {
    /// Recomputes the union this witness claims covers everything.
    pub fn union(&self, structure: &AdversaryStructure) -> WireSet {
        let p = |i: usize| structure.pair(i);
        match *self {
            CoverWitness::DisruptDisruptListen { i, j, k } => {
                p(i).disrupt.union(&p(j).disrupt).union(&p(k).listen)
            }
            CoverWitness::DisruptDisrupt { i, j } => p(i).disrupt.union(&p(j).disrupt),
            CoverWitness::DisruptListen { i, j } => p(i).disrupt.union(&p(j).listen),
            CoverWitness::DisruptDisruptListenSame { i, j } => {
                p(i).disrupt.union(&p(j).disrupt).union(&p(j).listen)
            }
        }
    }

    /// True iff the witness actually covers all wires of the structure.
    pub fn check(&self, structure: &AdversaryStructure) -> bool {
        self.union(structure).is_full()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub setting: Setting,
    pub feasible: bool,
    /// Present exactly when infeasible.
    pub witness: Option<CoverWitness>,
}

impl FeasibilityReport {
    fn feasible(setting: Setting) -> Self {
        FeasibilityReport {
            setting,
            feasible: true,
            witness: None,
        }
    }

    fn infeasible(setting: Setting, witness: CoverWitness) -> Self {
        FeasibilityReport {
            setting,
            feasible: false,
            witness: Some(witness),
        }
    }
}

/// One-way transmission is possible iff no disrupt(i) ∪ disrupt(j) ∪
/// listen(k) covers all wires. The two disrupt indices are an unordered
/// choice with repetition (i <= j) and k ranges freely, including k = i or
/// k = j.
pub fn feasible_oneway(structure: &AdversaryStructure) -> FeasibilityReport {
    let pairs = structure.pairs();
    for i in 0..pairs.len() {
        for j in i..pairs.len() {
            let dd = pairs[i].disrupt.union(&pairs[j].disrupt);
            for (k, pk) in pairs.iter().enumerate() {
                if dd.union(&pk.listen).is_full() {
                    return FeasibilityReport::infeasible(
                        Setting::Oneway,
                        CoverWitness::DisruptDisruptListen { i, j, k },
                    );
                }
            }
        }
    }
    FeasibilityReport::feasible(Setting::Oneway)
}

/// Two-way transmission against a completely oblivious adversary is possible
/// iff no disrupt(i) ∪ disrupt(j) covers all wires and no disrupt(i) ∪
/// listen(j) covers all wires (i = j allowed in both clauses).
pub fn feasible_twoway_completely_oblivious(
    structure: &AdversaryStructure,
) -> FeasibilityReport {
    let pairs = structure.pairs();
    for i in 0..pairs.len() {
        for j in i..pairs.len() {
            if pairs[i].disrupt.union(&pairs[j].disrupt).is_full() {
                return FeasibilityReport::infeasible(
                    Setting::Twoway,
                    CoverWitness::DisruptDisrupt { i, j },
                );
            }
        }
    }
    for (i, pi) in pairs.iter().enumerate() {
        for (j, pj) in pairs.iter().enumerate() {
            if pi.disrupt.union(&pj.listen).is_full() {
                return FeasibilityReport::infeasible(
                    Setting::Twoway,
                    CoverWitness::DisruptListen { i, j },
                );
            }
        }
    }
    FeasibilityReport::feasible(Setting::Twoway)
}

/// Two-round transmission against an adversary that is not completely
/// oblivious is possible iff no disrupt(i) ∪ disrupt(j) ∪ listen(j) covers
/// all wires. The listen index is tied to the second disrupt index; i = j is
/// allowed.
pub fn feasible_tworound_non_completely_oblivious(
    structure: &AdversaryStructure,
) -> FeasibilityReport {
    let pairs = structure.pairs();
    for (i, pi) in pairs.iter().enumerate() {
        for (j, pj) in pairs.iter().enumerate() {
            if pi.disrupt.union(&pj.disrupt).union(&pj.listen).is_full() {
                return FeasibilityReport::infeasible(
                    Setting::TworoundNonCompletelyOblivious,
                    CoverWitness::DisruptDisruptListenSame { i, j },
                );
            }
        }
    }
    FeasibilityReport::feasible(Setting::TworoundNonCompletelyOblivious)
}

/// Dispatches on the setting.
pub fn feasible(structure: &AdversaryStructure, setting: Setting) -> FeasibilityReport {
    match setting {
        Setting::Oneway => feasible_oneway(structure),
        Setting::Twoway => feasible_twoway_completely_oblivious(structure),
        Setting::TworoundNonCompletelyOblivious => {
            feasible_tworound_non_completely_oblivious(structure)
        }
    }
}

/// The classic closed-form conditions for the threshold and fixed-size
/// families, used to cross-validate the structural deciders.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicKind {
    /// n > 3k
    ThresholdOneway { n: usize, k: usize },
    /// n > 2k
    ThresholdTwoway { n: usize, k: usize },
    /// n > 2d + l
    FixedSizesOneway { n: usize, d: usize, l: usize },
    /// n > d + max(d, l)
    FixedSizesTwoway { n: usize, d: usize, l: usize },
}

pub fn feasible_classic(kind: ClassicKind) -> bool {
    match kind {
        ClassicKind::ThresholdOneway { n, k } => n > 3 * k,
        ClassicKind::ThresholdTwoway { n, k } => n > 2 * k,
        ClassicKind::FixedSizesOneway { n, d, l } => n > 2 * d + l,
        ClassicKind::FixedSizesTwoway { n, d, l } => n > d + d.max(l),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::{AdversaryPair, ObliviousnessMode};

    fn ws(n: usize, labels: &[usize]) -> WireSet {
        WireSet::from_labels(n, labels).unwrap()
    }

    #[test]
    fn oneway_thresholds() {
        let t41 = AdversaryStructure::threshold(4, 1).unwrap();
        assert!(feasible_oneway(&t41).feasible);

        let t31 = AdversaryStructure::threshold(3, 1).unwrap();
        let report = feasible_oneway(&t31);
        assert!(!report.feasible);
        let w = report.witness.unwrap();
        assert!(w.check(&t31));
        // Lexicographically first: disrupt {1}, disrupt {2}, listen {3}.
        assert_eq!(w, CoverWitness::DisruptDisruptListen { i: 0, j: 1, k: 2 });
    }

    #[test]
    fn oneway_two_pair_example() {
        // Pairs ({1,2},{1,4}) and ({1,2,3},{1}) on 4 wires: the second
        // disrupt set twice plus the first listen set covers everything.
        let s = AdversaryStructure::new(
            4,
            vec![
                AdversaryPair {
                    disrupt: ws(4, &[1, 2]),
                    listen: ws(4, &[1, 4]),
                },
                AdversaryPair {
                    disrupt: ws(4, &[1, 2, 3]),
                    listen: ws(4, &[1]),
                },
            ],
            ObliviousnessMode::Oblivious,
        )
        .unwrap();
        let report = feasible_oneway(&s);
        assert!(!report.feasible);
        assert!(report.witness.unwrap().check(&s));
    }

    #[test]
    fn twoway_thresholds_and_fixed_sizes() {
        let t31 = AdversaryStructure::threshold(3, 1).unwrap();
        assert!(feasible_twoway_completely_oblivious(&t31).feasible);

        let d422 = AdversaryStructure::fixed_sizes(4, 2, 2).unwrap();
        let report = feasible_twoway_completely_oblivious(&d422);
        assert!(!report.feasible);
        assert!(report.witness.unwrap().check(&d422));

        let d522 = AdversaryStructure::fixed_sizes(5, 2, 2).unwrap();
        assert!(feasible_twoway_completely_oblivious(&d522).feasible);
    }

    #[test]
    fn tworound_single_pair() {
        let pair = |n: usize| AdversaryPair {
            disrupt: ws(n, &[1]),
            listen: ws(n, &[2]),
        };
        let feasible3 = AdversaryStructure::new(3, vec![pair(3)], ObliviousnessMode::Oblivious)
            .unwrap();
        assert!(feasible_tworound_non_completely_oblivious(&feasible3).feasible);

        let infeasible2 =
            AdversaryStructure::new(2, vec![pair(2)], ObliviousnessMode::Oblivious).unwrap();
        let report = feasible_tworound_non_completely_oblivious(&infeasible2);
        assert!(!report.feasible);
        assert_eq!(
            report.witness.unwrap(),
            CoverWitness::DisruptDisruptListenSame { i: 0, j: 0 }
        );
    }

    #[test]
    fn tworound_fixed_sizes_boundary() {
        let s6 = AdversaryStructure::fixed_sizes(6, 2, 1).unwrap();
        assert!(feasible_tworound_non_completely_oblivious(&s6).feasible);
        let s5 = AdversaryStructure::fixed_sizes(5, 2, 1).unwrap();
        assert!(!feasible_tworound_non_completely_oblivious(&s5).feasible);
    }

    #[test]
    fn classic_inequalities() {
        assert!(feasible_classic(ClassicKind::ThresholdOneway { n: 7, k: 2 }));
        assert!(feasible_classic(ClassicKind::FixedSizesOneway { n: 6, d: 2, l: 1 }));
        assert!(!feasible_classic(ClassicKind::FixedSizesOneway { n: 5, d: 2, l: 1 }));
        assert!(feasible_classic(ClassicKind::FixedSizesTwoway { n: 5, d: 2, l: 2 }));
        assert!(!feasible_classic(ClassicKind::FixedSizesTwoway { n: 4, d: 2, l: 2 }));
    }

    #[test]
    fn empty_structure_is_feasible_everywhere() {
        let s = AdversaryStructure::general(3, &[]).unwrap();
        assert!(feasible_oneway(&s).feasible);
        assert!(feasible_twoway_completely_oblivious(&s).feasible);
        assert!(feasible_tworound_non_completely_oblivious(&s).feasible);
    }

    #[test]
    fn oneway_feasible_implies_twoway_feasible() {
        // The one-way condition with k = i subsumes both two-way clauses.
        for n in 1..=4usize {
            for k in 0..=n {
                let s = AdversaryStructure::threshold(n, k).unwrap();
                if feasible_oneway(&s).feasible {
                    assert!(feasible_twoway_completely_oblivious(&s).feasible);
                }
            }
        }
    }
}
