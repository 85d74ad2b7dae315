//! Wire sets, fully generalised adversary structures, and the obliviousness
//! taxonomy.
//!
//! A structure is a finite list of (disrupt, listen) pairs over n wires; the
//! adversary commits to one pair before execution. Wires are 0-based in code
//! and 1-based in every external format, matching the usual write-up
//! convention.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::StructureError;

/// Hard cap on wire count for the combinatorial constructors. Set by the
/// bitmask width and by enumeration costs, not by any of the theory.
pub const MAX_WIRES: usize = 16;

/// A subset of the n communication wires, as a bitmask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireSet {
    mask: u32,
    wires: u8,
}

impl fmt::Debug for WireSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let members: Vec<String> = self.iter().map(|w| (w + 1).to_string()).collect();
        write!(f, "{{{}}}", members.join(","))
    }
}

impl WireSet {
    pub fn empty(wires: usize) -> Self {
        assert!(wires <= MAX_WIRES, "wire count above bitmask width");
        WireSet {
            mask: 0,
            wires: wires as u8,
        }
    }

    pub fn full(wires: usize) -> Self {
        assert!(wires <= MAX_WIRES);
        WireSet {
            mask: if wires == 0 { 0 } else { (1u32 << wires) - 1 },
            wires: wires as u8,
        }
    }

    /// Builds a set from 0-based wire indices.
    pub fn from_indices(wires: usize, indices: &[usize]) -> Result<Self, StructureError> {
        let mut s = WireSet::empty(wires);
        for &i in indices {
            if i >= wires {
                return Err(StructureError::WireOutOfRange { wire: i, wires });
            }
            s.mask |= 1 << i;
        }
        Ok(s)
    }

    /// Builds a set from 1-based wire labels, as used in external documents.
    pub fn from_labels(wires: usize, labels: &[usize]) -> Result<Self, StructureError> {
        let mut indices = Vec::with_capacity(labels.len());
        for &l in labels {
            if l == 0 {
                return Err(StructureError::WireOutOfRange { wire: 0, wires });
            }
            indices.push(l - 1);
        }
        WireSet::from_indices(wires, &indices)
    }

    pub(crate) fn from_mask(wires: usize, mask: u32) -> Self {
        debug_assert_eq!(mask & !WireSet::full(wires).mask, 0);
        WireSet {
            mask,
            wires: wires as u8,
        }
    }

    pub fn wires(&self) -> usize {
        self.wires as usize
    }

    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, wire: usize) -> bool {
        wire < self.wires() && self.mask & (1 << wire) != 0
    }

    pub fn union(&self, other: &WireSet) -> WireSet {
        debug_assert_eq!(self.wires, other.wires);
        WireSet {
            mask: self.mask | other.mask,
            wires: self.wires,
        }
    }

    pub fn intersection(&self, other: &WireSet) -> WireSet {
        debug_assert_eq!(self.wires, other.wires);
        WireSet {
            mask: self.mask & other.mask,
            wires: self.wires,
        }
    }

    pub fn difference(&self, other: &WireSet) -> WireSet {
        debug_assert_eq!(self.wires, other.wires);
        WireSet {
            mask: self.mask & !other.mask,
            wires: self.wires,
        }
    }

    pub fn complement(&self) -> WireSet {
        WireSet {
            mask: WireSet::full(self.wires()).mask & !self.mask,
            wires: self.wires,
        }
    }

    pub fn is_full(&self) -> bool {
        self.mask == WireSet::full(self.wires()).mask
    }

    /// Iterates members as 0-based indices, ascending.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let mask = self.mask;
        (0..self.wires()).filter(move |i| mask & (1 << i) != 0)
    }

    /// Members as 1-based labels, for external formats.
    pub fn labels(&self) -> Vec<usize> {
        self.iter().map(|i| i + 1).collect()
    }
}

/// True iff the union of the given sets is the full wire set.
pub fn covers(sets: &[WireSet], wires: usize) -> bool {
    let mut acc = WireSet::empty(wires);
    for s in sets {
        assert_eq!(s.wires(), wires, "set over a different wire count");
        acc = acc.union(s);
    }
    acc.is_full()
}

/// One option available to the adversary: disrupt everything in `disrupt`
/// while listening to everything in `listen`. The two sets may intersect.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdversaryPair {
    pub disrupt: WireSet,
    pub listen: WireSet,
}

impl fmt::Debug for AdversaryPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{:?})", self.disrupt, self.listen)
    }
}

/// What the adversary learns on wires it disrupts.
///
/// On listened wires it always hears every transmission. The distinction is
/// about disrupted wires outside the listen set:
///
/// * `CompletelyOblivious`: sees neither the original nor the replacement.
/// * `Oblivious`: sees the replacement it injected, not the original.
/// * `NonOblivious`: sees the original transmission too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObliviousnessMode {
    Oblivious,
    CompletelyOblivious,
    NonOblivious,
}

/// A fully generalised adversary structure: wire count, pair list, mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversaryStructure {
    wires: usize,
    pairs: Vec<AdversaryPair>,
    mode: ObliviousnessMode,
}

impl AdversaryStructure {
    pub fn new(
        wires: usize,
        pairs: Vec<AdversaryPair>,
        mode: ObliviousnessMode,
    ) -> Result<Self, StructureError> {
        if wires == 0 {
            return Err(StructureError::NoWires);
        }
        if wires > MAX_WIRES {
            return Err(StructureError::TooManyWires {
                wires,
                max: MAX_WIRES,
            });
        }
        for p in &pairs {
            if p.disrupt.wires() != wires || p.listen.wires() != wires {
                return Err(StructureError::WireOutOfRange {
                    wire: p.disrupt.wires().max(p.listen.wires()),
                    wires,
                });
            }
        }
        Ok(AdversaryStructure { wires, pairs, mode })
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn pairs(&self) -> &[AdversaryPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn mode(&self) -> ObliviousnessMode {
        self.mode
    }

    pub fn with_mode(mut self, mode: ObliviousnessMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn pair(&self, index: usize) -> AdversaryPair {
        self.pairs[index]
    }

    /// The threshold adversary: every size-k subset, disrupted and listened.
    pub fn threshold(wires: usize, k: usize) -> Result<Self, StructureError> {
        if k > wires {
            return Err(StructureError::SubsetTooLarge {
                size: k,
                wires,
            });
        }
        let pairs = subsets_of_size(wires, k)
            .into_iter()
            .map(|s| AdversaryPair {
                disrupt: s,
                listen: s,
            })
            .collect();
        AdversaryStructure::new(wires, pairs, ObliviousnessMode::CompletelyOblivious)
    }

    /// Every pair (D, L) with |D| = d and |L| = l, chosen independently.
    pub fn fixed_sizes(wires: usize, d: usize, l: usize) -> Result<Self, StructureError> {
        if d > wires {
            return Err(StructureError::SubsetTooLarge { size: d, wires });
        }
        if l > wires {
            return Err(StructureError::SubsetTooLarge { size: l, wires });
        }
        let ds = subsets_of_size(wires, d);
        let ls = subsets_of_size(wires, l);
        let mut pairs = Vec::with_capacity(ds.len() * ls.len());
        for &disrupt in &ds {
            for &listen in &ls {
                pairs.push(AdversaryPair { disrupt, listen });
            }
        }
        AdversaryStructure::new(wires, pairs, ObliviousnessMode::CompletelyOblivious)
    }

    /// A general structure: each listed set both disrupted and listened.
    pub fn general(wires: usize, sets: &[WireSet]) -> Result<Self, StructureError> {
        let pairs = sets
            .iter()
            .map(|&s| AdversaryPair {
                disrupt: s,
                listen: s,
            })
            .collect();
        AdversaryStructure::new(wires, pairs, ObliviousnessMode::CompletelyOblivious)
    }

    /// Replaces each pair (D, L) with (D, L ∪ D) and marks the result
    /// completely oblivious: once every disrupted wire is also listened to,
    /// the finer distinctions collapse.
    ///
    /// Any protocol secure against the strengthened structure is secure
    /// against the original one regardless of its mode, which is how the
    /// non-completely-oblivious cases are handled.
    pub fn strengthen(&self) -> AdversaryStructure {
        let pairs = self
            .pairs
            .iter()
            .map(|p| AdversaryPair {
                disrupt: p.disrupt,
                listen: p.listen.union(&p.disrupt),
            })
            .collect();
        AdversaryStructure {
            wires: self.wires,
            pairs,
            mode: ObliviousnessMode::CompletelyOblivious,
        }
    }
}

/// All size-k subsets of 0..wires, ascending by bitmask.
pub fn subsets_of_size(wires: usize, k: usize) -> Vec<WireSet> {
    assert!(wires <= MAX_WIRES);
    let mut out = Vec::new();
    for mask in 0u32..(1 << wires) {
        if mask.count_ones() as usize == k {
            out.push(WireSet::from_mask(wires, mask));
        }
    }
    out
}

/// External JSON form of a structure document. Wire labels are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureDoc {
    pub wires: usize,
    pub mode: ObliviousnessMode,
    pub pairs: Vec<PairDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairDoc {
    pub disrupt: Vec<usize>,
    pub listen: Vec<usize>,
}

impl StructureDoc {
    pub fn from_structure(s: &AdversaryStructure) -> Self {
        StructureDoc {
            wires: s.wires(),
            mode: s.mode(),
            pairs: s
                .pairs()
                .iter()
                .map(|p| PairDoc {
                    disrupt: p.disrupt.labels(),
                    listen: p.listen.labels(),
                })
                .collect(),
        }
    }

    pub fn to_structure(&self) -> Result<AdversaryStructure, StructureError> {
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            pairs.push(AdversaryPair {
                disrupt: WireSet::from_labels(self.wires, &p.disrupt)?,
                listen: WireSet::from_labels(self.wires, &p.listen)?,
            });
        }
        AdversaryStructure::new(self.wires, pairs, self.mode)
    }
}
