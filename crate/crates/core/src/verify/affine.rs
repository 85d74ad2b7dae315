//! Affine symbolic execution over GF(p) and the small exact linear algebra
//! the privacy verifier needs.
//!
//! The protocol's pre-payload pipeline (tape draws, additive shares,
//! scripted replacements, anchor majorities) is affine in the tape. Running
//! it over [`AffineExpr`] values instead of field elements proves that
//! structurally: any operation whose result depends nonlinearly on hidden
//! randomness, or any branch on it, fails to type-check or aborts with
//! [`crate::error::ExecError::SymbolicUndecidable`]. The verifier then works
//! with the resulting exact linear maps instead of enumerating tapes.

use std::collections::BTreeMap;
use std::fmt;

use crate::field::{Field, FieldElement};
use crate::tape::{ProtocolValue, Tape};

/// A value of the form c0 + sum(coeff_v * t_v) over tape variables t_v.
#[derive(Clone, PartialEq, Eq)]
pub struct AffineExpr {
    field: Field,
    constant: FieldElement,
    /// Sparse variable coefficients; zero coefficients are never stored.
    coeffs: BTreeMap<u32, FieldElement>,
}

impl fmt::Debug for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.constant)?;
        for (v, c) in &self.coeffs {
            write!(f, " + {c}*t{v}")?;
        }
        Ok(())
    }
}

impl AffineExpr {
    pub fn constant(field: Field, value: FieldElement) -> Self {
        AffineExpr {
            field,
            constant: value,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn variable(field: Field, var: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(var, field.one());
        AffineExpr {
            field,
            constant: field.zero(),
            coeffs,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn constant_term(&self) -> FieldElement {
        self.constant
    }

    pub fn coefficient(&self, var: u32) -> FieldElement {
        self.coeffs
            .get(&var)
            .copied()
            .unwrap_or_else(|| self.field.zero())
    }

    /// Dense coefficient row over variables 0..dim.
    pub fn row(&self, dim: usize) -> Vec<u64> {
        let mut out = vec![0u64; dim];
        for (&v, c) in &self.coeffs {
            out[v as usize] = c.value();
        }
        out
    }

    pub fn eval(&self, assignment: &[u64]) -> FieldElement {
        let mut acc = self.constant;
        for (&v, c) in &self.coeffs {
            acc = acc.add(&c.mul(&self.field.elem(assignment[v as usize])));
        }
        acc
    }
}

impl ProtocolValue for AffineExpr {
    fn add(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (&v, c) in &other.coeffs {
            let next = self.coefficient(v).add(c);
            if next.is_zero() {
                coeffs.remove(&v);
            } else {
                coeffs.insert(v, next);
            }
        }
        AffineExpr {
            field: self.field,
            constant: self.constant.add(&other.constant),
            coeffs,
        }
    }

    fn sub(&self, other: &Self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for (&v, c) in &other.coeffs {
            let next = self.coefficient(v).sub(c);
            if next.is_zero() {
                coeffs.remove(&v);
            } else {
                coeffs.insert(v, next);
            }
        }
        AffineExpr {
            field: self.field,
            constant: self.constant.sub(&other.constant),
            coeffs,
        }
    }

    fn mul_const(&self, k: u64) -> Self {
        let k = self.field.elem(k);
        if k.is_zero() {
            return AffineExpr::constant(self.field, self.field.zero());
        }
        AffineExpr {
            field: self.field,
            constant: self.constant.mul(&k),
            coeffs: self
                .coeffs
                .iter()
                .map(|(&v, c)| (v, c.mul(&k)))
                .collect(),
        }
    }

    /// Equality is decidable exactly when the difference is constant.
    fn known_eq(&self, other: &Self) -> Option<bool> {
        let diff = self.sub(other);
        if diff.is_constant() {
            Some(diff.constant.is_zero())
        } else {
            None
        }
    }
}

/// Hands out fresh variables t_0, t_1, ... in draw order.
pub struct SymbolicTape {
    field: Field,
    next: u32,
}

impl SymbolicTape {
    pub fn new(field: Field) -> Self {
        SymbolicTape { field, next: 0 }
    }

    pub fn vars_used(&self) -> usize {
        self.next as usize
    }

    pub fn fresh(&mut self) -> AffineExpr {
        let v = self.next;
        self.next += 1;
        AffineExpr::variable(self.field, v)
    }
}

impl Tape<AffineExpr> for SymbolicTape {
    fn draw(&mut self, _path: &[u8]) -> AffineExpr {
        self.fresh()
    }
}

/// Row-reduced basis of a subspace of GF(p)^dim, with pivot bookkeeping so
/// membership tests and basis extension are cheap.
#[derive(Debug, Clone)]
pub struct Subspace {
    p: u64,
    dim: usize,
    /// Rows in reduced echelon form; pivots strictly increasing.
    rows: Vec<Vec<u64>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn empty(field: Field, dim: usize) -> Self {
        Subspace {
            p: field.modulus(),
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<u64>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces v against the basis; a zero result means v was in the span.
    pub fn reduce(&self, v: &[u64]) -> Vec<u64> {
        assert_eq!(v.len(), self.dim);
        let p = self.p;
        let mut v = v.to_vec();
        for (row, &piv) in self.rows.iter().zip(&self.pivots) {
            if v[piv] != 0 {
                let factor = v[piv];
                for (x, r) in v.iter_mut().zip(row) {
                    *x = (*x + (p - factor % p) * r % p) % p;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[u64]) -> bool {
        self.reduce(v).iter().all(|&x| x == 0)
    }

    /// Inserts v if independent; returns whether the rank grew.
    pub fn insert(&mut self, v: &[u64]) -> bool {
        let mut v = self.reduce(v);
        let Some(piv) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        // Normalize the pivot to 1.
        let inv = Field::new(self.p)
            .unwrap()
            .elem(v[piv])
            .inv()
            .expect("pivot is nonzero")
            .value();
        for x in v.iter_mut() {
            *x = *x * inv % self.p;
        }
        // Back-substitute into existing rows, then insert sorted by pivot.
        for row in self.rows.iter_mut() {
            if row[piv] != 0 {
                let factor = row[piv];
                for (r, &vv) in row.iter_mut().zip(&v) {
                    *r = (*r + (self.p - factor % self.p) * vv % self.p) % self.p;
                }
            }
        }
        let pos = self.pivots.partition_point(|&q| q < piv);
        self.rows.insert(pos, v);
        self.pivots.insert(pos, piv);
        true
    }

    /// Enumerates every vector of the subspace, invoking f with each.
    /// There are p^rank of them.
    pub fn for_each_point(&self, mut f: impl FnMut(&[u64])) {
        let mut counters = vec![0u64; self.rank()];
        let mut point = vec![0u64; self.dim];
        loop {
            f(&point);
            // Odometer over basis multiples.
            let mut i = self.rank();
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                counters[i] += 1;
                add_row(&mut point, &self.rows[i], 1, self.p);
                if counters[i] < self.p {
                    break;
                }
                counters[i] = 0;
                if i == 0 {
                    return;
                }
            }
        }
    }
}

fn add_row(acc: &mut [u64], row: &[u64], times: u64, p: u64) {
    for (a, r) in acc.iter_mut().zip(row) {
        *a = (*a + times * r) % p;
    }
}

/// Basis of the solution space of `rows * x = 0` over GF(p)^dim.
pub fn kernel_basis(field: Field, rows: &[Vec<u64>], dim: usize) -> Vec<Vec<u64>> {
    let mut row_space = Subspace::empty(field, dim);
    for r in rows {
        row_space.insert(r);
    }
    let p = field.modulus();
    let pivots = row_space.pivots().to_vec();
    let is_pivot = {
        let mut v = vec![false; dim];
        for &c in &pivots {
            v[c] = true;
        }
        v
    };
    let mut basis = Vec::with_capacity(dim - pivots.len());
    for c in 0..dim {
        if is_pivot[c] {
            continue;
        }
        // Reduced rows read x_pivot = -row[c] * x_c over the free columns.
        let mut v = vec![0u64; dim];
        v[c] = 1;
        for (row, &piv) in row_space.basis().iter().zip(&pivots) {
            v[piv] = (p - row[c] % p) % p;
        }
        basis.push(v);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    #[test]
    fn affine_arithmetic() {
        let f = f5();
        let mut tape = SymbolicTape::new(f);
        let t0 = tape.fresh();
        let t1 = tape.fresh();
        let e = t0.add(&t1).mul_const(3).sub(&t0); // 2*t0 + 3*t1
        assert_eq!(e.coefficient(0), f.elem(2));
        assert_eq!(e.coefficient(1), f.elem(3));
        assert_eq!(e.eval(&[1, 1]), f.elem(0));
        assert_eq!(e.eval(&[2, 2]), f.elem(0));
        assert_eq!(e.eval(&[1, 2]), f.elem(3));
    }

    #[test]
    fn known_eq_semantics() {
        let f = f5();
        let mut tape = SymbolicTape::new(f);
        let t0 = tape.fresh();
        let c = AffineExpr::constant(f, f.elem(2));
        assert_eq!(t0.known_eq(&t0), Some(true));
        assert_eq!(t0.add(&c).known_eq(&t0), Some(false));
        assert_eq!(t0.known_eq(&c), None);
    }

    #[test]
    fn cancellation_keeps_exprs_sparse() {
        let f = f5();
        let mut tape = SymbolicTape::new(f);
        let t0 = tape.fresh();
        let diff = t0.sub(&t0);
        assert!(diff.is_constant());
        assert_eq!(diff.constant_term(), f.zero());
    }

    #[test]
    fn subspace_rank_membership_enumeration() {
        let f = f5();
        let mut s = Subspace::empty(f, 3);
        assert!(s.insert(&[1, 2, 0]));
        assert!(s.insert(&[0, 1, 1]));
        assert!(!s.insert(&[2, 4, 0]), "dependent vector");
        assert!(!s.insert(&[1, 3, 1]), "sum of the basis");
        assert_eq!(s.rank(), 2);
        assert!(s.contains(&[2, 2, 3]), "2*[1,2,0] + 3*[0,1,1]");
        assert!(!s.contains(&[0, 0, 1]));

        let mut points = Vec::new();
        s.for_each_point(|v| points.push(v.to_vec()));
        assert_eq!(points.len(), 25);
        points.sort();
        points.dedup();
        assert_eq!(points.len(), 25, "all points distinct");
        for v in &points {
            assert!(s.contains(v));
        }
    }

    #[test]
    fn subspace_full_space() {
        let f = f5();
        let mut s = Subspace::empty(f, 2);
        s.insert(&[1, 0]);
        s.insert(&[3, 1]);
        let mut count = 0;
        s.for_each_point(|_| count += 1);
        assert_eq!(count, 25);
    }

    #[test]
    fn kernel_annihilates_rows() {
        let f = f5();
        // Two functionals on GF(5)^4.
        let rows = vec![vec![1, 2, 0, 4], vec![0, 0, 3, 1]];
        let basis = kernel_basis(f, &rows, 4);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            for r in &rows {
                let dot: u64 = r.iter().zip(v).map(|(a, b)| a * b).sum();
                assert_eq!(dot % 5, 0);
            }
        }
        // Kernel of no constraints is everything.
        assert_eq!(kernel_basis(f, &[], 3).len(), 3);
    }
}
