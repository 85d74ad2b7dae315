//! Exact arithmetic over GF(p) for a small prime p, plus polynomial
//! evaluation, Lagrange interpolation and error-tolerant decoding.
//!
//! Everything here is deterministic and desk-scale: primality is checked by
//! trial division, and [`decode_with_errors`] is a brute-force subset search.
//! That is deliberate; the verification suites cross-check these routines
//! against independent oracles, so correctness beats speed.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::FieldError;

/// A prime modulus, validated once at construction.
///
/// `Field` is a cheap copyable handle; use [`Field::elem`] to build elements
/// without re-running the primality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    modulus: u64,
}

impl Field {
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NotPrime { modulus: p });
        }
        Ok(Field { modulus: p })
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Builds an element, reducing `value` modulo p.
    pub fn elem(&self, value: u64) -> FieldElement {
        FieldElement {
            value: value % self.modulus,
            modulus: self.modulus,
        }
    }

    /// Builds an element from a signed integer, with proper wrap-around.
    pub fn elem_i64(&self, value: i64) -> FieldElement {
        let p = self.modulus as i64;
        self.elem(value.rem_euclid(p) as u64)
    }

    pub fn zero(&self) -> FieldElement {
        self.elem(0)
    }

    pub fn one(&self) -> FieldElement {
        self.elem(1)
    }

    /// Draws a uniform element using the given RNG.
    pub fn random<R: rand::Rng>(&self, rng: &mut R) -> FieldElement {
        self.elem(rng.gen_range(0..self.modulus))
    }

    /// All p elements in ascending order of representative.
    pub fn iter(&self) -> impl Iterator<Item = FieldElement> + '_ {
        let f = *self;
        (0..self.modulus).map(move |v| f.elem(v))
    }
}

/// Trial-division primality check; adequate for the moduli used here.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A value in GF(p). Carries its modulus so mixed-field bugs fail fast.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    value: u64,
    modulus: u64,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl FieldElement {
    /// Checked constructor; prefer [`Field::elem`] in loops.
    pub fn new(value: u64, modulus: u64) -> Result<Self, FieldError> {
        Ok(Field::new(modulus)?.elem(value))
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn field(&self) -> Field {
        Field {
            modulus: self.modulus,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn check_same_field(&self, other: &Self) {
        assert_eq!(
            self.modulus, other.modulus,
            "field elements from different moduli: {} vs {}",
            self.modulus, other.modulus
        );
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_field(other);
        FieldElement {
            value: (self.value + other.value) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_same_field(other);
        FieldElement {
            value: (self.value + self.modulus - other.value) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn neg(&self) -> Self {
        FieldElement {
            value: (self.modulus - self.value) % self.modulus,
            modulus: self.modulus,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_same_field(other);
        let prod = (self.value as u128 * other.value as u128) % self.modulus as u128;
        FieldElement {
            value: prod as u64,
            modulus: self.modulus,
        }
    }

    /// Multiplicative inverse via the extended Euclidean algorithm.
    pub fn inv(&self) -> Result<Self, FieldError> {
        if self.value == 0 {
            return Err(FieldError::ZeroInverse);
        }
        let (mut r0, mut r1) = (self.modulus as i128, self.value as i128);
        let (mut t0, mut t1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        debug_assert_eq!(r0, 1, "modulus is prime so gcd must be 1");
        let p = self.modulus as i128;
        Ok(FieldElement {
            value: t0.rem_euclid(p) as u64,
            modulus: self.modulus,
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self, FieldError> {
        Ok(self.mul(&other.inv()?))
    }
}

impl std::ops::Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement::add(&self, &rhs)
    }
}

impl std::ops::Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        FieldElement::sub(&self, &rhs)
    }
}

impl std::ops::Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        FieldElement::mul(&self, &rhs)
    }
}

impl std::ops::Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement::neg(&self)
    }
}

/// A polynomial over GF(p), constant term first, trailing zeros stripped.
///
/// The zero polynomial has an empty coefficient vector. `degree()` reports 0
/// for both constants and the zero polynomial, which is the convention the
/// decoders here rely on.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    field: Field,
    coeffs: Vec<FieldElement>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0 (mod {})", self.field.modulus());
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| match i {
                0 => format!("{}", c.value()),
                1 => format!("{}x", c.value()),
                _ => format!("{}x^{}", c.value(), i),
            })
            .collect();
        write!(f, "{} (mod {})", terms.join(" + "), self.field.modulus())
    }
}

impl Polynomial {
    /// Builds a polynomial from coefficients (constant term first),
    /// normalizing away trailing zeros.
    pub fn new(field: Field, mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { field, coeffs }
    }

    pub fn zero(field: Field) -> Self {
        Polynomial {
            field,
            coeffs: Vec::new(),
        }
    }

    pub fn constant(c: FieldElement) -> Self {
        Polynomial::new(c.field(), vec![c])
    }

    /// Uniformly random polynomial with `degree + 1` free coefficients.
    pub fn random<R: rand::Rng>(field: Field, degree: usize, rng: &mut R) -> Self {
        let coeffs = (0..=degree).map(|_| field.random(rng)).collect();
        Polynomial::new(field, coeffs)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Horner evaluation.
    pub fn eval(&self, x: FieldElement) -> FieldElement {
        let mut acc = self.field.zero();
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&x).add(c);
        }
        acc
    }

    /// Constant term, i.e. the value at zero.
    pub fn at_zero(&self) -> FieldElement {
        self.coeffs.first().copied().unwrap_or_else(|| self.field.zero())
    }
}

/// Lagrange interpolation through the given points.
///
/// Returns the unique polynomial of degree < `points.len()` passing through
/// all of them. Duplicate x coordinates are rejected.
pub fn interpolate(
    field: Field,
    points: &[(FieldElement, FieldElement)],
) -> Result<Polynomial, FieldError> {
    for (idx, (x, _)) in points.iter().enumerate() {
        for (x2, _) in &points[idx + 1..] {
            if x == x2 {
                return Err(FieldError::DuplicateX { x: x.value() });
            }
        }
    }
    let mut acc = Polynomial::zero(field);
    for (i, (xi, yi)) in points.iter().enumerate() {
        // Basis polynomial: product of (x - xj) / (xi - xj) over j != i.
        let mut basis = vec![field.one()];
        let mut denom = field.one();
        for (j, (xj, _)) in points.iter().enumerate() {
            if i == j {
                continue;
            }
            basis = poly_mul_linear(field, &basis, *xj);
            denom = denom.mul(&xi.sub(xj));
        }
        let scale = yi.mul(&denom.inv()?);
        let mut acc_coeffs = acc.coeffs;
        acc_coeffs.resize(basis.len().max(acc_coeffs.len()), field.zero());
        for (k, b) in basis.iter().enumerate() {
            acc_coeffs[k] = acc_coeffs[k].add(&b.mul(&scale));
        }
        acc = Polynomial::new(field, acc_coeffs);
    }
    Ok(acc)
}

/// Multiplies `coeffs` by (x - root).
fn poly_mul_linear(field: Field, coeffs: &[FieldElement], root: FieldElement) -> Vec<FieldElement> {
    let mut out = vec![field.zero(); coeffs.len() + 1];
    for (k, c) in coeffs.iter().enumerate() {
        out[k + 1] = out[k + 1].add(c);
        out[k] = out[k].sub(&c.mul(&root));
    }
    out
}

/// Outcome of [`decode_with_errors`]: either the unique polynomial consistent
/// with enough points (with the disagreeing input positions), or `NoDecode`.
///
/// `NoDecode` is a value, not a fault: it covers both "no candidate" and
/// "ambiguous" (two distinct candidates), since unique decoding is exactly
/// what the protocols need.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeOutcome {
    Decoded {
        poly: Polynomial,
        /// Indices into the input slice where the decoded polynomial
        /// disagrees with the given y value.
        corrupted: BTreeSet<usize>,
    },
    NoDecode,
}

/// Finds the unique polynomial of degree <= `target_degree` that agrees with
/// at least `points.len() - max_errors` of the given points.
///
/// Brute force: every (target_degree + 1)-subset of points is interpolated
/// and the resulting candidates are screened by total agreement. When the
/// number of pinned points `points.len() - max_errors` does not exceed the
/// degrees of freedom, no candidate can be unique and `NoDecode` is returned
/// outright (over GF(p) there are always at least p >= 2 candidates then).
pub fn decode_with_errors(
    field: Field,
    points: &[(FieldElement, FieldElement)],
    target_degree: usize,
    max_errors: usize,
) -> Result<DecodeOutcome, FieldError> {
    for (idx, (x, _)) in points.iter().enumerate() {
        for (x2, _) in &points[idx + 1..] {
            if x == x2 {
                return Err(FieldError::DuplicateX { x: x.value() });
            }
        }
    }
    let n = points.len();
    let need = n.saturating_sub(max_errors);
    if need <= target_degree {
        return Ok(DecodeOutcome::NoDecode);
    }
    // need >= target_degree + 1 here, so every valid candidate interpolates
    // some (target_degree + 1)-subset of the points it agrees with.
    let k = target_degree + 1;
    let mut unique: Option<Polynomial> = None;
    let mut fail = false;
    for_each_subset(n, k, &mut |subset| {
        if fail {
            return;
        }
        let chosen: Vec<_> = subset.iter().map(|&i| points[i]).collect();
        let cand = interpolate(field, &chosen).expect("distinct x checked above");
        if cand.degree() > target_degree {
            return;
        }
        let agree = points.iter().filter(|(x, y)| cand.eval(*x) == *y).count();
        if agree < need {
            return;
        }
        match &unique {
            None => unique = Some(cand),
            Some(prev) if *prev == cand => {}
            Some(_) => fail = true,
        }
    });
    if fail {
        return Ok(DecodeOutcome::NoDecode);
    }
    Ok(match unique {
        Some(poly) => {
            let corrupted = points
                .iter()
                .enumerate()
                .filter(|(_, (x, y))| poly.eval(*x) != *y)
                .map(|(i, _)| i)
                .collect();
            DecodeOutcome::Decoded { poly, corrupted }
        }
        None => DecodeOutcome::NoDecode,
    })
}

/// Calls `f` with every k-subset of 0..n, in lexicographic order.
pub(crate) fn for_each_subset(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next combination.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f11() -> Field {
        Field::new(11).unwrap()
    }

    fn f5() -> Field {
        Field::new(5).unwrap()
    }

    #[test]
    fn rejects_composite_modulus() {
        assert!(Field::new(9).is_err());
        assert!(Field::new(1).is_err());
        assert!(Field::new(0).is_err());
        assert!(Field::new(2).is_ok());
        assert!(Field::new((1 << 31) - 1).is_ok());
    }

    #[test]
    fn basic_ops() {
        let f = f11();
        assert_eq!(f.elem(7).add(&f.elem(9)), f.elem(5));
        assert_eq!(f.elem(3).inv().unwrap(), f.elem(4));
        let g = f5();
        assert_eq!(g.elem(0).sub(&g.elem(2)), g.elem(3));
    }

    #[test]
    fn inverse_of_zero_is_an_error() {
        assert!(matches!(
            f11().zero().inv(),
            Err(FieldError::ZeroInverse)
        ));
    }

    #[test]
    #[should_panic(expected = "different moduli")]
    fn mixed_moduli_panic() {
        let _ = f11().elem(1).add(&f5().elem(1));
    }

    #[test]
    fn inverses_over_all_nonzero() {
        for p in [2u64, 3, 5, 11, 13] {
            let f = Field::new(p).unwrap();
            for v in 1..p {
                let e = f.elem(v);
                assert_eq!(e.mul(&e.inv().unwrap()), f.one());
            }
        }
    }

    #[test]
    fn evaluation() {
        let f = f11();
        let poly = Polynomial::new(f, vec![f.elem(3), f.elem(2)]);
        assert_eq!(poly.eval(f.elem(4)), f.elem(0));
        assert_eq!(poly.eval(f.elem(0)), f.elem(3));
        let g = f5();
        let q = Polynomial::new(g, vec![g.elem(1), g.elem(1), g.elem(1)]);
        assert_eq!(q.eval(g.elem(2)), g.elem(2));
    }

    // Oracle for two-point interpolation: solve the 2x2 linear system
    // a + b*x1 = y1, a + b*x2 = y2 directly.
    fn line_through(
        f: Field,
        (x1, y1): (FieldElement, FieldElement),
        (x2, y2): (FieldElement, FieldElement),
    ) -> Polynomial {
        let slope = y2.sub(&y1).mul(&x2.sub(&x1).inv().unwrap());
        let intercept = y1.sub(&slope.mul(&x1));
        Polynomial::new(f, vec![intercept, slope])
    }

    #[test]
    fn interpolation_matches_linear_system_oracle() {
        let f = f11();
        let pts = [(f.elem(1), f.elem(5)), (f.elem(2), f.elem(7))];
        let poly = interpolate(f, &pts).unwrap();
        assert_eq!(poly, line_through(f, pts[0], pts[1]));
        assert_eq!(poly.coeffs(), &[f.elem(3), f.elem(2)]);
    }

    #[test]
    fn interpolation_single_point_and_normalization() {
        let f = f11();
        let c = interpolate(f, &[(f.elem(0), f.elem(9))]).unwrap();
        assert_eq!(c, Polynomial::constant(f.elem(9)));

        let g = f5();
        let pts = [
            (g.elem(1), g.elem(1)),
            (g.elem(2), g.elem(2)),
            (g.elem(3), g.elem(3)),
        ];
        let poly = interpolate(g, &pts).unwrap();
        assert_eq!(poly.coeffs(), &[g.elem(0), g.elem(1)]);
        assert_eq!(poly.degree(), 1);
    }

    #[test]
    fn interpolation_rejects_duplicate_x() {
        let f = f5();
        let pts = [(f.elem(1), f.elem(1)), (f.elem(1), f.elem(2))];
        assert!(matches!(
            interpolate(f, &pts),
            Err(FieldError::DuplicateX { x: 1 })
        ));
    }

    #[test]
    fn decode_single_corruption() {
        let f = f11();
        // 3 + 2x at x = 1..4 gives (5, 7, 9, 0); corrupt x = 2.
        let pts = [
            (f.elem(1), f.elem(5)),
            (f.elem(2), f.elem(1)),
            (f.elem(3), f.elem(9)),
            (f.elem(4), f.elem(0)),
        ];
        match decode_with_errors(f, &pts, 1, 1).unwrap() {
            DecodeOutcome::Decoded { poly, corrupted } => {
                assert_eq!(poly.coeffs(), &[f.elem(3), f.elem(2)]);
                assert_eq!(corrupted, BTreeSet::from([1]));
                assert_eq!(pts[1].0, f.elem(2));
            }
            DecodeOutcome::NoDecode => panic!("expected a decode"),
        }
    }

    #[test]
    fn decode_zero_errors() {
        let f = f11();
        let pts = [
            (f.elem(1), f.elem(5)),
            (f.elem(2), f.elem(7)),
            (f.elem(3), f.elem(9)),
            (f.elem(4), f.elem(0)),
        ];
        match decode_with_errors(f, &pts, 1, 1).unwrap() {
            DecodeOutcome::Decoded { poly, corrupted } => {
                assert_eq!(poly.coeffs(), &[f.elem(3), f.elem(2)]);
                assert!(corrupted.is_empty());
            }
            DecodeOutcome::NoDecode => panic!("expected a decode"),
        }
    }

    #[test]
    fn decode_reports_no_line() {
        let f = f5();
        // No line hits 3 of these 4 points (checked by the subset oracle).
        let pts = [
            (f.elem(1), f.elem(0)),
            (f.elem(2), f.elem(1)),
            (f.elem(3), f.elem(0)),
            (f.elem(4), f.elem(1)),
        ];
        assert_eq!(decode_with_errors(f, &pts, 1, 1).unwrap(), DecodeOutcome::NoDecode);
    }

    #[test]
    fn decode_rejects_duplicate_x() {
        let f = f5();
        let pts = [(f.elem(1), f.elem(0)), (f.elem(1), f.elem(1))];
        assert!(decode_with_errors(f, &pts, 1, 1).is_err());
    }

    #[test]
    fn decode_underdetermined_is_nodecode() {
        let f = f5();
        // Two points, one allowed error, degree 1: never unique.
        let pts = [(f.elem(1), f.elem(2)), (f.elem(2), f.elem(2))];
        assert_eq!(decode_with_errors(f, &pts, 1, 1).unwrap(), DecodeOutcome::NoDecode);
    }

    #[test]
    fn subset_iteration_is_lexicographic_and_complete() {
        let mut seen = Vec::new();
        for_each_subset(4, 2, &mut |s| seen.push(s.to_vec()));
        assert_eq!(
            seen,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        let mut count = 0;
        for_each_subset(6, 3, &mut |_| count += 1);
        assert_eq!(count, 20);
    }
}
