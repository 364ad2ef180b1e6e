//! Exact arithmetic for real numbers expressed as rational combinations of a
//! declared basis of Q-linearly-independent reals (1, square roots of
//! square-free integers, or opaque user constants with declared error bounds).
//!
//! Comparison is decidable: equal coordinate vectors mean equal numbers, and
//! unequal vectors are separated by refining interval enclosures.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, BigRational, One, Signed, Zero};
use thiserror::Error;

pub type Rat = BigRational;

/// Default precision ceiling (bits) for enclosure refinement, overridable via
/// the `BNF_PRECISION_BITS` environment variable or per-call.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// Hard cap for fully refinable (square-root) bases. A nonzero combination of
/// square roots with desk-scale coordinates separates far below this.
const SQRT_REFINEMENT_CAP: u32 = 65536;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("operands do not share a basis")]
    BasisMismatch,
    #[error("enclosures cannot be separated within the precision ceiling")]
    RefinementExhausted,
    #[error("frequency coordinate vectors are rationally dependent")]
    DependentFrequencies,
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// One basis descriptor: the number 1, sqrt(m) for square-free m, or an
/// opaque constant trusted to be Q-independent of the others.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisElement {
    One,
    Sqrt(u64),
    Opaque {
        label: String,
        value: Rat,
        error: Rat,
        refinement_unavailable: bool,
    },
}

impl BasisElement {
    /// Interval enclosure of width <= 2^-p (except unrefinable opaques, where
    /// the declared error bound is a floor).
    fn enclosure(&self, p: u32) -> (Rat, Rat) {
        match self {
            BasisElement::One => (Rat::one(), Rat::one()),
            BasisElement::Sqrt(m) => sqrt_enclosure(*m, p),
            BasisElement::Opaque { value, error, .. } => (value - error, value + error),
        }
    }

    fn refinable(&self) -> bool {
        !matches!(self, BasisElement::Opaque { .. })
    }
}

/// Enclosure of sqrt(m) with width <= 2^-p: isqrt(m * 4^p) / 2^p.
pub(crate) fn sqrt_enclosure(m: u64, p: u32) -> (Rat, Rat) {
    let scaled = BigInt::from(m) << (2 * p as usize);
    let s = scaled.sqrt();
    let denom = BigInt::one() << (p as usize);
    let lo = Rat::new(s.clone(), denom.clone());
    let hi = Rat::new(s + BigInt::one(), denom);
    (lo, hi)
}

/// Ordered basis; the first element is always 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RealBasis {
    elements: Vec<BasisElement>,
}

impl RealBasis {
    pub fn new(elements: Vec<BasisElement>) -> Result<Arc<Self>, ScalarError> {
        if elements.first() != Some(&BasisElement::One) {
            return Err(ScalarError::InvalidBasis(
                "first basis element must be 1".into(),
            ));
        }
        let mut seen = Vec::new();
        for e in &elements[1..] {
            match e {
                BasisElement::One => {
                    return Err(ScalarError::InvalidBasis("duplicate 1 in basis".into()))
                }
                BasisElement::Sqrt(m) => {
                    if *m < 2 || !is_squarefree(*m) {
                        return Err(ScalarError::InvalidBasis(format!(
                            "sqrt argument {m} is not square-free and > 1"
                        )));
                    }
                    if seen.contains(m) {
                        return Err(ScalarError::InvalidBasis(format!("duplicate sqrt({m})")));
                    }
                    seen.push(*m);
                }
                BasisElement::Opaque { error, .. } => {
                    if error.is_negative() {
                        return Err(ScalarError::InvalidBasis(
                            "opaque error bound must be non-negative".into(),
                        ));
                    }
                }
            }
        }
        Ok(Arc::new(RealBasis { elements }))
    }

    /// The basis {1}.
    pub fn rational() -> Arc<Self> {
        RealBasis::new(vec![BasisElement::One]).expect("valid")
    }

    /// Basis {1, sqrt(m1), sqrt(m2), ...} for sorted distinct square-free args.
    pub fn with_sqrts(ms: &[u64]) -> Result<Arc<Self>, ScalarError> {
        let mut elements = vec![BasisElement::One];
        elements.extend(ms.iter().map(|&m| BasisElement::Sqrt(m)));
        RealBasis::new(elements)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn fully_refinable(&self) -> bool {
        self.elements.iter().all(|e| e.refinable())
    }

    fn sqrt_index(&self, m: u64) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| matches!(e, BasisElement::Sqrt(n) if *n == m))
    }

    fn opaque_index(&self, label: &str) -> Option<usize> {
        self.elements
            .iter()
            .position(|e| matches!(e, BasisElement::Opaque { label: l, .. } if l == label))
    }
}

pub(crate) fn is_squarefree(mut m: u64) -> bool {
    if m == 0 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return false;
            }
        }
        p += 1;
    }
    true
}

/// A real number: rational coordinates over a shared basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactReal {
    basis: Arc<RealBasis>,
    coords: Vec<Rat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparison {
    Less,
    Equal,
    Greater,
}

impl ExactReal {
    pub fn new(basis: Arc<RealBasis>, coords: Vec<Rat>) -> Result<Self, ScalarError> {
        if coords.len() != basis.len() {
            return Err(ScalarError::BasisMismatch);
        }
        Ok(ExactReal { basis, coords })
    }

    pub fn zero(basis: &Arc<RealBasis>) -> Self {
        ExactReal {
            basis: basis.clone(),
            coords: vec![Rat::zero(); basis.len()],
        }
    }

    pub fn from_rational(basis: &Arc<RealBasis>, r: Rat) -> Self {
        let mut coords = vec![Rat::zero(); basis.len()];
        coords[0] = r;
        ExactReal {
            basis: basis.clone(),
            coords,
        }
    }

    pub fn basis(&self) -> &Arc<RealBasis> {
        &self.basis
    }

    pub fn coords(&self) -> &[Rat] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn is_positive(&self) -> Result<bool, ScalarError> {
        Ok(self.compare(&ExactReal::zero(&self.basis))? == Comparison::Greater)
    }

    /// The rational part if the number is purely rational.
    pub fn as_rational(&self) -> Option<&Rat> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coords[0])
        } else {
            None
        }
    }

    fn check_basis(&self, other: &ExactReal) -> Result<(), ScalarError> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis == other.basis {
            Ok(())
        } else {
            Err(ScalarError::BasisMismatch)
        }
    }

    pub fn add(&self, other: &ExactReal) -> Result<ExactReal, ScalarError> {
        self.check_basis(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ExactReal {
            basis: self.basis.clone(),
            coords,
        })
    }

    pub fn sub(&self, other: &ExactReal) -> Result<ExactReal, ScalarError> {
        self.check_basis(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ExactReal {
            basis: self.basis.clone(),
            coords,
        })
    }

    pub fn scale(&self, r: &Rat) -> ExactReal {
        ExactReal {
            basis: self.basis.clone(),
            coords: self.coords.iter().map(|c| c * r).collect(),
        }
    }

    pub fn neg(&self) -> ExactReal {
        self.scale(&-Rat::one())
    }

    /// Interval of width <= 2^-p containing the value (best effort on opaque
    /// elements, whose declared error is a hard floor).
    pub fn enclosure(&self, p: u32) -> (Rat, Rat) {
        // Per-element precision: absorb coordinate magnitudes and the count.
        let mut extra = 8u32;
        for c in &self.coords {
            let bits = c.numer().bits() as u32;
            if bits > extra {
                extra = bits + 8;
            }
        }
        let q = p.saturating_add(extra);
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for (c, e) in self.coords.iter().zip(self.basis.elements()) {
            if c.is_zero() {
                continue;
            }
            let (el, eh) = e.enclosure(q);
            if c.is_negative() {
                lo += c * &eh;
                hi += c * &el;
            } else {
                lo += c * &el;
                hi += c * &eh;
            }
        }
        (lo, hi)
    }

    pub fn to_f64(&self) -> f64 {
        let (lo, hi) = self.enclosure(64);
        let mid = (lo + hi) / Rat::from_integer(BigInt::from(2));
        rat_to_f64(&mid)
    }

    /// Total-order comparison. Equal coordinate vectors compare `Equal`;
    /// otherwise enclosures are refined until disjoint.
    pub fn compare(&self, other: &ExactReal) -> Result<Comparison, ScalarError> {
        self.compare_with_ceiling(other, precision_ceiling())
    }

    pub fn compare_with_ceiling(
        &self,
        other: &ExactReal,
        ceiling: u32,
    ) -> Result<Comparison, ScalarError> {
        self.check_basis(other)?;
        if self.coords == other.coords {
            return Ok(Comparison::Equal);
        }
        let diff = self.sub(other)?;
        match diff.sign_with_ceiling(ceiling)? {
            Ordering::Less => Ok(Comparison::Less),
            Ordering::Greater => Ok(Comparison::Greater),
            Ordering::Equal => unreachable!("nonzero coordinates classified as zero"),
        }
    }

    /// Sign of a number with a *nonzero* coordinate vector.
    fn sign_with_ceiling(&self, ceiling: u32) -> Result<Ordering, ScalarError> {
        debug_assert!(!self.is_zero());
        let hard_cap = if self.basis.fully_refinable() {
            SQRT_REFINEMENT_CAP
        } else {
            ceiling
        };
        let mut p = 32u32;
        loop {
            let (lo, hi) = self.enclosure(p);
            if lo.is_positive() {
                return Ok(Ordering::Greater);
            }
            if hi.is_negative() {
                return Ok(Ordering::Less);
            }
            if p >= hard_cap {
                return Err(ScalarError::RefinementExhausted);
            }
            p = p.saturating_mul(2).min(hard_cap);
        }
    }
}

pub(crate) fn rat_to_f64(r: &Rat) -> f64 {
    let n = bigint_to_f64(r.numer());
    let d = bigint_to_f64(r.denom());
    n / d
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    // Lossy; used only for numeric reporting.
    let s = n.to_string();
    s.parse::<f64>().unwrap_or(f64::NAN)
}

/// Precision ceiling in bits, honoring BNF_PRECISION_BITS.
pub fn precision_ceiling() -> u32 {
    std::env::var("BNF_PRECISION_BITS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_PRECISION_BITS)
}

/// Solves nu = sum n_i * omega_i for non-negative integers n_i, by exact
/// rational linear algebra on coordinate vectors. `None` when no such vector
/// exists; errors when the omegas' coordinate vectors are dependent.
pub fn integer_combination(
    nu: &ExactReal,
    omegas: &[ExactReal],
) -> Result<Option<Vec<u64>>, ScalarError> {
    if omegas.is_empty() {
        return Ok(if nu.is_zero() { Some(vec![]) } else { None });
    }
    for w in omegas {
        nu.check_basis(w)?;
    }
    let rows = nu.basis.len();
    let cols = omegas.len();
    // Augmented matrix [omega coords | nu coords], one row per basis element.
    let mut m: Vec<Vec<Rat>> = (0..rows)
        .map(|i| {
            let mut row: Vec<Rat> = omegas.iter().map(|w| w.coords[i].clone()).collect();
            row.push(nu.coords[i].clone());
            row
        })
        .collect();
    let mut pivot_row = 0usize;
    let mut pivots = Vec::new();
    for col in 0..cols {
        let Some(r) = (pivot_row..rows).find(|&r| !m[r][col].is_zero()) else {
            // Dependent columns.
            return Err(ScalarError::DependentFrequencies);
        };
        m.swap(pivot_row, r);
        let inv = m[pivot_row][col].recip();
        for v in m[pivot_row].iter_mut() {
            *v *= &inv;
        }
        for r2 in 0..rows {
            if r2 != pivot_row && !m[r2][col].is_zero() {
                let f = m[r2][col].clone();
                for c2 in 0..=cols {
                    let sub = &m[pivot_row][c2] * &f;
                    m[r2][c2] -= sub;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    // Consistency: rows past the pivots must have zero rhs.
    for r in pivot_row..rows {
        if !m[r][cols].is_zero() {
            return Ok(None);
        }
    }
    let mut n = Vec::with_capacity(cols);
    for (col, &pr) in pivots.iter().enumerate() {
        let v = &m[pr][cols];
        let _ = col;
        if !v.is_integer() || v.is_negative() {
            return Ok(None);
        }
        let int = v.to_integer();
        let Some(u) = int.to_string().parse::<u64>().ok() else {
            return Ok(None);
        };
        n.push(u);
    }
    // Defensive exactness check.
    let mut recon = ExactReal::zero(&nu.basis);
    for (w, &ni) in omegas.iter().zip(&n) {
        recon = recon.add(&w.scale(&Rat::from_integer(BigInt::from(ni))))?;
    }
    debug_assert_eq!(recon.coords, nu.coords);
    Ok(Some(n))
}

// ---------------------------------------------------------------------------
// Text form: "p/q" terms joined with " + ", each optionally "*sqrt(m)" or
// "*<opaque-label>", e.g. "1/3 + 2/1*sqrt(2)".
// ---------------------------------------------------------------------------

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (c, e) in self.coords.iter().zip(self.basis.elements()) {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}/{}", c.numer(), c.denom())?;
            match e {
                BasisElement::One => {}
                BasisElement::Sqrt(m) => write!(f, "*sqrt({m})")?,
                BasisElement::Opaque { label, .. } => write!(f, "*{label}")?,
            }
        }
        if first {
            write!(f, "0/1")?;
        }
        Ok(())
    }
}

/// Parses the text form into the given basis.
pub fn parse_exact_real(s: &str, basis: &Arc<RealBasis>) -> Result<ExactReal, ScalarError> {
    let mut coords = vec![Rat::zero(); basis.len()];
    for raw in s.split('+') {
        let term = raw.trim();
        if term.is_empty() {
            return Err(ScalarError::Parse(format!("empty term in '{s}'")));
        }
        let (rat_str, idx) = match term.split_once('*') {
            None => (term, 0usize),
            Some((r, tag)) => {
                let tag = tag.trim();
                let idx = if let Some(arg) = tag
                    .strip_prefix("sqrt(")
                    .and_then(|rest| rest.strip_suffix(')'))
                {
                    let m: u64 = arg
                        .trim()
                        .parse()
                        .map_err(|_| ScalarError::Parse(format!("bad sqrt argument '{arg}'")))?;
                    basis
                        .sqrt_index(m)
                        .ok_or_else(|| ScalarError::Parse(format!("sqrt({m}) not in basis")))?
                } else {
                    basis
                        .opaque_index(tag)
                        .ok_or_else(|| ScalarError::Parse(format!("unknown basis tag '{tag}'")))?
                };
                (r.trim(), idx)
            }
        };
        let r = parse_rational(rat_str)?;
        coords[idx] += r;
    }
    ExactReal::new(basis.clone(), coords)
}

/// Collects the sqrt labels appearing in a text form (for auto-basis builds).
pub fn sqrt_labels_in(s: &str) -> Result<Vec<u64>, ScalarError> {
    let mut out = Vec::new();
    for raw in s.split('+') {
        if let Some((_, tag)) = raw.trim().split_once('*') {
            if let Some(arg) = tag
                .trim()
                .strip_prefix("sqrt(")
                .and_then(|rest| rest.strip_suffix(')'))
            {
                let m: u64 = arg
                    .trim()
                    .parse()
                    .map_err(|_| ScalarError::Parse(format!("bad sqrt argument '{arg}'")))?;
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
    }
    Ok(out)
}

pub fn parse_rational(s: &str) -> Result<Rat, ScalarError> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let numer: BigInt = n
        .parse()
        .map_err(|_| ScalarError::Parse(format!("bad numerator '{n}'")))?;
    let denom: BigInt = d
        .parse()
        .map_err(|_| ScalarError::Parse(format!("bad denominator '{d}'")))?;
    if denom.is_zero() {
        return Err(ScalarError::Parse("zero denominator".into()));
    }
    Ok(Rat::new(numer, denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn b12() -> Arc<RealBasis> {
        RealBasis::with_sqrts(&[2]).unwrap()
    }

    fn er(basis: &Arc<RealBasis>, coords: &[(i64, i64)]) -> ExactReal {
        ExactReal::new(
            basis.clone(),
            coords.iter().map(|&(n, d)| rat(n, d)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn compare_equal_identical_coords() {
        let b = b12();
        let a = er(&b, &[(1, 1), (2, 1)]);
        let c = er(&b, &[(1, 1), (2, 1)]);
        assert_eq!(a.compare(&c).unwrap(), Comparison::Equal);
    }

    #[test]
    fn compare_sqrt2_vs_three_halves() {
        let b = b12();
        let a = er(&b, &[(0, 1), (1, 1)]); // sqrt(2)
        let c = er(&b, &[(3, 2), (0, 1)]); // 3/2
        assert_eq!(a.compare(&c).unwrap(), Comparison::Less);
    }

    #[test]
    fn compare_one_plus_sqrt2_vs_two_sqrt2() {
        let b = b12();
        let a = er(&b, &[(1, 1), (1, 1)]);
        let c = er(&b, &[(0, 1), (2, 1)]);
        assert_eq!(a.compare(&c).unwrap(), Comparison::Less);
        assert_eq!(c.compare(&a).unwrap(), Comparison::Greater);
    }

    #[test]
    fn field_ops_examples() {
        let b = b12();
        let a = er(&b, &[(1, 1), (1, 1)]); // 1 + sqrt2
        assert!(a.sub(&a).unwrap().is_zero());

        let h = er(&b, &[(1, 2), (1, 1)]); // 1/2 + sqrt2
        let t = h.scale(&rat(3, 1));
        assert_eq!(t, er(&b, &[(3, 2), (3, 1)]));

        let m = er(&b, &[(1, 1), (-1, 1)]); // 1 - sqrt2
        assert_eq!(a.add(&m).unwrap(), er(&b, &[(2, 1), (0, 1)]));
    }

    #[test]
    fn basis_mismatch_detected() {
        let b = b12();
        let b3 = RealBasis::with_sqrts(&[3]).unwrap();
        let a = ExactReal::from_rational(&b, rat(1, 1));
        let c = ExactReal::from_rational(&b3, rat(1, 1));
        assert_eq!(a.add(&c).unwrap_err(), ScalarError::BasisMismatch);
    }

    #[test]
    fn integer_combination_examples() {
        let b = b12();
        let one = er(&b, &[(1, 1), (0, 1)]);
        let s2 = er(&b, &[(0, 1), (1, 1)]);
        let nu = er(&b, &[(2, 1), (3, 1)]); // 2 + 3 sqrt2
        assert_eq!(
            integer_combination(&nu, &[one.clone(), s2.clone()]).unwrap(),
            Some(vec![2, 3])
        );

        let half = er(&b, &[(1, 2), (0, 1)]);
        assert_eq!(integer_combination(&half, &[one.clone()]).unwrap(), None);

        let zero = ExactReal::zero(&b);
        assert_eq!(
            integer_combination(&zero, &[one.clone(), s2]).unwrap(),
            Some(vec![0, 0])
        );

        // Dependent columns: (1, 2) over the rational axis.
        let two = er(&b, &[(2, 1), (0, 1)]);
        assert_eq!(
            integer_combination(&nu, &[one, two]).unwrap_err(),
            ScalarError::DependentFrequencies
        );
    }

    #[test]
    fn enclosure_width_shrinks() {
        let b = b12();
        let a = er(&b, &[(1, 3), (2, 1)]);
        for p in [16u32, 32, 64, 128] {
            let (lo, hi) = a.enclosure(p);
            let width = hi - lo;
            let bound = Rat::new(BigInt::one(), BigInt::one() << (p as usize));
            assert!(width <= bound, "width exceeds 2^-{p}");
        }
    }

    #[test]
    fn text_form_round_trip() {
        let b = b12();
        let a = er(&b, &[(1, 3), (2, 1)]);
        assert_eq!(a.to_string(), "1/3 + 2/1*sqrt(2)");
        let back = parse_exact_real(&a.to_string(), &b).unwrap();
        assert_eq!(back, a);

        let z = ExactReal::zero(&b);
        assert_eq!(z.to_string(), "0/1");
        assert_eq!(parse_exact_real("0/1", &b).unwrap(), z);

        let neg = er(&b, &[(1, 1), (-3, 2)]);
        let back = parse_exact_real(&neg.to_string(), &b).unwrap();
        assert_eq!(back, neg);
    }

    #[test]
    fn opaque_refinement_exhausts() {
        let basis = RealBasis::new(vec![
            BasisElement::One,
            BasisElement::Opaque {
                label: "gamma".into(),
                value: rat(5772156649, 10000000000),
                error: rat(1, 10000000000),
                refinement_unavailable: true,
            },
        ])
        .unwrap();
        // gamma vs a rational inside its error bar: unequal coords, enclosures
        // can never separate.
        let g = ExactReal::new(basis.clone(), vec![rat(0, 1), rat(1, 1)]).unwrap();
        let r = ExactReal::from_rational(&basis, rat(5772156649, 10000000000));
        assert_eq!(g.compare(&r).unwrap_err(), ScalarError::RefinementExhausted);
    }

    #[test]
    fn compare_total_order_on_sample() {
        let b = b12();
        let sample: Vec<ExactReal> = [
            (0, 1, 0, 1),
            (1, 1, 0, 1),
            (0, 1, 1, 1),
            (3, 2, 0, 1),
            (-1, 1, 1, 1),
            (7, 5, 0, 1),
            (0, 1, -1, 2),
        ]
        .iter()
        .map(|&(a, bq, c, d)| er(&b, &[(a, bq), (c, d)]))
        .collect();
        // Antisymmetry and transitivity via sorting consistency.
        for x in &sample {
            for y in &sample {
                let xy = x.compare(y).unwrap();
                let yx = y.compare(x).unwrap();
                match xy {
                    Comparison::Less => assert_eq!(yx, Comparison::Greater),
                    Comparison::Greater => assert_eq!(yx, Comparison::Less),
                    Comparison::Equal => assert_eq!(yx, Comparison::Equal),
                }
                for z in &sample {
                    if xy == Comparison::Less && y.compare(z).unwrap() == Comparison::Less {
                        assert_eq!(x.compare(z).unwrap(), Comparison::Less);
                    }
                }
            }
        }
    }
}
