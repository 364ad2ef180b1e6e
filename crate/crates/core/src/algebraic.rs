//! The real field generated over Q by square roots of square-free integers.
//!
//! An element is a finite sum `sum_m c_m * sqrt(m)` keyed by square-free m
//! (m = 1 is the rational part). The key set is closed under multiplication
//! (`sqrt(m) * sqrt(n) = g * sqrt(mn/g^2)` with g = gcd), and inversion is
//! done by repeated conjugation, so the type is a genuine field. This is the
//! closure under division required when cohomological divisors 1/<omega, a-b>
//! enter coefficient arithmetic.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num::{BigInt, One, Signed, Zero};

use crate::scalars::{
    rat_to_f64, sqrt_enclosure, BasisElement, ExactReal, Rat, RealBasis, ScalarError,
};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Algebraic {
    // label -> coefficient; labels square-free, label 1 is the rational part,
    // no zero coefficients stored.
    terms: BTreeMap<u64, Rat>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// n = s^2 * r with r square-free; returns (s, r).
pub fn squarefree_decompose(n: u64) -> (u64, u64) {
    assert!(n > 0, "square root argument must be positive");
    let mut s = 1u64;
    let mut r = n;
    let mut p = 2u64;
    while p * p <= r {
        while r % (p * p) == 0 {
            r /= p * p;
            s *= p;
        }
        p += 1;
    }
    (s, r)
}

impl Algebraic {
    pub fn zero() -> Self {
        Algebraic::default()
    }

    pub fn one() -> Self {
        Algebraic::from_rat(Rat::one())
    }

    pub fn from_rat(r: Rat) -> Self {
        let mut t = BTreeMap::new();
        if !r.is_zero() {
            t.insert(1, r);
        }
        Algebraic { terms: t }
    }

    pub fn from_int(n: i64) -> Self {
        Algebraic::from_rat(Rat::from_integer(BigInt::from(n)))
    }

    /// sqrt(n) for a positive integer n (square part extracted).
    pub fn sqrt(n: u64) -> Self {
        let (s, r) = squarefree_decompose(n);
        let mut t = BTreeMap::new();
        t.insert(r, Rat::from_integer(BigInt::from(s)));
        Algebraic { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_rational(&self) -> bool {
        self.terms.keys().all(|&k| k == 1)
    }

    pub fn as_rat(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            return Some(Rat::zero());
        }
        if self.is_rational() {
            return self.terms.get(&1).cloned();
        }
        None
    }

    pub fn labels(&self) -> impl Iterator<Item = u64> + '_ {
        self.terms.keys().copied()
    }

    /// Exact coefficient of sqrt(label); label 1 is the rational part.
    pub fn coeff_of(&self, label: u64) -> Rat {
        self.terms.get(&label).cloned().unwrap_or_else(Rat::zero)
    }

    fn insert(&mut self, label: u64, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&label) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&label);
                }
            }
            None => {
                self.terms.insert(label, c);
            }
        }
    }

    pub fn add(&self, other: &Algebraic) -> Algebraic {
        let mut out = self.clone();
        for (&l, c) in &other.terms {
            out.insert(l, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Algebraic) -> Algebraic {
        let mut out = self.clone();
        for (&l, c) in &other.terms {
            out.insert(l, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Algebraic {
        Algebraic {
            terms: self.terms.iter().map(|(&l, c)| (l, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, r: &Rat) -> Algebraic {
        if r.is_zero() {
            return Algebraic::zero();
        }
        Algebraic {
            terms: self.terms.iter().map(|(&l, c)| (l, c * r)).collect(),
        }
    }

    pub fn mul(&self, other: &Algebraic) -> Algebraic {
        let mut out = Algebraic::zero();
        for (&m, a) in &self.terms {
            for (&n, b) in &other.terms {
                let g = gcd(m, n);
                let label = (m / g) * (n / g);
                let c = a * b * Rat::from_integer(BigInt::from(g));
                out.insert(label, c);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Algebraic {
        let mut out = Algebraic::one();
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Algebraic {
        assert!(!self.is_zero(), "division by zero");
        if let Some(r) = self.as_rat() {
            return Algebraic::from_rat(r.recip());
        }
        // Pick a prime dividing some non-rational label; conjugate it away.
        let label = *self.terms.keys().find(|&&k| k > 1).expect("non-rational");
        let p = smallest_prime_factor(label);
        let conj = Algebraic {
            terms: self
                .terms
                .iter()
                .map(|(&l, c)| (l, if l % p == 0 { -c.clone() } else { c.clone() }))
                .collect(),
        };
        let denom = self.mul(&conj);
        debug_assert!(denom.terms.keys().all(|&l| l % p != 0));
        conj.mul(&denom.inv())
    }

    pub fn div(&self, other: &Algebraic) -> Algebraic {
        self.mul(&other.inv())
    }

    /// Sign of the real value; exact via interval refinement.
    pub fn sign(&self) -> Ordering {
        if self.is_zero() {
            return Ordering::Equal;
        }
        if let Some(r) = self.as_rat() {
            return r.cmp(&Rat::zero());
        }
        let mut p = 32u32;
        loop {
            let (lo, hi) = self.enclosure(p);
            if lo.is_positive() {
                return Ordering::Greater;
            }
            if hi.is_negative() {
                return Ordering::Less;
            }
            p *= 2;
            assert!(p <= 1 << 16, "sign refinement runaway");
        }
    }

    pub fn cmp_value(&self, other: &Algebraic) -> Ordering {
        self.sub(other).sign()
    }

    pub fn enclosure(&self, p: u32) -> (Rat, Rat) {
        let mut extra = 8u32;
        for c in self.terms.values() {
            let bits = c.numer().bits() as u32;
            if bits > extra {
                extra = bits + 8;
            }
        }
        let q = p.saturating_add(extra);
        let mut lo = Rat::zero();
        let mut hi = Rat::zero();
        for (&l, c) in &self.terms {
            let (el, eh) = if l == 1 {
                (Rat::one(), Rat::one())
            } else {
                sqrt_enclosure(l, q)
            };
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
        let mut acc = 0.0;
        for (&l, c) in &self.terms {
            acc += rat_to_f64(c) * (l as f64).sqrt();
        }
        acc
    }

    /// Coordinates over the given basis; errors if a label is missing or the
    /// basis contains opaque elements the value does not live in.
    pub fn to_exact_real(&self, basis: &Arc<RealBasis>) -> Result<ExactReal, ScalarError> {
        let mut coords = vec![Rat::zero(); basis.len()];
        for (&l, c) in &self.terms {
            let idx = if l == 1 {
                0
            } else {
                basis
                    .elements()
                    .iter()
                    .position(|e| matches!(e, BasisElement::Sqrt(m) if *m == l))
                    .ok_or(ScalarError::BasisMismatch)?
            };
            coords[idx] = c.clone();
        }
        ExactReal::new(basis.clone(), coords)
    }

    /// Back-conversion from an ExactReal over a sqrt-only basis.
    pub fn from_exact_real(x: &ExactReal) -> Result<Algebraic, ScalarError> {
        let mut out = Algebraic::zero();
        for (c, e) in x.coords().iter().zip(x.basis().elements()) {
            if c.is_zero() {
                continue;
            }
            match e {
                BasisElement::One => out.insert(1, c.clone()),
                BasisElement::Sqrt(m) => out.insert(*m, c.clone()),
                BasisElement::Opaque { .. } => return Err(ScalarError::BasisMismatch),
            }
        }
        Ok(out)
    }
}

fn smallest_prime_factor(n: u64) -> u64 {
    debug_assert!(n > 1);
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            return p;
        }
        p += 1;
    }
    n.max(2)
}

impl fmt::Display for Algebraic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0/1");
        }
        let mut first = true;
        for (&l, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}/{}", c.numer(), c.denom())?;
            if l != 1 {
                write!(f, "*sqrt({l})")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn sqrt_products_reduce() {
        let a = Algebraic::sqrt(2);
        let b = Algebraic::sqrt(3);
        let ab = a.mul(&b);
        assert_eq!(ab, Algebraic::sqrt(6));
        // sqrt(2)*sqrt(6) = 2 sqrt(3)
        let c = a.mul(&Algebraic::sqrt(6));
        assert_eq!(c, Algebraic::sqrt(3).scale(&rat(2, 1)));
        // sqrt(8) = 2 sqrt(2)
        assert_eq!(Algebraic::sqrt(8), Algebraic::sqrt(2).scale(&rat(2, 1)));
    }

    #[test]
    fn inversion_in_multiquadratic_field() {
        // x = 1 + sqrt(2) - sqrt(3) + sqrt(6)/2
        let x = Algebraic::one()
            .add(&Algebraic::sqrt(2))
            .sub(&Algebraic::sqrt(3))
            .add(&Algebraic::sqrt(6).scale(&rat(1, 2)));
        let y = x.inv();
        assert_eq!(x.mul(&y), Algebraic::one());

        let w = Algebraic::one().sub(&Algebraic::sqrt(2)); // 1 - sqrt2
        assert_eq!(w.mul(&w.inv()), Algebraic::one());
    }

    #[test]
    fn sign_and_order() {
        let x = Algebraic::one().sub(&Algebraic::sqrt(2));
        assert_eq!(x.sign(), Ordering::Less);
        assert_eq!(Algebraic::sqrt(2).cmp_value(&Algebraic::from_rat(rat(3, 2))), Ordering::Less);
        assert_eq!(Algebraic::zero().sign(), Ordering::Equal);
    }

    #[test]
    fn exact_real_round_trip() {
        let basis = RealBasis::with_sqrts(&[2, 3]).unwrap();
        let x = Algebraic::from_rat(rat(1, 3)).add(&Algebraic::sqrt(3).scale(&rat(-2, 5)));
        let er = x.to_exact_real(&basis).unwrap();
        assert_eq!(Algebraic::from_exact_real(&er).unwrap(), x);
    }
}
