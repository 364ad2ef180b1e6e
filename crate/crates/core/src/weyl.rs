//! The graded semiclassical Weyl algebra: truncated formal series in
//! (x, xi, hbar) with the Moyal star product, Poisson bracket, complex
//! coordinates z = x + i*xi, and conjugation by exp(iS/hbar).
//!
//! Grading: degree(hbar^j x^a xi^b) = 2j + |a| + |b|. Every symbol carries a
//! hard truncation degree; binary operations require equal truncations.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::scalars::Rat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("symbol dimensions differ")]
    DimensionMismatch,
    #[error("symbol truncations differ")]
    TruncationMismatch,
    #[error("term of graded degree {0} exceeds truncation {1}")]
    DegreeOverflow(u32, u32),
    #[error("conjugation by a generator of graded degree <= 2 does not terminate")]
    NonTerminating,
    #[error("complex symbol is not conjugate-symmetric; no real preimage")]
    NonRealResult,
}

/// Gaussian number over the real multiquadratic field.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CAlg {
    pub re: Algebraic,
    pub im: Algebraic,
}

impl CAlg {
    pub fn zero() -> Self {
        CAlg::default()
    }

    pub fn one() -> Self {
        CAlg {
            re: Algebraic::one(),
            im: Algebraic::zero(),
        }
    }

    pub fn i() -> Self {
        CAlg {
            re: Algebraic::zero(),
            im: Algebraic::one(),
        }
    }

    pub fn from_rat(r: Rat) -> Self {
        CAlg {
            re: Algebraic::from_rat(r),
            im: Algebraic::zero(),
        }
    }

    pub fn from_alg(a: Algebraic) -> Self {
        CAlg {
            re: a,
            im: Algebraic::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, o: &CAlg) -> CAlg {
        CAlg {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &CAlg) -> CAlg {
        CAlg {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    pub fn neg(&self) -> CAlg {
        CAlg {
            re: self.re.neg(),
            im: self.im.neg(),
        }
    }

    pub fn conj(&self) -> CAlg {
        CAlg {
            re: self.re.clone(),
            im: self.im.neg(),
        }
    }

    pub fn mul(&self, o: &CAlg) -> CAlg {
        CAlg {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    pub fn scale(&self, r: &Rat) -> CAlg {
        CAlg {
            re: self.re.scale(r),
            im: self.im.scale(r),
        }
    }

    pub fn scale_alg(&self, a: &Algebraic) -> CAlg {
        CAlg {
            re: self.re.mul(a),
            im: self.im.mul(a),
        }
    }

    /// Multiplication by i.
    pub fn mul_i(&self) -> CAlg {
        CAlg {
            re: self.im.neg(),
            im: self.re.clone(),
        }
    }

    /// Multiplication by i^k.
    pub fn mul_i_pow(&self, k: u32) -> CAlg {
        match k % 4 {
            0 => self.clone(),
            1 => self.mul_i(),
            2 => self.neg(),
            _ => self.mul_i().neg(),
        }
    }

    pub fn inv(&self) -> CAlg {
        let norm = self.re.mul(&self.re).add(&self.im.mul(&self.im));
        let n = norm.inv();
        CAlg {
            re: self.re.mul(&n),
            im: self.im.neg().mul(&n),
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Display for CAlg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "({}) + i({})", self.re, self.im)
        }
    }
}

/// Exponent key: (hbar power, first exponent vector, second exponent vector).
/// For `FormalSymbol` the vectors are (x, xi); for `ComplexSymbol`, (z, zbar).
pub type Expo = (u32, Vec<u32>, Vec<u32>);

pub fn graded_degree(key: &Expo) -> u32 {
    2 * key.0 + key.1.iter().sum::<u32>() + key.2.iter().sum::<u32>()
}

fn sum(v: &[u32]) -> u32 {
    v.iter().sum()
}

/// All multi-indices componentwise <= bounds.
fn multi_below(bounds: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0u32; bounds.len()]];
    for (j, &b) in bounds.iter().enumerate() {
        let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
        for base in &out {
            for v in 0..=b {
                let mut w = base.clone();
                w[j] = v;
                next.push(w);
            }
        }
        out = next;
    }
    out
}

fn factorial(n: u32) -> BigInt {
    let mut f = BigInt::one();
    for k in 2..=n {
        f *= BigInt::from(k);
    }
    f
}

fn multi_factorial(v: &[u32]) -> BigInt {
    v.iter().map(|&k| factorial(k)).product()
}

/// Product over coordinates of n_j (n_j - 1) ... (n_j - k_j + 1).
fn falling_factorial(n: &[u32], k: &[u32]) -> BigInt {
    let mut f = BigInt::one();
    for (&nj, &kj) in n.iter().zip(k) {
        for s in 0..kj {
            f *= BigInt::from(nj - s);
        }
    }
    f
}

fn binom(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    falling_factorial(&[n], &[k]) / factorial(k)
}

fn sub_vec(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn add_vec(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn min_vec(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(&x, &y)| x.min(y)).collect()
}

macro_rules! symbol_common {
    ($name:ident) => {
        impl $name {
            pub fn zero(dim: usize, trunc: u32) -> Self {
                $name {
                    dim,
                    trunc,
                    terms: BTreeMap::new(),
                }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn truncation(&self) -> u32 {
                self.trunc
            }

            pub fn terms(&self) -> impl Iterator<Item = (&Expo, &CAlg)> {
                self.terms.iter()
            }

            pub fn num_terms(&self) -> usize {
                self.terms.len()
            }

            pub fn is_zero(&self) -> bool {
                self.terms.is_empty()
            }

            pub fn coefficient(&self, key: &Expo) -> CAlg {
                self.terms.get(key).cloned().unwrap_or_else(CAlg::zero)
            }

            /// Adds `c` to the coefficient of `key`, dropping terms beyond the
            /// truncation silently (the defining semantics of truncated series).
            pub fn accumulate(&mut self, key: Expo, c: CAlg) {
                if c.is_zero() || graded_degree(&key) > self.trunc {
                    return;
                }
                match self.terms.get_mut(&key) {
                    Some(v) => {
                        *v = v.add(&c);
                        if v.is_zero() {
                            self.terms.remove(&key);
                        }
                    }
                    None => {
                        self.terms.insert(key, c);
                    }
                }
            }

            /// Adds a term, erroring if it exceeds the truncation (input
            /// validation path, unlike `accumulate`).
            pub fn try_insert(&mut self, key: Expo, c: CAlg) -> Result<(), WeylError> {
                let deg = graded_degree(&key);
                if deg > self.trunc {
                    return Err(WeylError::DegreeOverflow(deg, self.trunc));
                }
                self.accumulate(key, c);
                Ok(())
            }

            fn check_compat(&self, other: &Self) -> Result<(), WeylError> {
                if self.dim != other.dim {
                    return Err(WeylError::DimensionMismatch);
                }
                if self.trunc != other.trunc {
                    return Err(WeylError::TruncationMismatch);
                }
                Ok(())
            }

            pub fn add(&self, other: &Self) -> Result<Self, WeylError> {
                self.check_compat(other)?;
                let mut out = self.clone();
                for (k, c) in &other.terms {
                    out.accumulate(k.clone(), c.clone());
                }
                Ok(out)
            }

            pub fn sub(&self, other: &Self) -> Result<Self, WeylError> {
                self.check_compat(other)?;
                let mut out = self.clone();
                for (k, c) in &other.terms {
                    out.accumulate(k.clone(), c.neg());
                }
                Ok(out)
            }

            pub fn scale(&self, c: &CAlg) -> Self {
                let mut out = Self::zero(self.dim, self.trunc);
                for (k, v) in &self.terms {
                    out.accumulate(k.clone(), v.mul(c));
                }
                out
            }

            pub fn neg(&self) -> Self {
                self.scale(&CAlg::one().neg())
            }

            /// Terms of graded degree exactly n.
            pub fn grade_component(&self, n: u32) -> Self {
                let mut out = Self::zero(self.dim, self.trunc);
                for (k, c) in &self.terms {
                    if graded_degree(k) == n {
                        out.terms.insert(k.clone(), c.clone());
                    }
                }
                out
            }

            pub fn min_grade(&self) -> Option<u32> {
                self.terms.keys().map(graded_degree).min()
            }

            pub fn max_grade(&self) -> Option<u32> {
                self.terms.keys().map(graded_degree).max()
            }

            /// Re-truncates to a (equal or lower) degree bound.
            pub fn truncated(&self, trunc: u32) -> Self {
                let mut out = Self::zero(self.dim, trunc);
                for (k, c) in &self.terms {
                    out.accumulate(k.clone(), c.clone());
                }
                out
            }
        }
    };
}

/// Truncated graded polynomial in (x, xi, hbar).
#[derive(Debug, Clone, PartialEq)]
pub struct FormalSymbol {
    dim: usize,
    trunc: u32,
    terms: BTreeMap<Expo, CAlg>,
}

/// Truncated graded polynomial in (z, zbar, hbar), z_j = x_j + i xi_j.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSymbol {
    dim: usize,
    trunc: u32,
    terms: BTreeMap<Expo, CAlg>,
}

symbol_common!(FormalSymbol);
symbol_common!(ComplexSymbol);

impl FormalSymbol {
    pub fn constant(dim: usize, trunc: u32, c: CAlg) -> Self {
        let mut s = Self::zero(dim, trunc);
        s.accumulate((0, vec![0; dim], vec![0; dim]), c);
        s
    }

    /// The coordinate symbol x_j.
    pub fn x(dim: usize, trunc: u32, j: usize) -> Self {
        let mut s = Self::zero(dim, trunc);
        let mut a = vec![0; dim];
        a[j] = 1;
        s.accumulate((0, a, vec![0; dim]), CAlg::one());
        s
    }

    /// The coordinate symbol xi_j.
    pub fn xi(dim: usize, trunc: u32, j: usize) -> Self {
        let mut s = Self::zero(dim, trunc);
        let mut b = vec![0; dim];
        b[j] = 1;
        s.accumulate((0, vec![0; dim], b), CAlg::one());
        s
    }

    /// The action symbol I_j = (x_j^2 + xi_j^2)/2.
    pub fn action(dim: usize, trunc: u32, j: usize) -> Self {
        let mut s = Self::zero(dim, trunc);
        let half = CAlg::from_rat(Rat::new(BigInt::one(), BigInt::from(2)));
        let mut a = vec![0; dim];
        a[j] = 2;
        s.accumulate((0, a, vec![0; dim]), half.clone());
        let mut b = vec![0; dim];
        b[j] = 2;
        s.accumulate((0, vec![0; dim], b), half);
        s
    }

    /// The quadratic part Sigma = sum_j omega_j (x_j^2 + xi_j^2)/2.
    pub fn quadratic_part(dim: usize, trunc: u32, omegas: &[Algebraic]) -> Self {
        let mut s = Self::zero(dim, trunc);
        for (j, w) in omegas.iter().enumerate() {
            s = s
                .add(&Self::action(dim, trunc, j).scale(&CAlg::from_alg(w.clone())))
                .expect("compatible");
        }
        s
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(|c| c.is_real())
    }

    /// Pointwise (commutative) product, truncating.
    pub fn mul(&self, other: &Self) -> Result<Self, WeylError> {
        self.check_compat(other)?;
        let mut out = Self::zero(self.dim, self.trunc);
        for ((h1, a1, b1), c1) in &self.terms {
            for ((h2, a2, b2), c2) in &other.terms {
                out.accumulate(
                    (h1 + h2, add_vec(a1, a2), add_vec(b1, b2)),
                    c1.mul(c2),
                );
            }
        }
        Ok(out)
    }

    /// Multiplies by hbar^k.
    pub fn mul_hbar(&self, k: u32) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for ((h, a, b), c) in &self.terms {
            out.accumulate((h + k, a.clone(), b.clone()), c.clone());
        }
        out
    }

    /// Divides by hbar; every term must carry hbar.
    fn div_hbar(&self) -> Self {
        let mut out = Self::zero(self.dim, self.trunc);
        for ((h, a, b), c) in &self.terms {
            assert!(*h >= 1, "div_hbar on an hbar-free term");
            out.terms.insert((h - 1, a.clone(), b.clone()), c.clone());
        }
        out
    }

    /// Moyal star product:
    /// f*g = sum_{beta,gamma} (i hbar/2)^{|beta|+|gamma|} (-1)^{|gamma|}
    ///       / (beta! gamma!) (dx^beta dxi^gamma f)(dxi^beta dx^gamma g).
    pub fn moyal_star(&self, other: &Self) -> Result<Self, WeylError> {
        self.check_compat(other)?;
        let mut out = Self::zero(self.dim, self.trunc);
        for ((h1, a1, b1), c1) in &self.terms {
            for ((h2, a2, b2), c2) in &other.terms {
                let grade = 2 * (h1 + h2) + sum(a1) + sum(b1) + sum(a2) + sum(b2);
                if grade > self.trunc {
                    continue;
                }
                let base = c1.mul(c2);
                for beta in multi_below(&min_vec(a1, b2)) {
                    for gamma in multi_below(&min_vec(b1, a2)) {
                        let k = sum(&beta) + sum(&gamma);
                        let num = falling_factorial(a1, &beta)
                            * falling_factorial(b2, &beta)
                            * falling_factorial(b1, &gamma)
                            * falling_factorial(a2, &gamma);
                        let den = multi_factorial(&beta)
                            * multi_factorial(&gamma)
                            * (BigInt::one() << (k as usize));
                        let mut r = Rat::new(num, den);
                        if sum(&gamma) % 2 == 1 {
                            r = -r;
                        }
                        let coeff = base.scale(&r).mul_i_pow(k);
                        let key = (
                            h1 + h2 + k,
                            add_vec(&sub_vec(a1, &beta), &sub_vec(a2, &gamma)),
                            add_vec(&sub_vec(b1, &gamma), &sub_vec(b2, &beta)),
                        );
                        out.accumulate(key, coeff);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Poisson bracket {f,g} = sum_j (dx_j f dxi_j g - dxi_j f dx_j g).
    pub fn poisson(&self, other: &Self) -> Result<Self, WeylError> {
        self.check_compat(other)?;
        let mut out = Self::zero(self.dim, self.trunc);
        for ((h1, a1, b1), c1) in &self.terms {
            for ((h2, a2, b2), c2) in &other.terms {
                for j in 0..self.dim {
                    // dx_j f dxi_j g
                    if a1[j] > 0 && b2[j] > 0 {
                        let r = Rat::from_integer(BigInt::from(a1[j]) * BigInt::from(b2[j]));
                        let mut na1 = a1.clone();
                        na1[j] -= 1;
                        let mut nb2 = b2.clone();
                        nb2[j] -= 1;
                        out.accumulate(
                            (h1 + h2, add_vec(&na1, a2), add_vec(b1, &nb2)),
                            c1.mul(c2).scale(&r),
                        );
                    }
                    // - dxi_j f dx_j g
                    if b1[j] > 0 && a2[j] > 0 {
                        let r = Rat::from_integer(BigInt::from(b1[j]) * BigInt::from(a2[j]));
                        let mut nb1 = b1.clone();
                        nb1[j] -= 1;
                        let mut na2 = a2.clone();
                        na2[j] -= 1;
                        out.accumulate(
                            (h1 + h2, add_vec(a1, &na2), add_vec(&nb1, b2)),
                            c1.mul(c2).scale(&-r),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// Star commutator divided by i hbar; exact (even-order terms cancel).
    /// The commutator itself carries an overall hbar, so intermediates run
    /// with two extra degrees of headroom before the division.
    pub fn moyal_bracket(&self, other: &Self) -> Result<Self, WeylError> {
        self.check_compat(other)?;
        let a = self.truncated(self.trunc + 2);
        let b = other.truncated(self.trunc + 2);
        let comm = a.moyal_star(&b)?.sub(&b.moyal_star(&a)?)?;
        // (1/(i hbar)) comm = -i * comm / hbar
        Ok(comm.div_hbar().scale(&CAlg::i().neg()).truncated(self.trunc))
    }

    /// Conjugation g_S(H) = exp(iS/hbar) * H * exp(-iS/hbar), computed as
    /// exp((i/hbar) ad_S)(H). Terminates under truncation when every term of
    /// S has graded degree >= 3; lower degrees need `allow_low_degree` and an
    /// iteration cap guards non-terminating inputs.
    pub fn conjugate_by(
        &self,
        generator: &FormalSymbol,
        allow_low_degree: bool,
    ) -> Result<FormalSymbol, WeylError> {
        self.check_compat(generator)?;
        if let Some(g) = generator.min_grade() {
            if g <= 2 && !allow_low_degree {
                return Err(WeylError::NonTerminating);
            }
        }
        let cap = (self.trunc as usize + 2) * 4 + 16;
        // The commutator carries an overall hbar; run intermediates with two
        // extra degrees of headroom so div_hbar loses nothing.
        let gen = generator.truncated(self.trunc + 2);
        let mut acc = self.clone();
        let mut cur = self.truncated(self.trunc + 2);
        let mut m = 1u32;
        loop {
            // (i/hbar)(S * cur - cur * S) / m
            let comm = gen.moyal_star(&cur)?.sub(&cur.moyal_star(&gen)?)?;
            cur = comm
                .div_hbar()
                .scale(&CAlg::i())
                .scale(&CAlg::from_rat(Rat::new(BigInt::one(), BigInt::from(m))));
            // Only grades <= trunc matter for the output; higher grades can
            // never fall back down, so trim them from the running term.
            cur = cur.truncated(self.trunc).truncated(self.trunc + 2);
            if cur.is_zero() {
                break;
            }
            acc = acc.add(&cur.truncated(self.trunc))?;
            m += 1;
            if m as usize > cap {
                return Err(WeylError::NonTerminating);
            }
        }
        Ok(acc)
    }

    /// Change to complex exponents: x = (z + zbar)/2, xi = (z - zbar)/(2i).
    pub fn to_complex(&self) -> ComplexSymbol {
        let mut out = ComplexSymbol::zero(self.dim, self.trunc);
        for ((h, a, b), c) in &self.terms {
            let scale_pow = sum(a) + sum(b);
            let base = Rat::new(BigInt::one(), BigInt::one() << (scale_pow as usize));
            for s in multi_below(a) {
                for t in multi_below(b) {
                    // product of C(a,s) C(b,t) (-1)^{|b|-|t|}, and (-i)^{|b|}
                    let mut num = BigInt::one();
                    for j in 0..self.dim {
                        num *= binom(a[j], s[j]) * binom(b[j], t[j]);
                    }
                    let mut r = &base * Rat::from_integer(num);
                    if (sum(b) - sum(&t)) % 2 == 1 {
                        r = -r;
                    }
                    // (-i)^{|b|} = (-1)^{|b|} i^{|b|}
                    let mut coeff = c.scale(&r).mul_i_pow(sum(b));
                    if sum(b) % 2 == 1 {
                        coeff = coeff.neg();
                    }
                    let key = (*h, add_vec(&s, &t), add_vec(&sub_vec(a, &s), &sub_vec(b, &t)));
                    out.accumulate(key, coeff);
                }
            }
        }
        out
    }
}

impl ComplexSymbol {
    /// The quadratic part in complex coordinates: sum_j omega_j z_j zbar_j / 2.
    pub fn quadratic_part(dim: usize, trunc: u32, omegas: &[Algebraic]) -> Self {
        FormalSymbol::quadratic_part(dim, trunc, omegas).to_complex()
    }

    /// Back to (x, xi): z = x + i xi, zbar = x - i xi. Errors when the result
    /// has a nonzero imaginary coefficient (reality invariant violated).
    pub fn to_formal(&self) -> Result<FormalSymbol, WeylError> {
        let f = self.to_formal_unchecked();
        if f.is_real() {
            Ok(f)
        } else {
            Err(WeylError::NonRealResult)
        }
    }

    /// Back to (x, xi) without the reality check; for internal use where
    /// complex-coefficient symbols are legitimate.
    pub fn to_formal_unchecked(&self) -> FormalSymbol {
        let mut out = FormalSymbol::zero(self.dim, self.trunc);
        for ((h, a, b), c) in &self.terms {
            for s in multi_below(a) {
                for t in multi_below(b) {
                    let mut num = BigInt::one();
                    for j in 0..self.dim {
                        num *= binom(a[j], s[j]) * binom(b[j], t[j]);
                    }
                    // i^{|a|-|s|} (-i)^{|b|-|t|}
                    let ka = sum(a) - sum(&s);
                    let kb = sum(b) - sum(&t);
                    let mut coeff = c.scale(&Rat::from_integer(num)).mul_i_pow(ka + kb);
                    if kb % 2 == 1 {
                        coeff = coeff.neg();
                    }
                    let key = (*h, add_vec(&s, &t), add_vec(&sub_vec(a, &s), &sub_vec(b, &t)));
                    out.accumulate(key, coeff);
                }
            }
        }
        out
    }

    /// True when coefficient(j,a,b) = conj(coefficient(j,b,a)) for all terms,
    /// i.e. the symbol is real-valued.
    pub fn is_real_valued(&self) -> bool {
        self.terms.iter().all(|((h, a, b), c)| {
            let mirror = self.coefficient(&(*h, b.clone(), a.clone()));
            *c == mirror.conj()
        })
    }

    /// Splits into (kernel part with a == b, rest).
    pub fn kernel_split(&self) -> (ComplexSymbol, ComplexSymbol) {
        let mut kernel = ComplexSymbol::zero(self.dim, self.trunc);
        let mut rest = ComplexSymbol::zero(self.dim, self.trunc);
        for ((h, a, b), c) in &self.terms {
            let target = if a == b { &mut kernel } else { &mut rest };
            target.terms.insert((*h, a.clone(), b.clone()), c.clone());
        }
        (kernel, rest)
    }
}
