//! Fully resonant case, frequencies (1,...,1): symbols commuting with the
//! total oscillator split the spectrum into clusters indexed by the total
//! quantum number N. This module converts Weyl symbols to normal-ordered
//! ladder polynomials, builds their matrices on the fixed-N Fock blocks, and
//! diagonalizes to produce the cluster eigenvalues.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num::{BigInt, One};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::weyl::{CAlg, ComplexSymbol, FormalSymbol, WeylError};
use crate::scalars::Rat;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResonantError {
    #[error("term with |beta| != |alpha|: operator does not preserve the number blocks")]
    NotBlockDiagonal,
    #[error("symbol does not Poisson-commute with the total oscillator")]
    NotCommuting,
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// Coefficient polynomial in sqrt(hbar): key is twice the hbar exponent.
pub type HalfPoly = BTreeMap<u32, CAlg>;

fn halfpoly_add(p: &mut HalfPoly, key: u32, c: CAlg) {
    let entry = p.entry(key).or_insert_with(CAlg::zero);
    *entry = entry.add(&c);
    if entry.is_zero() {
        p.remove(&key);
    }
}

fn halfpoly_eval(p: &HalfPoly, hbar: f64) -> (f64, f64) {
    let mut re = 0.0;
    let mut im = 0.0;
    for (&t, c) in p {
        let w = hbar.powf(t as f64 / 2.0);
        re += c.re.to_f64() * w;
        im += c.im.to_f64() * w;
    }
    (re, im)
}

/// Normal-ordered operator polynomial: term (beta, alpha) stands for
/// (adag)^beta a^alpha, with a coefficient polynomial in sqrt(hbar).
#[derive(Debug, Clone, PartialEq)]
pub struct LadderPolynomial {
    pub dim: usize,
    pub terms: BTreeMap<(Vec<u32>, Vec<u32>), HalfPoly>,
}

/// Ordering-conversion constant in exp(KAPPA hbar sum_j dz_j dzbar_j), fixed
/// once by the calibration that z zbar / 2 must map to hbar adag a + hbar/2
/// (kept as a unit test below).
const KAPPA: i64 = 1;

/// Converts a Weyl symbol in (z, zbar, hbar) to a normal-ordered ladder
/// polynomial: apply the ordering-conversion heat operator, then substitute
/// z_j -> sqrt(2 hbar) a_j and zbar_j -> sqrt(2 hbar) adag_j.
pub fn weyl_to_wick(c: &ComplexSymbol) -> LadderPolynomial {
    let dim = c.dim();
    let sqrt2 = Algebraic::sqrt(2);
    let mut terms: BTreeMap<(Vec<u32>, Vec<u32>), HalfPoly> = BTreeMap::new();
    for ((h, a, b), coeff) in c.terms() {
        // exp(KAPPA hbar sum dz dzbar): sum over gamma <= min(a, b) of
        // KAPPA^|gamma| hbar^|gamma| / gamma! * falling(a,gamma) falling(b,gamma).
        let bound: Vec<u32> = a.iter().zip(b).map(|(&x, &y)| x.min(y)).collect();
        for gamma in multi_below(&bound) {
            let g: u32 = gamma.iter().sum();
            let mut num = BigInt::one();
            let mut den = BigInt::one();
            for j in 0..dim {
                num *= falling(a[j], gamma[j]) * falling(b[j], gamma[j]);
                den *= factorial(gamma[j]);
            }
            let mut r = Rat::new(num, den);
            for _ in 0..g {
                r *= Rat::from_integer(BigInt::from(KAPPA));
            }
            let na: Vec<u32> = a.iter().zip(&gamma).map(|(&x, &y)| x - y).collect();
            let nb: Vec<u32> = b.iter().zip(&gamma).map(|(&x, &y)| x - y).collect();
            let order: u32 = na.iter().sum::<u32>() + nb.iter().sum::<u32>();
            // z^na zbar^nb -> (2 hbar)^{order/2} (adag)^{nb} a^{na}
            let mut scaled = coeff.scale(&r);
            let mut two_pow = Rat::one();
            for _ in 0..(order / 2) {
                two_pow *= Rat::from_integer(BigInt::from(2));
            }
            scaled = scaled.scale(&two_pow);
            if order % 2 == 1 {
                scaled = scaled.mul(&CAlg::from_alg(sqrt2.clone()));
            }
            let key2h = 2 * (h + g) + order;
            halfpoly_add(
                terms.entry((nb, na)).or_default(),
                key2h,
                scaled,
            );
        }
    }
    terms.retain(|_, p| !p.is_empty());
    LadderPolynomial { dim, terms }
}

fn falling(n: u32, k: u32) -> BigInt {
    let mut v = BigInt::one();
    for i in 0..k {
        v *= BigInt::from(n - i);
    }
    v
}

fn factorial(n: u32) -> BigInt {
    falling(n, n)
}

fn multi_below(bound: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &b in bound {
        let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
        for prefix in &out {
            for v in 0..=b {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

/// Multi-indices with |k| = n, dim d, lexicographic.
pub fn fock_block_basis(dim: usize, n: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, dim: usize, out: &mut Vec<Vec<u32>>) {
        if pos == dim - 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(cur, pos + 1, left - v, dim, out);
            cur.pop();
        }
    }
    rec(&mut Vec::new(), 0, n, dim, &mut out);
    out.sort();
    out
}

pub fn block_dimension(dim: usize, n: u32) -> usize {
    // binom(n + dim - 1, dim - 1)
    let mut v = BigInt::one();
    for i in 0..(dim - 1) {
        v = v * BigInt::from(n as usize + dim - 1 - i) / BigInt::from(i + 1);
    }
    v.to_string().parse().unwrap()
}

/// Matrix of a ladder polynomial on the span of {|k> : |k| = n}, entries
/// symbolic in sqrt(hbar). Amplitudes sqrt(integer) are kept exact.
#[derive(Debug, Clone)]
pub struct FockMatrix {
    pub n: u32,
    pub basis: Vec<Vec<u32>>,
    /// entries[row][col], row = target state, col = source state.
    pub entries: Vec<Vec<HalfPoly>>,
}

pub fn fock_matrix(l: &LadderPolynomial, n: u32) -> Result<FockMatrix, ResonantError> {
    for (beta, alpha) in l.terms.keys() {
        if beta.iter().sum::<u32>() != alpha.iter().sum::<u32>() {
            return Err(ResonantError::NotBlockDiagonal);
        }
    }
    let basis = fock_block_basis(l.dim, n);
    let index: BTreeMap<&[u32], usize> = basis
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_slice(), i))
        .collect();
    let size = basis.len();
    let mut entries = vec![vec![HalfPoly::new(); size]; size];
    for ((beta, alpha), poly) in &l.terms {
        'col: for (col, k) in basis.iter().enumerate() {
            // a^alpha |k> = sqrt(prod falling(k_j, alpha_j)) |k - alpha>
            let mut amp: u64 = 1;
            let mut mid = k.clone();
            for j in 0..l.dim {
                if mid[j] < alpha[j] {
                    continue 'col;
                }
                for _ in 0..alpha[j] {
                    amp *= mid[j] as u64;
                    mid[j] -= 1;
                }
            }
            // (adag)^beta |mid> = sqrt(prod rising) |mid + beta>
            for j in 0..l.dim {
                for _ in 0..beta[j] {
                    mid[j] += 1;
                    amp *= mid[j] as u64;
                }
            }
            let row = index[mid.as_slice()];
            let amplitude = CAlg::from_alg(Algebraic::sqrt(amp));
            for (&t, c) in poly {
                halfpoly_add(&mut entries[row][col], t, c.mul(&amplitude));
            }
        }
    }
    Ok(FockMatrix { n, basis, entries })
}

#[derive(Debug, Clone)]
pub struct ClusterSpectrum {
    pub n: u32,
    pub hbar: f64,
    pub dimension: usize,
    /// hbar (n + dim/2 + p01) where p01 is the order-hbar constant of the symbol.
    pub center: f64,
    pub eigenvalues: Vec<f64>,
}

/// Cluster eigenvalues of a real symbol B = Sigma + corrections, all
/// corrections Poisson-commuting with Sigma. Builds the block matrix at the
/// given N, evaluates coefficients at hbar, and diagonalizes.
pub fn cluster_spectrum(
    b: &FormalSymbol,
    n: u32,
    hbar: f64,
) -> Result<ClusterSpectrum, ResonantError> {
    let dim = b.dim();
    let ones = vec![Algebraic::one(); dim];
    let sigma = FormalSymbol::quadratic_part(dim, b.truncation(), &ones);
    if !sigma.poisson(b)?.is_zero() {
        return Err(ResonantError::NotCommuting);
    }
    let ladder = weyl_to_wick(&b.to_complex());
    let fock = fock_matrix(&ladder, n)?;
    let size = fock.basis.len();
    let mut re = DMatrix::<f64>::zeros(size, size);
    let mut im = DMatrix::<f64>::zeros(size, size);
    let mut complex = false;
    for r in 0..size {
        for c in 0..size {
            let (vr, vi) = halfpoly_eval(&fock.entries[r][c], hbar);
            re[(r, c)] = vr;
            im[(r, c)] = vi;
            if vi.abs() > 1e-14 {
                complex = true;
            }
        }
    }
    let mut eigenvalues: Vec<f64> = if complex {
        // Real embedding of the Hermitian matrix: [[Re, -Im], [Im, Re]]
        // doubles each eigenvalue.
        let mut big = DMatrix::<f64>::zeros(2 * size, 2 * size);
        big.view_mut((0, 0), (size, size)).copy_from(&re);
        big.view_mut((size, size), (size, size)).copy_from(&re);
        big.view_mut((0, size), (size, size)).copy_from(&(-&im));
        big.view_mut((size, 0), (size, size)).copy_from(&im);
        let mut all: Vec<f64> = SymmetricEigen::new(big).eigenvalues.iter().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.into_iter().step_by(2).collect()
    } else {
        SymmetricEigen::new(re).eigenvalues.iter().copied().collect()
    };
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p01 = b
        .coefficient(&(1, vec![0; dim], vec![0; dim]))
        .re
        .to_f64();
    let center = hbar * (n as f64 + dim as f64 / 2.0 + p01);
    Ok(ClusterSpectrum {
        n,
        hbar,
        dimension: size,
        center,
        eigenvalues,
    })
}
