//! Inverse spectral map: from a dataset of truncated eigenvalue expansions,
//! recover E0, E1, the frequencies (by sieving the mu differences), the psi
//! ordering, the level polynomials P_j, and finally the normal-form
//! coefficients c_{l,alpha}.

use std::collections::BTreeMap;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::bnf::{BnfData, CoeffMap};
use crate::scalars::{integer_combination, Comparison, ExactReal, Rat, ScalarError};
use crate::spectrum::{psi_enumerate, PsiTable, SpectralDataset, SpectrumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InverseError {
    #[error("constant term varies across levels {levels:?}: not of expansion form")]
    InconsistentE0 { levels: Vec<usize> },
    #[error("empty input")]
    EmptyInput,
    #[error("mu values not strictly increasing at level {level}")]
    NotIncreasing { level: usize },
    #[error(
        "largest recovered frequency is too close to the data window edge; \
         a further frequency could hide beyond it"
    )]
    AmbiguousTail,
    #[error("expected {expected} frequencies, sieve found {detected}")]
    DimensionMismatch { expected: usize, detected: usize },
    #[error("dataset does not cover lattice points {missing:?}")]
    InsufficientLevels { missing: Vec<Vec<u32>> },
    #[error("level {level} contradicts the degree-{degree} interpolant")]
    OverdeterminedMismatch { level: usize, degree: usize },
    #[error("expansion order must be >= 2, got {0}")]
    OrderTooLow(usize),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// A total-degree-j polynomial on the lattice, in plain monomials.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPolynomial {
    pub degree: usize,
    pub dim: usize,
    /// exponent beta (|beta| <= degree) -> coefficient; zero values omitted.
    pub coefficients: BTreeMap<Vec<u32>, ExactReal>,
}

impl ClusterPolynomial {
    pub fn evaluate(&self, k: &[u32]) -> Result<ExactReal, ScalarError> {
        let basis = self
            .coefficients
            .values()
            .next()
            .map(|c| c.basis().clone());
        let Some(basis) = basis else {
            return Err(ScalarError::InvalidBasis(
                "cannot evaluate empty polynomial without a basis".into(),
            ));
        };
        let mut acc = ExactReal::zero(&basis);
        for (beta, c) in &self.coefficients {
            acc = acc.add(&c.scale(&monomial_value(k, beta)))?;
        }
        Ok(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }
}

fn monomial_value(k: &[u32], beta: &[u32]) -> Rat {
    let mut v = Rat::one();
    for (i, &b) in beta.iter().enumerate() {
        let base = Rat::from_integer(BigInt::from(k[i]));
        for _ in 0..b {
            v *= &base;
        }
    }
    v
}

/// E0 from the constant column (validated N-independent) plus the per-level
/// mu column. E1 stays folded into mu_1 = E1 + (1/2) sum omega_j until the
/// frequencies are known.
pub fn extract_e0_e1(
    dataset: &SpectralDataset,
) -> Result<(ExactReal, Vec<ExactReal>), InverseError> {
    if dataset.levels.is_empty() {
        return Err(InverseError::EmptyInput);
    }
    let e0 = dataset.levels[0][0].clone();
    let mut offenders = Vec::new();
    for (i, level) in dataset.levels.iter().enumerate() {
        if level[0].compare(&e0)? != Comparison::Equal {
            offenders.push(i + 1);
        }
    }
    if !offenders.is_empty() {
        return Err(InverseError::InconsistentE0 { levels: offenders });
    }
    let mus = dataset.levels.iter().map(|l| l[1].clone()).collect();
    Ok((e0, mus))
}

#[derive(Debug, Clone)]
pub struct SieveResult {
    pub omegas: Vec<ExactReal>,
    pub dim: usize,
    /// nu_M, the certified coverage window: frequencies below this value
    /// cannot have been missed.
    pub coverage: ExactReal,
}

/// Recovers the frequencies from the strictly increasing mu list: subtract
/// mu_1, then repeatedly take the smallest difference not expressible as a
/// non-negative integer combination of the frequencies found so far.
pub fn sieve_omegas(
    mus: &[ExactReal],
    expected_dim: Option<usize>,
) -> Result<SieveResult, InverseError> {
    if mus.len() < 2 {
        return Err(InverseError::EmptyInput);
    }
    let mu1 = &mus[0];
    let mut nus = Vec::with_capacity(mus.len() - 1);
    for (i, mu) in mus.iter().enumerate().skip(1) {
        let nu = mu.sub(mu1)?;
        if let Some(prev) = nus.last() {
            let prev: &ExactReal = prev;
            if prev.compare(&nu)? != Comparison::Less {
                return Err(InverseError::NotIncreasing { level: i + 1 });
            }
        } else if !nu.is_positive()? {
            return Err(InverseError::NotIncreasing { level: 2 });
        }
        nus.push(nu);
    }
    let mut omegas: Vec<ExactReal> = Vec::new();
    for nu in &nus {
        if !combination_member(nu, &omegas)? {
            omegas.push(nu.clone());
        }
    }
    let coverage = nus.last().unwrap().clone();
    if let Some(d) = expected_dim {
        if d != omegas.len() {
            return Err(InverseError::DimensionMismatch {
                expected: d,
                detected: omegas.len(),
            });
        }
    }
    // Heuristic tail check: a hidden frequency must exceed every discovered
    // one and be non-expressible, so it is at least as large as the largest
    // discovered frequency. Require the window to extend safely past twice
    // that value so that such a frequency would have surfaced.
    let largest = omegas.last().unwrap();
    let doubled = largest.scale(&Rat::from_integer(BigInt::from(2)));
    if doubled.compare(&coverage)? == Comparison::Greater {
        return Err(InverseError::AmbiguousTail);
    }
    let dim = omegas.len();
    Ok(SieveResult {
        omegas,
        dim,
        coverage,
    })
}

/// Membership of nu in the additive monoid generated by the omegas. The
/// primary route is the exact linear solve; when the frequencies' coordinate
/// vectors are dependent (so the solve is not unique) a bounded enumeration
/// decides instead.
fn combination_member(nu: &ExactReal, omegas: &[ExactReal]) -> Result<bool, InverseError> {
    if omegas.is_empty() {
        return Ok(nu.is_zero());
    }
    match integer_combination(nu, omegas) {
        Ok(opt) => Ok(opt.is_some()),
        Err(ScalarError::DependentFrequencies) => combination_member_enum(nu, omegas),
        Err(e) => Err(e.into()),
    }
}

fn combination_member_enum(nu: &ExactReal, omegas: &[ExactReal]) -> Result<bool, InverseError> {
    fn rec(
        rem: &ExactReal,
        omegas: &[ExactReal],
        from: usize,
    ) -> Result<bool, InverseError> {
        if rem.is_zero() {
            return Ok(true);
        }
        for (i, w) in omegas.iter().enumerate().skip(from) {
            let next = rem.sub(w)?;
            match next.compare(&ExactReal::zero(rem.basis()))? {
                Comparison::Less => continue,
                Comparison::Equal => return Ok(true),
                Comparison::Greater => {
                    if rec(&next, omegas, i)? {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
    rec(nu, omegas, 0)
}

/// Approximate-mode sieve for floating inputs: same procedure with all
/// equality tests replaced by |.| < eps. Heuristic only; no exactness
/// guarantee.
pub fn sieve_omegas_f64(mus: &[f64], eps: f64) -> Result<(Vec<f64>, usize), InverseError> {
    if mus.len() < 2 {
        return Err(InverseError::EmptyInput);
    }
    let nus: Vec<f64> = mus[1..].iter().map(|m| m - mus[0]).collect();
    fn member(nu: f64, omegas: &[f64], from: usize, eps: f64) -> bool {
        if nu.abs() < eps {
            return true;
        }
        for (i, w) in omegas.iter().enumerate().skip(from) {
            let next = nu - w;
            if next < -eps {
                continue;
            }
            if next.abs() < eps || member(next, omegas, i, eps) {
                return true;
            }
        }
        false
    }
    let mut omegas: Vec<f64> = Vec::new();
    for &nu in &nus {
        if !member(nu, &omegas, 0, eps) {
            omegas.push(nu);
        }
    }
    let d = omegas.len();
    Ok((omegas, d))
}

/// All lattice points with |k| <= degree, lexicographic.
fn simplex_lattice(dim: usize, degree: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fn rec(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for v in 0..=left {
            cur[pos] = v;
            rec(cur, pos + 1, left - v, out);
        }
        cur[pos] = 0;
    }
    rec(&mut cur, 0, degree as u32, &mut out);
    out.sort();
    out
}

/// Interpolates the degree-j polynomial through the a_j column on the simplex
/// lattice {|k| <= j}, then verifies it against every other covered level.
pub fn recover_pj(
    dataset: &SpectralDataset,
    psi: &PsiTable,
    j: usize,
) -> Result<ClusterPolynomial, InverseError> {
    assert!(j >= 2 && j <= dataset.order);
    let dim = psi.dim;
    let nodes = simplex_lattice(dim, j);
    let mut missing = Vec::new();
    let mut rows: Vec<(Vec<u32>, ExactReal)> = Vec::new();
    for k in &nodes {
        match psi.level_of(k).filter(|&n| n <= dataset.levels.len()) {
            Some(n) => rows.push((k.clone(), dataset.levels[n - 1][j].clone())),
            None => missing.push(k.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(InverseError::InsufficientLevels { missing });
    }
    // Vandermonde-type system: rational matrix (monomials at nodes), exact
    // right-hand side. The simplex lattice is unisolvent for total degree j.
    let monomials = nodes.clone();
    let n = rows.len();
    let mut mat: Vec<Vec<Rat>> = rows
        .iter()
        .map(|(k, _)| monomials.iter().map(|b| monomial_value(k, b)).collect())
        .collect();
    let mut rhs: Vec<ExactReal> = rows.into_iter().map(|(_, v)| v).collect();
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !mat[r][col].is_zero())
            .expect("unisolvent node set");
        mat.swap(col, piv);
        rhs.swap(col, piv);
        let inv = mat[col][col].recip();
        for v in mat[col].iter_mut() {
            *v *= &inv;
        }
        rhs[col] = rhs[col].scale(&inv);
        for r in 0..n {
            if r != col && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in 0..n {
                    let sub = &mat[col][c] * &f;
                    mat[r][c] -= sub;
                }
                let sub = rhs[col].scale(&-f);
                rhs[r] = rhs[r].add(&sub)?;
            }
        }
    }
    let mut coefficients = BTreeMap::new();
    for (beta, c) in monomials.into_iter().zip(rhs) {
        if !c.is_zero() {
            coefficients.insert(beta, c);
        }
    }
    let poly = ClusterPolynomial {
        degree: j,
        dim,
        coefficients,
    };
    // Cross-check against every level outside the interpolation set.
    let zero = ExactReal::zero(&dataset.basis);
    for n in 1..=dataset.levels.len().min(psi.len()) {
        let k = psi.point(n);
        if nodes.binary_search_by(|c| c.as_slice().cmp(k)).is_ok() {
            continue;
        }
        let predicted = if poly.is_zero() {
            zero.clone()
        } else {
            poly.evaluate(k)?
        };
        if predicted.compare(&dataset.levels[n - 1][j])? != Comparison::Equal {
            return Err(InverseError::OverdeterminedMismatch { level: n, degree: j });
        }
    }
    Ok(poly)
}

/// Re-expands each P_j in the shifted basis {(Z + 1/2)^alpha} and assembles
/// the normal-form data with l = j - |alpha|.
pub fn recover_c(
    polynomials: &[ClusterPolynomial],
    omegas: &[Algebraic],
    e0: &Algebraic,
    e1: &Algebraic,
) -> Result<BnfData, InverseError> {
    let dim = omegas.len();
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let mut coeffs = CoeffMap::new();
    for poly in polynomials {
        let j = poly.degree as u32;
        // Triangular reduction: peel the highest-degree monomial, subtract
        // its shifted power, repeat. (Z + 1/2)^beta has leading monomial
        // Z^beta with coefficient 1.
        let mut rem: BTreeMap<Vec<u32>, Algebraic> = BTreeMap::new();
        for (beta, c) in &poly.coefficients {
            rem.insert(beta.clone(), Algebraic::from_exact_real(c)?);
        }
        while let Some(beta) = rem
            .keys()
            .max_by_key(|b| (b.iter().sum::<u32>(), (*b).clone()))
            .cloned()
        {
            let c = rem.remove(&beta).unwrap();
            if c.is_zero() {
                continue;
            }
            for (gamma, w) in shifted_power_expansion(&beta, &half) {
                if gamma == beta {
                    continue;
                }
                let entry = rem.entry(gamma).or_insert_with(Algebraic::zero);
                *entry = entry.sub(&c.scale(&w));
            }
            let l = j - beta.iter().sum::<u32>();
            coeffs.insert((l, beta), c);
        }
    }
    coeffs.retain(|_, c| !c.is_zero());
    Ok(BnfData {
        dim,
        omegas: omegas.to_vec(),
        e0: e0.clone(),
        e1: e1.clone(),
        coeffs,
    })
}

/// Monomial expansion of (Z + 1/2)^beta: gamma -> prod binom(beta_i, gamma_i) (1/2)^(beta_i - gamma_i).
fn shifted_power_expansion(beta: &[u32], half: &Rat) -> Vec<(Vec<u32>, Rat)> {
    let mut out: Vec<(Vec<u32>, Rat)> = vec![(Vec::new(), Rat::one())];
    for &b in beta {
        let mut next = Vec::with_capacity(out.len() * (b as usize + 1));
        for (prefix, w) in &out {
            for g in 0..=b {
                let mut gamma = prefix.clone();
                gamma.push(g);
                let mut coef = w.clone();
                coef *= binom_rat(b, g);
                for _ in 0..(b - g) {
                    coef *= half;
                }
                next.push((gamma, coef));
            }
        }
        out = next;
    }
    out
}

fn binom_rat(n: u32, k: u32) -> Rat {
    let mut v = BigInt::one();
    for i in 0..k {
        v = v * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rat::from_integer(v)
}

/// Full inverse: E0 and mu extraction, frequency sieve, E1 isolation, psi
/// reconstruction, per-order interpolation, shifted-basis re-expansion.
pub fn invert_spectrum(dataset: &SpectralDataset) -> Result<BnfData, InverseError> {
    if dataset.order < 2 {
        return Err(InverseError::OrderTooLow(dataset.order));
    }
    let (e0, mus) = extract_e0_e1(dataset)?;
    let sieve = sieve_omegas(&mus, dataset.dim)?;
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    let mut half_sum = ExactReal::zero(&dataset.basis);
    for w in &sieve.omegas {
        half_sum = half_sum.add(&w.scale(&half))?;
    }
    let e1 = mus[0].sub(&half_sum)?;
    let psi = psi_enumerate(&sieve.omegas, dataset.levels.len())?;
    let mut polys = Vec::new();
    for j in 2..=dataset.order {
        polys.push(recover_pj(dataset, &psi, j)?);
    }
    let omegas_alg: Vec<Algebraic> = sieve
        .omegas
        .iter()
        .map(Algebraic::from_exact_real)
        .collect::<Result<_, _>>()?;
    let e0_alg = Algebraic::from_exact_real(&e0)?;
    let e1_alg = Algebraic::from_exact_real(&e1)?;
    recover_c(&polys, &omegas_alg, &e0_alg, &e1_alg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::RealBasis;
    use crate::spectrum::spectrum_forward;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn pure_oscillator_12(e0: Rat) -> BnfData {
        BnfData {
            dim: 2,
            omegas: vec![Algebraic::one(), Algebraic::sqrt(2)],
            e0: Algebraic::from_rat(e0),
            e1: Algebraic::zero(),
            coeffs: CoeffMap::new(),
        }
    }

    #[test]
    fn extract_constant_column() {
        let bnf = pure_oscillator_12(rat(2, 1));
        let ds = spectrum_forward(&bnf, 10, 2).unwrap();
        let (e0, mus) = extract_e0_e1(&ds).unwrap();
        assert_eq!(e0.to_f64(), 2.0);
        assert_eq!(mus.len(), 10);
    }

    #[test]
    fn extract_detects_inconsistent_constant() {
        let bnf = pure_oscillator_12(rat(0, 1));
        let mut ds = spectrum_forward(&bnf, 10, 2).unwrap();
        ds.levels[4][0] = ds.levels[4][0]
            .add(&ExactReal::from_rational(&ds.basis, rat(1, 7)))
            .unwrap();
        assert_eq!(
            extract_e0_e1(&ds).unwrap_err(),
            InverseError::InconsistentE0 { levels: vec![5] }
        );
    }

    #[test]
    fn sieve_one_sqrt2() {
        let bnf = pure_oscillator_12(rat(0, 1));
        let ds = spectrum_forward(&bnf, 20, 2).unwrap();
        let (_, mus) = extract_e0_e1(&ds).unwrap();
        let res = sieve_omegas(&mus, None).unwrap();
        assert_eq!(res.dim, 2);
        assert_eq!(res.omegas[0].coords(), &[rat(1, 1), rat(0, 1)]);
        assert_eq!(res.omegas[1].coords(), &[rat(0, 1), rat(1, 1)]);
    }

    #[test]
    fn sieve_single_generator() {
        let basis = RealBasis::rational();
        let mus: Vec<ExactReal> = (0..12)
            .map(|n| ExactReal::from_rational(&basis, rat(3 * n + 1, 2)))
            .collect();
        let res = sieve_omegas(&mus, Some(1)).unwrap();
        assert_eq!(res.dim, 1);
        assert_eq!(res.omegas[0].coords(), &[rat(3, 2)]);
    }

    #[test]
    fn sieve_dependent_coordinates_via_enumeration() {
        // omegas (1, 3/2): Q-dependent so the linear solve route refuses,
        // but values are distinct and the enumeration fallback handles it.
        // Monoid values, deduplicated: 0, 1, 3/2, 2, 5/2, 3, ...
        let basis = RealBasis::rational();
        let mut mus = vec![ExactReal::zero(&basis)];
        mus.extend((2..=20).map(|k| ExactReal::from_rational(&basis, rat(k, 2))));
        let res = sieve_omegas(&mus, None).unwrap();
        assert_eq!(res.dim, 2);
        assert_eq!(res.omegas[0].coords(), &[rat(1, 1)]);
        assert_eq!(res.omegas[1].coords(), &[rat(3, 2)]);
    }

    #[test]
    fn sieve_flags_short_window() {
        // Only levels 0, omega: window too small to rule out a second
        // frequency beyond 2*omega.
        let basis = RealBasis::rational();
        let mus = vec![
            ExactReal::from_rational(&basis, rat(1, 2)),
            ExactReal::from_rational(&basis, rat(3, 2)),
        ];
        assert_eq!(
            sieve_omegas(&mus, None).unwrap_err(),
            InverseError::AmbiguousTail
        );
    }

    #[test]
    fn sieve_f64_mode() {
        let mut mus = Vec::new();
        let sqrt2 = 2f64.sqrt();
        for k1 in 0..8 {
            for k2 in 0..8 {
                mus.push(0.7 + k1 as f64 + sqrt2 * k2 as f64);
            }
        }
        mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
        mus.truncate(25);
        let (omegas, d) = sieve_omegas_f64(&mus, 1e-9).unwrap();
        assert_eq!(d, 2);
        assert!((omegas[0] - 1.0).abs() < 1e-9);
        assert!((omegas[1] - sqrt2).abs() < 1e-9);
    }

    fn dataset_d1_from_column(aj: &[i64], j: usize) -> (SpectralDataset, PsiTable) {
        let basis = RealBasis::rational();
        let omegas = vec![ExactReal::from_rational(&basis, rat(1, 1))];
        let psi = psi_enumerate(&omegas, aj.len()).unwrap();
        let levels: Vec<Vec<ExactReal>> = aj
            .iter()
            .enumerate()
            .map(|(n, &v)| {
                let mut level = vec![ExactReal::zero(&basis); j + 1];
                level[1] = ExactReal::from_rational(&basis, rat(2 * (n as i64) + 1, 2));
                level[j] = ExactReal::from_rational(&basis, rat(v, 1));
                level
            })
            .collect();
        (
            SpectralDataset {
                dim: Some(1),
                order: j,
                basis,
                levels,
            },
            psi,
        )
    }

    #[test]
    fn interpolate_d1_quadratic() {
        // values 1, 2, 5 at Z = 0, 1, 2 -> Z^2 + 1
        let (ds, psi) = dataset_d1_from_column(&[1, 2, 5], 2);
        let p = recover_pj(&ds, &psi, 2).unwrap();
        let mut expected = BTreeMap::new();
        expected.insert(vec![0u32], ExactReal::from_rational(&ds.basis, rat(1, 1)));
        expected.insert(vec![2u32], ExactReal::from_rational(&ds.basis, rat(1, 1)));
        assert_eq!(p.coefficients, expected);
    }

    #[test]
    fn interpolate_zero_column() {
        let (ds, psi) = dataset_d1_from_column(&[0, 0, 0, 0], 2);
        let p = recover_pj(&ds, &psi, 2).unwrap();
        assert!(p.is_zero());
    }

    #[test]
    fn interpolate_detects_contradiction() {
        // Z^2 + 1 on the nodes but a wrong value at Z = 3.
        let (ds, psi) = dataset_d1_from_column(&[1, 2, 5, 11], 2);
        assert_eq!(
            recover_pj(&ds, &psi, 2).unwrap_err(),
            InverseError::OverdeterminedMismatch { level: 4, degree: 2 }
        );
    }

    #[test]
    fn interpolate_missing_nodes() {
        let (ds, psi) = dataset_d1_from_column(&[1, 2], 2);
        assert_eq!(
            recover_pj(&ds, &psi, 2).unwrap_err(),
            InverseError::InsufficientLevels {
                missing: vec![vec![2]]
            }
        );
    }

    #[test]
    fn shifted_basis_d1() {
        // Z^2 + 1 = (Z+1/2)^2 - (Z+1/2) + 5/4
        let basis = RealBasis::rational();
        let mut coefficients = BTreeMap::new();
        coefficients.insert(vec![0u32], ExactReal::from_rational(&basis, rat(1, 1)));
        coefficients.insert(vec![2u32], ExactReal::from_rational(&basis, rat(1, 1)));
        let p = ClusterPolynomial {
            degree: 2,
            dim: 1,
            coefficients,
        };
        let bnf = recover_c(
            &[p],
            &[Algebraic::one()],
            &Algebraic::zero(),
            &Algebraic::zero(),
        )
        .unwrap();
        assert_eq!(bnf.coeffs[&(0, vec![2])], Algebraic::one());
        assert_eq!(bnf.coeffs[&(1, vec![1])], Algebraic::from_rat(rat(-1, 1)));
        assert_eq!(bnf.coeffs[&(2, vec![0])], Algebraic::from_rat(rat(5, 4)));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]
        #[test]
        fn sieve_recovers_generators(
            pool_idx in 0usize..6,
            e1_num in -5i64..6,
            e1_den in 1i64..5,
        ) {
            let pools: Vec<Vec<Algebraic>> = vec![
                vec![Algebraic::one()],
                vec![Algebraic::sqrt(2)],
                vec![Algebraic::one(), Algebraic::sqrt(2)],
                vec![Algebraic::one(), Algebraic::sqrt(3)],
                vec![Algebraic::sqrt(2), Algebraic::sqrt(3)],
                vec![Algebraic::one(), Algebraic::sqrt(2), Algebraic::sqrt(3)],
            ];
            let omegas = &pools[pool_idx];
            let bnf = BnfData {
                dim: omegas.len(),
                omegas: omegas.clone(),
                e0: Algebraic::zero(),
                e1: Algebraic::from_rat(rat(e1_num, e1_den)),
                coeffs: CoeffMap::new(),
            };
            let ds = spectrum_forward(&bnf, 80, 2).unwrap();
            let (_, mus) = extract_e0_e1(&ds).unwrap();
            let res = sieve_omegas(&mus, None).unwrap();
            proptest::prop_assert_eq!(res.dim, omegas.len());
            for (got, want) in res.omegas.iter().zip(omegas) {
                proptest::prop_assert_eq!(
                    &Algebraic::from_exact_real(got).unwrap(),
                    want
                );
            }
        }
    }

    #[test]
    fn roundtrip_pure_oscillator() {
        let bnf = pure_oscillator_12(rat(1, 3));
        let ds = spectrum_forward(&bnf, 40, 3).unwrap();
        let rec = invert_spectrum(&ds).unwrap();
        assert_eq!(rec, bnf);
    }

    #[test]
    fn roundtrip_with_coefficients() {
        let mut coeffs = CoeffMap::new();
        coeffs.insert((0, vec![2, 0]), Algebraic::from_rat(rat(3, 20)));
        coeffs.insert((0, vec![1, 1]), Algebraic::from_rat(rat(-1, 5)));
        coeffs.insert((2, vec![0, 0]), Algebraic::from_rat(rat(3, 80)));
        coeffs.insert((1, vec![0, 1]), Algebraic::from_rat(rat(7, 2)));
        coeffs.insert((0, vec![1, 2]), Algebraic::from_rat(rat(-2, 7)));
        let bnf = BnfData {
            dim: 2,
            omegas: vec![Algebraic::one(), Algebraic::sqrt(2)],
            e0: Algebraic::from_rat(rat(-4, 9)),
            e1: Algebraic::from_rat(rat(1, 6)),
            coeffs,
        };
        let ds = spectrum_forward(&bnf, 60, 4).unwrap();
        let rec = invert_spectrum(&ds).unwrap();
        assert_eq!(rec, bnf);
    }
}
