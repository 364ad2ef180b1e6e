//! Degree-by-degree Birkhoff normalization of a Hamiltonian with diagonal
//! non-resonant quadratic part, and conversion of the resulting action
//! polynomial into the coefficients c_{l,alpha} of the normal form
//! E0 + hbar E1 + sum omega_j Omega_j + sum c_{l,alpha} hbar^l Omega^alpha.

use std::collections::BTreeMap;

use num::{BigInt, One, Zero};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::scalars::Rat;
use crate::weyl::{CAlg, ComplexSymbol, FormalSymbol, WeylError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BnfError {
    #[error("resonant denominator: <omega, a-b> = 0 for a != b")]
    ResonantDenominator,
    #[error("symbol is not an action polynomial: off-diagonal monomial present")]
    NotActionPolynomial,
    #[error("invalid hamiltonian input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// Hamiltonian Taylor data around the minimum: grade-0 part E0, grade-2 part
/// (1/2) sum omega_j (x_j^2 + xi_j^2) + hbar E1, higher grades arbitrary.
#[derive(Debug, Clone)]
pub struct HamiltonianInput {
    pub dim: usize,
    pub omegas: Vec<Algebraic>,
    pub e0: Algebraic,
    pub e1: Algebraic,
    pub taylor: FormalSymbol,
    pub truncation: u32,
}

impl HamiltonianInput {
    pub fn new(
        dim: usize,
        omegas: Vec<Algebraic>,
        e0: Algebraic,
        e1: Algebraic,
        taylor: FormalSymbol,
    ) -> Result<Self, BnfError> {
        let truncation = taylor.truncation();
        if omegas.len() != dim || taylor.dim() != dim {
            return Err(BnfError::InvalidInput("dimension mismatch".into()));
        }
        if !taylor.is_real() {
            return Err(BnfError::InvalidInput(
                "taylor symbol must be real-valued".into(),
            ));
        }
        for w in &omegas {
            if w.sign() != std::cmp::Ordering::Greater {
                return Err(BnfError::InvalidInput(
                    "frequencies must be positive".into(),
                ));
            }
        }
        for pair in omegas.windows(2) {
            if pair[0].cmp_value(&pair[1]) != std::cmp::Ordering::Less {
                return Err(BnfError::InvalidInput(
                    "frequencies must be strictly increasing".into(),
                ));
            }
        }
        check_coordinate_independence(&omegas)?;
        // Grade 0 must be the constant E0; grade 1 empty (critical point);
        // grade 2 must be Sigma + hbar E1.
        let g0 = taylor.grade_component(0);
        let mut e0_sym = FormalSymbol::zero(dim, truncation);
        e0_sym.accumulate((0, vec![0; dim], vec![0; dim]), CAlg::from_alg(e0.clone()));
        if g0 != e0_sym {
            return Err(BnfError::InvalidInput(
                "grade-0 part does not equal E0".into(),
            ));
        }
        if !taylor.grade_component(1).is_zero() {
            return Err(BnfError::InvalidInput(
                "grade-1 part must vanish at a critical point".into(),
            ));
        }
        let mut g2_expected = FormalSymbol::quadratic_part(dim, truncation, &omegas);
        g2_expected.accumulate((1, vec![0; dim], vec![0; dim]), CAlg::from_alg(e1.clone()));
        if taylor.grade_component(2) != g2_expected {
            return Err(BnfError::InvalidInput(
                "grade-2 part does not equal (1/2) sum omega_j (x_j^2+xi_j^2) + hbar E1".into(),
            ));
        }
        Ok(HamiltonianInput {
            dim,
            omegas,
            e0,
            e1,
            taylor,
            truncation,
        })
    }
}

/// Verifies the frequencies' coordinate vectors (over the sqrt labels they
/// mention) are linearly independent over Q. True Q-independence of opaque
/// constants is a trusted declaration; this check covers what is decidable.
fn check_coordinate_independence(omegas: &[Algebraic]) -> Result<(), BnfError> {
    let mut labels: Vec<u64> = Vec::new();
    for w in omegas {
        for l in w.labels() {
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    labels.sort_unstable();
    let rows = labels.len();
    let cols = omegas.len();
    let mut m: Vec<Vec<Rat>> = (0..rows)
        .map(|_| vec![Rat::zero(); cols])
        .collect();
    for (c, w) in omegas.iter().enumerate() {
        for (r, &l) in labels.iter().enumerate() {
            m[r][c] = w.coeff_of(l);
        }
    }
    let mut rank = 0usize;
    for col in 0..cols {
        let Some(r) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            return Err(BnfError::InvalidInput(
                "frequency coordinate vectors are rationally dependent".into(),
            ));
        };
        m.swap(rank, r);
        let inv = m[rank][col].clone().recip();
        for v in m[rank].iter_mut() {
            *v *= &inv;
        }
        for r2 in 0..rows {
            if r2 != rank && !m[r2][col].is_zero() {
                let f = m[r2][col].clone();
                for c2 in 0..cols {
                    let sub = &m[rank][c2] * &f;
                    m[r2][c2] -= sub;
                }
            }
        }
        rank += 1;
    }
    Ok(())
}

/// Homological-equation split of a homogeneous symbol K of graded degree n:
/// K = {Sigma, S} + R, where R collects the monomials with a = b and S has
/// coefficient c/(i <omega, a-b>) on each a != b monomial.
pub fn cohomological_solve(
    k: &ComplexSymbol,
    omegas: &[Algebraic],
) -> Result<(ComplexSymbol, ComplexSymbol), BnfError> {
    let dim = k.dim();
    let trunc = k.truncation();
    let mut s = ComplexSymbol::zero(dim, trunc);
    let mut r = ComplexSymbol::zero(dim, trunc);
    for ((h, a, b), c) in k.terms() {
        if a == b {
            r.accumulate((*h, a.clone(), b.clone()), c.clone());
            continue;
        }
        let mut w = Algebraic::zero();
        for j in 0..dim {
            let diff = a[j] as i64 - b[j] as i64;
            if diff != 0 {
                w = w.add(&omegas[j].scale(&Rat::from_integer(BigInt::from(diff))));
            }
        }
        if w.is_zero() {
            return Err(BnfError::ResonantDenominator);
        }
        // c / (i w) = -i c / w
        let coeff = c.scale_alg(&w.inv()).mul_i().neg();
        s.accumulate((*h, a.clone(), b.clone()), coeff);
    }
    Ok((s, r))
}

/// Output of `normalize`: the normal symbol (every grade >= 3 term has a = b)
/// and the generator list whose replayed conjugations reproduce it.
#[derive(Debug, Clone)]
pub struct NormalForm {
    pub normal: ComplexSymbol,
    pub generators: Vec<FormalSymbol>,
}

/// Iterates n = 3..D: extracts the grade-n component, splits it through the
/// homological equation, and conjugates the running symbol so that the
/// off-kernel part of grade n is removed.
pub fn normalize(input: &HamiltonianInput) -> Result<NormalForm, BnfError> {
    let d = input.truncation;
    let mut running = input.taylor.clone();
    let mut generators = Vec::new();
    for n in 3..=d {
        let kn = running.grade_component(n).to_complex();
        let (s, _r) = cohomological_solve(&kn, &input.omegas)?;
        // First-order change of grade n under conjugation by G is {Sigma, G};
        // removing K - R needs G = -S.
        let gen = s.to_formal()?.neg();
        if !gen.is_zero() {
            running = running.conjugate_by(&gen, false)?;
        }
        generators.push(gen);
    }
    let normal = running.to_complex();
    // Every term of grade >= 3 must now be in the kernel (a = b); odd grades
    // are fully removed since a = b forces even grade.
    for ((h, a, b), _) in normal.terms() {
        let grade = 2 * h + a.iter().sum::<u32>() + b.iter().sum::<u32>();
        if grade >= 3 {
            debug_assert_eq!(a, b, "off-kernel term survived normalization");
            debug_assert_eq!(grade % 2, 0);
        }
    }
    Ok(NormalForm { normal, generators })
}

/// Coefficient map of the quantized normal form: (l, alpha) -> c_{l,alpha}.
pub type CoeffMap = BTreeMap<(u32, Vec<u32>), Algebraic>;

/// The semiclassical Birkhoff normal form data: frequencies, the scalar
/// offsets E0 and E1, and the coefficients c_{l,alpha} of hbar^l Omega^alpha.
#[derive(Debug, Clone, PartialEq)]
pub struct BnfData {
    pub dim: usize,
    pub omegas: Vec<Algebraic>,
    pub e0: Algebraic,
    pub e1: Algebraic,
    /// keys (l, alpha) with l + |alpha| >= 2; no zero values stored.
    pub coeffs: CoeffMap,
}

/// Expresses an action polynomial K(I, hbar) in the star-power basis:
/// K = sum c_{l,alpha} hbar^l I^{* alpha}, where I^{* alpha} is the Moyal
/// star product of action powers (the Weyl symbol of Omega^alpha). The system
/// is triangular in |alpha| because star powers differ from plain powers only
/// by lower-degree terms.
pub fn omega_basis_convert(k: &ComplexSymbol) -> Result<CoeffMap, BnfError> {
    let dim = k.dim();
    let trunc = k.truncation();
    // Collect K as a map (l, alpha) -> real coefficient of hbar^l I^alpha.
    let mut pending: BTreeMap<(u32, Vec<u32>), Algebraic> = BTreeMap::new();
    for ((h, a, b), c) in k.terms() {
        if a != b {
            return Err(BnfError::NotActionPolynomial);
        }
        if !c.is_real() {
            return Err(BnfError::NotActionPolynomial);
        }
        // z^a zbar^a = prod (2 I_j)^{a_j}
        let pow: u32 = a.iter().sum();
        let scale = Rat::from_integer(BigInt::one() << (pow as usize));
        let v = c.re.scale(&scale);
        accumulate_alg(&mut pending, (*h, a.clone()), v);
    }
    let mut star_powers: BTreeMap<Vec<u32>, BTreeMap<(u32, Vec<u32>), Algebraic>> =
        BTreeMap::new();
    let mut coeffs: CoeffMap = BTreeMap::new();
    while let Some(key) = pending
        .keys()
        .max_by_key(|(_, alpha)| alpha.iter().sum::<u32>())
        .cloned()
    {
        let c = pending.remove(&key).expect("present");
        if c.is_zero() {
            continue;
        }
        let (l, alpha) = key;
        let sp = star_powers
            .entry(alpha.clone())
            .or_insert_with(|| star_power_action_map(dim, trunc, &alpha));
        // Leading coefficient of I^{* alpha} on hbar^0 I^alpha is 1; subtract
        // only the lower-order tail (the leading term was already removed).
        for (&(m, ref beta), v) in sp.iter() {
            if m == 0 && *beta == alpha {
                debug_assert_eq!(*v, Algebraic::one());
                continue;
            }
            accumulate_alg(&mut pending, (l + m, beta.clone()), c.mul(v).neg());
        }
        accumulate_alg(&mut coeffs, (l, alpha), c);
    }
    coeffs.retain(|_, v| !v.is_zero());
    Ok(coeffs)
}

fn accumulate_alg(map: &mut BTreeMap<(u32, Vec<u32>), Algebraic>, key: (u32, Vec<u32>), v: Algebraic) {
    if v.is_zero() {
        return;
    }
    match map.get_mut(&key) {
        Some(cur) => {
            *cur = cur.add(&v);
            if cur.is_zero() {
                map.remove(&key);
            }
        }
        None => {
            map.insert(key, v);
        }
    }
}

/// I^{* alpha} = I_1^{* alpha_1} * ... * I_d^{* alpha_d} as a map
/// (hbar power, action exponent) -> coefficient. Always an action polynomial.
fn star_power_action_map(
    dim: usize,
    trunc: u32,
    alpha: &[u32],
) -> BTreeMap<(u32, Vec<u32>), Algebraic> {
    let mut sym = FormalSymbol::constant(dim, trunc, CAlg::one());
    for (j, &e) in alpha.iter().enumerate() {
        let ij = FormalSymbol::action(dim, trunc, j);
        for _ in 0..e {
            sym = sym.moyal_star(&ij).expect("compatible");
        }
    }
    let z = sym.to_complex();
    let mut out = BTreeMap::new();
    for ((h, a, b), c) in z.terms() {
        debug_assert_eq!(a, b, "star power of actions must stay diagonal");
        debug_assert!(c.is_real());
        let pow: u32 = a.iter().sum();
        let scale = Rat::from_integer(BigInt::one() << (pow as usize));
        accumulate_alg(&mut out, (*h, a.clone()), c.re.scale(&scale));
    }
    out
}

/// Full forward object: normalize, strip E0 + hbar E1 + Sigma, convert the
/// remaining action polynomial into Omega-basis coefficients.
pub fn bnf_of_hamiltonian(input: &HamiltonianInput) -> Result<BnfData, BnfError> {
    let nf = normalize(input)?;
    let dim = input.dim;
    let trunc = input.truncation;
    let mut stripped = nf.normal.clone();
    let mut low = ComplexSymbol::zero(dim, trunc);
    low.accumulate((0, vec![0; dim], vec![0; dim]), CAlg::from_alg(input.e0.clone()));
    low.accumulate((1, vec![0; dim], vec![0; dim]), CAlg::from_alg(input.e1.clone()));
    stripped = stripped.sub(&ComplexSymbol::quadratic_part(dim, trunc, &input.omegas))?;
    stripped = stripped.sub(&low)?;
    let coeffs = omega_basis_convert(&stripped)?;
    for (l, alpha) in coeffs.keys() {
        let total = l + alpha.iter().sum::<u32>();
        debug_assert!(total >= 2, "normal form left a low-order coefficient");
    }
    Ok(BnfData {
        dim,
        omegas: input.omegas.clone(),
        e0: input.e0.clone(),
        e1: input.e1.clone(),
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn alg(n: i64, d: i64) -> Algebraic {
        Algebraic::from_rat(rat(n, d))
    }

    /// 1D quartic oscillator (x^2 + xi^2)/2 + lambda x^4 at truncation D.
    fn quartic(lambda: Rat, d: u32) -> HamiltonianInput {
        let mut taylor = FormalSymbol::quadratic_part(1, d, &[Algebraic::one()]);
        taylor.accumulate((0, vec![4], vec![0]), CAlg::from_rat(lambda));
        HamiltonianInput::new(1, vec![Algebraic::one()], Algebraic::zero(), Algebraic::zero(), taylor)
            .unwrap()
    }

    #[test]
    fn cohomological_kernel_monomial() {
        let mut k = ComplexSymbol::zero(1, 8);
        k.accumulate((0, vec![1], vec![1]), CAlg::one());
        let (s, r) = cohomological_solve(&k, &[Algebraic::one()]).unwrap();
        assert!(s.is_zero());
        assert_eq!(r, k);
    }

    #[test]
    fn cohomological_single_divisor() {
        // K = z^2 zbar (d=1, omega=1) -> S = -i z^2 zbar, R = 0
        let mut k = ComplexSymbol::zero(1, 8);
        k.accumulate((0, vec![2], vec![1]), CAlg::one());
        let (s, r) = cohomological_solve(&k, &[Algebraic::one()]).unwrap();
        assert!(r.is_zero());
        let mut expected = ComplexSymbol::zero(1, 8);
        expected.accumulate((0, vec![2], vec![1]), CAlg::i().neg());
        assert_eq!(s, expected);
        // check {Sigma, S} = K
        let sigma = FormalSymbol::quadratic_part(1, 8, &[Algebraic::one()]);
        let back = sigma
            .poisson(&s.to_formal_unchecked())
            .unwrap()
            .to_complex();
        assert_eq!(back, k);
    }

    #[test]
    fn cohomological_exact_real_divisor() {
        // K = z1 zbar2, omega = (1, sqrt2): S = K / (i (1 - sqrt2))
        let omegas = vec![Algebraic::one(), Algebraic::sqrt(2)];
        let mut k = ComplexSymbol::zero(2, 8);
        k.accumulate((0, vec![1, 0], vec![0, 1]), CAlg::one());
        let (s, r) = cohomological_solve(&k, &omegas).unwrap();
        assert!(r.is_zero());
        let w = Algebraic::one().sub(&Algebraic::sqrt(2));
        let expected_coeff = CAlg::one().scale_alg(&w.inv()).mul_i().neg();
        assert_eq!(s.coefficient(&(0, vec![1, 0], vec![0, 1])), expected_coeff);
        // verify {Sigma, S} = K exactly
        let sigma = FormalSymbol::quadratic_part(2, 8, &omegas);
        let back = sigma
            .poisson(&s.to_formal_unchecked())
            .unwrap()
            .to_complex();
        assert_eq!(back, k);
    }

    #[test]
    fn cohomological_resonant_divisor_rejected() {
        let omegas = vec![Algebraic::one(), Algebraic::one().scale(&rat(2, 1))];
        // a - b = (2, -1): <omega, a-b> = 2 - 2 = 0
        let mut k = ComplexSymbol::zero(2, 8);
        k.accumulate((0, vec![2, 0], vec![0, 1]), CAlg::one());
        assert_eq!(
            cohomological_solve(&k, &omegas).unwrap_err(),
            BnfError::ResonantDenominator
        );
    }

    #[test]
    fn normalize_pure_oscillator_is_fixed() {
        let omegas = vec![Algebraic::one(), Algebraic::sqrt(2)];
        let taylor = FormalSymbol::quadratic_part(2, 6, &omegas);
        let input = HamiltonianInput::new(
            2,
            omegas.clone(),
            Algebraic::zero(),
            Algebraic::zero(),
            taylor.clone(),
        )
        .unwrap();
        let nf = normalize(&input).unwrap();
        assert_eq!(nf.normal, taylor.to_complex());
        assert!(nf.generators.iter().all(|g| g.is_zero()));
    }

    #[test]
    fn normalize_quartic_action_part() {
        // (x^2+xi^2)/2 + lambda x^4 at D=4: action part of the normal symbol
        // is I + (3 lambda / 2) I^2 and the hbar^2 constant vanishes.
        let lambda = rat(1, 10);
        let input = quartic(lambda.clone(), 4);
        let nf = normalize(&input).unwrap();
        let mut expected = ComplexSymbol::zero(1, 4);
        expected.accumulate((0, vec![1], vec![1]), CAlg::from_rat(rat(1, 2)));
        // (3 lambda / 2) I^2 = (3 lambda / 8) z^2 zbar^2
        expected.accumulate((0, vec![2], vec![2]), CAlg::from_rat(rat(3, 80)));
        assert_eq!(nf.normal, expected);
    }

    #[test]
    fn normalize_replay_reproduces_normal_symbol() {
        let input = quartic(rat(1, 10), 6);
        let nf = normalize(&input).unwrap();
        let mut replay = input.taylor.clone();
        for g in &nf.generators {
            if !g.is_zero() {
                replay = replay.conjugate_by(g, false).unwrap();
            }
        }
        assert_eq!(replay.to_complex(), nf.normal);
    }

    #[test]
    fn normalize_commutes_with_sigma() {
        let input = quartic(rat(1, 10), 6);
        let nf = normalize(&input).unwrap();
        let sigma = FormalSymbol::quadratic_part(1, 6, &input.omegas);
        let pb = sigma.poisson(&nf.normal.to_formal().unwrap()).unwrap();
        assert!(pb.is_zero());
    }

    #[test]
    fn omega_convert_linear_action() {
        // K = I (d=1) -> c_{0,(1)} = 1
        let k = FormalSymbol::action(1, 4, 0).to_complex();
        let coeffs = omega_basis_convert(&k).unwrap();
        assert_eq!(coeffs.len(), 1);
        assert_eq!(coeffs[&(0, vec![1])], Algebraic::one());
    }

    #[test]
    fn omega_convert_action_square() {
        // K = I^2 (d=1) -> c_{0,(2)} = 1, c_{2,(0)} = 1/4
        let i = FormalSymbol::action(1, 4, 0);
        let k = i.mul(&i).unwrap().to_complex();
        let coeffs = omega_basis_convert(&k).unwrap();
        assert_eq!(coeffs.len(), 2);
        assert_eq!(coeffs[&(0, vec![2])], Algebraic::one());
        assert_eq!(coeffs[&(2, vec![0])], alg(1, 4));
    }

    #[test]
    fn omega_convert_mixed_actions_commute() {
        // K = I1 I2 (d=2) -> single coefficient 1 on (0,(1,1))
        let i1 = FormalSymbol::action(2, 4, 0);
        let i2 = FormalSymbol::action(2, 4, 1);
        let k = i1.mul(&i2).unwrap().to_complex();
        let coeffs = omega_basis_convert(&k).unwrap();
        assert_eq!(coeffs.len(), 1);
        assert_eq!(coeffs[&(0, vec![1, 1])], Algebraic::one());
    }

    #[test]
    fn omega_convert_round_trip() {
        // Re-expanding sum c hbar^l I^{*alpha} recovers K exactly.
        let i = FormalSymbol::action(1, 6, 0);
        let mut k = i.mul(&i).unwrap().mul(&i).unwrap(); // I^3
        k = k.add(&i.mul(&i).unwrap().mul_hbar(1)).unwrap(); // + hbar I^2
        let kz = k.to_complex();
        let coeffs = omega_basis_convert(&kz).unwrap();
        // rebuild: sum c_{l,alpha} hbar^l I^{* alpha}
        let mut rebuilt = FormalSymbol::zero(1, 6);
        for ((l, alpha), c) in &coeffs {
            let mut sp = FormalSymbol::constant(1, 6, CAlg::one());
            for (j, &e) in alpha.iter().enumerate() {
                let ij = FormalSymbol::action(1, 6, j);
                for _ in 0..e {
                    sp = sp.moyal_star(&ij).unwrap();
                }
            }
            rebuilt = rebuilt
                .add(&sp.mul_hbar(*l).scale(&CAlg::from_alg(c.clone())))
                .unwrap();
        }
        assert_eq!(rebuilt.to_complex(), kz);
    }

    #[test]
    fn quartic_bnf_coefficients() {
        // Perturbation oracle: <k| x^4 |k> = (3 hbar^2/2)((k+1/2)^2 + 1/4)
        // gives c_{0,(2)} = 3 lambda/2, c_{2,(0)} = 3 lambda/8.
        let input = quartic(rat(1, 10), 4);
        let data = bnf_of_hamiltonian(&input).unwrap();
        assert_eq!(data.coeffs.len(), 2);
        assert_eq!(data.coeffs[&(0, vec![2])], alg(3, 20));
        assert_eq!(data.coeffs[&(2, vec![0])], alg(3, 80));
    }

    #[test]
    fn product_perturbation_is_exact_kernel() {
        // d=2, omega=(1,sqrt2), perturbation lambda I1 I2 -> c_{0,(1,1)} = lambda.
        let omegas = vec![Algebraic::one(), Algebraic::sqrt(2)];
        let lambda = rat(2, 7);
        let mut taylor = FormalSymbol::quadratic_part(2, 4, &omegas);
        let i1i2 = FormalSymbol::action(2, 4, 0)
            .mul(&FormalSymbol::action(2, 4, 1))
            .unwrap();
        taylor = taylor
            .add(&i1i2.scale(&CAlg::from_rat(lambda.clone())))
            .unwrap();
        let input =
            HamiltonianInput::new(2, omegas, Algebraic::zero(), Algebraic::zero(), taylor).unwrap();
        let data = bnf_of_hamiltonian(&input).unwrap();
        assert_eq!(data.coeffs.len(), 1);
        assert_eq!(data.coeffs[&(0, vec![1, 1])], Algebraic::from_rat(lambda));
    }

    #[test]
    fn rejects_bad_quadratic_part() {
        let omegas = vec![Algebraic::one()];
        let taylor = FormalSymbol::action(1, 4, 0).scale(&CAlg::from_rat(rat(2, 1)));
        assert!(matches!(
            HamiltonianInput::new(1, omegas, Algebraic::zero(), Algebraic::zero(), taylor),
            Err(BnfError::InvalidInput(_))
        ));
    }
}
