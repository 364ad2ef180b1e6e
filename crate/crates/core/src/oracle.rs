//! Independent numerical check: oscillator-basis spectral eigensolvers for
//! one- and two-mode Schroedinger operators with polynomial potentials, and
//! log-log residual scans certifying the order of an eigenvalue expansion.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::bnf::BnfData;
use crate::scalars::{ExactReal, ScalarError};
use crate::spectrum::{eigenvalue_expansion, psi_enumerate, SpectrumError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("potential is not confining: {0}")]
    NotConfined(String),
    #[error("basis size must be >= 16, got {0}")]
    BasisTooSmall(usize),
    #[error("eigenvalues did not converge under basis doubling (max relative change {0:.3e})")]
    NotConverged(f64),
    #[error("unsupported dimension {0}")]
    UnsupportedDim(usize),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// A real polynomial potential in 1 or 2 position variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialPotential {
    dim: usize,
    /// exponent vector -> coefficient
    monomials: BTreeMap<Vec<u32>, f64>,
}

impl PolynomialPotential {
    /// Validates dimension and confinement: the potential must grow along a
    /// fan of rays (checked numerically at two radii).
    pub fn new(dim: usize, monomials: BTreeMap<Vec<u32>, f64>) -> Result<Self, OracleError> {
        if dim != 1 && dim != 2 {
            return Err(OracleError::UnsupportedDim(dim));
        }
        let v = PolynomialPotential { dim, monomials };
        let dirs: Vec<Vec<f64>> = if dim == 1 {
            vec![vec![1.0], vec![-1.0]]
        } else {
            (0..16)
                .map(|i| {
                    let t = std::f64::consts::PI * 2.0 * i as f64 / 16.0;
                    vec![t.cos(), t.sin()]
                })
                .collect()
        };
        for dir in &dirs {
            let near = v.eval(&dir.iter().map(|c| c * 8.0).collect::<Vec<_>>());
            let far = v.eval(&dir.iter().map(|c| c * 16.0).collect::<Vec<_>>());
            if !(far > near && far > v.eval(&vec![0.0; dim])) {
                return Err(OracleError::NotConfined(format!(
                    "decreasing along direction {dir:?}"
                )));
            }
        }
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.monomials
            .iter()
            .map(|(a, c)| c * a.iter().zip(x).map(|(&e, &v)| v.powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Coefficient of x_j^2 (per-mode quadratic part).
    fn quad_coeff(&self, j: usize) -> f64 {
        let mut key = vec![0u32; self.dim];
        key[j] = 2;
        self.monomials.get(&key).copied().unwrap_or(0.0)
    }

    fn max_degree(&self) -> u32 {
        self.monomials
            .keys()
            .map(|a| a.iter().copied().max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }
}

/// Per-mode oscillator frequency matched to the quadratic part v x^2, i.e.
/// omega = sqrt(2 v); falls back to 1 when the quadratic part vanishes.
fn mode_frequency(v: &PolynomialPotential, j: usize) -> f64 {
    let c = v.quad_coeff(j);
    if c > 0.0 {
        (2.0 * c).sqrt()
    } else {
        1.0
    }
}

/// Matrix powers of the position operator x = sqrt(hbar/(2 omega))(a + adag)
/// on a padded basis; the window [0, size) of X^m is exact when pad >= m.
fn x_powers(size: usize, pad: usize, hbar: f64, omega: f64, max_pow: u32) -> Vec<DMatrix<f64>> {
    let s = size + pad;
    let c = (hbar / (2.0 * omega)).sqrt();
    let mut x = DMatrix::<f64>::zeros(s, s);
    for n in 1..s {
        let v = c * (n as f64).sqrt();
        x[(n - 1, n)] = v;
        x[(n, n - 1)] = v;
    }
    let mut out = vec![DMatrix::<f64>::identity(s, s)];
    for m in 1..=max_pow {
        let next = &out[(m - 1) as usize] * &x;
        out.push(next);
    }
    out
}

/// p^2 = -(hbar omega / 2)(adag - a)^2, exact on the window.
fn p_squared(size: usize, pad: usize, hbar: f64, omega: f64) -> DMatrix<f64> {
    let s = size + pad;
    let mut d = DMatrix::<f64>::zeros(s, s);
    for n in 1..s {
        let v = (n as f64).sqrt();
        d[(n, n - 1)] = v;
        d[(n - 1, n)] = -v;
    }
    (&d * &d) * (-(hbar * omega) / 2.0)
}

fn lowest_eigenvalues(h: DMatrix<f64>, count: usize) -> Vec<f64> {
    let sym = (&h + h.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(count);
    vals
}

fn build_h_1d(v: &PolynomialPotential, hbar: f64, basis_size: usize) -> DMatrix<f64> {
    let omega = mode_frequency(v, 0);
    let deg = v.max_degree();
    let pad = deg as usize + 2;
    let xp = x_powers(basis_size, pad, hbar, omega, deg);
    let s = basis_size + pad;
    let mut h = p_squared(basis_size, pad, hbar, omega) * 0.5;
    for (a, &c) in &v.monomials {
        h += &xp[a[0] as usize] * c;
    }
    let _ = s;
    h.view((0, 0), (basis_size, basis_size)).into_owned()
}

/// Lowest eigenvalues of -hbar^2/2 d^2/dx^2 + V, spectral method in the
/// oscillator eigenbasis, with a basis-doubling convergence certificate.
pub fn eigenvalues_1d(
    v: &PolynomialPotential,
    hbar: f64,
    basis_size: usize,
) -> Result<Vec<f64>, OracleError> {
    if basis_size < 16 {
        return Err(OracleError::BasisTooSmall(basis_size));
    }
    let count = basis_size / 4;
    let coarse = lowest_eigenvalues(build_h_1d(v, hbar, basis_size), count);
    let fine = lowest_eigenvalues(build_h_1d(v, hbar, 2 * basis_size), count);
    let worst = converged_through(&coarse, &fine);
    if worst > 1e-10 {
        return Err(OracleError::NotConverged(worst));
    }
    Ok(fine)
}

fn converged_through(coarse: &[f64], fine: &[f64]) -> f64 {
    coarse
        .iter()
        .zip(fine)
        .map(|(a, b)| (a - b).abs() / b.abs().max(1e-300))
        .fold(0.0f64, f64::max)
}

fn build_h_2d(v: &PolynomialPotential, hbar: f64, k_max: u32) -> DMatrix<f64> {
    let deg = v.max_degree();
    let pad = deg as usize + 2;
    let per_mode = k_max as usize + 1;
    let omegas = [mode_frequency(v, 0), mode_frequency(v, 1)];
    let xp: Vec<Vec<DMatrix<f64>>> = (0..2)
        .map(|j| x_powers(per_mode, pad, hbar, omegas[j], deg))
        .collect();
    let psq: Vec<DMatrix<f64>> = (0..2)
        .map(|j| p_squared(per_mode, pad, hbar, omegas[j]))
        .collect();
    // Simplex basis |k| <= k_max, lex order.
    let mut basis = Vec::new();
    for k1 in 0..=k_max {
        for k2 in 0..=(k_max - k1) {
            basis.push([k1 as usize, k2 as usize]);
        }
    }
    let n = basis.len();
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (r, kr) in basis.iter().enumerate() {
        for (c, kc) in basis.iter().enumerate() {
            let mut val = 0.0;
            for (a, &coef) in &v.monomials {
                val += coef
                    * xp[0][a[0] as usize][(kr[0], kc[0])]
                    * xp[1][a[1] as usize][(kr[1], kc[1])];
            }
            if kr[1] == kc[1] {
                val += 0.5 * psq[0][(kr[0], kc[0])];
            }
            if kr[0] == kc[0] {
                val += 0.5 * psq[1][(kr[1], kc[1])];
            }
            h[(r, c)] = val;
        }
    }
    h
}

/// Two-mode version on the simplex-truncated tensor oscillator basis
/// {|k| <= K}, per-mode frequencies from the quadratic part.
pub fn eigenvalues_2d(
    v: &PolynomialPotential,
    hbar: f64,
    k_max: u32,
) -> Result<Vec<f64>, OracleError> {
    if v.dim != 2 {
        return Err(OracleError::UnsupportedDim(v.dim));
    }
    if k_max < 8 {
        return Err(OracleError::BasisTooSmall(k_max as usize));
    }
    let count = (k_max as usize) / 2;
    let coarse = lowest_eigenvalues(build_h_2d(v, hbar, k_max), count);
    let fine = lowest_eigenvalues(build_h_2d(v, hbar, 2 * k_max), count);
    let worst = converged_through(&coarse, &fine);
    if worst > 1e-10 {
        return Err(OracleError::NotConverged(worst));
    }
    Ok(fine)
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    /// 1-based level index (rank in the sorted spectrum).
    pub level: usize,
    pub order: usize,
    pub hbars: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    /// true when the residuals sit at floating noise and no slope is meaningful.
    pub noise_floor: bool,
    pub pass: bool,
}

/// Truncated expansion value sum_j a_j hbar^j at a lattice point of the
/// normal form, evaluated in floating point.
fn predicted_level(bnf: &BnfData, k: &[u32], order: usize, hbar: f64) -> f64 {
    let coeffs = eigenvalue_expansion(bnf, k, order);
    let mut acc = 0.0;
    let mut w = 1.0;
    for a in &coeffs {
        acc += a.to_f64() * w;
        w *= hbar;
    }
    acc
}

/// Compares numeric eigenvalues against the order-J truncated expansion at a
/// grid of hbar values and fits the log-log residual slope. PASS when the
/// slope reaches J + 0.7 (first omitted order, with margin) or the residuals
/// sit at the floating-point noise floor.
pub fn hbar_scan(
    v: &PolynomialPotential,
    bnf: &BnfData,
    level: usize,
    order: usize,
    hbar_grid: &[f64],
    basis_size: usize,
) -> Result<ScanReport, OracleError> {
    assert!(hbar_grid.len() >= 3, "need at least 3 grid points");
    assert!(level >= 1);
    let basis = crate::spectrum::dataset_basis(bnf);
    let omegas: Vec<ExactReal> = bnf
        .omegas
        .iter()
        .map(|w| w.to_exact_real(&basis))
        .collect::<Result<_, _>>()?;
    let psi = psi_enumerate(&omegas, level)?;
    let k = psi.point(level).to_vec();
    let mut residuals = Vec::with_capacity(hbar_grid.len());
    let mut scale: f64 = 0.0;
    for &hbar in hbar_grid {
        let numeric = match v.dim {
            1 => eigenvalues_1d(v, hbar, basis_size)?,
            2 => eigenvalues_2d(v, hbar, basis_size as u32)?,
            d => return Err(OracleError::UnsupportedDim(d)),
        };
        let e_num = numeric[level - 1];
        let e_pred = predicted_level(bnf, &k, order, hbar);
        residuals.push((e_num - e_pred).abs());
        scale = scale.max(e_num.abs());
    }
    let noise_floor = residuals.iter().all(|&r| r <= 1e-12 * scale.max(1.0));
    let (slope, intercept) = if noise_floor {
        (f64::INFINITY, 0.0)
    } else {
        log_log_fit(hbar_grid, &residuals)
    };
    let pass = noise_floor || slope >= order as f64 + 0.7;
    Ok(ScanReport {
        level,
        order,
        hbars: hbar_grid.to_vec(),
        residuals,
        slope,
        intercept,
        noise_floor,
        pass,
    })
}

fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-300).ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebraic::Algebraic;
    use crate::bnf::CoeffMap;
    use crate::scalars::Rat;
    use num::BigInt;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    fn pot_1d(entries: &[(u32, f64)]) -> PolynomialPotential {
        let m = entries.iter().map(|&(e, c)| (vec![e], c)).collect();
        PolynomialPotential::new(1, m).unwrap()
    }

    #[test]
    fn rejects_unbounded_potential() {
        let m: BTreeMap<Vec<u32>, f64> = [(vec![4u32], -1.0)].into_iter().collect();
        assert!(matches!(
            PolynomialPotential::new(1, m),
            Err(OracleError::NotConfined(_))
        ));
    }

    #[test]
    fn harmonic_spectrum_exact() {
        let v = pot_1d(&[(2, 0.5)]);
        let hbar = 0.1;
        let levels = eigenvalues_1d(&v, hbar, 32).unwrap();
        for (k, e) in levels.iter().enumerate() {
            let expected = hbar * (k as f64 + 0.5);
            assert!((e - expected).abs() < 1e-12, "k={k}: {e} vs {expected}");
        }
    }

    #[test]
    fn variational_monotonicity() {
        let v = pot_1d(&[(2, 0.5), (4, 0.1)]);
        let small = lowest_eigenvalues(build_h_1d(&v, 0.1, 24), 6);
        let large = lowest_eigenvalues(build_h_1d(&v, 0.1, 48), 6);
        for (a, b) in small.iter().zip(&large) {
            assert!(*b <= *a + 1e-12);
        }
    }

    #[test]
    fn quartic_ground_state_matches_second_order() {
        // V = x^2/2 + x^4/10: E_0 ~ hbar/2 + hbar^2 (3/20)(1/2)^2 + hbar^2 (3/80)
        let v = pot_1d(&[(2, 0.5), (4, 0.1)]);
        let hbar = 0.05;
        let levels = eigenvalues_1d(&v, hbar, 64).unwrap();
        let predicted = hbar * 0.5 + hbar * hbar * (0.15 * 0.25 + 3.0 / 80.0);
        assert!(
            (levels[0] - predicted).abs() < 5.0 * hbar.powi(3),
            "{} vs {}",
            levels[0],
            predicted
        );
    }

    #[test]
    fn separable_2d_levels() {
        // V = (x1^2 + 2 x2^2)/2: levels hbar(k1 + 1/2) + sqrt(2) hbar (k2 + 1/2)
        let m: BTreeMap<Vec<u32>, f64> =
            [(vec![2, 0], 0.5), (vec![0, 2], 1.0)].into_iter().collect();
        let v = PolynomialPotential::new(2, m).unwrap();
        let hbar = 0.1;
        let levels = eigenvalues_2d(&v, hbar, 16).unwrap();
        let s = 2f64.sqrt();
        let mut expected = Vec::new();
        for k1 in 0..12 {
            for k2 in 0..12 {
                expected.push(hbar * (k1 as f64 + 0.5) + s * hbar * (k2 as f64 + 0.5));
            }
        }
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (e, x) in levels.iter().zip(&expected) {
            assert!((e - x).abs() < 1e-11, "{e} vs {x}");
        }
    }

    #[test]
    fn resonant_2d_multiplicities() {
        let m: BTreeMap<Vec<u32>, f64> =
            [(vec![2, 0], 0.5), (vec![0, 2], 0.5)].into_iter().collect();
        let v = PolynomialPotential::new(2, m).unwrap();
        let levels = eigenvalues_2d(&v, 0.1, 16).unwrap();
        // clusters at 0.1 (N+1) with multiplicity N+1
        let mut idx = 0;
        for n in 0..3 {
            for _ in 0..=n {
                assert!((levels[idx] - 0.1 * (n as f64 + 1.0)).abs() < 1e-11);
                idx += 1;
            }
        }
    }

    #[test]
    fn scan_harmonic_noise_floor() {
        let v = pot_1d(&[(2, 0.5)]);
        let bnf = BnfData {
            dim: 1,
            omegas: vec![Algebraic::one()],
            e0: Algebraic::zero(),
            e1: Algebraic::zero(),
            coeffs: CoeffMap::new(),
        };
        let report = hbar_scan(&v, &bnf, 1, 2, &[0.2, 0.1, 0.05], 32).unwrap();
        assert!(report.noise_floor);
        assert!(report.pass);
    }

    #[test]
    fn scan_quartic_second_order_slope() {
        let v = pot_1d(&[(2, 0.5), (4, 0.1)]);
        let mut coeffs = CoeffMap::new();
        coeffs.insert((0, vec![2]), Algebraic::from_rat(rat(3, 20)));
        coeffs.insert((2, vec![0]), Algebraic::from_rat(rat(3, 80)));
        let bnf = BnfData {
            dim: 1,
            omegas: vec![Algebraic::one()],
            e0: Algebraic::zero(),
            e1: Algebraic::zero(),
            coeffs,
        };
        let report = hbar_scan(&v, &bnf, 1, 2, &[0.2, 0.1, 0.05], 48).unwrap();
        assert!(!report.noise_floor);
        assert!(
            (report.slope - 3.0).abs() < 0.3,
            "slope {}",
            report.slope
        );
        assert!(report.pass);
    }
}
