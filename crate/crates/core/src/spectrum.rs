//! Forward spectral map: the order isomorphism psi between level indices and
//! lattice points (sorted enumeration of <omega|k>), the per-level eigenvalue
//! expansions, and the partition-function identities.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num::{BigInt, One};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::bnf::BnfData;
use crate::scalars::{Comparison, ExactReal, Rat, RealBasis, ScalarError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("two lattice values compare equal: frequencies are dependent")]
    DependentFrequencies,
    #[error("multiset mismatch at level {level}: nu != enumerated value")]
    MultisetMismatch { level: usize },
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// The bijection N <-> k realized by sorted enumeration of <omega|k>.
#[derive(Debug, Clone)]
pub struct PsiTable {
    pub dim: usize,
    /// entries[N-1] = (k, <omega|k>), strictly increasing in value.
    pub entries: Vec<(Vec<u32>, ExactReal)>,
    reverse: BTreeMap<Vec<u32>, usize>,
}

impl PsiTable {
    /// 1-based level index of a lattice point, if enumerated.
    pub fn level_of(&self, k: &[u32]) -> Option<usize> {
        self.reverse.get(k).map(|&i| i + 1)
    }

    /// psi(N) for 1-based N.
    pub fn point(&self, n: usize) -> &[u32] {
        &self.entries[n - 1].0
    }

    pub fn value(&self, n: usize) -> &ExactReal {
        &self.entries[n - 1].1
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Binary min-heap with a fallible comparator (exact comparisons can fail on
/// unrefinable opaque basis elements).
struct FallibleHeap<T> {
    items: Vec<T>,
}

impl<T> FallibleHeap<T> {
    fn new() -> Self {
        FallibleHeap { items: Vec::new() }
    }

    fn push<E>(
        &mut self,
        item: T,
        cmp: &mut impl FnMut(&T, &T) -> Result<Ordering, E>,
    ) -> Result<(), E> {
        self.items.push(item);
        let mut i = self.items.len() - 1;
        while i > 0 {
            let parent = (i - 1) / 2;
            if cmp(&self.items[i], &self.items[parent])? == Ordering::Less {
                self.items.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
        Ok(())
    }

    fn pop<E>(
        &mut self,
        cmp: &mut impl FnMut(&T, &T) -> Result<Ordering, E>,
    ) -> Result<Option<T>, E> {
        if self.items.is_empty() {
            return Ok(None);
        }
        let last = self.items.len() - 1;
        self.items.swap(0, last);
        let top = self.items.pop();
        let mut i = 0usize;
        loop {
            let l = 2 * i + 1;
            let r = 2 * i + 2;
            if l >= self.items.len() {
                break;
            }
            let mut child = l;
            if r < self.items.len() && cmp(&self.items[r], &self.items[l])? == Ordering::Less {
                child = r;
            }
            if cmp(&self.items[child], &self.items[i])? == Ordering::Less {
                self.items.swap(i, child);
                i = child;
            } else {
                break;
            }
        }
        Ok(top)
    }
}

/// Best-first enumeration of the first `m` lattice points of Z>=0^d sorted by
/// <omega|k>. Successors increment only coordinates at or past the last
/// nonzero one, so every point is generated exactly once; completeness holds
/// because a point's parent always has a strictly smaller value.
pub fn psi_enumerate(omegas: &[ExactReal], m: usize) -> Result<PsiTable, SpectrumError> {
    let dim = omegas.len();
    if dim == 0 || m == 0 {
        return Err(SpectrumError::EmptyInput);
    }
    let basis = omegas[0].basis().clone();
    let mut cmp = |a: &(ExactReal, Vec<u32>), b: &(ExactReal, Vec<u32>)| {
        Ok::<_, ScalarError>(match a.0.compare(&b.0)? {
            Comparison::Less => Ordering::Less,
            Comparison::Greater => Ordering::Greater,
            Comparison::Equal => Ordering::Equal,
        })
    };
    let mut heap = FallibleHeap::new();
    heap.push((ExactReal::zero(&basis), vec![0u32; dim]), &mut cmp)
        .map_err(SpectrumError::Scalar)?;
    let mut entries: Vec<(Vec<u32>, ExactReal)> = Vec::with_capacity(m);
    let mut reverse = BTreeMap::new();
    while entries.len() < m {
        let Some((value, k)) = heap.pop(&mut cmp).map_err(SpectrumError::Scalar)? else {
            break;
        };
        if let Some((_, prev)) = entries.last() {
            if prev.compare(&value)? == Comparison::Equal {
                return Err(SpectrumError::DependentFrequencies);
            }
        }
        let j0 = k.iter().rposition(|&v| v != 0).unwrap_or(0);
        for j in j0..dim {
            let mut succ = k.clone();
            succ[j] += 1;
            let sval = value.add(&omegas[j])?;
            heap.push((sval, succ), &mut cmp)
                .map_err(SpectrumError::Scalar)?;
        }
        reverse.insert(k.clone(), entries.len());
        entries.push((k, value));
    }
    Ok(PsiTable {
        dim,
        entries,
        reverse,
    })
}

/// Coefficient vector (a_0, ..., a_J) of the eigenvalue expansion at lattice
/// point k: a_0 = E0, a_1 = E1 + <omega, k + 1/2>, a_j = P_j(k) with
/// P_j(Z) = sum_{l+|alpha|=j} c_{l,alpha} (Z + 1/2)^alpha.
pub fn eigenvalue_expansion(bnf: &BnfData, k: &[u32], order: usize) -> Vec<Algebraic> {
    assert!(order >= 1, "expansion order must be >= 1");
    let mut coeffs = vec![Algebraic::zero(); order + 1];
    coeffs[0] = bnf.e0.clone();
    let mut a1 = bnf.e1.clone();
    let half = Rat::new(BigInt::one(), BigInt::from(2));
    for (j, w) in bnf.omegas.iter().enumerate() {
        let kj = Rat::from_integer(BigInt::from(k[j])) + &half;
        a1 = a1.add(&w.scale(&kj));
    }
    coeffs[1] = a1;
    for ((l, alpha), c) in &bnf.coeffs {
        let j = *l as usize + alpha.iter().sum::<u32>() as usize;
        if j > order {
            continue;
        }
        let mut shifted = Rat::one();
        for (i, &a) in alpha.iter().enumerate() {
            let base = Rat::from_integer(BigInt::from(k[i])) + &half;
            for _ in 0..a {
                shifted *= &base;
            }
        }
        coeffs[j] = coeffs[j].add(&c.scale(&shifted));
    }
    coeffs
}

/// Per-level truncated hbar-expansions a_0(N) + a_1(N) hbar + ...
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDataset {
    pub dim: Option<usize>,
    pub order: usize,
    pub basis: Arc<RealBasis>,
    /// levels[N-1] has length order + 1.
    pub levels: Vec<Vec<ExactReal>>,
}

/// The sqrt basis spanning everything a BNF can produce in its expansions.
pub fn dataset_basis(bnf: &BnfData) -> Arc<RealBasis> {
    let mut labels: Vec<u64> = Vec::new();
    let mut collect = |a: &Algebraic| {
        for l in a.labels() {
            if l != 1 && !labels.contains(&l) {
                labels.push(l);
            }
        }
    };
    collect(&bnf.e0);
    collect(&bnf.e1);
    for w in &bnf.omegas {
        collect(w);
    }
    for c in bnf.coeffs.values() {
        collect(c);
    }
    labels.sort_unstable();
    RealBasis::with_sqrts(&labels).expect("square-free labels")
}

/// Forward map: psi enumeration followed by per-level expansions.
pub fn spectrum_forward(
    bnf: &BnfData,
    m: usize,
    order: usize,
) -> Result<SpectralDataset, SpectrumError> {
    let basis = dataset_basis(bnf);
    let omegas: Vec<ExactReal> = bnf
        .omegas
        .iter()
        .map(|w| w.to_exact_real(&basis))
        .collect::<Result<_, _>>()?;
    let psi = psi_enumerate(&omegas, m)?;
    let mut levels = Vec::with_capacity(m);
    for n in 1..=psi.len() {
        let coeffs = eigenvalue_expansion(bnf, psi.point(n), order);
        let level: Vec<ExactReal> = coeffs
            .iter()
            .map(|a| a.to_exact_real(&basis))
            .collect::<Result<_, _>>()?;
        levels.push(level);
    }
    Ok(SpectralDataset {
        dim: Some(bnf.dim),
        order,
        basis,
        levels,
    })
}

impl SpectralDataset {
    /// The a_1 column (the mu_N values).
    pub fn mus(&self) -> Vec<ExactReal> {
        self.levels.iter().map(|l| l[1].clone()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PartitionRow {
    pub z: f64,
    pub truncated_sum: f64,
    pub closed_form: f64,
    pub difference: f64,
    pub tail_bound: f64,
    pub within_bound: bool,
}

#[derive(Debug, Clone)]
pub struct PartitionReport {
    pub multiset_ok: bool,
    pub levels_checked: usize,
    pub rows: Vec<PartitionRow>,
}

/// Checks the partition-function identity: the multiset {nu_N = mu_N - mu_1}
/// equals the enumerated {<omega|k>} exactly, and the truncated Dirichlet sum
/// of e^{-z mu_N} matches the closed-form product within the reported tail
/// bound e^{-z mu_{M+1}} / (1 - e^{-z gap}).
pub fn partition_identity_check(
    mus: &[ExactReal],
    omegas: &[ExactReal],
    zs: &[f64],
) -> Result<PartitionReport, SpectrumError> {
    if mus.is_empty() || omegas.is_empty() {
        return Err(SpectrumError::EmptyInput);
    }
    let m = mus.len();
    let psi = psi_enumerate(omegas, m + 1)?;
    let mu1 = &mus[0];
    for (n, mu) in mus.iter().enumerate() {
        let nu = mu.sub(mu1)?;
        if nu.compare(psi.value(n + 1))? != Comparison::Equal {
            return Err(SpectrumError::MultisetMismatch { level: n + 1 });
        }
    }
    // Numeric evaluation. zs are sample points with Re z > 0.
    let mu_f: Vec<f64> = mus.iter().map(|x| x.to_f64()).collect();
    let omega_f: Vec<f64> = omegas.iter().map(|x| x.to_f64()).collect();
    let mu1_f = mu_f[0];
    let e1_f = mu1_f - 0.5 * omega_f.iter().sum::<f64>();
    let mu_next = mu1_f + psi.value(m + 1).to_f64();
    let gap = psi
        .entries
        .windows(2)
        .map(|w| w[1].1.to_f64() - w[0].1.to_f64())
        .fold(f64::INFINITY, f64::min);
    let mut rows = Vec::with_capacity(zs.len());
    for &z in zs {
        let truncated_sum = neumaier_sum(mu_f.iter().map(|&mu| (-z * mu).exp()));
        let mut closed_form = (-z * (e1_f + 0.5 * omega_f.iter().sum::<f64>())).exp();
        for &w in &omega_f {
            closed_form /= 1.0 - (-z * w).exp();
        }
        let tail_bound = (-z * mu_next).exp() / (1.0 - (-z * gap).exp());
        let difference = (truncated_sum - closed_form).abs();
        rows.push(PartitionRow {
            z,
            truncated_sum,
            closed_form,
            difference,
            tail_bound,
            within_bound: difference <= tail_bound,
        });
    }
    Ok(PartitionReport {
        multiset_ok: true,
        levels_checked: m,
        rows,
    })
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
