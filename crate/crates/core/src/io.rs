//! JSON documents for Hamiltonians, normal forms, and spectral datasets.
//! Exact values travel as strings ("p/q", "p/q*sqrt(m)", joined with " + ")
//! so that serialize then parse is the identity.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebraic::Algebraic;
use crate::bnf::{BnfData, BnfError, CoeffMap, HamiltonianInput};
use crate::scalars::{
    parse_exact_real, sqrt_labels_in, ExactReal, RealBasis, ScalarError,
};
use crate::spectrum::SpectralDataset;
use crate::weyl::{CAlg, FormalSymbol};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error(transparent)]
    Bnf(#[from] BnfError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> IoError {
    IoError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaylorTermDoc {
    pub hbar: u32,
    pub x: Vec<u32>,
    pub xi: Vec<u32>,
    pub coeff: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianDoc {
    pub dim: usize,
    pub omegas: Vec<String>,
    #[serde(rename = "E0")]
    pub e0: String,
    #[serde(rename = "E1")]
    pub e1: String,
    /// Terms of graded degree >= 3; the quadratic scaffold is implied by
    /// dim, omegas, E0, E1.
    pub taylor: Vec<TaylorTermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoeffDoc {
    pub l: u32,
    pub alpha: Vec<u32>,
    pub c: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BnfDoc {
    pub dim: usize,
    pub omegas: Vec<String>,
    #[serde(rename = "E0")]
    pub e0: String,
    #[serde(rename = "E1")]
    pub e1: String,
    pub coeffs: Vec<CoeffDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelDoc {
    #[serde(rename = "N")]
    pub n: usize,
    pub a: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub order: usize,
    pub levels: Vec<LevelDoc>,
}

/// Parses the exact text form into an Algebraic value, inferring the needed
/// sqrt labels from the string itself.
pub fn parse_algebraic(s: &str, path: &str) -> Result<Algebraic, IoError> {
    let labels = sqrt_labels_in(s).map_err(|e| schema(path, e.to_string()))?;
    let basis =
        RealBasis::with_sqrts(&labels).map_err(|e| schema(path, e.to_string()))?;
    let x = parse_exact_real(s, &basis).map_err(|e| schema(path, e.to_string()))?;
    Algebraic::from_exact_real(&x).map_err(|e| schema(path, e.to_string()))
}

pub fn hamiltonian_from_doc(
    doc: &HamiltonianDoc,
    truncation: u32,
) -> Result<HamiltonianInput, IoError> {
    let dim = doc.dim;
    let mut omegas = Vec::with_capacity(doc.omegas.len());
    for (i, s) in doc.omegas.iter().enumerate() {
        omegas.push(parse_algebraic(s, &format!("$.omegas[{i}]"))?);
    }
    let e0 = parse_algebraic(&doc.e0, "$.E0")?;
    let e1 = parse_algebraic(&doc.e1, "$.E1")?;
    let mut taylor = FormalSymbol::quadratic_part(dim, truncation, &omegas);
    taylor.accumulate(
        (0, vec![0; dim], vec![0; dim]),
        CAlg::from_alg(e0.clone()),
    );
    taylor.accumulate(
        (1, vec![0; dim], vec![0; dim]),
        CAlg::from_alg(e1.clone()),
    );
    for (i, t) in doc.taylor.iter().enumerate() {
        let path = format!("$.taylor[{i}]");
        if t.x.len() != dim || t.xi.len() != dim {
            return Err(schema(&path, "exponent vector length != dim"));
        }
        let grade = 2 * t.hbar + t.x.iter().sum::<u32>() + t.xi.iter().sum::<u32>();
        if grade < 3 {
            return Err(schema(
                &path,
                "taylor terms must have graded degree >= 3",
            ));
        }
        let c = parse_algebraic(&t.coeff, &format!("{path}.coeff"))?;
        taylor.accumulate((t.hbar, t.x.clone(), t.xi.clone()), CAlg::from_alg(c));
    }
    Ok(HamiltonianInput::new(dim, omegas, e0, e1, taylor)?)
}

pub fn bnf_to_doc(bnf: &BnfData) -> BnfDoc {
    BnfDoc {
        dim: bnf.dim,
        omegas: bnf.omegas.iter().map(|w| w.to_string()).collect(),
        e0: bnf.e0.to_string(),
        e1: bnf.e1.to_string(),
        coeffs: bnf
            .coeffs
            .iter()
            .map(|((l, alpha), c)| CoeffDoc {
                l: *l,
                alpha: alpha.clone(),
                c: c.to_string(),
            })
            .collect(),
    }
}

pub fn bnf_from_doc(doc: &BnfDoc) -> Result<BnfData, IoError> {
    let mut omegas = Vec::with_capacity(doc.omegas.len());
    for (i, s) in doc.omegas.iter().enumerate() {
        omegas.push(parse_algebraic(s, &format!("$.omegas[{i}]"))?);
    }
    if omegas.len() != doc.dim {
        return Err(schema("$.omegas", "length != dim"));
    }
    let e0 = parse_algebraic(&doc.e0, "$.E0")?;
    let e1 = parse_algebraic(&doc.e1, "$.E1")?;
    let mut coeffs = CoeffMap::new();
    for (i, cd) in doc.coeffs.iter().enumerate() {
        let path = format!("$.coeffs[{i}]");
        if cd.alpha.len() != doc.dim {
            return Err(schema(&path, "alpha length != dim"));
        }
        let c = parse_algebraic(&cd.c, &format!("{path}.c"))?;
        if coeffs.insert((cd.l, cd.alpha.clone()), c).is_some() {
            return Err(schema(&path, "duplicate (l, alpha) key"));
        }
    }
    Ok(BnfData {
        dim: doc.dim,
        omegas,
        e0,
        e1,
        coeffs,
    })
}

pub fn spectrum_to_doc(ds: &SpectralDataset) -> SpectrumDoc {
    SpectrumDoc {
        dim: ds.dim,
        order: ds.order,
        levels: ds
            .levels
            .iter()
            .enumerate()
            .map(|(i, level)| LevelDoc {
                n: i + 1,
                a: level.iter().map(|x| x.to_string()).collect(),
            })
            .collect(),
    }
}

pub fn spectrum_from_doc(doc: &SpectrumDoc) -> Result<SpectralDataset, IoError> {
    // The dataset basis is the union of sqrt labels across all values.
    let mut labels: Vec<u64> = Vec::new();
    for (i, level) in doc.levels.iter().enumerate() {
        for (j, s) in level.a.iter().enumerate() {
            let found = sqrt_labels_in(s)
                .map_err(|e| schema(format!("$.levels[{i}].a[{j}]"), e.to_string()))?;
            for l in found {
                if !labels.contains(&l) {
                    labels.push(l);
                }
            }
        }
    }
    labels.sort_unstable();
    let basis: Arc<RealBasis> =
        RealBasis::with_sqrts(&labels).map_err(|e| schema("$", e.to_string()))?;
    let mut levels = Vec::with_capacity(doc.levels.len());
    for (i, level) in doc.levels.iter().enumerate() {
        if level.n != i + 1 {
            return Err(schema(
                format!("$.levels[{i}].N"),
                format!("expected {} (levels must be 1..M in order)", i + 1),
            ));
        }
        if level.a.len() != doc.order + 1 {
            return Err(schema(
                format!("$.levels[{i}].a"),
                "expected order + 1 coefficients",
            ));
        }
        let mut parsed: Vec<ExactReal> = Vec::with_capacity(level.a.len());
        for (j, s) in level.a.iter().enumerate() {
            parsed.push(
                parse_exact_real(s, &basis)
                    .map_err(|e| schema(format!("$.levels[{i}].a[{j}]"), e.to_string()))?,
            );
        }
        levels.push(parsed);
    }
    Ok(SpectralDataset {
        dim: doc.dim,
        order: doc.order,
        basis,
        levels,
    })
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<(), String> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| format!("{}: {e}", path.display()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::Rat;
    use num::BigInt;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn algebraic_text_round_trip() {
        let v = Algebraic::from_rat(rat(1, 3)).add(&Algebraic::sqrt(2).scale(&rat(2, 1)));
        let s = v.to_string();
        assert_eq!(s, "1/3 + 2/1*sqrt(2)");
        assert_eq!(parse_algebraic(&s, "$").unwrap(), v);
    }

    #[test]
    fn bnf_doc_round_trip() {
        let mut coeffs = CoeffMap::new();
        coeffs.insert((0, vec![2, 0]), Algebraic::from_rat(rat(3, 20)));
        coeffs.insert((2, vec![0, 0]), Algebraic::sqrt(3).scale(&rat(-1, 7)));
        let bnf = BnfData {
            dim: 2,
            omegas: vec![Algebraic::one(), Algebraic::sqrt(2)],
            e0: Algebraic::from_rat(rat(-1, 2)),
            e1: Algebraic::zero(),
            coeffs,
        };
        let doc = bnf_to_doc(&bnf);
        let json = serde_json::to_string(&doc).unwrap();
        let back: BnfDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(bnf_from_doc(&back).unwrap(), bnf);
    }

    #[test]
    fn spectrum_doc_round_trip() {
        let bnf = BnfData {
            dim: 2,
            omegas: vec![Algebraic::one(), Algebraic::sqrt(2)],
            e0: Algebraic::zero(),
            e1: Algebraic::from_rat(rat(1, 3)),
            coeffs: CoeffMap::new(),
        };
        let ds = crate::spectrum::spectrum_forward(&bnf, 12, 2).unwrap();
        let doc = spectrum_to_doc(&ds);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SpectrumDoc = serde_json::from_str(&json).unwrap();
        let ds2 = spectrum_from_doc(&back).unwrap();
        assert_eq!(ds2.levels, ds.levels);
        assert_eq!(ds2.order, ds.order);
        assert_eq!(ds2.dim, ds.dim);
    }

    #[test]
    fn hamiltonian_doc_builds_quartic() {
        let doc = HamiltonianDoc {
            dim: 1,
            omegas: vec!["1/1".into()],
            e0: "0/1".into(),
            e1: "0/1".into(),
            taylor: vec![TaylorTermDoc {
                hbar: 0,
                x: vec![4],
                xi: vec![0],
                coeff: "1/10".into(),
            }],
        };
        let input = hamiltonian_from_doc(&doc, 4).unwrap();
        let bnf = crate::bnf::bnf_of_hamiltonian(&input).unwrap();
        assert_eq!(bnf.coeffs[&(0, vec![2])], Algebraic::from_rat(rat(3, 20)));
        assert_eq!(bnf.coeffs[&(2, vec![0])], Algebraic::from_rat(rat(3, 80)));
    }

    #[test]
    fn schema_error_carries_path() {
        let doc = BnfDoc {
            dim: 1,
            omegas: vec!["1/1".into()],
            e0: "not-a-number".into(),
            e1: "0/1".into(),
            coeffs: vec![],
        };
        match bnf_from_doc(&doc) {
            Err(IoError::Schema { path, .. }) => assert_eq!(path, "$.E0"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn low_degree_taylor_rejected() {
        let doc = HamiltonianDoc {
            dim: 1,
            omegas: vec!["1/1".into()],
            e0: "0/1".into(),
            e1: "0/1".into(),
            taylor: vec![TaylorTermDoc {
                hbar: 0,
                x: vec![2],
                xi: vec![0],
                coeff: "1/10".into(),
            }],
        };
        assert!(matches!(
            hamiltonian_from_doc(&doc, 4),
            Err(IoError::Schema { .. })
        ));
    }
}
