use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use birkhoff::algebraic::Algebraic;
use birkhoff::bnf::bnf_of_hamiltonian;
use birkhoff::inverse::invert_spectrum;
use birkhoff::io::{
    bnf_from_doc, bnf_to_doc, hamiltonian_from_doc, read_json, spectrum_from_doc,
    spectrum_to_doc, write_json, BnfDoc, HamiltonianDoc, SpectrumDoc,
};
use birkhoff::oracle::{eigenvalues_1d, eigenvalues_2d, hbar_scan, OracleError, PolynomialPotential};
use birkhoff::resonant::cluster_spectrum;
use birkhoff::scalars::ExactReal;
use birkhoff::spectrum::{partition_identity_check, spectrum_forward};
use birkhoff::weyl::{CAlg, FormalSymbol};

#[derive(Parser)]
#[command(
    name = "birkhoff",
    about = "Exact semiclassical Birkhoff normal forms, eigenvalue expansions, and their inverse"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a Hamiltonian document into normal-form coefficients.
    Bnf {
        #[arg(long)]
        input: PathBuf,
        /// Truncation degree D (even, >= 4).
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the eigenvalue-expansion dataset of a normal form.
    Spectrum {
        #[arg(long)]
        bnf: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long)]
        order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover normal-form data from a spectral dataset.
    Invert {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Forward then inverse, reporting whether the data is reproduced exactly.
    Roundtrip {
        #[arg(long)]
        bnf: PathBuf,
        #[arg(long)]
        levels: usize,
        #[arg(long, default_value_t = 4)]
        order: usize,
    },
    /// Cluster eigenvalues of a fully resonant symbol (all frequencies 1).
    Clusters {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_name = "N")]
        cluster: u32,
        #[arg(long)]
        hbar: f64,
        /// Truncation degree for the symbol assembly.
        #[arg(long, default_value_t = 8)]
        degree: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Numerical Schroedinger eigenvalues, optionally scanning hbar against
    /// a normal-form prediction.
    Oracle {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        hbar: Vec<f64>,
        #[arg(long, default_value_t = 48)]
        basis_size: usize,
        /// With --bnf, --order, --level: fit the residual scan slope.
        #[arg(long)]
        bnf: Option<PathBuf>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, default_value_t = 1)]
        level: usize,
        #[arg(long, default_value_t = 8)]
        count: usize,
    },
    /// Verify the partition-function identity of a spectral dataset.
    CheckPartition {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
        z: Vec<f64>,
    },
}

#[derive(Serialize)]
struct ClusterOut {
    n: u32,
    hbar: f64,
    dimension: usize,
    center: f64,
    eigenvalues: Vec<f64>,
}

const EXIT_INVALID: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

fn fail(message: impl std::fmt::Display, code: u8) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((message, code)) => fail(message, code),
    }
}

type CmdError = (String, u8);

fn invalid(e: impl std::fmt::Display) -> CmdError {
    (e.to_string(), EXIT_INVALID)
}

fn run(cli: Cli) -> Result<(), CmdError> {
    match cli.command {
        Command::Bnf { input, degree, out } => {
            if degree < 4 || degree % 2 != 0 {
                return Err(invalid("--degree must be even and >= 4"));
            }
            let doc: HamiltonianDoc = read_json(&input).map_err(invalid)?;
            let ham = hamiltonian_from_doc(&doc, degree).map_err(invalid)?;
            let bnf = bnf_of_hamiltonian(&ham).map_err(invalid)?;
            write_json(&out, &bnf_to_doc(&bnf)).map_err(invalid)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Spectrum {
            bnf,
            levels,
            order,
            out,
        } => {
            let doc: BnfDoc = read_json(&bnf).map_err(invalid)?;
            let data = bnf_from_doc(&doc).map_err(invalid)?;
            let ds = spectrum_forward(&data, levels, order).map_err(invalid)?;
            write_json(&out, &spectrum_to_doc(&ds)).map_err(invalid)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Invert { input, out } => {
            let doc: SpectrumDoc = read_json(&input).map_err(invalid)?;
            if doc.order < 2 {
                return Err(invalid("invert requires dataset order >= 2"));
            }
            let ds = spectrum_from_doc(&doc).map_err(invalid)?;
            let bnf = invert_spectrum(&ds).map_err(invalid)?;
            write_json(&out, &bnf_to_doc(&bnf)).map_err(invalid)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Roundtrip { bnf, levels, order } => {
            let doc: BnfDoc = read_json(&bnf).map_err(invalid)?;
            let data = bnf_from_doc(&doc).map_err(invalid)?;
            let ds = spectrum_forward(&data, levels, order).map_err(invalid)?;
            let recovered = invert_spectrum(&ds).map_err(invalid)?;
            if recovered == data {
                println!("EXACT MATCH");
                Ok(())
            } else {
                Err(invalid("round-trip mismatch: recovered data differs"))
            }
        }
        Command::Clusters {
            input,
            cluster,
            hbar,
            degree,
            out,
        } => {
            let doc: HamiltonianDoc = read_json(&input).map_err(invalid)?;
            let symbol = resonant_symbol_from_doc(&doc, degree)?;
            let cs = cluster_spectrum(&symbol, cluster, hbar).map_err(invalid)?;
            let payload = ClusterOut {
                n: cs.n,
                hbar: cs.hbar,
                dimension: cs.dimension,
                center: cs.center,
                eigenvalues: cs.eigenvalues,
            };
            match out {
                Some(path) => {
                    write_json(&path, &payload).map_err(invalid)?;
                    println!("wrote {}", path.display());
                }
                None => {
                    println!("{}", serde_json::to_string_pretty(&payload).unwrap());
                }
            }
            Ok(())
        }
        Command::Oracle {
            input,
            hbar,
            basis_size,
            bnf,
            order,
            level,
            count,
        } => {
            if hbar.is_empty() {
                return Err(invalid("--hbar requires at least one value"));
            }
            let doc: HamiltonianDoc = read_json(&input).map_err(invalid)?;
            let v = potential_from_doc(&doc)?;
            match (bnf, order) {
                (Some(bnf_path), Some(order)) => {
                    if hbar.len() < 3 {
                        return Err(invalid("scans need >= 3 hbar values"));
                    }
                    let bdoc: BnfDoc = read_json(&bnf_path).map_err(invalid)?;
                    let data = bnf_from_doc(&bdoc).map_err(invalid)?;
                    let report = hbar_scan(&v, &data, level, order, &hbar, basis_size)
                        .map_err(oracle_err)?;
                    for (h, r) in report.hbars.iter().zip(&report.residuals) {
                        println!("hbar={h:<10} residual={r:.6e}");
                    }
                    if report.noise_floor {
                        println!("residuals at noise floor: PASS");
                    } else {
                        println!(
                            "slope={:.3} (threshold {:.1}): {}",
                            report.slope,
                            order as f64 + 0.7,
                            if report.pass { "PASS" } else { "FAIL" }
                        );
                    }
                    if report.pass {
                        Ok(())
                    } else {
                        Err((format!("scan slope {:.3} below threshold", report.slope), EXIT_NOT_CONVERGED))
                    }
                }
                (None, None) => {
                    for &h in &hbar {
                        let levels = match v.dim() {
                            1 => eigenvalues_1d(&v, h, basis_size),
                            _ => eigenvalues_2d(&v, h, basis_size as u32),
                        }
                        .map_err(oracle_err)?;
                        let shown: Vec<String> = levels
                            .iter()
                            .take(count)
                            .map(|e| format!("{e:.12}"))
                            .collect();
                        println!("hbar={h}: {}", shown.join(" "));
                    }
                    Ok(())
                }
                _ => Err(invalid("--bnf and --order must be given together")),
            }
        }
        Command::CheckPartition { input, z } => {
            let doc: SpectrumDoc = read_json(&input).map_err(invalid)?;
            let ds = spectrum_from_doc(&doc).map_err(invalid)?;
            let mus: Vec<ExactReal> = ds.levels.iter().map(|l| l[1].clone()).collect();
            let sieve = birkhoff::inverse::sieve_omegas(&mus, ds.dim).map_err(invalid)?;
            let report = partition_identity_check(&mus, &sieve.omegas, &z).map_err(invalid)?;
            println!(
                "multiset check: OK ({} levels, {} frequencies)",
                report.levels_checked, sieve.dim
            );
            let mut ok = true;
            for row in &report.rows {
                println!(
                    "z={:<6} sum={:.12} product={:.12} |diff|={:.3e} tail_bound={:.3e} {}",
                    row.z,
                    row.truncated_sum,
                    row.closed_form,
                    row.difference,
                    row.tail_bound,
                    if row.within_bound { "OK" } else { "EXCEEDED" }
                );
                ok &= row.within_bound;
            }
            if ok {
                Ok(())
            } else {
                Err(("partition sum outside tail bound".into(), EXIT_NOT_CONVERGED))
            }
        }
    }
}

fn oracle_err(e: OracleError) -> CmdError {
    let code = match e {
        OracleError::NotConverged(_) => EXIT_NOT_CONVERGED,
        _ => EXIT_INVALID,
    };
    (e.to_string(), code)
}

/// Assembles a fully resonant symbol (all frequencies 1) from a Hamiltonian
/// document, bypassing the strictly-increasing frequency validation of the
/// non-resonant pipeline.
fn resonant_symbol_from_doc(doc: &HamiltonianDoc, degree: u32) -> Result<FormalSymbol, CmdError> {
    let dim = doc.dim;
    for (i, s) in doc.omegas.iter().enumerate() {
        let w = birkhoff::io::parse_algebraic(s, &format!("$.omegas[{i}]")).map_err(invalid)?;
        if w != Algebraic::one() {
            return Err(invalid("clusters requires all frequencies equal to 1"));
        }
    }
    let ones = vec![Algebraic::one(); dim];
    let mut symbol = FormalSymbol::quadratic_part(dim, degree, &ones);
    let e0 = birkhoff::io::parse_algebraic(&doc.e0, "$.E0").map_err(invalid)?;
    let e1 = birkhoff::io::parse_algebraic(&doc.e1, "$.E1").map_err(invalid)?;
    symbol.accumulate((0, vec![0; dim], vec![0; dim]), CAlg::from_alg(e0));
    symbol.accumulate((1, vec![0; dim], vec![0; dim]), CAlg::from_alg(e1));
    for (i, t) in doc.taylor.iter().enumerate() {
        if t.x.len() != dim || t.xi.len() != dim {
            return Err(invalid(format!(
                "$.taylor[{i}]: exponent vector length != dim"
            )));
        }
        let c = birkhoff::io::parse_algebraic(&t.coeff, &format!("$.taylor[{i}].coeff"))
            .map_err(invalid)?;
        symbol.accumulate((t.hbar, t.x.clone(), t.xi.clone()), CAlg::from_alg(c));
    }
    Ok(symbol)
}

/// Interprets a Hamiltonian document as a Schroedinger operator
/// -hbar^2/2 Laplacian + V: the potential is the quadratic scaffold plus all
/// position-only Taylor terms; momentum or hbar terms are rejected.
fn potential_from_doc(doc: &HamiltonianDoc) -> Result<PolynomialPotential, CmdError> {
    let dim = doc.dim;
    let mut monomials: std::collections::BTreeMap<Vec<u32>, f64> = Default::default();
    let e0 = birkhoff::io::parse_algebraic(&doc.e0, "$.E0").map_err(invalid)?;
    if !e0.is_zero() {
        monomials.insert(vec![0; dim], e0.to_f64());
    }
    for (j, s) in doc.omegas.iter().enumerate() {
        let w = birkhoff::io::parse_algebraic(s, &format!("$.omegas[{j}]")).map_err(invalid)?;
        let mut key = vec![0u32; dim];
        key[j] = 2;
        // omega_j (x_j^2 + xi_j^2)/2 pairs with kinetic xi_j^2/2 when the
        // quadratic coefficient is omega_j^2/2.
        let wf = w.to_f64();
        monomials.insert(key, wf * wf / 2.0);
    }
    for (i, t) in doc.taylor.iter().enumerate() {
        if t.hbar != 0 || t.xi.iter().any(|&e| e != 0) {
            return Err(invalid(format!(
                "$.taylor[{i}]: oracle requires position-only, hbar-free terms"
            )));
        }
        let c = birkhoff::io::parse_algebraic(&t.coeff, &format!("$.taylor[{i}].coeff"))
            .map_err(invalid)?;
        *monomials.entry(t.x.clone()).or_insert(0.0) += c.to_f64();
    }
    PolynomialPotential::new(dim, monomials).map_err(invalid)
}
