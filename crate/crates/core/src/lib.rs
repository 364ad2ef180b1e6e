//! Semiclassical Birkhoff normal forms, their spectra, and the inverse map.
//!
//! Pipeline: a Hamiltonian with a non-degenerate non-resonant minimum is
//! normalized degree by degree in the graded Weyl algebra (`weyl`, `bnf`),
//! the normal form generates eigenvalue expansions ordered by the frequency
//! lattice (`spectrum`), and the inverse recovers ground energy, frequencies,
//! and all normal-form coefficients from spectral data (`inverse`). The
//! completely resonant cluster structure lives in `resonant`, and `oracle`
//! provides an independent Hermite-basis Schrodinger eigensolver.

pub mod algebraic;
pub mod bnf;
pub mod inverse;
pub mod io;
pub mod oracle;
pub mod resonant;
pub mod scalars;
pub mod spectrum;
pub mod weyl;
