//! Numerical laboratory for multi-particle Anderson Hamiltonians on
//! rectangular lattice domains.
//!
//! * [`lattice`]: rectangles, product domains, regularity, site indexing.
//! * [`hamiltonian`]: assembly of `H^Λ = Σ_i h_0^(i) + V + U`.
//! * [`randomness`]: bounded densities and counter-based potential sampling.
//! * [`spectral`]: exact diagonalization, counting function, window counts.
//! * [`verify`]: per-sample checks of the Wegner-estimate argument.
//! * [`suites`]: seeded randomized runs of those checks.
//! * [`montecarlo`]: probability, expected-count and IDS-density estimators
//!   against the bound `4 ‖ρ‖∞ |Λ| κ`.

pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod montecarlo;
pub mod quadrature;
pub mod randomness;
pub mod spectral;
pub mod suites;
pub mod verify;

pub use error::{Error, Result};

/// Decimal rendering with 17 significant digits; parses back to the same
/// `f64` bit pattern.
pub fn format_sig17(x: f64) -> String {
    format!("{x:.16e}")
}
