//! Lattice geometry, the truncated single-rotor algebra and sparse assembly
//! of `H(b) = T + V(b)` on the product space.
//!
//! The per-site space is spanned by `e^{i n φ}` with `|n| <= M`. `cos φ` and
//! `sin φ` act as the banded compressions `(S+ + S-)/2` and `(S+ - S-)/2i`.
//! In the bond potential the one-site squares are compressed as a whole, so
//! `cos^2 φ + sin^2 φ` contributes exactly the identity at every cutoff.

mod field;
mod hamiltonian;
mod lattice;
mod site;

pub use field::{reflect_field, PerturbField, ReflectedFields};
pub use hamiltonian::{assemble_hamiltonian, field_expansion, FieldExpansion, ProductSpace, RotorModel, SparseHamiltonian};
pub use lattice::{dispersion, Bond, LatticeSpec, ReflectionPlane};
pub use site::{site_operators, SiteOperators};

/// `LatticeSpec::build`.
pub fn build_lattice(dim: usize, half_edge: usize) -> crate::Result<LatticeSpec> {
    LatticeSpec::build(dim, half_edge)
}
