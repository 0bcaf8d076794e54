//! Ground states and the momentum-space observables of the rotor lattice:
//! the correlation `g_k`, susceptibility `chi_k`, double commutator `D_k`,
//! the sum rule and the rotation-symmetry identities.

mod fourier;
mod ground;
mod observables;

pub use fourier::{spin_fourier_apply, SpinComponent};
pub use ground::{degeneracy_threshold, ground_state, ground_state_with, EigenOptions, GroundState, SolverKind};
pub use observables::{
    chi_agreement, momentum_observables, momentum_scan, sin_squared_reduction, sum_rule, symmetry_breaking,
    symmetry_report, MomentumReport, MomentumSlacks, RotorSystem, SpectralOracle, SpectralSums, SumRule,
    SymmetryReport,
};
