use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_eig, lanczos_lowest, LanczosOptions, LinearOp};
use crate::rotor::SparseHamiltonian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Dense,
    Lanczos,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundState {
    pub energy: f64,
    #[serde(skip)]
    pub vector: Vec<Complex64>,
    /// `E_1 - E_0`.
    pub gap: f64,
    /// `||H psi0 - E0 psi0||`.
    pub residual: f64,
    pub solver: SolverKind,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Largest dimension handled by full dense diagonalization.
    pub dense_limit: usize,
    pub lanczos: LanczosOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            dense_limit: 2000,
            lanczos: LanczosOptions::default(),
        }
    }
}

impl GroundState {
    /// Gaps below `1e-8 * ||H||` make the ground state numerically degenerate.
    pub fn is_degenerate(&self, h: &SparseHamiltonian) -> bool {
        self.gap < degeneracy_threshold(h)
    }
}

pub fn degeneracy_threshold(h: &SparseHamiltonian) -> f64 {
    1e-8 * h.norm_estimate().max(1.0)
}

fn residual_of(h: &SparseHamiltonian, e0: f64, v: &[Complex64]) -> f64 {
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    h.apply(v, &mut hv);
    linalg::axpy(Complex64::new(-e0, 0.0), v, &mut hv);
    linalg::norm(&hv)
}

pub fn ground_state(h: &SparseHamiltonian) -> Result<GroundState> {
    ground_state_with(h, EigenOptions::default())
}

pub fn ground_state_with(h: &SparseHamiltonian, opts: EigenOptions) -> Result<GroundState> {
    if h.dim == 0 {
        return Err(Error::EmptyInput("Hamiltonian of dimension zero"));
    }
    if h.dim <= opts.dense_limit {
        let (vals, vecs) = hermitian_eig(h.to_dense().as_matrix());
        let vector: Vec<Complex64> = vecs.column(0).iter().copied().collect();
        let gap = if vals.len() > 1 { vals[1] - vals[0] } else { f64::INFINITY };
        let residual = residual_of(h, vals[0], &vector);
        return Ok(GroundState {
            energy: vals[0],
            vector,
            gap,
            residual,
            solver: SolverKind::Dense,
            iterations: 0,
        });
    }
    let pair = lanczos_lowest(h, opts.lanczos)?;
    let residual = residual_of(h, pair.e0, &pair.vector);
    Ok(GroundState {
        energy: pair.e0,
        vector: pair.vector,
        gap: pair.e1 - pair.e0,
        residual,
        solver: SolverKind::Lanczos,
        iterations: pair.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotor::{assemble_hamiltonian, LatticeSpec, PerturbField, RotorModel};

    #[test]
    fn free_rotors() {
        let model = RotorModel::new(1.0, 0.0, 2).unwrap();
        let lat = LatticeSpec::build(1, 2).unwrap();
        let h = assemble_hamiltonian(&model, &lat, &PerturbField::zeros(4)).unwrap();
        let gs = ground_state(&h).unwrap();
        assert!(gs.energy.abs() < 1e-14);
        assert!((gs.gap - 0.5).abs() < 1e-14);
        let zero = h.space.encode(&[0, 0, 0, 0]);
        assert!((gs.vector[zero].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        let model = RotorModel::new(1.0, 1.0, 2).unwrap();
        let lat = LatticeSpec::build(1, 2).unwrap();
        let h = assemble_hamiltonian(&model, &lat, &PerturbField::zeros(4)).unwrap();
        let dense = ground_state(&h).unwrap();
        let iter = ground_state_with(
            &h,
            EigenOptions {
                dense_limit: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(dense.solver, SolverKind::Dense);
        assert_eq!(iter.solver, SolverKind::Lanczos);
        assert!((dense.energy - iter.energy).abs() < 1e-9);
        assert!((dense.gap - iter.gap).abs() < 1e-7);
        assert!(iter.residual <= 1e-10 * h.norm_estimate());
        assert!((linalg::norm(&iter.vector) - 1.0).abs() < 1e-12);
    }
}
