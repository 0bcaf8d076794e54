//! Reflection-positivity energy inequalities for the perturbed rotor
//! Hamiltonian `H(b)`: monotonicity `E0(b) >= E0(0)`, the reflected-bond
//! inequality, curvature of `λ -> E0(λb)` and the plane-wave probe bounding
//! the susceptibility.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{deflated_cg, dot, norm, project_out};
use crate::rotor::{
    assemble_hamiltonian, dispersion, field_expansion, reflect_field, site_operators, LatticeSpec, PerturbField,
    RotorModel,
};
use crate::spectra::{ground_state_with, momentum_observables, EigenOptions, RotorSystem};
use crate::tol;

/// `E0(H(b))`. Only the energy is needed, so Lanczos takes over from the
/// dense solver already above a few hundred states.
pub fn ground_energy(model: &RotorModel, lat: &LatticeSpec, b: &PerturbField) -> Result<f64> {
    let h = assemble_hamiltonian(model, lat, b)?;
    let opts = EigenOptions {
        dense_limit: 256,
        ..Default::default()
    };
    Ok(ground_state_with(&h, opts)?.energy)
}

/// Energy tolerance `EN * (1 + |E0|)`.
pub fn energy_tolerance(e0: f64) -> f64 {
    tol::EN * (1.0 + e0.abs())
}

/// Second-order data of `E0(λb)` around `λ = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrder {
    /// `<psi0|H'(b) psi0>`.
    pub first: f64,
    /// `sum_{n>0} |<ψ_n|H'(b) psi0>|^2 / (E0 - E_n)`.
    pub delta2: f64,
    pub c_of_b: f64,
}

impl SecondOrder {
    /// `2 delta2 + 2 C(b)`.
    pub fn curvature(&self) -> f64 {
        2.0 * (self.delta2 + self.c_of_b)
    }
}

/// Perturbative second derivative from one deflated solve against `H(0) - E0`.
pub fn second_order(sys: &RotorSystem, b: &PerturbField) -> Result<SecondOrder> {
    let exp = field_expansion(&sys.model, &sys.lattice, b)?;
    let ops = site_operators(sys.model.cutoff, sys.model.inertia)?;
    let psi = &sys.ground.vector;
    let space = sys.space();
    let mut hp = vec![Complex64::new(0.0, 0.0); psi.len()];
    for (x, &hx) in exp.site_coefficients.iter().enumerate() {
        if hx != 0.0 {
            let v = space.apply_local(x, &ops.cos, psi);
            for (t, z) in hp.iter_mut().zip(v) {
                *t += hx * z;
            }
        }
    }
    let first = dot(psi, &hp).re;
    project_out(psi, &mut hp);
    let delta2 = if norm(&hp) == 0.0 {
        0.0
    } else {
        let h = &sys.hamiltonian;
        let out = deflated_cg(h, sys.ground.energy, psi, &hp, 1e-13, 20 * h.dim.max(100))?;
        -dot(&hp, &out.solution).re
    };
    Ok(SecondOrder {
        first,
        delta2,
        c_of_b: exp.c_of_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Five-point second difference of `E0(λb)` at step `h`.
    pub fd_second: f64,
    /// The same stencil at `h/2`.
    pub fd_second_half: f64,
    /// `2 delta2 + 2 C(b)`.
    pub pt_second: f64,
    pub delta2: f64,
    pub first_order: f64,
    pub c_of_b: f64,
    pub step: f64,
    /// `(λ, E0(λb))` for the stencil nodes.
    pub energies: Vec<(f64, f64)>,
}

impl CurvatureReport {
    pub fn match_defect(&self) -> f64 {
        (self.fd_second - self.pt_second).abs() / (1.0 + self.pt_second.abs())
    }

    pub fn richardson_defect(&self) -> f64 {
        (self.fd_second - self.fd_second_half).abs() / (1.0 + self.pt_second.abs())
    }

    pub fn holds(&self) -> bool {
        self.fd_second >= -tol::CURV && self.pt_second >= -tol::CURV && self.match_defect() <= tol::MATCH
    }
}

fn five_point(f: &dyn Fn(i32) -> f64, h: f64) -> f64 {
    (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h * h)
}

/// Default stencil step `1e-2 / ||b||_2`.
pub fn default_step(b: &PerturbField) -> f64 {
    let n = b.norm();
    if n == 0.0 {
        1e-2
    } else {
        1e-2 / n
    }
}

pub fn curvature_check(model: &RotorModel, lat: &LatticeSpec, b: &PerturbField) -> Result<CurvatureReport> {
    let sys = RotorSystem::solve(*model, lat.clone())?;
    curvature_check_on(&sys, b, default_step(b))
}

pub fn curvature_check_on(sys: &RotorSystem, b: &PerturbField, step: f64) -> Result<CurvatureReport> {
    if sys.is_degenerate() {
        return Err(Error::Degenerate {
            gap: sys.ground.gap,
            threshold: crate::spectra::degeneracy_threshold(&sys.hamiltonian),
        });
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Usage(format!("stencil step must be positive, got {step}")));
    }
    let so = second_order(sys, b)?;
    // nodes in units of h/2: -4..4 even for the h stencil, -2..2 for h/2
    let nodes: [i32; 6] = [-4, -2, -1, 1, 2, 4];
    let mut energies: Vec<(f64, f64)> = nodes
        .par_iter()
        .map(|&j| -> Result<(f64, f64)> {
            let lambda = 0.5 * step * j as f64;
            Ok((lambda, ground_energy(&sys.model, &sys.lattice, &b.scaled(lambda))?))
        })
        .collect::<Result<Vec<_>>>()?;
    energies.push((0.0, sys.ground.energy));
    energies.sort_by(|a, b| a.0.total_cmp(&b.0));
    let at = |j: i32| -> f64 {
        let lambda = 0.5 * step * j as f64;
        energies.iter().find(|(l, _)| *l == lambda).expect("stencil node").1
    };
    let e0 = sys.ground.energy;
    let noise = energy_tolerance(e0);
    for j in [-4, -2, 2, 4] {
        let lower = e0 + so.first * 0.5 * step * j as f64 - noise;
        if at(j) < lower {
            return Err(Error::Contract(format!(
                "stencil energy at λ = {} lies below the tangent by more than {noise:.1e}; reduce the step",
                0.5 * step * j as f64
            )));
        }
    }
    let fd_second = five_point(&|i| at(2 * i), step);
    let fd_second_half = five_point(&|i| at(i), 0.5 * step);
    Ok(CurvatureReport {
        fd_second,
        fd_second_half,
        pt_second: so.curvature(),
        delta2: so.delta2,
        first_order: so.first,
        c_of_b: so.c_of_b,
        step,
        energies,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpReport {
    pub e0_zero: f64,
    pub e0_b: f64,
    pub e0_left: f64,
    pub e0_right: f64,
    /// `E0(b) - E0(0)`.
    pub monotone_slack: f64,
    /// `2 E0(b) - E0(b_L) - E0(b_R)`.
    pub bond_slack: f64,
    /// `(l, l_L, l_R)`.
    pub nonzero_bonds: (usize, usize, usize),
    pub tolerance: f64,
}

impl RpReport {
    pub fn holds(&self) -> bool {
        self.monotone_slack >= -self.tolerance && self.bond_slack >= -self.tolerance
    }
}

pub fn rp_inequalities(model: &RotorModel, lat: &LatticeSpec, b: &PerturbField) -> Result<RpReport> {
    let refl = reflect_field(b, lat)?;
    let fields = [PerturbField::zeros(lat.num_sites()), b.clone(), refl.left.clone(), refl.right.clone()];
    let e: Vec<f64> = fields
        .par_iter()
        .map(|f| ground_energy(model, lat, f))
        .collect::<Result<Vec<_>>>()?;
    Ok(RpReport {
        e0_zero: e[0],
        e0_b: e[1],
        e0_left: e[2],
        e0_right: e[3],
        monotone_slack: e[1] - e[0],
        bond_slack: 2.0 * e[1] - e[2] - e[3],
        nonzero_bonds: refl.nonzero_bonds,
        tolerance: energy_tolerance(e[0]),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub k: Vec<f64>,
    /// `C(b)` read off the assembled `H(b) - H(0)`.
    pub c_of_b: f64,
    /// `J E(k)`.
    pub c_expected: f64,
    pub chi: f64,
    pub g: f64,
    /// `1 / (J E(k))`.
    pub chi_bound: f64,
    /// `1 / (2 sqrt(I J E(k)))`.
    pub g_bound: f64,
    pub chi_slack: f64,
    pub g_slack: f64,
    /// Second-order coefficients for `b` and `i b`.
    pub delta2_real: f64,
    pub delta2_imag: f64,
    /// `|delta2(b) + delta2(ib) + (2 J E(k))^2 chi|`.
    pub parallelogram_defect: f64,
    /// `1 / (2 J E(k))`, implied by the curvature `2 delta2 + 2 C(b) >= 0`.
    pub chi_curvature_bound: f64,
    /// Set when `J = 0`; all bounds are then infinite.
    pub trivial: bool,
}

pub fn plane_wave_probe(model: &RotorModel, lat: &LatticeSpec, k: &[f64]) -> Result<ProbeReport> {
    let sys = RotorSystem::solve(*model, lat.clone())?;
    plane_wave_probe_on(&sys, k)
}

pub fn plane_wave_probe_on(sys: &RotorSystem, k: &[f64]) -> Result<ProbeReport> {
    let lat = &sys.lattice;
    let model = &sys.model;
    lat.momentum_index(k)?;
    let e = dispersion(k);
    if e == 0.0 {
        return Err(Error::Usage("the plane-wave probe needs k != 0".into()));
    }
    let b = PerturbField::plane_wave(lat, k)?;
    let hb = assemble_hamiltonian(model, lat, &b)?;
    let c_of_b = (hb.get(0, 0) - sys.hamiltonian.get(0, 0)).re;
    let obs = momentum_observables(sys, k)?;
    let j = model.coupling;
    let trivial = j == 0.0;
    let (chi_bound, g_bound, chi_curvature_bound) = if trivial {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    } else {
        (1.0 / (j * e), 1.0 / (2.0 * (model.inertia * j * e).sqrt()), 1.0 / (2.0 * j * e))
    };
    let ib = PerturbField {
        values: b.values.iter().map(|z| z * Complex64::i()).collect(),
    };
    let (re, im) = (second_order(sys, &b)?, second_order(sys, &ib)?);
    let scale = 2.0 * j * e;
    let slack = |bound: f64, v: f64| if bound.is_infinite() { f64::INFINITY } else { bound - v };
    Ok(ProbeReport {
        k: k.to_vec(),
        c_of_b,
        c_expected: j * e,
        chi: obs.chi,
        g: obs.g,
        chi_bound,
        g_bound,
        chi_slack: slack(chi_bound, obs.chi),
        g_slack: slack(g_bound, obs.g),
        delta2_real: re.delta2,
        delta2_imag: im.delta2,
        parallelogram_defect: (re.delta2 + im.delta2 + scale * scale * obs.chi).abs(),
        chi_curvature_bound,
        trivial,
    })
}
