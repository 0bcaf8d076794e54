use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ground_state, spin_fourier_apply, GroundState, SpinComponent};
use crate::error::{Error, Result};
use crate::linalg::{deflated_cg, dot, hermitian_eig, norm, LinearOp};
use crate::rotor::{
    assemble_hamiltonian, dispersion, site_operators, LatticeSpec, PerturbField, ProductSpace, RotorModel,
    SparseHamiltonian,
};
use crate::tol;

/// Largest block diagonalized for the spectral susceptibility.
const SPECTRAL_LIMIT: usize = 3000;

/// A Hamiltonian together with its ground state.
#[derive(Debug)]
pub struct RotorSystem {
    pub model: RotorModel,
    pub lattice: LatticeSpec,
    pub hamiltonian: SparseHamiltonian,
    pub ground: GroundState,
    oracle: OnceLock<Option<SpectralOracle>>,
}

impl RotorSystem {
    /// Assembles `H(0)` and solves for its ground state.
    pub fn solve(model: RotorModel, lattice: LatticeSpec) -> Result<Self> {
        let b = PerturbField::zeros(lattice.num_sites());
        let h = assemble_hamiltonian(&model, &lattice, &b)?;
        let gs = ground_state(&h)?;
        Ok(Self::from_parts(model, lattice, h, gs))
    }

    pub fn from_parts(model: RotorModel, lattice: LatticeSpec, hamiltonian: SparseHamiltonian, ground: GroundState) -> Self {
        Self {
            model,
            lattice,
            hamiltonian,
            ground,
            oracle: OnceLock::new(),
        }
    }

    pub fn space(&self) -> ProductSpace {
        self.hamiltonian.space
    }

    pub fn is_degenerate(&self) -> bool {
        self.ground.is_degenerate(&self.hamiltonian)
    }

    fn apply_spin(&self, psi: &[Complex64], k: &[f64], adjoint: bool, comp: SpinComponent) -> Result<Vec<Complex64>> {
        spin_fourier_apply(&self.space(), &self.lattice, psi, k, adjoint, comp)
    }

    fn h_apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); v.len()];
        self.hamiltonian.apply(v, &mut y);
        y
    }

    /// Full eigendecomposition of the sectors reached by `ŝ psi0`, when affordable.
    pub fn spectral_oracle(&self) -> Option<&SpectralOracle> {
        self.oracle
            .get_or_init(|| SpectralOracle::build(&self.hamiltonian, &self.ground))
            .as_ref()
    }
}

/// Eigenpairs of the invariant blocks that can carry `ŝ psi0`.
#[derive(Debug)]
pub struct SpectralOracle {
    blocks: Vec<(Vec<usize>, Vec<f64>, DMatrix<Complex64>)>,
    e0: f64,
    threshold: f64,
}

/// `(sum w/(E-E0), sum w (E-E0), sum w)` over excited levels, plus the weight
/// on levels degenerate with `E0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSums {
    pub inverse: f64,
    pub linear: f64,
    pub weight: f64,
    pub ground_weight: f64,
}

fn conserves_charge(h: &SparseHamiltonian) -> bool {
    h.entries().all(|(r, c, _)| h.space.total_charge(r) == h.space.total_charge(c))
}

impl SpectralOracle {
    fn build(h: &SparseHamiltonian, gs: &GroundState) -> Option<Self> {
        let threshold = super::degeneracy_threshold(h);
        if conserves_charge(h) {
            let mut sectors: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for s in 0..h.dim {
                sectors.entry(h.space.total_charge(s)).or_default().push(s);
            }
            let mut wanted = std::collections::BTreeSet::new();
            for (s, z) in gs.vector.iter().enumerate() {
                if z.norm_sqr() > 1e-24 {
                    let q = h.space.total_charge(s);
                    wanted.insert(q - 1);
                    wanted.insert(q + 1);
                }
            }
            let mut blocks = Vec::new();
            for q in wanted {
                let Some(idx) = sectors.get(&q) else { continue };
                if idx.len() > SPECTRAL_LIMIT {
                    return None;
                }
                let pos: BTreeMap<usize, usize> = idx.iter().enumerate().map(|(i, &s)| (s, i)).collect();
                let mut m = DMatrix::from_element(idx.len(), idx.len(), Complex64::new(0.0, 0.0));
                for (i, &s) in idx.iter().enumerate() {
                    for p in h.row_ptr[s]..h.row_ptr[s + 1] {
                        if let Some(&j) = pos.get(&h.cols[p]) {
                            m[(i, j)] = h.values[p];
                        }
                    }
                }
                let (vals, vecs) = hermitian_eig(&m);
                blocks.push((idx.clone(), vals, vecs));
            }
            Some(Self {
                blocks,
                e0: gs.energy,
                threshold,
            })
        } else if h.dim <= SPECTRAL_LIMIT.min(2000) {
            let (vals, vecs) = hermitian_eig(h.to_dense().as_matrix());
            Some(Self {
                blocks: vec![((0..h.dim).collect(), vals, vecs)],
                e0: gs.energy,
                threshold,
            })
        } else {
            None
        }
    }

    pub fn sums(&self, v: &[Complex64]) -> SpectralSums {
        let mut out = SpectralSums {
            inverse: 0.0,
            linear: 0.0,
            weight: 0.0,
            ground_weight: 0.0,
        };
        for (idx, vals, vecs) in &self.blocks {
            for (n, &e) in vals.iter().enumerate() {
                let amp: Complex64 = idx.iter().enumerate().map(|(i, &s)| vecs[(i, n)].conj() * v[s]).sum();
                let w = amp.norm_sqr();
                let de = e - self.e0;
                if de.abs() < self.threshold {
                    out.ground_weight += w;
                } else {
                    out.inverse += w / de;
                    out.linear += w * de;
                    out.weight += w;
                }
            }
        }
        out
    }
}

/// Slack of each checked inequality; nonnegative means satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumSlacks {
    /// `chi * dcomm - g^2`.
    pub schwarz: f64,
    /// `chi * dcomm_truncated - g^2`.
    pub schwarz_truncated: f64,
    /// `gBound - g`.
    pub g_bound: f64,
    /// `chiBound - chi`.
    pub chi_bound: f64,
    /// `1/(4I) - dcomm`.
    pub dcomm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumReport {
    pub k: Vec<f64>,
    /// `||(ŝ^x_k)* psi0||^2`.
    pub g: f64,
    /// Excited-state form `1/2 sum_{n>0} (|<ψ_n|ŝ ψ0>|^2 + |<ψ_n|ŝ* ψ0>|^2)`.
    pub g_symmetrized: f64,
    pub g_y: f64,
    /// `|<psi0|ŝ^x_k psi0>|`.
    pub mean_abs: f64,
    /// Susceptibility from the deflated solves.
    pub chi: f64,
    pub chi_spectral: Option<f64>,
    pub solve_residual: f64,
    /// `1/2 <[[ŝ, H], ŝ*]>` for the zero-padded state and the untruncated operators.
    pub dcomm: f64,
    /// The same nested commutator with truncated `H` and `ŝ`.
    pub dcomm_truncated: f64,
    pub dcomm_spectral: Option<f64>,
    /// `(1/(2I|Λ|)) sum_y <sin^2 φ_y>`.
    pub dcomm_reduction: f64,
    pub g_bound: f64,
    pub chi_bound: f64,
    pub slacks: MomentumSlacks,
}

impl MomentumReport {
    pub fn csv_header(dim: usize) -> Vec<String> {
        let mut h: Vec<String> = (0..dim).map(|i| format!("k{i}")).collect();
        h.extend(
            [
                "g",
                "g_symmetrized",
                "g_y",
                "chi",
                "chi_spectral",
                "dcomm",
                "dcomm_truncated",
                "g_bound",
                "chi_bound",
                "slack_schwarz",
                "slack_schwarz_truncated",
                "slack_g_bound",
                "slack_chi_bound",
                "slack_dcomm",
            ]
            .map(String::from),
        );
        h
    }

    pub fn csv_record(&self) -> Vec<String> {
        let mut r: Vec<String> = self.k.iter().map(|x| x.to_string()).collect();
        let opt = |o: Option<f64>| o.map(|x| x.to_string()).unwrap_or_default();
        r.extend([
            self.g.to_string(),
            self.g_symmetrized.to_string(),
            self.g_y.to_string(),
            self.chi.to_string(),
            opt(self.chi_spectral),
            self.dcomm.to_string(),
            self.dcomm_truncated.to_string(),
            self.g_bound.to_string(),
            self.chi_bound.to_string(),
            self.slacks.schwarz.to_string(),
            self.slacks.schwarz_truncated.to_string(),
            self.slacks.g_bound.to_string(),
            self.slacks.chi_bound.to_string(),
            self.slacks.dcomm.to_string(),
        ]);
        r
    }

    pub fn is_zero_mode(&self) -> bool {
        self.k.iter().all(|&x| x == 0.0)
    }
}

/// `1/2 Re[<b|Hb> + <a|Ha> - <ŝ* Hψ|b> - <a|ŝ Hψ>]` with `a = ŝψ`, `b = ŝ*ψ`.
fn nested_commutator(
    a: &[Complex64],
    b: &[Complex64],
    ha: &[Complex64],
    hb: &[Complex64],
    s_adj_hpsi: &[Complex64],
    s_hpsi: &[Complex64],
) -> f64 {
    0.5 * (dot(b, hb) + dot(a, ha) - dot(s_adj_hpsi, b) - dot(a, s_hpsi)).re
}

/// Double commutator of the untruncated model for the zero-padded ground state.
///
/// Only the kinetic term fails to commute with `cos φ`, and one unit of extra
/// cutoff holds `ŝψ`, `ŝ*ψ` exactly.
fn untruncated_dcomm(sys: &RotorSystem, k: &[f64]) -> Result<f64> {
    let small = sys.space();
    let big = ProductSpace::new(small.sites, small.cutoff + 1)?;
    let psi = small.embed(&sys.ground.vector, &big)?;
    let inertia = sys.model.inertia;
    let kin = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter()
            .enumerate()
            .map(|(s, z)| {
                let t: i64 = big.decode(s).iter().map(|n| n * n).sum();
                z * (t as f64 / (2.0 * inertia))
            })
            .collect()
    };
    let lat = &sys.lattice;
    let a = spin_fourier_apply(&big, lat, &psi, k, false, SpinComponent::X)?;
    let b = spin_fourier_apply(&big, lat, &psi, k, true, SpinComponent::X)?;
    let tpsi = kin(&psi);
    let s_adj_t = spin_fourier_apply(&big, lat, &tpsi, k, true, SpinComponent::X)?;
    let s_t = spin_fourier_apply(&big, lat, &tpsi, k, false, SpinComponent::X)?;
    Ok(nested_commutator(&a, &b, &kin(&a), &kin(&b), &s_adj_t, &s_t))
}

/// `(1/(2I|Λ|)) sum_y <psi0| P sin^2 φ_y P |psi0>`.
pub fn sin_squared_reduction(sys: &RotorSystem) -> Result<f64> {
    let ops = site_operators(sys.model.cutoff, sys.model.inertia)?;
    let s2 = ops.sin_squared();
    let psi = &sys.ground.vector;
    let total: f64 = (0..sys.lattice.num_sites())
        .map(|y| dot(psi, &sys.space().apply_local(y, &s2, psi)).re)
        .sum();
    Ok(total / (2.0 * sys.model.inertia * sys.lattice.num_sites() as f64))
}

fn bounds(model: &RotorModel, k: &[f64]) -> (f64, f64) {
    let e = dispersion(k);
    let ij = model.inertia * model.coupling;
    let g_bound = if e == 0.0 || ij == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * (ij * e).sqrt())
    };
    let chi_bound = if e == 0.0 || model.coupling == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (model.coupling * e)
    };
    (g_bound, chi_bound)
}

fn slack(bound: f64, value: f64) -> f64 {
    if bound.is_infinite() {
        f64::INFINITY
    } else {
        bound - value
    }
}

pub fn momentum_observables(sys: &RotorSystem, k: &[f64]) -> Result<MomentumReport> {
    let psi = &sys.ground.vector;
    let e0 = sys.ground.energy;
    let a = sys.apply_spin(psi, k, false, SpinComponent::X)?;
    let b = sys.apply_spin(psi, k, true, SpinComponent::X)?;
    let by = sys.apply_spin(psi, k, true, SpinComponent::Y)?;
    let g = norm(&b).powi(2);
    let g_y = norm(&by).powi(2);
    let mean_a = dot(psi, &a);
    let mean_b = dot(psi, &b);
    let g_symmetrized = 0.5 * ((norm(&a).powi(2) - mean_a.norm_sqr()) + (g - mean_b.norm_sqr()));

    let h = &sys.hamiltonian;
    let solve = |rhs: &[Complex64]| -> Result<(f64, f64)> {
        let mut r = rhs.to_vec();
        crate::linalg::project_out(psi, &mut r);
        if norm(&r) == 0.0 {
            return Ok((0.0, 0.0));
        }
        let out = deflated_cg(h, e0, psi, &r, 1e-12, 20 * h.dim.max(100))?;
        Ok((dot(&r, &out.solution).re, out.residual))
    };
    let (xa, ra) = solve(&a)?;
    let (xb, rb) = solve(&b)?;
    let chi = 0.5 * (xa + xb);

    let hpsi = sys.h_apply(psi);
    let s_adj_h = sys.apply_spin(&hpsi, k, true, SpinComponent::X)?;
    let s_h = sys.apply_spin(&hpsi, k, false, SpinComponent::X)?;
    let dcomm_truncated = nested_commutator(&a, &b, &sys.h_apply(&a), &sys.h_apply(&b), &s_adj_h, &s_h);
    let dcomm = untruncated_dcomm(sys, k)?;
    let dcomm_reduction = sin_squared_reduction(sys)?;

    let (chi_spectral, dcomm_spectral) = match sys.spectral_oracle() {
        Some(o) => {
            let (sa, sb) = (o.sums(&a), o.sums(&b));
            (Some(0.5 * (sa.inverse + sb.inverse)), Some(0.5 * (sa.linear + sb.linear)))
        }
        None => (None, None),
    };

    let (g_bound, chi_bound) = bounds(&sys.model, k);
    let quarter = 1.0 / (4.0 * sys.model.inertia);
    let slacks = MomentumSlacks {
        schwarz: chi * dcomm - g_symmetrized.powi(2),
        schwarz_truncated: chi * dcomm_truncated - g_symmetrized.powi(2),
        g_bound: slack(g_bound, g),
        chi_bound: slack(chi_bound, chi),
        dcomm: quarter - dcomm,
    };
    Ok(MomentumReport {
        k: k.to_vec(),
        g,
        g_symmetrized,
        g_y,
        mean_abs: mean_a.norm(),
        chi,
        chi_spectral,
        solve_residual: ra.max(rb),
        dcomm,
        dcomm_truncated,
        dcomm_spectral,
        dcomm_reduction,
        g_bound,
        chi_bound,
        slacks,
    })
}

/// Observables at every Brillouin momentum, computed in parallel.
pub fn momentum_scan(sys: &RotorSystem) -> Result<Vec<MomentumReport>> {
    sys.spectral_oracle();
    sys.lattice
        .momenta
        .par_iter()
        .map(|k| momentum_observables(sys, k))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumRule {
    /// `sum_k g_k`.
    pub sum_g: f64,
    pub sum_g_y: f64,
    /// `1/2 sum_k (g_k + g^y_k)`.
    pub sum_symmetrized: f64,
    /// `sum_x <cos φ_x^2>` with the truncated product.
    pub parseval: f64,
    /// `1/2 sum_x <cos φ_x^2 + sin φ_x^2>` with truncated products.
    pub rhs_truncated: f64,
    /// `|Λ|/2`.
    pub ideal_rhs: f64,
    /// `idealRhs - sumG`.
    pub deficit: f64,
}

impl SumRule {
    pub fn holds(&self, tol: f64) -> bool {
        (self.sum_g - self.rhs_truncated).abs() <= tol
    }
}

pub fn sum_rule(sys: &RotorSystem) -> Result<SumRule> {
    let psi = &sys.ground.vector;
    let (gx, gy): (Vec<f64>, Vec<f64>) = sys
        .lattice
        .momenta
        .iter()
        .map(|k| -> Result<(f64, f64)> {
            let bx = sys.apply_spin(psi, k, true, SpinComponent::X)?;
            let by = sys.apply_spin(psi, k, true, SpinComponent::Y)?;
            Ok((norm(&bx).powi(2), norm(&by).powi(2)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let ops = site_operators(sys.model.cutoff, sys.model.inertia)?;
    let c2 = &ops.cos * &ops.cos;
    let both = &c2 + &(&ops.sin * &ops.sin);
    let space = sys.space();
    let mut parseval = 0.0;
    let mut rhs = 0.0;
    for x in 0..sys.lattice.num_sites() {
        parseval += dot(psi, &space.apply_local(x, &c2, psi)).re;
        rhs += 0.5 * dot(psi, &space.apply_local(x, &both, psi)).re;
    }
    let sum_g: f64 = gx.iter().sum();
    let sum_g_y: f64 = gy.iter().sum();
    let ideal = 0.5 * sys.lattice.num_sites() as f64;
    Ok(SumRule {
        sum_g,
        sum_g_y,
        sum_symmetrized: 0.5 * (sum_g + sum_g_y),
        parseval,
        rhs_truncated: rhs,
        ideal_rhs: ideal,
        deficit: ideal - sum_g,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max_{k, α} |<ŝ^α_k>|`.
    pub max_mean: f64,
    /// `max_k |g^x_k - g^y_k|`.
    pub max_g_difference: f64,
    pub gap: f64,
    /// Set when the gap is below the degeneracy threshold; the residuals are
    /// then reported but carry no guarantee.
    pub degenerate: bool,
}

impl SymmetryReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_mean <= tol && self.max_g_difference <= tol
    }
}

pub fn symmetry_report(sys: &RotorSystem) -> Result<SymmetryReport> {
    let psi = &sys.ground.vector;
    let mut max_mean: f64 = 0.0;
    let mut max_diff: f64 = 0.0;
    for k in &sys.lattice.momenta {
        for comp in [SpinComponent::X, SpinComponent::Y] {
            let v = sys.apply_spin(psi, k, false, comp)?;
            max_mean = max_mean.max(dot(psi, &v).norm());
        }
        let gx = norm(&sys.apply_spin(psi, k, true, SpinComponent::X)?).powi(2);
        let gy = norm(&sys.apply_spin(psi, k, true, SpinComponent::Y)?).powi(2);
        max_diff = max_diff.max((gx - gy).abs());
    }
    Ok(SymmetryReport {
        max_mean,
        max_g_difference: max_diff,
        gap: sys.ground.gap,
        degenerate: sys.is_degenerate(),
    })
}

/// `H + sum_x (α_x cos φ_x + β_x sin φ_x)` with random `α, β` in `[-strength, strength]`.
pub fn symmetry_breaking(sys: &RotorSystem, strength: f64, seed: u64) -> Result<RotorSystem> {
    use rand::{Rng, SeedableRng};
    if !(strength.is_finite()) {
        return Err(Error::Usage("perturbation strength must be finite".into()));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ops = site_operators(sys.model.cutoff, sys.model.inertia)?;
    let terms: Vec<_> = (0..sys.lattice.num_sites())
        .map(|x| {
            let al: f64 = rng.random_range(-strength..=strength);
            let be: f64 = rng.random_range(-strength..=strength);
            let op = &ops.cos.scale(Complex64::new(al, 0.0)) + &ops.sin.scale(Complex64::new(be, 0.0));
            (x, op)
        })
        .collect();
    let h = sys.hamiltonian.plus_site_terms(&terms)?;
    let gs = ground_state(&h)?;
    Ok(RotorSystem::from_parts(sys.model, sys.lattice.clone(), h, gs))
}

/// Relative disagreement of the two susceptibility routes.
pub fn chi_agreement(report: &MomentumReport) -> Option<f64> {
    report
        .chi_spectral
        .map(|s| (report.chi - s).abs() / report.chi.abs().max(s.abs()).max(tol::EIG))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn chain(m: usize, j: f64) -> RotorSystem {
        RotorSystem::solve(RotorModel::new(1.0, j, m).unwrap(), LatticeSpec::build(1, 2).unwrap()).unwrap()
    }

    #[test]
    fn free_rotor_benchmarks() {
        let sys = chain(1, 0.0);
        for r in momentum_scan(&sys).unwrap() {
            assert!((r.g - 0.5).abs() < 1e-12);
            assert!((r.chi - 1.0).abs() < 1e-10);
            assert!((r.dcomm - 0.25).abs() < 1e-12);
            assert!((r.dcomm_truncated - 0.25).abs() < 1e-12);
            assert!((r.g * r.g - r.chi * r.dcomm).abs() < 1e-10);
        }
    }

    #[test]
    fn coupled_chain_checks() {
        let sys = chain(2, 1.0);
        let reports = momentum_scan(&sys).unwrap();
        for r in &reports {
            assert!(r.mean_abs < 1e-10);
            assert!(chi_agreement(r).unwrap() < tol::CHI, "{r:?}");
            assert!((r.dcomm - r.dcomm_reduction).abs() < 1e-10);
            assert!((r.dcomm_truncated - r.dcomm_spectral.unwrap()).abs() < 1e-9);
            assert!(r.slacks.schwarz_truncated >= -1e-10);
            assert!(r.slacks.schwarz >= -1e-10);
            assert!(r.slacks.dcomm >= -1e-10);
            assert!(r.slacks.chi_bound >= 0.0);
            assert!(r.slacks.g_bound >= 0.0);
        }
        let k = reports.iter().find(|r| r.k == vec![FRAC_PI_2]).unwrap();
        assert!((k.g - 0.175938).abs() < 1e-5);
        let kpi = reports.iter().find(|r| r.k == vec![PI]).unwrap();
        assert!((kpi.chi - 0.06942).abs() < 1e-4);
    }

    #[test]
    fn untruncated_dcomm_matches_full_enlarged_hamiltonian() {
        // brute-force oracle: nested commutator with the assembled H at cutoff M+2
        let sys = chain(1, 1.0);
        let k = [FRAC_PI_2];
        let big_model = sys.model.with_cutoff(3);
        let hb = assemble_hamiltonian(&big_model, &sys.lattice, &PerturbField::zeros(4)).unwrap();
        let psi = sys.space().embed(&sys.ground.vector, &hb.space).unwrap();
        let lat = &sys.lattice;
        let app = |v: &[Complex64], adj| spin_fourier_apply(&hb.space, lat, v, &k, adj, SpinComponent::X).unwrap();
        let hv = |v: &[Complex64]| {
            let mut y = vec![Complex64::new(0.0, 0.0); v.len()];
            hb.apply(v, &mut y);
            y
        };
        let (a, b) = (app(&psi, false), app(&psi, true));
        let hpsi = hv(&psi);
        let want = nested_commutator(&a, &b, &hv(&a), &hv(&b), &app(&hpsi, true), &app(&hpsi, false));
        let got = untruncated_dcomm(&sys, &k).unwrap();
        assert!((got - want).abs() < 1e-12, "{got} {want}");
        assert!((got - 0.25).abs() < 1e-10);
    }

    #[test]
    fn sum_rule_on_chain() {
        let sys = chain(2, 1.0);
        let s = sum_rule(&sys).unwrap();
        assert!((s.sum_g - s.parseval).abs() < 1e-12);
        assert!(s.holds(1e-10));
        assert!((s.sum_symmetrized - s.rhs_truncated).abs() < 1e-12);
        assert!(s.deficit > 0.0);
        let free = sum_rule(&chain(2, 0.0)).unwrap();
        assert!((free.sum_g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn symmetry_and_negative_control() {
        let sys = chain(2, 1.0);
        let rep = symmetry_report(&sys).unwrap();
        assert!(!rep.degenerate);
        assert!(rep.holds(1e-10));
        let broken = symmetry_breaking(&sys, 1.0, 7).unwrap();
        let bad = symmetry_report(&broken).unwrap();
        assert!(bad.max_mean > 1e-2, "{bad:?}");
        for r in momentum_scan(&broken).unwrap() {
            assert!(r.slacks.schwarz_truncated >= -1e-10);
            assert!(chi_agreement(&r).unwrap() < tol::CHI);
        }
    }

    #[test]
    fn phase_invariance() {
        let mut sys = chain(1, 1.0);
        let before = momentum_observables(&sys, &[FRAC_PI_2]).unwrap();
        let ph = Complex64::from_polar(1.0, 0.7);
        sys.ground.vector.iter_mut().for_each(|z| *z *= ph);
        let after = momentum_observables(&sys, &[FRAC_PI_2]).unwrap();
        assert!((before.g - after.g).abs() < 1e-14);
        assert!((before.chi - after.chi).abs() < 1e-10);
        assert!((before.dcomm - after.dcomm).abs() < 1e-14);
    }
}
