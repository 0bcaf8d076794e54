//! Expectation-value form of the trace inequality on `L ⊗ R`.
//!
//! An operator `c: L -> R` (a `dim_r x dim_l` matrix) is mapped to the vector
//! `Γ(c) = sum_γ ψ_γ ⊗ c ψ_γ`. Coordinates use the left-factor-major order
//! `index = γ * dim_r + ρ`, the same convention the rotor product space uses
//! for its sites. `J` is coordinate-wise conjugation in the standard basis,
//! so `J A J` is the entrywise conjugate of `A`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::schatten::{polar_decompose, ComplexDense, IneqReport};
use crate::tol;

/// Vector in `L ⊗ R` with `data[γ * dim_r + ρ]` the `ψ_γ ⊗ φ_ρ` coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VecState {
    pub data: Vec<Complex64>,
    pub dim_l: usize,
    pub dim_r: usize,
}

impl VecState {
    pub fn new(data: Vec<Complex64>, dim_l: usize, dim_r: usize) -> Result<Self> {
        if data.len() != dim_l * dim_r {
            return Err(shape_err(format!(
                "vector of length {} for L⊗R of dims {dim_l}x{dim_r}",
                data.len()
            )));
        }
        Ok(Self { data, dim_l, dim_r })
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.data)
    }

    /// `(self | other)`, antilinear in `self`.
    pub fn inner(&self, other: &VecState) -> Result<Complex64> {
        if (self.dim_l, self.dim_r) != (other.dim_l, other.dim_r) {
            return Err(shape_err("inner product of states on different spaces"));
        }
        Ok(crate::linalg::dot(&self.data, &other.data))
    }

    /// `(A ⊗ B) self`, evaluated coordinate-wise from the Kronecker definition.
    pub fn apply_tensor(&self, a: &ComplexDense, b: &ComplexDense) -> Result<VecState> {
        let (nl, nr) = (self.dim_l, self.dim_r);
        if a.rows() != nl || a.cols() != nl || b.rows() != nr || b.cols() != nr {
            return Err(shape_err(format!(
                "A⊗B of shapes {}x{} ⊗ {}x{} on L⊗R of dims {nl}x{nr}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); nl * nr];
        for g in 0..nl {
            for r in 0..nr {
                let mut acc = Complex64::new(0.0, 0.0);
                for g2 in 0..nl {
                    let agg = a.get(g, g2);
                    if agg == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for r2 in 0..nr {
                        acc += agg * b.get(r, r2) * self.data[g2 * nr + r2];
                    }
                }
                out[g * nr + r] = acc;
            }
        }
        Ok(VecState {
            data: out,
            dim_l: nl,
            dim_r: nr,
        })
    }

    /// `(self | (A ⊗ B) self)`.
    pub fn expectation(&self, a: &ComplexDense, b: &ComplexDense) -> Result<Complex64> {
        self.inner(&self.apply_tensor(a, b)?)
    }
}

/// Unitary `U: L -> R` pairing the two bases, `φ_γ = U ψ_γ`.
#[derive(Debug, Clone)]
pub struct PairingU {
    matrix: ComplexDense,
}

impl PairingU {
    pub fn new(matrix: ComplexDense) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Contract(format!(
                "pairing operator must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let n = matrix.rows();
        let defect = (&matrix.adjoint() * &matrix).max_abs_diff(&ComplexDense::identity(n));
        if defect > tol::ID * (n as f64).max(1.0) * 10.0 {
            return Err(Error::Contract(format!("pairing operator is not unitary (|U*U - I| = {defect:.3e})")));
        }
        Ok(Self { matrix })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexDense::identity(n),
        }
    }

    pub fn matrix(&self) -> &ComplexDense {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `J_Ω B J_Ω` with `J_Ω = U J U*`, i.e. `U conj(U* B U) U*`.
    pub fn conjugate_in_omega(&self, b: &ComplexDense) -> ComplexDense {
        let u = &self.matrix;
        let inner = &(&u.adjoint() * b) * u;
        &(u * &inner.conj()) * &u.adjoint()
    }

    /// `J_Ω v = U conj(U* v)`.
    pub fn j_omega_vector(&self, v: &[Complex64]) -> Vec<Complex64> {
        let u = self.matrix.as_matrix();
        let n = u.nrows();
        let w: Vec<Complex64> = (0..n)
            .map(|r| (0..n).map(|k| u[(k, r)].conj() * v[k]).sum::<Complex64>().conj())
            .collect();
        (0..n).map(|r| (0..n).map(|k| u[(r, k)] * w[k]).sum()).collect()
    }
}

/// `Γ(c)` for `c` of shape `dim_r x dim_l`.
pub fn vec_gamma(c: &ComplexDense) -> VecState {
    let (nr, nl) = (c.rows(), c.cols());
    let mut data = Vec::with_capacity(nl * nr);
    for g in 0..nl {
        for r in 0..nr {
            data.push(c.get(r, g));
        }
    }
    VecState {
        data,
        dim_l: nl,
        dim_r: nr,
    }
}

/// Inverse of [`vec_gamma`].
pub fn unvec(state: &VecState) -> ComplexDense {
    let (nl, nr) = (state.dim_l, state.dim_r);
    ComplexDense::from_fn(nr, nl, |r, g| state.data[g * nr + r])
}

/// `Ω(d) = sum_ω d φ_ω ⊗ φ_ω` for `d: R -> L` (shape `dim_l x dim_r`), with
/// `φ_ω = U e_ω` when a pairing is given and the standard basis otherwise.
pub fn vec_omega(d: &ComplexDense, basis: Option<&PairingU>) -> Result<VecState> {
    let (nl, nr) = (d.rows(), d.cols());
    let phi = match basis {
        Some(u) => {
            if u.dim() != nr {
                return Err(shape_err("pairing dimension does not match R"));
            }
            u.matrix().clone()
        }
        None => ComplexDense::identity(nr),
    };
    let dphi = d * &phi;
    let mut data = vec![Complex64::new(0.0, 0.0); nl * nr];
    for w in 0..nr {
        for g in 0..nl {
            let left = dphi.get(g, w);
            for r in 0..nr {
                data[g * nr + r] += left * phi.get(r, w);
            }
        }
    }
    VecState::new(data, nl, nr)
}

/// The two evaluations of `(Γ(c) | (A ⊗ B) Γ(c))`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExpectationPair {
    /// Scalar product in `L ⊗ R`.
    pub vector_form: Complex64,
    /// `Tr_L(c* B c J A* J)`.
    pub trace_form: Complex64,
}

impl ExpectationPair {
    pub fn difference(&self) -> f64 {
        (self.vector_form - self.trace_form).norm()
    }

    pub fn agrees(&self) -> bool {
        self.difference() <= tol::ID * (1.0 + self.vector_form.norm())
    }
}

fn check_triple(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense) -> Result<()> {
    let (nr, nl) = (c.rows(), c.cols());
    if a.rows() != nl || a.cols() != nl {
        return Err(shape_err(format!("A must act on L (dim {nl})")));
    }
    if b.rows() != nr || b.cols() != nr {
        return Err(shape_err(format!("B must act on R (dim {nr})")));
    }
    Ok(())
}

pub fn expectation_identity(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense) -> Result<ExpectationPair> {
    check_triple(c, a, b)?;
    let vector_form = vec_gamma(c).expectation(a, b)?;
    let j_a_adj_j = a.adjoint().conj();
    let trace_form = (&(&(&c.adjoint() * b) * c) * &j_a_adj_j).trace();
    Ok(ExpectationPair {
        vector_form,
        trace_form,
    })
}

/// Both right-hand terms of the expectation-form inequality, before taking real parts.
#[derive(Debug, Clone, Copy)]
pub struct RpTerms {
    pub lhs: Complex64,
    pub left_term: Complex64,
    pub right_term: Complex64,
}

pub fn rp_expectation_terms(
    c: &ComplexDense,
    a: &ComplexDense,
    b: &ComplexDense,
    u: &PairingU,
) -> Result<RpTerms> {
    check_triple(c, a, b)?;
    if c.rows() != c.cols() || u.dim() != c.rows() {
        return Err(shape_err(format!(
            "pairing of dim {} needs L and R of equal dimension, c is {}x{}",
            u.dim(),
            c.rows(),
            c.cols()
        )));
    }
    let p = polar_decompose(c)?;
    let um = u.matrix();
    let lhs = vec_gamma(c).expectation(a, b)?;

    let u_mod = um * &p.mod_l;
    let b_induced = &(um * &a.conj()) * &um.adjoint();
    let left_term = vec_gamma(&u_mod).expectation(a, &b_induced)?;

    let mod_u = &p.mod_r * um;
    let a_induced = &(&um.adjoint() * &u.conjugate_in_omega(b)) * um;
    let right_term = vec_gamma(&mod_u).expectation(&a_induced, b)?;

    Ok(RpTerms {
        lhs,
        left_term,
        right_term,
    })
}

/// `2 |(Γ(c)|(A⊗B)Γ(c))|` against the two pairing-induced expectations.
pub fn rp_expectation_bound(
    c: &ComplexDense,
    a: &ComplexDense,
    b: &ComplexDense,
    u: &PairingU,
) -> Result<IneqReport> {
    let t = rp_expectation_terms(c, a, b, u)?;
    Ok(IneqReport::new(2.0 * t.lhs.norm(), t.left_term.re + t.right_term.re))
}

/// A named two-sided identity evaluated numerically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl IdentityCheck {
    pub fn defect(&self) -> f64 {
        (self.lhs - self.rhs).norm()
    }

    pub fn relative_defect(&self) -> f64 {
        self.defect() / (1.0 + self.lhs.norm().max(self.rhs.norm()))
    }
}

fn vector_defect(a: &VecState, b: &VecState) -> Complex64 {
    let d: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Complex64::new(d, 0.0)
}

/// Evaluates every bounded-operator identity relating `Γ`, `Ω`, `J` and `U`.
///
/// `c: L -> R` and `d: R -> L` are square of the pairing's dimension, `a`
/// and `b` act on `L` and `R`, `t_diag` is a real spectrum diagonal in the
/// `Γ` basis and `s_diag` one diagonal in the `Ω = U Γ` basis.
pub fn lemma_identities(
    c: &ComplexDense,
    d: &ComplexDense,
    a: &ComplexDense,
    b: &ComplexDense,
    u: &PairingU,
    t_diag: &[f64],
    s_diag: &[f64],
) -> Result<Vec<IdentityCheck>> {
    check_triple(c, a, b)?;
    let n = u.dim();
    if c.rows() != n || c.cols() != n || d.rows() != n || d.cols() != n {
        return Err(shape_err("identity suite needs square c, d matching the pairing"));
    }
    if t_diag.len() != n || s_diag.len() != n {
        return Err(shape_err("diagonal spectra must match the pairing dimension"));
    }
    let um = u.matrix();
    let id = ComplexDense::identity(n);
    let pc = polar_decompose(c)?;
    let pd = polar_decompose(d)?;
    let gc = vec_gamma(c);
    let mut out = Vec::new();

    // isometry and module property of Γ
    let b_c = b * c;
    out.push(IdentityCheck {
        name: "gamma_isometry",
        lhs: gc.inner(&vec_gamma(&d.adjoint()))?,
        rhs: (&c.adjoint() * &d.adjoint()).trace(),
    });
    out.push(IdentityCheck {
        name: "gamma_left_module",
        lhs: vector_defect(&vec_gamma(&b_c), &gc.apply_tensor(&id, b)?),
        rhs: Complex64::new(0.0, 0.0),
    });
    out.push(IdentityCheck {
        name: "gamma_trace_forms",
        lhs: gc.expectation(&id, b)?,
        rhs: (&(c * &c.adjoint()) * b).trace(),
    });

    // Ω with the U-paired basis
    let od = vec_omega(d, Some(u))?;
    let omega_d_a = vec_omega(&(a * d), Some(u))?;
    out.push(IdentityCheck {
        name: "omega_left_module",
        lhs: vector_defect(&omega_d_a, &od.apply_tensor(a, &id)?),
        rhs: Complex64::new(0.0, 0.0),
    });
    out.push(IdentityCheck {
        name: "omega_trace_forms",
        lhs: od.expectation(a, &id)?,
        rhs: (&(&d.adjoint() * a) * d).trace(),
    });

    // J_Γ c* J_Ω as a linear map R -> L: v -> conj(c* U conj(U* v))
    let jcj = &(&c.adjoint() * um).conj() * &um.adjoint();
    out.push(IdentityCheck {
        name: "cross_basis_gamma_to_omega",
        lhs: vector_defect(&gc, &vec_omega(&jcj, Some(u))?),
        rhs: Complex64::new(0.0, 0.0),
    });
    // J_Ω d* J_Γ as a map L -> R: v -> U conj(U* d* conj(v))
    let jdj = um * &(&um.adjoint() * &d.adjoint()).conj();
    out.push(IdentityCheck {
        name: "cross_basis_omega_to_gamma",
        lhs: vector_defect(&vec_gamma(&jdj), &od),
        rhs: Complex64::new(0.0, 0.0),
    });

    // trace under conjugation
    out.push(IdentityCheck {
        name: "trace_of_conjugated",
        lhs: a.conj().trace(),
        rhs: a.adjoint().trace(),
    });
    out.push(IdentityCheck {
        name: "trace_of_omega_conjugated",
        lhs: u.conjugate_in_omega(b).trace(),
        rhs: b.adjoint().trace(),
    });

    // J_Ω = U J_Γ U*: J_Ω fixes every φ_ω
    let phi0: Vec<Complex64> = (0..n).map(|r| um.get(r, 0) * Complex64::new(0.0, 1.0)).collect();
    let jphi0 = u.j_omega_vector(&phi0);
    let expect: Vec<Complex64> = phi0.iter().map(|z| -z).collect();
    let jot_defect: f64 = jphi0.iter().zip(&expect).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    out.push(IdentityCheck {
        name: "j_omega_conjugates_omega_coordinates",
        lhs: Complex64::new(jot_defect, 0.0),
        rhs: Complex64::new(0.0, 0.0),
    });

    let u_mod = um * &pc.mod_l;
    let mod_u = &pc.mod_r * um;
    let g_umod = vec_gamma(&u_mod);
    let g_modu = vec_gamma(&mod_u);

    out.push(IdentityCheck {
        name: "identity_tensor_b_moved_to_modulus",
        lhs: gc.expectation(&id, b)?,
        rhs: g_modu.expectation(&id, b)?,
    });
    out.push(IdentityCheck {
        name: "a_tensor_identity_moved_to_modulus",
        lhs: gc.expectation(a, &id)?,
        rhs: g_umod.expectation(a, &id)?,
    });
    let ua_u = &(um * &a.adjoint().conj()) * &um.adjoint();
    out.push(IdentityCheck {
        name: "left_to_right",
        lhs: gc.expectation(a, &id)?,
        rhs: g_umod.expectation(&id, &ua_u)?,
    });
    let ub_u = (&(&um.adjoint() * &b.adjoint()) * um).conj();
    out.push(IdentityCheck {
        name: "right_to_left",
        lhs: gc.expectation(&id, b)?,
        rhs: g_modu.expectation(&ub_u, &id)?,
    });
    let pair = expectation_identity(c, a, b)?;
    out.push(IdentityCheck {
        name: "tensor_expectation_as_trace",
        lhs: pair.vector_form,
        rhs: pair.trace_form,
    });

    // diagonal self-adjoint operators
    let t = ComplexDense::diag(t_diag);
    let utu = &(um * &t) * &um.adjoint();
    let t_first = gc.expectation(&t, &id)?;
    out.push(IdentityCheck {
        name: "diagonal_t_moved_to_modulus",
        lhs: t_first,
        rhs: g_umod.expectation(&t, &id)?,
    });
    out.push(IdentityCheck {
        name: "diagonal_t_moved_across",
        lhs: t_first,
        rhs: g_umod.expectation(&id, &utu)?,
    });
    let s = &(um * &ComplexDense::diag(s_diag)) * &um.adjoint();
    let usu = &(&um.adjoint() * &s) * um;
    let ud = &um.adjoint() * &pd.mod_l;
    let o_ud = vec_omega(&ud, Some(u))?;
    let s_first = od.expectation(&id, &s)?;
    out.push(IdentityCheck {
        name: "diagonal_s_moved_to_modulus",
        lhs: s_first,
        rhs: o_ud.expectation(&id, &s)?,
    });
    out.push(IdentityCheck {
        name: "diagonal_s_moved_across",
        lhs: s_first,
        rhs: o_ud.expectation(&usu, &id)?,
    });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schatten::{random_matrix, MatrixKind};

    fn cx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn ordering_convention() {
        let c = ComplexDense::from_real(2, 2, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        let v = vec_gamma(&c);
        assert_eq!(v.data, vec![cx(1.0), cx(3.0), cx(2.0), cx(4.0)]);
        assert_eq!(unvec(&v), c);
    }

    #[test]
    fn unitarity_and_roundtrip() {
        let c = random_matrix(MatrixKind::Ginibre, 3, 5, 8).unwrap();
        let v = vec_gamma(&c);
        assert_eq!((v.dim_l, v.dim_r), (5, 3));
        assert!((v.norm().powi(2) - crate::schatten::hs_norm_sqr(&c)).abs() < 1e-12);
        assert_eq!(unvec(&v), c);
    }

    #[test]
    fn identity_operators_give_hs_norm() {
        let c = random_matrix(MatrixKind::Ginibre, 3, 3, 1).unwrap();
        let id = ComplexDense::identity(3);
        let p = expectation_identity(&c, &id, &id).unwrap();
        let hs = crate::schatten::hs_norm_sqr(&c);
        assert!((p.vector_form - cx(hs)).norm() < 1e-12);
        assert!((p.trace_form - cx(hs)).norm() < 1e-12);
    }

    #[test]
    fn real_diagonal_is_fixed_by_conjugation() {
        let c = random_matrix(MatrixKind::Ginibre, 3, 3, 2).unwrap();
        let a = ComplexDense::diag(&[0.5, -1.0, 2.0]);
        let id = ComplexDense::identity(3);
        let p = expectation_identity(&c, &a, &id).unwrap();
        let expect = (&(&c.adjoint() * &c) * &a).trace();
        assert!((p.vector_form - expect).norm() < 1e-12);
        assert!(p.agrees());
    }

    #[test]
    fn random_triple_agrees() {
        let c = random_matrix(MatrixKind::Ginibre, 3, 3, 3).unwrap();
        let a = random_matrix(MatrixKind::Ginibre, 3, 3, 4).unwrap();
        let b = random_matrix(MatrixKind::Ginibre, 3, 3, 5).unwrap();
        assert!(expectation_identity(&c, &a, &b).unwrap().difference() <= 1e-12);
    }

    #[test]
    fn rp_bound_trivial_cases() {
        let u = PairingU::new(random_matrix(MatrixKind::PartialIsometry, 4, 4, 6).unwrap()).unwrap();
        let c = random_matrix(MatrixKind::Ginibre, 4, 4, 7).unwrap();
        let id = ComplexDense::identity(4);
        let r = rp_expectation_bound(&c, &id, &id, &u).unwrap();
        let hs = crate::schatten::hs_norm_sqr(&c);
        assert!((r.lhs - 2.0 * hs).abs() < 1e-12);
        assert!((r.rhs - 2.0 * hs).abs() < 1e-12);

        let zero = ComplexDense::zeros(4, 4);
        let r = rp_expectation_bound(&zero, &id, &id, &u).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }

    #[test]
    fn non_unitary_pairing_is_rejected() {
        let m = ComplexDense::diag(&[1.0, 2.0]);
        assert!(matches!(PairingU::new(m), Err(Error::Contract(_))));
    }

    #[test]
    fn lemma_suite_holds_for_one_instance() {
        let n = 4;
        let u = PairingU::new(random_matrix(MatrixKind::PartialIsometry, n, n, 10).unwrap()).unwrap();
        let c = random_matrix(MatrixKind::Ginibre, n, n, 11).unwrap();
        let d = random_matrix(MatrixKind::Ginibre, n, n, 12).unwrap();
        let a = random_matrix(MatrixKind::Ginibre, n, n, 13).unwrap();
        let b = random_matrix(MatrixKind::Ginibre, n, n, 14).unwrap();
        let checks = lemma_identities(&c, &d, &a, &b, &u, &[0.1, -2.0, 3.0, 0.7], &[1.0, 2.0, -0.5, 0.0]).unwrap();
        for chk in checks {
            assert!(chk.relative_defect() < 1e-12, "{}: {:?} vs {:?}", chk.name, chk.lhs, chk.rhs);
        }
    }
}
