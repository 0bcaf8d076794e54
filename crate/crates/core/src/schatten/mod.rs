//! Dense complex linear algebra for the trace inequality
//!
//! ```text
//! |Tr(c* B c A*)| <= 1/2 [ Tr(|c| A |c| A*) + Tr(|c*| B |c*| B*) ]
//! ```
//!
//! for `c` of shape `n x m`, `A` of shape `m x m` and `B` of shape `n x n`,
//! together with its operator version exercised through finite truncations.

mod dense;
mod ladder;
mod polar;
mod random;

pub use dense::ComplexDense;
pub use ladder::{truncation_ladder, BoundedRule, LadderRung, TruncatedOperator};
pub use polar::{polar_decompose, PolarParts};
pub use random::{random_matrix, MatrixKind};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Result};
use crate::tol;

/// Two sides of an inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IneqReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub slack: f64,
}

impl IneqReport {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    /// Inequality holds with the default relative tolerance `1e-10 (1 + rhs)`.
    pub fn holds(&self) -> bool {
        self.holds_within(tol::INEQ)
    }

    pub fn holds_within(&self, rel: f64) -> bool {
        self.slack >= -rel * (1.0 + self.rhs.abs())
    }

    /// Slack divided by the tolerance scale `1 + rhs`.
    pub fn normalized_slack(&self) -> f64 {
        self.slack / (1.0 + self.rhs.abs())
    }
}

/// The three traces entering the inequality, before taking moduli and real parts.
#[derive(Debug, Clone, Copy)]
pub struct KlsTraces {
    /// `Tr(c* B c A*)`.
    pub cross: Complex64,
    /// `Tr(|c| A |c| A*)`.
    pub left: Complex64,
    /// `Tr(|c*| B |c*| B*)`.
    pub right: Complex64,
}

impl KlsTraces {
    /// Largest imaginary part of the two right-hand traces, which are
    /// squared Hilbert–Schmidt norms and must be real.
    pub fn imag_defect(&self) -> f64 {
        self.left.im.abs().max(self.right.im.abs())
    }
}

fn check_shapes(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense) -> Result<()> {
    let (n, m) = (c.rows(), c.cols());
    if a.rows() != m || a.cols() != m {
        return Err(shape_err(format!(
            "A must be {m}x{m} for c of shape {n}x{m}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if b.rows() != n || b.cols() != n {
        return Err(shape_err(format!(
            "B must be {n}x{n} for c of shape {n}x{m}, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

pub fn kls_traces(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense) -> Result<KlsTraces> {
    check_shapes(c, a, b)?;
    let p = polar_decompose(c)?;
    Ok(kls_traces_with(c, a, b, &p))
}

fn kls_traces_with(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense, p: &PolarParts) -> KlsTraces {
    let a_adj = a.adjoint();
    let b_adj = b.adjoint();
    let cross = (&(&(&c.adjoint() * b) * c) * &a_adj).trace();
    let left = (&(&(&p.mod_l * a) * &p.mod_l) * &a_adj).trace();
    let right = (&(&(&p.mod_r * b) * &p.mod_r) * &b_adj).trace();
    KlsTraces { cross, left, right }
}

/// Evaluates both sides of the matrix inequality.
pub fn kls_gap(c: &ComplexDense, a: &ComplexDense, b: &ComplexDense) -> Result<IneqReport> {
    let t = kls_traces(c, a, b)?;
    Ok(IneqReport::new(t.cross.norm(), 0.5 * (t.left.re + t.right.re)))
}

/// `Tr(c* c)`, the squared Hilbert–Schmidt norm.
pub fn hs_norm_sqr(c: &ComplexDense) -> f64 {
    c.as_matrix().iter().map(|z| z.norm_sqr()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_am_gm_equality() {
        let c = ComplexDense::from_real(1, 1, &[2.0]).unwrap();
        let one = ComplexDense::identity(1);
        let r = kls_gap(&c, &one, &one).unwrap();
        assert!((r.lhs - 4.0).abs() < 1e-14);
        assert!((r.rhs - 4.0).abs() < 1e-14);
        assert!(r.slack.abs() < 1e-14);
    }

    #[test]
    fn identity_c_gives_equality() {
        let a = random_matrix(MatrixKind::Ginibre, 5, 5, 11).unwrap();
        let c = ComplexDense::identity(5);
        let r = kls_gap(&c, &a, &a).unwrap();
        assert!(r.slack.abs() <= 1e-12 * (1.0 + r.rhs), "{r:?}");
    }

    #[test]
    fn shape_errors() {
        let c = ComplexDense::zeros(3, 2);
        let a = ComplexDense::identity(3);
        let b = ComplexDense::identity(3);
        assert!(matches!(kls_gap(&c, &a, &b), Err(crate::Error::Shape(_))));
        let a = ComplexDense::identity(2);
        let b = ComplexDense::identity(2);
        assert!(matches!(kls_gap(&c, &a, &b), Err(crate::Error::Shape(_))));
    }

    #[test]
    fn rectangular_random_triples_hold() {
        for seed in 0..200 {
            let c = random_matrix(MatrixKind::Ginibre, 6, 4, seed).unwrap();
            let a = random_matrix(MatrixKind::Ginibre, 4, 4, seed + 1000).unwrap();
            let b = random_matrix(MatrixKind::Ginibre, 6, 6, seed + 2000).unwrap();
            let r = kls_gap(&c, &a, &b).unwrap();
            assert!(r.holds(), "seed {seed}: {r:?}");
        }
    }

    #[test]
    fn traces_on_the_right_are_real() {
        let c = random_matrix(MatrixKind::Ginibre, 5, 3, 4).unwrap();
        let a = random_matrix(MatrixKind::Ginibre, 3, 3, 5).unwrap();
        let b = random_matrix(MatrixKind::Ginibre, 5, 5, 6).unwrap();
        let t = kls_traces(&c, &a, &b).unwrap();
        assert!(t.imag_defect() < 1e-12 * (1.0 + t.left.re + t.right.re));
        assert!(t.left.re >= 0.0 && t.right.re >= 0.0);
    }
}
