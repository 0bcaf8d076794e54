//! Finite truncations of a Hilbert–Schmidt operator `c` and bounded `A`, `B`.
//!
//! Rung `s` compresses everything to the span of the first `s` basis
//! vectors. Because compression is `P c P` with a fixed projector, the
//! trace forms at consecutive rungs differ by at most a multiple of the
//! omitted Hilbert–Schmidt mass, which the operator supplies as `tail_bound`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{kls_gap, ComplexDense, IneqReport};
use crate::error::{Error, Result};

type CoeffFn = dyn Fn(usize, usize) -> Complex64 + Send + Sync;
type TailFn = dyn Fn(usize) -> f64 + Send + Sync;

/// Hilbert–Schmidt operator `c: L -> R` given by matrix elements.
#[derive(Clone)]
pub struct TruncatedOperator {
    pub name: String,
    /// `coeff(alpha, beta) = <beta| c |alpha>`.
    coeff: Arc<CoeffFn>,
    /// Upper bound on the l2 mass of coefficients with `alpha >= s` or `beta >= s`.
    tail: Arc<TailFn>,
}

impl fmt::Debug for TruncatedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TruncatedOperator").field("name", &self.name).finish()
    }
}

impl TruncatedOperator {
    pub fn new(
        name: impl Into<String>,
        coeff: impl Fn(usize, usize) -> Complex64 + Send + Sync + 'static,
        tail: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            coeff: Arc::new(coeff),
            tail: Arc::new(tail),
        }
    }

    /// `c(alpha, beta) = 1 / ((alpha + 1)(beta + 1))`, a rank-one operator.
    pub fn rank_one_harmonic() -> Self {
        let total = PI * PI / 6.0;
        Self::new(
            "rank_one_harmonic",
            |a, b| Complex64::new(1.0 / ((a as f64 + 1.0) * (b as f64 + 1.0)), 0.0),
            move |s| {
                let partial: f64 = (1..=s).map(|j| 1.0 / (j as f64 * j as f64)).sum();
                (total * total - partial * partial).max(0.0).sqrt()
            },
        )
    }

    /// `c(alpha, beta) = 1 / (alpha + beta + 1)^2`, full rank.
    ///
    /// Entries with `alpha + beta = m` number at most `m + 1`, so the omitted
    /// mass is bounded by `sum_{j > s} j^-3 <= 1 / (2 s^2)`.
    pub fn hilbert_square() -> Self {
        Self::new(
            "hilbert_square",
            |a, b| {
                let d = a as f64 + b as f64 + 1.0;
                Complex64::new(1.0 / (d * d), 0.0)
            },
            |s| {
                let s = s.max(1) as f64;
                (0.5 / (s * s)).sqrt()
            },
        )
    }

    /// `c(alpha, beta) = q^(alpha + beta) exp(i theta (alpha - 2 beta))`, `0 < q < 1`.
    pub fn geometric_phase(q: f64, theta: f64) -> Result<Self> {
        if !(0.0 < q && q < 1.0) {
            return Err(Error::Usage(format!("geometric ratio must lie in (0, 1), got {q}")));
        }
        let q2 = q * q;
        let full = 1.0 / (1.0 - q2);
        Ok(Self::new(
            format!("geometric_phase(q={q}, theta={theta})"),
            move |a, b| {
                let mag = q.powi((a + b) as i32);
                Complex64::from_polar(mag, theta * (a as f64 - 2.0 * b as f64))
            },
            move |s| {
                let partial = (1.0 - q2.powi(s as i32)) * full;
                (full * full - partial * partial).max(0.0).sqrt()
            },
        ))
    }

    pub fn coeff(&self, alpha: usize, beta: usize) -> Complex64 {
        (self.coeff)(alpha, beta)
    }

    pub fn tail_bound(&self, size: usize) -> f64 {
        (self.tail)(size)
    }

    /// The `size x size` compression, rows indexed by `beta`.
    pub fn materialize(&self, size: usize) -> ComplexDense {
        ComplexDense::from_fn(size, size, |beta, alpha| self.coeff(alpha, beta))
    }
}

/// A bounded operator given by its matrix entries, with a norm bound valid
/// for every compression.
#[derive(Clone)]
pub struct BoundedRule {
    pub name: String,
    entry: Arc<CoeffFn>,
    pub norm_bound: f64,
}

impl fmt::Debug for BoundedRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundedRule")
            .field("name", &self.name)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

impl BoundedRule {
    pub fn new(
        name: impl Into<String>,
        entry: impl Fn(usize, usize) -> Complex64 + Send + Sync + 'static,
        norm_bound: f64,
    ) -> Self {
        Self {
            name: name.into(),
            entry: Arc::new(entry),
            norm_bound,
        }
    }

    pub fn identity() -> Self {
        Self::new(
            "identity",
            |r, c| Complex64::new(if r == c { 1.0 } else { 0.0 }, 0.0),
            1.0,
        )
    }

    /// Unilateral shift `e_j -> e_{j+1}`.
    pub fn shift() -> Self {
        Self::new(
            "shift",
            |r, c| Complex64::new(if r == c + 1 { 1.0 } else { 0.0 }, 0.0),
            1.0,
        )
    }

    /// `diag(exp(i theta j))`.
    pub fn phase_diagonal(theta: f64) -> Self {
        Self::new(
            format!("phase_diagonal({theta})"),
            move |r, c| {
                if r == c {
                    Complex64::from_polar(1.0, theta * r as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
            1.0,
        )
    }

    pub fn materialize(&self, size: usize) -> ComplexDense {
        ComplexDense::from_fn(size, size, |r, c| (self.entry)(r, c))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRung {
    pub size: usize,
    pub report: IneqReport,
    /// Omitted Hilbert–Schmidt mass beyond this rung.
    pub tail_bound: f64,
    /// `||c_s||_2` at this rung.
    pub hs_norm: f64,
    /// `|lhs(s) - lhs(prev)|`, absent on the first rung.
    pub lhs_increment: Option<f64>,
    pub rhs_increment: Option<f64>,
    /// Tail-driven bounds on the two increments.
    pub lhs_increment_bound: Option<f64>,
    pub rhs_increment_bound: Option<f64>,
}

impl LadderRung {
    /// True when both increments (if any) sit inside their tail bounds.
    pub fn increments_within_bounds(&self) -> bool {
        let ok = |inc: Option<f64>, bound: Option<f64>| match (inc, bound) {
            (Some(i), Some(b)) => i <= b * (1.0 + 1e-12) + 1e-14,
            _ => true,
        };
        ok(self.lhs_increment, self.lhs_increment_bound) && ok(self.rhs_increment, self.rhs_increment_bound)
    }
}

/// Evaluates the inequality on each compression size.
///
/// Between rungs `p < s` the increments obey
///
/// ```text
/// |lhs(s) - lhs(p)| <= 2 ||A|| ||B|| N t(p)
/// |rhs(s) - rhs(p)| <= sqrt(2) (||A||^2 + ||B||^2) N t(p)
/// ```
///
/// with `N = ||c_s||_2 + t(s)` bounding the full norm and `t` the tail
/// bound; the second uses `|| |x| - |y| ||_2 <= sqrt(2) ||x - y||_2`.
pub fn truncation_ladder(
    op: &TruncatedOperator,
    a_rule: &BoundedRule,
    b_rule: &BoundedRule,
    sizes: &[usize],
) -> Result<Vec<LadderRung>> {
    if sizes.is_empty() {
        return Err(Error::Usage("ladder needs at least one size".into()));
    }
    if sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Usage(format!("ladder sizes must be positive and strictly ascending, got {sizes:?}")));
    }
    let (na, nb) = (a_rule.norm_bound, b_rule.norm_bound);
    let mut rungs: Vec<LadderRung> = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let c = op.materialize(s);
        let a = a_rule.materialize(s);
        let b = b_rule.materialize(s);
        let report = kls_gap(&c, &a, &b)?;
        let tail = op.tail_bound(s);
        let hs = super::hs_norm_sqr(&c).sqrt();
        let mut rung = LadderRung {
            size: s,
            report,
            tail_bound: tail,
            hs_norm: hs,
            lhs_increment: None,
            rhs_increment: None,
            lhs_increment_bound: None,
            rhs_increment_bound: None,
        };
        if let Some(prev) = rungs.last() {
            let full_norm = hs + tail;
            rung.lhs_increment = Some((report.lhs - prev.report.lhs).abs());
            rung.rhs_increment = Some((report.rhs - prev.report.rhs).abs());
            rung.lhs_increment_bound = Some(2.0 * na * nb * full_norm * prev.tail_bound);
            rung.rhs_increment_bound =
                Some(std::f64::consts::SQRT_2 * (na * na + nb * nb) * full_norm * prev.tail_bound);
        }
        rungs.push(rung);
    }
    Ok(rungs)
}
